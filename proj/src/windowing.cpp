#include "gazeact/windowing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>

#include "gazeact/errors.hpp"
#include "text_util.hpp"

namespace gazeact {

std::size_t window_count(const TimeSpan& span, double window, double stride) {
  if (!(window > 0.0) || !(stride > 0.0)) throw ParameterError("window and stride must be positive");
  const double length = span.t1 - span.t0;
  constexpr double kEps = 1e-9;
  if (length < window - kEps) return 0;
  return static_cast<std::size_t>(std::floor((length - window) / stride + kEps)) + 1;
}

std::vector<WindowHistogram> window_histogram(std::span<const TimedSymbol> stream, std::size_t n_bins, double window,
                                              double stride, const TimeSpan& span, Execution exec) {
  if (n_bins == 0) throw ParameterError("histogram needs at least one bin");
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (stream[i].code >= n_bins) throw ParameterError("symbol code exceeds bin count");
    if (i > 0 && stream[i].t < stream[i - 1].t) throw ParameterError("symbol stream must be sorted by time");
  }
  const std::size_t count = window_count(span, window, stride);
  std::vector<WindowHistogram> out(count);
  auto by_time = [](const TimedSymbol& s, double t) { return s.t < t; };
#pragma omp parallel for schedule(static) if (exec == Execution::kParallel)
  for (std::ptrdiff_t sw = 0; sw < static_cast<std::ptrdiff_t>(count); ++sw) {
    const auto w = static_cast<std::size_t>(sw);
    const double start = span.t0 + static_cast<double>(w) * stride;
    const double end = start + window;
    const auto first = std::lower_bound(stream.begin(), stream.end(), start, by_time);
    const auto last = std::lower_bound(first, stream.end(), end, by_time);
    WindowHistogram& h = out[w];
    h.t_center = start + window / 2.0;
    h.bins.assign(n_bins, 0.0);
    for (auto it = first; it != last; ++it) h.bins[it->code] += 1.0;
    const auto total = static_cast<double>(last - first);
    if (total == 0.0) {
      h.empty = true;
      std::fill(h.bins.begin(), h.bins.end(), 1.0 / static_cast<double>(n_bins));
    } else {
      for (double& b : h.bins) b /= total;
    }
  }
  return out;
}

ChannelSet parse_channels(std::string_view text) {
  ChannelSet set;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    const auto name = detail::trim(text.substr(start, comma - start));
    if (name == "eye") {
      set = set.with(Channel::kEye);
    } else if (name == "ego") {
      set = set.with(Channel::kEgo);
    } else if (name == "visual") {
      set = set.with(Channel::kVisual);
    } else {
      throw ParameterError("unknown channel '" + std::string(name) + "' (expected eye, ego, visual)");
    }
    start = comma + 1;
  }
  if (set.empty()) throw ParameterError("no channels selected");
  return set;
}

std::string to_string(ChannelSet channels) {
  std::string out;
  auto add = [&](const char* name) {
    if (!out.empty()) out += ',';
    out += name;
  };
  if (channels.has(Channel::kEye)) add("eye");
  if (channels.has(Channel::kEgo)) add("ego");
  if (channels.has(Channel::kVisual)) add("visual");
  return out;
}

std::size_t feature_dimension(ChannelSet channels, std::size_t n_words) {
  return (channels.has(Channel::kEye) ? kSymbolCount : 0) + (channels.has(Channel::kEgo) ? kSymbolCount : 0) +
         (channels.has(Channel::kVisual) ? n_words : 0);
}

WindowFeature fuse(const ChannelWindows& parts, ChannelSet channels, double stride) {
  if (channels.empty()) throw ParameterError("no channels selected");
  struct Block {
    const char* name;
    Channel channel;
    const std::optional<WindowHistogram>* hist;
    std::size_t expected_bins;
  };
  const std::array<Block, 3> blocks = {{{"eye", Channel::kEye, &parts.eye, kSymbolCount},
                                        {"ego", Channel::kEgo, &parts.ego, kSymbolCount},
                                        {"visual", Channel::kVisual, &parts.visual, 0}}};
  WindowFeature f;
  f.channels = channels;
  bool have_center = false;
  for (const auto& b : blocks) {
    if (!channels.has(b.channel)) continue;
    if (!b.hist->has_value()) throw ParameterError(std::string("missing ") + b.name + " histogram");
    const WindowHistogram& h = **b.hist;
    if (b.expected_bins != 0 && h.bins.size() != b.expected_bins) {
      throw ParameterError(std::string(b.name) + " histogram must have " + std::to_string(b.expected_bins) + " bins");
    }
    if (!have_center) {
      f.t_center = h.t_center;
      have_center = true;
    } else if (std::abs(h.t_center - f.t_center) > stride / 2.0) {
      throw AlignmentError(std::string(b.name) + " window centered at " + std::to_string(h.t_center) +
                           " s does not align with " + std::to_string(f.t_center) + " s");
    }
    f.values.insert(f.values.end(), h.bins.begin(), h.bins.end());
    f.flagged = f.flagged || h.empty;
  }
  return f;
}

WindowFeature fuse(const WindowHistogram& eye, const WindowHistogram& ego, const WindowHistogram& visual,
                   double stride) {
  return fuse(ChannelWindows{eye, ego, visual}, ChannelSet::all(), stride);
}

LabelingResult label_windows(std::span<const WindowFeature> windows, const LabelTrack& labels, int class_mode,
                             double window_seconds, const std::string& subject_id, int session_index) {
  if (class_mode != 5 && class_mode != 6) throw ParameterError("class mode must be 5 or 6");
  LabelingResult result;
  for (const auto& w : windows) {
    const double start = w.t_center - window_seconds / 2.0;
    const double end = start + window_seconds;
    std::array<double, kActivityCount> cover{};
    for (const auto& seg : labels.segments) {
      const double overlap = std::min(end, seg.t_end) - std::max(start, seg.t_start);
      if (overlap > 0.0) cover[static_cast<std::size_t>(seg.label)] += overlap;
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < kActivityCount; ++c) {
      if (cover[c] > cover[best]) best = c;
    }
    if (!(cover[best] > 0.0)) {
      ++result.dropped_unlabeled;
      continue;
    }
    const auto label = static_cast<ActivityLabel>(best);
    if (label == ActivityLabel::kVoid && class_mode == 5) {
      ++result.dropped_void;
      continue;
    }
    result.windows.push_back({w, label, subject_id, session_index});
  }
  return result;
}

void write_feature_csv(std::ostream& out, std::span<const LabeledWindow> windows) {
  const std::size_t dim = windows.empty() ? 0 : windows.front().feature.values.size();
  out << "t_center,subject,session,label";
  for (std::size_t i = 0; i < dim; ++i) out << ",f" << i;
  out << '\n';
  for (const auto& w : windows) {
    if (w.feature.values.size() != dim) throw ParameterError("feature rows differ in dimension");
    if (w.subject_id.find(',') != std::string::npos) throw ParameterError("subject id may not contain ','");
    out << detail::format_double(w.feature.t_center) << ',' << w.subject_id << ',' << w.session_index << ','
        << to_string(w.label);
    for (double v : w.feature.values) out << ',' << detail::format_double(v);
    out << '\n';
  }
}

std::vector<LabeledWindow> read_feature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw EmptyInputError("feature file is empty");
  const auto header = detail::split_csv(line);
  if (header.size() < 5 || header[0] != "t_center" || header[1] != "subject" || header[2] != "session" ||
      header[3] != "label") {
    throw ParseError("expected header 't_center,subject,session,label,f0..'", 1);
  }
  const std::size_t dim = header.size() - 4;
  for (std::size_t i = 0; i < dim; ++i) {
    if (header[4 + i] != "f" + std::to_string(i)) throw ParseError("bad feature column '" + std::string(header[4 + i]) + "'", 1);
  }
  std::vector<LabeledWindow> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()),
                       line_no);
    }
    LabeledWindow w;
    w.feature.t_center = detail::parse_double(f[0], line_no, "t_center");
    w.subject_id = std::string(f[1]);
    w.session_index = static_cast<int>(detail::parse_uint(f[2], line_no, "session"));
    try {
      w.label = parse_activity(f[3]);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
    w.feature.values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) w.feature.values[i] = detail::parse_double(f[4 + i], line_no, "feature");
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace gazeact
