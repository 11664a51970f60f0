#include "gazeact/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "binary_io.hpp"
#include "gazeact/errors.hpp"
#include "text_util.hpp"

namespace gazeact {

namespace {

constexpr std::array<std::string_view, kActivityCount> kActivityNames = {
    "read", "watch_video", "write", "copy_text", "browse", "void"};

std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

}  // namespace

std::string_view to_string(ActivityLabel label) { return kActivityNames[static_cast<std::size_t>(label)]; }

ActivityLabel parse_activity(std::string_view text) {
  for (std::size_t i = 0; i < kActivityNames.size(); ++i) {
    if (kActivityNames[i] == text) return static_cast<ActivityLabel>(i);
  }
  throw ParseError("unknown activity label '" + std::string(text) + "'");
}

std::vector<ActivityLabel> classes_for_mode(int class_mode) {
  if (class_mode != 5 && class_mode != 6) throw ParameterError("class mode must be 5 or 6");
  std::vector<ActivityLabel> out;
  for (std::size_t i = 0; i < static_cast<std::size_t>(class_mode); ++i) out.push_back(static_cast<ActivityLabel>(i));
  return out;
}

// ---------------------------------------------------------------------------
// Gaze

std::vector<GazeSample> parse_gaze_csv(std::istream& in, double sample_rate) {
  if (!(sample_rate > 0.0)) throw ParameterError("sample rate must be positive");
  detail::expect_header(in, "t,x,y,valid");

  struct Row {
    GazeSample sample;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 4) throw ParseError("expected 4 fields, got " + std::to_string(f.size()), line_no);
    GazeSample s;
    s.t = detail::parse_double(f[0], line_no, "timestamp");
    s.x = detail::parse_double(f[1], line_no, "x");
    s.y = detail::parse_double(f[2], line_no, "y");
    if (f[3] == "1") {
      s.valid = true;
    } else if (f[3] == "0") {
      s.valid = false;
    } else {
      throw ParseError("valid flag must be 0 or 1", line_no);
    }
    if (!std::isfinite(s.t)) throw ParseError("non-finite timestamp", line_no);
    if (s.valid && (!std::isfinite(s.x) || !std::isfinite(s.y))) throw ParseError("non-finite position", line_no);
    rows.push_back({s, line_no});
  }
  if (rows.empty()) throw EmptyInputError("gaze log has no samples");

  const bool sorted = std::is_sorted(rows.begin(), rows.end(),
                                     [](const Row& a, const Row& b) { return a.sample.t < b.sample.t; });
  if (!sorted) {
    warn("gaze log rows are not in time order; sorted on ingestion");
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.sample.t < b.sample.t; });
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].sample.t == rows[i - 1].sample.t) {
      throw ParseError("duplicate timestamp " + detail::format_double(rows[i].sample.t),
                       std::max(rows[i].line, rows[i - 1].line));
    }
  }

  std::vector<GazeSample> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.sample);

  if (out.size() >= 3) {
    std::vector<double> dt(out.size() - 1);
    for (std::size_t i = 0; i + 1 < out.size(); ++i) dt[i] = out[i + 1].t - out[i].t;
    std::nth_element(dt.begin(), dt.begin() + static_cast<std::ptrdiff_t>(dt.size() / 2), dt.end());
    const double nominal = 1.0 / sample_rate;
    const double median_dt = dt[dt.size() / 2];
    if (std::abs(median_dt - nominal) > 0.5 * nominal) {
      warn("gaze log spacing " + detail::format_double(median_dt) + " s differs from the nominal " +
           detail::format_double(sample_rate) + " Hz");
    }
  }

  // Track-loss repair.
  std::size_t i = 0;
  while (i < out.size()) {
    if (out[i].valid) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < out.size() && !out[j].valid) ++j;
    const bool has_prev = i > 0;
    const bool has_next = j < out.size();
    if (has_prev && has_next && out[j].t - out[i - 1].t <= kMaxInterpolatedGapSeconds + 1e-12) {
      const GazeSample& a = out[i - 1];
      const GazeSample& b = out[j];
      for (std::size_t k = i; k < j; ++k) {
        const double w = (out[k].t - a.t) / (b.t - a.t);
        out[k].x = a.x + w * (b.x - a.x);
        out[k].y = a.y + w * (b.y - a.y);
        out[k].valid = true;
      }
    } else if (has_prev || has_next) {
      const GazeSample& hold = has_prev ? out[i - 1] : out[j];
      for (std::size_t k = i; k < j; ++k) {
        out[k].x = hold.x;
        out[k].y = hold.y;
      }
    }
    i = j;
  }
  return out;
}

std::vector<GazeSample> parse_gaze_log(const std::filesystem::path& path, double sample_rate) {
  auto in = open_text(path);
  try {
    return parse_gaze_csv(in, sample_rate);
  } catch (const EmptyInputError& e) {
    throw EmptyInputError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_gaze_csv(std::ostream& out, std::span<const GazeSample> samples) {
  out << "t,x,y,valid\n";
  for (const auto& s : samples) {
    out << detail::format_double(s.t) << ',' << detail::format_double(s.x) << ',' << detail::format_double(s.y) << ','
        << (s.valid ? 1 : 0) << '\n';
  }
}

std::vector<GazeSample> resample_gaze(std::span<const GazeSample> samples, double target_rate,
                                      std::optional<double> grid_origin) {
  if (!(target_rate > 0.0)) throw ParameterError("target rate must be positive");
  if (samples.size() < 2) throw InsufficientDataError("resampling needs at least 2 samples");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].t > samples[i - 1].t)) throw ParameterError("gaze timestamps must be strictly increasing");
  }
  const double t0 = samples.front().t;
  const double t1 = samples.back().t;
  constexpr double kEps = 1e-9;

  double start_index = 0.0;
  double origin = t0;
  if (grid_origin) {
    origin = *grid_origin;
    start_index = std::ceil((t0 - origin) * target_rate - kEps);
  }
  const double last_index = std::floor((t1 - origin) * target_rate + kEps);
  if (last_index < start_index) return {};
  const auto count = static_cast<std::size_t>(last_index - start_index) + 1;

  std::vector<GazeSample> out;
  out.reserve(count);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = origin + (start_index + static_cast<double>(k)) / target_rate;
    const double tq = std::clamp(t, t0, t1);
    while (seg + 2 < samples.size() && samples[seg + 1].t < tq) ++seg;
    const GazeSample& a = samples[seg];
    const GazeSample& b = samples[seg + 1];
    GazeSample s;
    s.t = t;
    if (tq <= a.t) {
      s.x = a.x;
      s.y = a.y;
      s.valid = a.valid;
    } else if (tq >= b.t) {
      s.x = b.x;
      s.y = b.y;
      s.valid = b.valid;
    } else {
      const double w = (tq - a.t) / (b.t - a.t);
      s.x = a.x + w * (b.x - a.x);
      s.y = a.y + w * (b.y - a.y);
      s.valid = a.valid && b.valid;
    }
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Labels

LabelTrack parse_label_csv(std::istream& in) {
  detail::expect_header(in, "t_start,t_end,label");
  LabelTrack track;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 3) throw ParseError("expected 3 fields, got " + std::to_string(f.size()), line_no);
    LabelSegment seg;
    seg.t_start = detail::parse_double(f[0], line_no, "t_start");
    seg.t_end = detail::parse_double(f[1], line_no, "t_end");
    try {
      seg.label = parse_activity(f[2]);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (!std::isfinite(seg.t_start) || !std::isfinite(seg.t_end)) throw ParseError("non-finite time", line_no);
    track.segments.push_back(seg);
  }
  if (track.segments.empty()) throw EmptyInputError("label file has no segments");
  std::stable_sort(track.segments.begin(), track.segments.end(),
                   [](const LabelSegment& a, const LabelSegment& b) { return a.t_start < b.t_start; });
  return track;
}

LabelTrack load_labels(const std::filesystem::path& path) {
  auto in = open_text(path);
  try {
    return parse_label_csv(in);
  } catch (const EmptyInputError& e) {
    throw EmptyInputError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_label_csv(std::ostream& out, const LabelTrack& labels) {
  out << "t_start,t_end,label\n";
  for (const auto& s : labels.segments) {
    out << detail::format_double(s.t_start) << ',' << detail::format_double(s.t_end) << ',' << to_string(s.label)
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Flows

std::vector<FlowEstimate> parse_flow_csv(std::istream& in) {
  detail::expect_header(in, "frame_index,dx,dy,n_points");
  std::vector<std::pair<std::uint64_t, FlowEstimate>> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 4) throw ParseError("expected 4 fields, got " + std::to_string(f.size()), line_no);
    FlowEstimate e;
    const auto index = detail::parse_uint(f[0], line_no, "frame_index");
    e.dx = detail::parse_double(f[1], line_no, "dx");
    e.dy = detail::parse_double(f[2], line_no, "dy");
    e.n_points = detail::parse_uint(f[3], line_no, "n_points");
    if (!std::isfinite(e.dx) || !std::isfinite(e.dy)) throw ParseError("non-finite flow", line_no);
    if (index != rows.size()) {
      throw ParseError("frame_index " + std::to_string(index) + " out of sequence, expected " +
                           std::to_string(rows.size()),
                       line_no);
    }
    rows.emplace_back(index, e);
  }
  if (rows.empty()) throw EmptyInputError("flow file has no rows");
  std::vector<FlowEstimate> out;
  out.reserve(rows.size());
  for (auto& r : rows) out.push_back(r.second);
  return out;
}

std::vector<FlowEstimate> load_flows(const std::filesystem::path& path) {
  auto in = open_text(path);
  try {
    return parse_flow_csv(in);
  } catch (const EmptyInputError& e) {
    throw EmptyInputError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_flow_csv(std::ostream& out, std::span<const FlowEstimate> flows) {
  out << "frame_index,dx,dy,n_points\n";
  for (std::size_t i = 0; i < flows.size(); ++i) {
    out << i << ',' << detail::format_double(flows[i].dx) << ',' << detail::format_double(flows[i].dy) << ','
        << flows[i].n_points << '\n';
  }
}

// ---------------------------------------------------------------------------
// Embeddings

EmbeddingMatrix read_embeddings(std::istream& in) {
  detail::expect_magic(in, "GAEM", "embeddings file");
  const auto version = detail::read_u32(in, "embeddings header");
  if (version != 1) throw ParseError("unsupported embeddings version " + std::to_string(version));
  const auto count = detail::read_u32(in, "embeddings header");
  const auto dim = detail::read_u32(in, "embeddings header");
  const auto comment_len = detail::read_u32(in, "embeddings header");
  if (dim == 0) throw ParseError("embeddings dimension is 0");
  EmbeddingMatrix m;
  m.dim = dim;
  m.comment.resize(comment_len);
  detail::read_exact(in, m.comment.data(), comment_len, "embeddings comment");
  m.values.resize(static_cast<std::size_t>(count) * dim);
  detail::read_f32_array(in, m.values, "embeddings payload");
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("trailing bytes after embeddings payload");
  return m;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return read_embeddings(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_embeddings(std::ostream& out, const EmbeddingMatrix& embeddings) {
  if (embeddings.dim == 0 || embeddings.values.size() % embeddings.dim != 0) {
    throw ParameterError("embedding matrix shape is inconsistent");
  }
  out.write("GAEM", 4);
  detail::write_u32(out, 1);
  detail::write_u32(out, static_cast<std::uint32_t>(embeddings.rows()));
  detail::write_u32(out, static_cast<std::uint32_t>(embeddings.dim));
  detail::write_u32(out, static_cast<std::uint32_t>(embeddings.comment.size()));
  out.write(embeddings.comment.data(), static_cast<std::streamsize>(embeddings.comment.size()));
  detail::write_f32_array(out, embeddings.values);
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& embeddings) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_embeddings(out, embeddings);
}

// ---------------------------------------------------------------------------
// Sessions

std::size_t SessionRecord::frame_count() const {
  if (!frame_files.empty()) return frame_files.size();
  if (!flows.empty()) return flows.size() + 1;
  return 0;
}

std::vector<std::string> validate_session(const SessionRecord& session, std::size_t expected_dim) {
  std::vector<std::string> issues;
  const auto fmt = detail::format_double;
  const std::string who = session.subject_id + "/" + std::to_string(session.session_index) + ": ";

  if (session.session_index != 1 && session.session_index != 2) {
    issues.push_back(who + "session index " + std::to_string(session.session_index) + " is not 1 or 2");
  }
  if (!(session.sample_rate > 0.0)) issues.push_back(who + "sample rate must be positive");

  if (session.gaze.size() < 2) {
    issues.push_back(who + "fewer than 2 gaze samples");
  } else {
    if (!(session.gaze.back().t > session.gaze.front().t)) issues.push_back(who + "gaze duration is not positive");
    for (std::size_t i = 1; i < session.gaze.size(); ++i) {
      if (!(session.gaze[i].t > session.gaze[i - 1].t)) {
        issues.push_back(who + "gaze timestamps not strictly increasing at sample " + std::to_string(i));
        break;
      }
    }
  }

  const std::size_t frames = session.frame_count();
  if (frames < 2) issues.push_back(who + "fewer than 2 frames (or no flow sequence)");

  if (session.embeddings) {
    const auto& e = *session.embeddings;
    if (e.rows() != frames) {
      issues.push_back(who + "embedding count " + std::to_string(e.rows()) + " != frame count " +
                       std::to_string(frames));
    }
    if (e.dim != expected_dim) {
      issues.push_back(who + "embedding dimension " + std::to_string(e.dim) + " != " + std::to_string(expected_dim));
    }
  }

  const auto& segs = session.labels.segments;
  if (segs.empty()) issues.push_back(who + "no label segments");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (!(segs[i].t_start < segs[i].t_end)) {
      issues.push_back(who + "label segment [" + fmt(segs[i].t_start) + ", " + fmt(segs[i].t_end) + ") " +
                       std::string(to_string(segs[i].label)) + " has t_start >= t_end");
    }
    if (i > 0 && segs[i].t_start < segs[i - 1].t_end) {
      issues.push_back(who + "label segments [" + fmt(segs[i - 1].t_start) + ", " + fmt(segs[i - 1].t_end) + ") " +
                       std::string(to_string(segs[i - 1].label)) + " and [" + fmt(segs[i].t_start) + ", " +
                       fmt(segs[i].t_end) + ") " + std::string(to_string(segs[i].label)) + " overlap");
    }
  }

  // Coverage: gaze and frames must span the labelled interval (1 s slack).
  if (!segs.empty() && session.gaze.size() >= 2 && frames >= 2 && session.sample_rate > 0.0) {
    const double l0 = segs.front().t_start;
    double l1 = l0;
    for (const auto& s : segs) l1 = std::max(l1, s.t_end);
    const double g0 = session.gaze.front().t;
    const double g1 = session.gaze.back().t;
    const double f1 = static_cast<double>(frames) / session.sample_rate;
    constexpr double kSlack = 1.0;
    if (g0 > l0 + kSlack || g1 < l1 - kSlack) {
      issues.push_back(who + "coverage gap: gaze spans [" + fmt(g0) + ", " + fmt(g1) + "] but labels span [" +
                       fmt(l0) + ", " + fmt(l1) + "]");
    }
    if (l0 < -kSlack || f1 < l1 - kSlack) {
      issues.push_back(who + "coverage gap: frames span [0, " + fmt(f1) + ") but labels span [" + fmt(l0) + ", " +
                       fmt(l1) + "]");
    }
    if (std::max({g0, 0.0, l0}) >= std::min({g1, f1, l1})) {
      issues.push_back(who + "gaze, frames and labels share no common time span");
    }
  }
  return issues;
}

}  // namespace gazeact
