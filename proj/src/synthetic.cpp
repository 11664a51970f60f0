#include "gazeact/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "gazeact/errors.hpp"

namespace gazeact {

GrayImage random_texture(std::size_t width, std::size_t height, Rng& rng) {
  if (width == 0 || height == 0) throw ParameterError("texture size must be positive");
  GrayImage img(width, height);
  std::vector<double> acc(width * height, 0.0);
  double amplitude = 1.0;
  for (std::size_t cell : {32u, 16u, 8u, 4u}) {
    const std::size_t gw = width / cell + 2;
    const std::size_t gh = height / cell + 2;
    std::vector<double> grid(gw * gh);
    for (double& g : grid) g = rng.uniform();
    for (std::size_t y = 0; y < height; ++y) {
      const double fy = static_cast<double>(y) / static_cast<double>(cell);
      const auto y0 = static_cast<std::size_t>(fy);
      const double ty = fy - static_cast<double>(y0);
      for (std::size_t x = 0; x < width; ++x) {
        const double fx = static_cast<double>(x) / static_cast<double>(cell);
        const auto x0 = static_cast<std::size_t>(fx);
        const double tx = fx - static_cast<double>(x0);
        const double top = grid[y0 * gw + x0] * (1 - tx) + grid[y0 * gw + x0 + 1] * tx;
        const double bottom = grid[(y0 + 1) * gw + x0] * (1 - tx) + grid[(y0 + 1) * gw + x0 + 1] * tx;
        acc[y * width + x] += amplitude * (top * (1 - ty) + bottom * ty);
      }
    }
    amplitude *= 0.6;
  }
  const auto [lo, hi] = std::minmax_element(acc.begin(), acc.end());
  const double range = *hi - *lo > 0.0 ? *hi - *lo : 1.0;
  for (std::size_t i = 0; i < acc.size(); ++i) img.pixels[i] = static_cast<float>((acc[i] - *lo) / range);
  return img;
}

GrayImage translate(const GrayImage& source, int dx, int dy) {
  GrayImage out(source.width, source.height);
  const auto w = static_cast<long>(source.width);
  const auto h = static_cast<long>(source.height);
  for (long y = 0; y < h; ++y) {
    const long sy = std::clamp(y - dy, 0L, h - 1);
    for (long x = 0; x < w; ++x) {
      const long sx = std::clamp(x - dx, 0L, w - 1);
      out.pixels[static_cast<std::size_t>(y * w + x)] = source.pixels[static_cast<std::size_t>(sy * w + sx)];
    }
  }
  return out;
}

GrayImage checkerboard(std::size_t cells, std::size_t cell_size) {
  const std::size_t n = cells * cell_size;
  GrayImage img(n, n);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      img.pixels[y * n + x] = ((x / cell_size + y / cell_size) % 2 == 0) ? 0.0f : 1.0f;
    }
  }
  return img;
}

namespace {

constexpr std::array<ActivityLabel, 3> kActivities = {ActivityLabel::kRead, ActivityLabel::kWrite,
                                                      ActivityLabel::kBrowse};
constexpr std::array<std::array<int, 3>, 6> kOrders = {
    {{0, 1, 2}, {2, 0, 1}, {1, 2, 0}, {0, 2, 1}, {1, 0, 2}, {2, 1, 0}}};

constexpr double kScreenW = 1280.0;
constexpr double kScreenH = 720.0;
constexpr std::size_t kPrototypes = 15;

double reflect(double v, double hi) {
  while (v < 0.0 || v > hi) v = v < 0.0 ? -v : 2.0 * hi - v;
  return v;
}

// Fixation/saccade scanpath for one segment of `n` samples.
void gaze_segment(std::size_t activity, std::size_t n, double rate, double subject_scale, Rng& rng,
                  std::vector<GazeSample>& out, double& x, double& y) {
  std::size_t i = 0;
  int fixations_on_line = 0;
  while (i < n) {
    double duration = 0.0;
    switch (activity) {
      case 0:  // read: short rightward steps, periodic return sweep
        duration = rng.uniform(0.18, 0.30);
        if (++fixations_on_line >= 10) {
          x -= 360.0 * subject_scale;
          y += 30.0;
          fixations_on_line = 0;
        } else {
          x += rng.normal(40.0, 6.0) * subject_scale;
        }
        if (y > kScreenH - 50.0) y = 80.0;
        break;
      case 1:  // write: long fixations, tiny corrections
        duration = rng.uniform(0.5, 1.0);
        x += rng.normal(0.0, 6.0) * subject_scale;
        y += rng.normal(0.0, 6.0) * subject_scale;
        break;
      default: {  // browse: large saccades anywhere
        duration = rng.uniform(0.15, 0.5);
        const double amp = rng.uniform(120.0, 320.0) * subject_scale;
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        x += amp * std::cos(angle);
        y += amp * std::sin(angle);
        break;
      }
    }
    x = reflect(x, kScreenW);
    y = reflect(y, kScreenH);
    const auto len = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(duration * rate)));
    for (std::size_t k = 0; k < len && i < n; ++k, ++i) {
      const double t = static_cast<double>(out.size()) / rate;
      out.push_back({t, x + rng.normal(0.0, 1.5), y + rng.normal(0.0, 1.5), true});
    }
  }
}

// Frame-to-frame head motion for one segment.
void flow_segment(std::size_t activity, std::size_t n, double rate, Rng& rng, std::vector<FlowEstimate>& out) {
  std::size_t i = 0;
  while (i < n) {
    switch (activity) {
      case 0:  // read: still head
        out.push_back({rng.normal(0.0, 0.3), rng.normal(0.0, 0.3), 50});
        ++i;
        break;
      case 1: {  // write: slow nodding
        const double t = static_cast<double>(out.size()) / rate;
        out.push_back({rng.normal(0.0, 0.3), 1.2 * std::sin(2.0 * std::numbers::pi * t / 3.0) + rng.normal(0.0, 0.3),
                       50});
        ++i;
        break;
      }
      default: {  // browse: horizontal pans between pauses
        const double dir = rng.uniform() < 0.5 ? -1.0 : 1.0;
        const auto pan = static_cast<std::size_t>(rng.uniform(0.5, 1.5) * rate);
        const auto pause = static_cast<std::size_t>(rng.uniform(0.8, 2.0) * rate);
        for (std::size_t k = 0; k < pan && i < n; ++k, ++i) {
          out.push_back({dir * 5.0 + rng.normal(0.0, 0.5), rng.normal(0.0, 0.5), 50});
        }
        for (std::size_t k = 0; k < pause && i < n; ++k, ++i) {
          out.push_back({rng.normal(0.0, 0.3), rng.normal(0.0, 0.3), 50});
        }
        break;
      }
    }
  }
}

// Embeddings drawn around shared prototypes; each activity favours its own five.
void embedding_segment(std::size_t activity, std::size_t n, double rate, const std::vector<float>& prototypes,
                       std::span<const float> subject_offset, Rng& rng, EmbeddingMatrix& out) {
  const std::size_t dim = out.dim;
  std::size_t i = 0;
  while (i < n) {
    const std::size_t proto = rng.uniform() < 0.8 ? activity * 5 + rng.index(5) : rng.index(kPrototypes);
    const auto shot = static_cast<std::size_t>(rng.uniform(1.0, 3.0) * rate);
    for (std::size_t k = 0; k < shot && i < n; ++k, ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        out.values.push_back(prototypes[proto * dim + j] + subject_offset[j] + static_cast<float>(rng.normal()));
      }
    }
  }
}

}  // namespace

std::vector<SessionRecord> synthetic_sessions(std::uint64_t seed, const SyntheticOptions& options) {
  if (options.subjects == 0 || !(options.segment_seconds > 0.0) || !(options.sample_rate > 0.0) ||
      options.embedding_dim == 0) {
    throw ParameterError("invalid synthetic options");
  }
  const double rate = options.sample_rate;
  const auto per_segment = static_cast<std::size_t>(std::lround(options.segment_seconds * rate));
  const std::size_t dim = options.embedding_dim;

  Rng shared = Rng::stream(seed, 0);
  std::vector<float> prototypes(kPrototypes * dim);
  for (float& v : prototypes) v = static_cast<float>(shared.normal(0.0, 3.0));

  std::vector<SessionRecord> out;
  for (std::size_t s = 0; s < options.subjects; ++s) {
    Rng subject_rng = Rng::stream(seed, 1000 + s);
    const double scale = subject_rng.uniform(0.85, 1.15);
    std::vector<float> offset(dim);
    for (float& v : offset) v = static_cast<float>(subject_rng.normal(0.0, 0.3));

    for (int session = 1; session <= 2; ++session) {
      Rng rng = Rng::stream(seed, 1 + 2 * s + static_cast<std::size_t>(session));
      SessionRecord rec;
      rec.subject_id = "s" + std::to_string(s + 1);
      rec.session_index = session;
      rec.sample_rate = rate;
      rec.embeddings = EmbeddingMatrix{};
      rec.embeddings->dim = dim;
      rec.embeddings->comment = "synthetic";

      const auto& order = kOrders[(2 * s + static_cast<std::size_t>(session) - 1) % kOrders.size()];
      double x = kScreenW / 2.0;
      double y = kScreenH / 2.0;
      for (std::size_t seg = 0; seg < order.size(); ++seg) {
        const auto activity = static_cast<std::size_t>(order[seg]);
        const double t0 = static_cast<double>(seg * per_segment) / rate;
        rec.labels.segments.push_back({t0, t0 + static_cast<double>(per_segment) / rate, kActivities[activity]});
        gaze_segment(activity, per_segment, rate, scale, rng, rec.gaze, x, y);
        // One flow fewer than frames overall: the last segment drops its final pair.
        const std::size_t n_flows = seg + 1 == order.size() ? per_segment - 1 : per_segment;
        flow_segment(activity, n_flows, rate, rng, rec.flows);
        embedding_segment(activity, per_segment, rate, prototypes, offset, rng, *rec.embeddings);
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

EvalReport run_synthetic_selftest(std::uint64_t seed, const PipelineConfig& config, ChannelSet channels,
                                  const SyntheticOptions& options) {
  PipelineConfig cfg = config;
  cfg.embedding_dim = options.embedding_dim;
  cfg.sample_rate = options.sample_rate;
  const auto sessions = synthetic_sessions(seed, options);
  for (const auto& s : sessions) {
    const auto issues = validate_session(s, cfg.embedding_dim);
    if (!issues.empty()) throw Error("synthetic session failed validation: " + issues.front());
  }
  return run_two_fold(sessions, cfg, channels);
}

}  // namespace gazeact
