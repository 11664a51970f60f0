#include "gazeact/motion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "gazeact/errors.hpp"
#include "parallel_util.hpp"

namespace gazeact {

CornerParams corner_params(const PipelineConfig& config) {
  return {config.max_corners, config.corner_quality, config.corner_min_distance};
}

LkParams lk_params(const PipelineConfig& config) {
  LkParams p;
  p.window = config.lk_window;
  p.levels = config.lk_levels;
  p.max_iterations = config.lk_max_iterations;
  p.epsilon = config.lk_epsilon;
  return p;
}

// ---------------------------------------------------------------------------
// Corners

namespace {

double min_eigenvalue(double a, double b, double c) {
  // [[a, b], [b, c]]
  const double half_trace = 0.5 * (a + c);
  const double half_diff = 0.5 * (a - c);
  return half_trace - std::sqrt(half_diff * half_diff + b * b);
}

struct ScoredPixel {
  double score;
  std::size_t x;
  std::size_t y;
};

}  // namespace

std::vector<Point2> detect_corners(const GrayImage& frame, const CornerParams& params, Execution exec) {
  const std::size_t w = frame.width;
  const std::size_t h = frame.height;
  if (frame.empty() || w < 5 || h < 5 || params.max_corners == 0) return {};

  // Sobel gradients (scaled by 1/8) on the interior.
  std::vector<double> gxx(w * h, 0.0), gxy(w * h, 0.0), gyy(w * h, 0.0);
  const auto rows = static_cast<std::ptrdiff_t>(h);
#pragma omp parallel for schedule(static) if (exec == Execution::kParallel)
  for (std::ptrdiff_t sy = 1; sy < rows - 1; ++sy) {
    const auto y = static_cast<std::size_t>(sy);
    for (std::size_t x = 1; x + 1 < w; ++x) {
      auto p = [&](std::size_t xx, std::size_t yy) { return static_cast<double>(frame.at(xx, yy)); };
      const double gx = (p(x + 1, y - 1) + 2 * p(x + 1, y) + p(x + 1, y + 1) - p(x - 1, y - 1) - 2 * p(x - 1, y) -
                         p(x - 1, y + 1)) /
                        8.0;
      const double gy = (p(x - 1, y + 1) + 2 * p(x, y + 1) + p(x + 1, y + 1) - p(x - 1, y - 1) - 2 * p(x, y - 1) -
                         p(x + 1, y - 1)) /
                        8.0;
      gxx[y * w + x] = gx * gx;
      gxy[y * w + x] = gx * gy;
      gyy[y * w + x] = gy * gy;
    }
  }

  std::vector<double> score(w * h, 0.0);
#pragma omp parallel for schedule(static) if (exec == Execution::kParallel)
  for (std::ptrdiff_t sy = 2; sy < rows - 2; ++sy) {
    const auto y = static_cast<std::size_t>(sy);
    for (std::size_t x = 2; x + 2 < w; ++x) {
      double a = 0, b = 0, c = 0;
      for (std::size_t yy = y - 1; yy <= y + 1; ++yy) {
        for (std::size_t xx = x - 1; xx <= x + 1; ++xx) {
          a += gxx[yy * w + xx];
          b += gxy[yy * w + xx];
          c += gyy[yy * w + xx];
        }
      }
      score[y * w + x] = std::max(0.0, min_eigenvalue(a, b, c));
    }
  }

  const double best = *std::max_element(score.begin(), score.end());
  if (!(best > 1e-12)) return {};
  const double floor = params.quality * best;

  std::vector<ScoredPixel> candidates;
  for (std::size_t y = 2; y + 2 < h; ++y) {
    for (std::size_t x = 2; x + 2 < w; ++x) {
      const double s = score[y * w + x];
      if (s < floor || s <= 0.0) continue;
      bool is_max = true;
      for (std::size_t yy = y - 1; yy <= y + 1 && is_max; ++yy) {
        for (std::size_t xx = x - 1; xx <= x + 1; ++xx) {
          if (score[yy * w + xx] > s) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) candidates.push_back({s, x, y});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const ScoredPixel& a, const ScoredPixel& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });

  // Greedy spacing through a bucket grid of cell size min_distance.
  std::vector<Point2> corners;
  const double md = params.min_distance;
  const double md2 = md * md;
  const std::size_t cell = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(md)));
  const std::size_t gw = (w + cell - 1) / cell;
  const std::size_t gh = (h + cell - 1) / cell;
  std::vector<std::vector<Point2>> grid(gw * gh);
  for (const auto& c : candidates) {
    const std::size_t cx = c.x / cell;
    const std::size_t cy = c.y / cell;
    bool ok = true;
    if (md > 0.0) {
      for (std::size_t ny = cy > 0 ? cy - 1 : 0; ny <= std::min(gh - 1, cy + 1) && ok; ++ny) {
        for (std::size_t nx = cx > 0 ? cx - 1 : 0; nx <= std::min(gw - 1, cx + 1) && ok; ++nx) {
          for (const auto& q : grid[ny * gw + nx]) {
            const double dx = q.x - static_cast<double>(c.x);
            const double dy = q.y - static_cast<double>(c.y);
            if (dx * dx + dy * dy < md2) {
              ok = false;
              break;
            }
          }
        }
      }
    }
    if (!ok) continue;
    const Point2 p{static_cast<double>(c.x), static_cast<double>(c.y)};
    grid[cy * gw + cx].push_back(p);
    corners.push_back(p);
    if (corners.size() == params.max_corners) break;
  }
  return corners;
}

// ---------------------------------------------------------------------------
// Pyramid

namespace {

GrayImage pyr_down(const GrayImage& src) {
  const std::size_t w = src.width;
  const std::size_t h = src.height;
  constexpr std::array<float, 5> k = {1 / 16.f, 4 / 16.f, 6 / 16.f, 4 / 16.f, 1 / 16.f};
  auto clampi = [](std::ptrdiff_t v, std::size_t n) {
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(v, 0, static_cast<std::ptrdiff_t>(n) - 1));
  };
  GrayImage tmp(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      float acc = 0;
      for (int i = -2; i <= 2; ++i) acc += k[i + 2] * src.at(clampi(static_cast<std::ptrdiff_t>(x) + i, w), y);
      tmp.at(x, y) = acc;
    }
  }
  GrayImage out((w + 1) / 2, (h + 1) / 2);
  for (std::size_t y = 0; y < out.height; ++y) {
    for (std::size_t x = 0; x < out.width; ++x) {
      float acc = 0;
      for (int i = -2; i <= 2; ++i) acc += k[i + 2] * tmp.at(2 * x, clampi(static_cast<std::ptrdiff_t>(2 * y) + i, h));
      out.at(x, y) = acc;
    }
  }
  return out;
}

void central_gradients(const GrayImage& img, GrayImage& gx, GrayImage& gy) {
  const std::size_t w = img.width;
  const std::size_t h = img.height;
  gx = GrayImage(w, h);
  gy = GrayImage(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t xl = x > 0 ? x - 1 : 0;
      const std::size_t xr = x + 1 < w ? x + 1 : w - 1;
      const std::size_t yu = y > 0 ? y - 1 : 0;
      const std::size_t yd = y + 1 < h ? y + 1 : h - 1;
      gx.at(x, y) = (img.at(xr, y) - img.at(xl, y)) / static_cast<float>(xr - xl);
      gy.at(x, y) = (img.at(x, yd) - img.at(x, yu)) / static_cast<float>(yd - yu);
    }
  }
}

// Bilinear sample with edge clamping.
double sample(const GrayImage& img, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  const auto x0 = static_cast<std::size_t>(x);
  const auto y0 = static_cast<std::size_t>(y);
  const std::size_t x1 = std::min(x0 + 1, img.width - 1);
  const std::size_t y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);
  const double top = (1 - fx) * img.at(x0, y0) + fx * img.at(x1, y0);
  const double bottom = (1 - fx) * img.at(x0, y1) + fx * img.at(x1, y1);
  return (1 - fy) * top + fy * bottom;
}

bool window_inside(const GrayImage& img, double x, double y, double half) {
  return x - half >= 0.0 && y - half >= 0.0 && x + half <= static_cast<double>(img.width - 1) &&
         y + half <= static_cast<double>(img.height - 1);
}

TrackedPoint track_point(const ImagePyramid& a, const ImagePyramid& b, Point2 origin, const LkParams& params) {
  TrackedPoint result;
  result.origin = origin;
  result.destination = origin;
  result.status = TrackStatus::kLost;

  const auto half = static_cast<int>(params.window / 2);
  const double half_d = static_cast<double>(half);
  if (!window_inside(a.image(0), origin.x, origin.y, half_d)) return result;

  const std::size_t side = params.window;
  const std::size_t area = side * side;
  std::vector<double> tmpl(area), ix(area), iy(area);

  double gx = 0.0, gy = 0.0;  // guess carried from coarser levels
  double vx = 0.0, vy = 0.0;
  for (std::size_t level = a.levels(); level-- > 0;) {
    const double scale = std::ldexp(1.0, -static_cast<int>(level));
    const double px = origin.x * scale;
    const double py = origin.y * scale;
    const GrayImage& ia = a.image(level);
    const GrayImage& ib = b.image(level);

    double g11 = 0, g12 = 0, g22 = 0;
    std::size_t idx = 0;
    for (int oy = -half; oy <= half; ++oy) {
      for (int ox = -half; ox <= half; ++ox, ++idx) {
        const double sx = px + ox;
        const double sy = py + oy;
        tmpl[idx] = sample(ia, sx, sy);
        ix[idx] = sample(a.grad_x(level), sx, sy);
        iy[idx] = sample(a.grad_y(level), sx, sy);
        g11 += ix[idx] * ix[idx];
        g12 += ix[idx] * iy[idx];
        g22 += iy[idx] * iy[idx];
      }
    }
    const double det = g11 * g22 - g12 * g12;
    const bool degenerate = min_eigenvalue(g11, g12, g22) / static_cast<double>(area) < params.min_eigen ||
                            !(std::abs(det) > 0.0);
    vx = 0.0;
    vy = 0.0;
    if (degenerate) {
      if (level == 0) return result;
    } else {
      for (std::size_t it = 0; it < params.max_iterations; ++it) {
        const double qx = px + gx + vx;
        const double qy = py + gy + vy;
        if (level == 0 && !window_inside(ib, qx, qy, half_d)) return result;
        double b1 = 0, b2 = 0;
        idx = 0;
        for (int oy = -half; oy <= half; ++oy) {
          for (int ox = -half; ox <= half; ++ox, ++idx) {
            const double diff = tmpl[idx] - sample(ib, qx + ox, qy + oy);
            b1 += diff * ix[idx];
            b2 += diff * iy[idx];
          }
        }
        const double dx = (g22 * b1 - g12 * b2) / det;
        const double dy = (g11 * b2 - g12 * b1) / det;
        if (!std::isfinite(dx) || !std::isfinite(dy)) return result;
        vx += dx;
        vy += dy;
        if (dx * dx + dy * dy < params.epsilon * params.epsilon) break;
      }
    }
    if (level > 0) {
      gx = 2.0 * (gx + vx);
      gy = 2.0 * (gy + vy);
    }
  }
  const double fx = gx + vx;
  const double fy = gy + vy;
  result.destination = {origin.x + fx, origin.y + fy};
  if (!window_inside(b.image(0), result.destination.x, result.destination.y, half_d)) return result;
  result.status = TrackStatus::kOk;
  return result;
}

}  // namespace

ImagePyramid::ImagePyramid(const GrayImage& base, std::size_t levels) {
  if (base.empty()) throw ParameterError("cannot build a pyramid of an empty image");
  if (levels == 0) throw ParameterError("pyramid needs at least one level");
  images_.push_back(base);
  while (images_.size() < levels && images_.back().width >= 16 && images_.back().height >= 16) {
    images_.push_back(pyr_down(images_.back()));
  }
  grad_x_.resize(images_.size());
  grad_y_.resize(images_.size());
  for (std::size_t l = 0; l < images_.size(); ++l) central_gradients(images_[l], grad_x_[l], grad_y_[l]);
}

std::vector<TrackedPoint> track_lk(const ImagePyramid& a, const ImagePyramid& b, std::span<const Point2> points,
                                   const LkParams& params, Execution exec) {
  if (a.image(0).width != b.image(0).width || a.image(0).height != b.image(0).height) {
    throw ParameterError("frames differ in size");
  }
  if (params.window < 3 || params.window % 2 == 0) throw ParameterError("LK window must be odd and >= 3");
  std::vector<TrackedPoint> out(points.size());
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(dynamic, 16) if (exec == Execution::kParallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = track_point(a, b, points[static_cast<std::size_t>(i)], params);
  }
  return out;
}

std::vector<TrackedPoint> track_lk(const GrayImage& a, const GrayImage& b, std::span<const Point2> points,
                                   const LkParams& params, Execution exec) {
  if (a.width != b.width || a.height != b.height) throw ParameterError("frames differ in size");
  if (params.levels == 0) throw ParameterError("LK needs at least one pyramid level");
  return track_lk(ImagePyramid(a, params.levels), ImagePyramid(b, params.levels), points, params, exec);
}

std::vector<TrackedPoint> fb_filter(std::span<const TrackedPoint> forward, const ImagePyramid& a,
                                    const ImagePyramid& b, double threshold, const LkParams& params, Execution exec) {
  std::vector<TrackedPoint> out(forward.begin(), forward.end());
  std::vector<Point2> destinations;
  std::vector<std::size_t> which;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].status == TrackStatus::kOk) {
      destinations.push_back(out[i].destination);
      which.push_back(i);
    }
  }
  const auto backward = track_lk(b, a, destinations, params, exec);
  for (std::size_t j = 0; j < which.size(); ++j) {
    TrackedPoint& p = out[which[j]];
    if (backward[j].status == TrackStatus::kOk) {
      const double ex = backward[j].destination.x - p.origin.x;
      const double ey = backward[j].destination.y - p.origin.y;
      p.fb_error = std::sqrt(ex * ex + ey * ey);
    } else {
      p.fb_error = std::numeric_limits<double>::infinity();
    }
    if (p.fb_error > threshold) p.status = TrackStatus::kRejected;
  }
  return out;
}

std::vector<TrackedPoint> fb_filter(std::span<const TrackedPoint> forward, const GrayImage& a, const GrayImage& b,
                                    double threshold, const LkParams& params, Execution exec) {
  if (a.width != b.width || a.height != b.height) throw ParameterError("frames differ in size");
  return fb_filter(forward, ImagePyramid(a, params.levels), ImagePyramid(b, params.levels), threshold, params, exec);
}

namespace {

double median_of(std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

FlowEstimate median_flow(std::span<const TrackedPoint> points) {
  std::vector<double> dx, dy;
  for (const auto& p : points) {
    if (p.status != TrackStatus::kOk) continue;
    dx.push_back(p.dx());
    dy.push_back(p.dy());
  }
  if (dx.empty()) throw NoFlowError("no tracked point survived");
  FlowEstimate e;
  e.n_points = dx.size();
  e.dx = median_of(dx);
  e.dy = median_of(dy);
  return e;
}

FlowEstimate estimate_pair_flow(const GrayImage& a, const GrayImage& b, const PipelineConfig& config,
                                Execution exec) {
  if (a.width != b.width || a.height != b.height) throw ParameterError("frames differ in size");
  const LkParams lk = lk_params(config);
  const ImagePyramid pa(a, lk.levels);
  const ImagePyramid pb(b, lk.levels);
  const auto corners = detect_corners(a, corner_params(config), exec);
  const auto forward = track_lk(pa, pb, corners, lk, exec);
  const auto checked = fb_filter(forward, pa, pb, config.fb_threshold, lk, exec);
  try {
    return median_flow(checked);
  } catch (const NoFlowError&) {
    return FlowEstimate{};
  }
}

std::vector<FlowEstimate> compute_flows(std::span<const GrayImage> frames, const PipelineConfig& config,
                                        Execution exec) {
  if (frames.size() < 2) throw InsufficientDataError("motion needs at least 2 frames");
  std::vector<FlowEstimate> out(frames.size() - 1);
  detail::ExceptionSlot slot;
  const auto pairs = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(dynamic) if (exec == Execution::kParallel)
  for (std::ptrdiff_t i = 0; i < pairs; ++i) {
    slot.run([&] {
      const auto k = static_cast<std::size_t>(i);
      out[k] = estimate_pair_flow(frames[k], frames[k + 1], config, Execution::kSerial);
    });
  }
  slot.rethrow();
  return out;
}

std::vector<FlowEstimate> compute_flows(std::span<const std::filesystem::path> frame_files,
                                        const PipelineConfig& config, Execution exec) {
  if (frame_files.size() < 2) throw InsufficientDataError("motion needs at least 2 frames");
  std::vector<FlowEstimate> out(frame_files.size() - 1);
  detail::ExceptionSlot slot;
  const auto pairs = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(dynamic) if (exec == Execution::kParallel)
  for (std::ptrdiff_t i = 0; i < pairs; ++i) {
    slot.run([&] {
      const auto k = static_cast<std::size_t>(i);
      const GrayImage a = load_image(frame_files[k]);
      const GrayImage b = load_image(frame_files[k + 1]);
      out[k] = estimate_pair_flow(a, b, config, Execution::kSerial);
    });
  }
  slot.rethrow();
  return out;
}

AxisCoefficients analyze_flows(std::span<const FlowEstimate> flows, const PipelineConfig& config) {
  std::vector<double> xs(flows.size());
  std::vector<double> ys(flows.size());
  for (std::size_t i = 0; i < flows.size(); ++i) {
    xs[i] = flows[i].dx;
    ys[i] = flows[i].dy;
  }
  if (config.motion_use_wavelet) return analyze_axes(xs, ys, config.median_filter_width, config.wavelet_scale);
  AxisCoefficients raw;
  raw.x.values = median_filter(xs, config.median_filter_width);
  raw.y.values = median_filter(ys, config.median_filter_width);
  return raw;
}

std::optional<QuantThresholds> configured_motion_thresholds(const PipelineConfig& config) {
  if (config.motion_tau_small && config.motion_tau_large) {
    return QuantThresholds{*config.motion_tau_small, *config.motion_tau_large};
  }
  return configured_gaze_thresholds(config);
}

std::vector<MotionSymbol> encode_motion_channel(std::span<const FlowEstimate> flows, const PipelineConfig& config,
                                                const QuantThresholds& tau) {
  if (flows.empty()) throw InsufficientDataError("empty flow sequence");
  return quantize_and_encode(analyze_flows(flows, config), tau);
}

std::vector<MotionSymbol> encode_motion_channel(std::span<const GrayImage> frames, const PipelineConfig& config,
                                                const QuantThresholds& tau) {
  const auto flows = compute_flows(frames, config);
  return encode_motion_channel(flows, config, tau);
}

}  // namespace gazeact
