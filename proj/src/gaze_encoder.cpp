#include "gazeact/gaze_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gazeact/errors.hpp"

namespace gazeact {

void QuantThresholds::validate() const {
  if (!(0.0 < small && small < large)) {
    throw ParameterError("quantization thresholds need 0 < tau_small < tau_large (got " + std::to_string(small) +
                         ", " + std::to_string(large) + ")");
  }
}

std::vector<double> median_filter(std::span<const double> signal, std::size_t width, Execution exec) {
  if (width % 2 == 0) throw ParameterError("median filter width must be odd");
  if (width > signal.size()) throw ParameterError("median filter width exceeds signal length");
  const std::size_t n = signal.size();
  const std::size_t half = width / 2;
  std::vector<double> out(n);
  if (width == 1) {
    std::copy(signal.begin(), signal.end(), out.begin());
    return out;
  }
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel if (exec == Execution::kParallel)
  {
    std::vector<double> window(width);
#pragma omp for schedule(static)
    for (std::ptrdiff_t si = 0; si < count; ++si) {
      const auto i = static_cast<std::size_t>(si);
      const std::size_t r = std::min({half, i, n - 1 - i});
      const auto first = signal.begin() + static_cast<std::ptrdiff_t>(i - r);
      const auto len = static_cast<std::ptrdiff_t>(2 * r + 1);
      std::copy(first, first + len, window.begin());
      std::nth_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(r), window.begin() + len);
      out[i] = window[r];
    }
  }
  return out;
}

WaveletCoefficients haar_cwt(std::span<const double> signal, std::size_t scale, Execution exec) {
  if (scale < 2 || scale % 2 != 0) throw ParameterError("Haar wavelet scale must be even and >= 2");
  const std::size_t n = signal.size();
  const std::size_t half = scale / 2;
  const double norm = std::sqrt(static_cast<double>(scale));
  WaveletCoefficients out;
  out.scale = scale;
  out.values.resize(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (exec == Execution::kParallel)
  for (std::ptrdiff_t sb = 0; sb < count; ++sb) {
    const auto b = static_cast<std::size_t>(sb);
    const std::size_t mid = std::min(n, b + half);
    const std::size_t end = std::min(n, b + scale);
    double rising = 0.0;
    for (std::size_t t = b; t < mid; ++t) rising += signal[t];
    double falling = 0.0;
    for (std::size_t t = mid; t < end; ++t) falling += signal[t];
    out.values[b] = (rising - falling) / norm;
  }
  return out;
}

QuantLevel quantize_value(double c, const QuantThresholds& tau) {
  if (std::isnan(c)) throw ParameterError("cannot quantize NaN coefficient");
  if (c >= tau.large) return 2;
  if (c > tau.small) return 1;
  if (c >= -tau.small) return 0;
  if (c > -tau.large) return -1;
  return -2;
}

std::vector<QuantLevel> quantize(std::span<const double> coeffs, const QuantThresholds& tau) {
  tau.validate();
  std::vector<QuantLevel> out(coeffs.size());
  std::transform(coeffs.begin(), coeffs.end(), out.begin(), [&](double c) { return quantize_value(c, tau); });
  return out;
}

MotionSymbol encode_pair(QuantLevel qx, QuantLevel qy) {
  if (qx < -2 || qx > 2 || qy < -2 || qy > 2) throw ParameterError("quantization level out of range");
  return MotionSymbol{static_cast<std::uint8_t>((qx + 2) * 5 + (qy + 2))};
}

std::array<QuantLevel, 2> decode_symbol(MotionSymbol symbol) {
  if (symbol.code >= kSymbolCount) throw ParameterError("motion symbol out of range");
  return {static_cast<QuantLevel>(symbol.code / 5 - 2), static_cast<QuantLevel>(symbol.code % 5 - 2)};
}

std::vector<MotionSymbol> encode_joint(std::span<const QuantLevel> qx, std::span<const QuantLevel> qy) {
  if (qx.size() != qy.size()) throw ParameterError("x and y level sequences differ in length");
  std::vector<MotionSymbol> out(qx.size());
  for (std::size_t i = 0; i < qx.size(); ++i) out[i] = encode_pair(qx[i], qy[i]);
  return out;
}

AxisCoefficients analyze_axes(std::span<const double> xs, std::span<const double> ys, std::size_t filter_width,
                              std::size_t scale, Execution exec) {
  if (xs.size() != ys.size()) throw ParameterError("x and y signals differ in length");
  const auto fx = median_filter(xs, filter_width, exec);
  const auto fy = median_filter(ys, filter_width, exec);
  return {haar_cwt(fx, scale, exec), haar_cwt(fy, scale, exec)};
}

std::vector<MotionSymbol> quantize_and_encode(const AxisCoefficients& coeffs, const QuantThresholds& tau) {
  const auto qx = quantize(coeffs.x.values, tau);
  const auto qy = quantize(coeffs.y.values, tau);
  return encode_joint(qx, qy);
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw InsufficientDataError("percentile of an empty sample");
  if (!(pct >= 0.0 && pct <= 100.0)) throw ParameterError("percentile must lie in [0, 100]");
  const double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double vlo = values[lo];
  if (hi == lo) return vlo;
  const double vhi = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return vlo + (rank - static_cast<double>(lo)) * (vhi - vlo);
}

QuantThresholds estimate_thresholds(std::span<const AxisCoefficients* const> sources, double percentile_small,
                                    double percentile_large) {
  std::vector<double> magnitudes;
  for (const auto* src : sources) {
    for (double c : src->x.values) magnitudes.push_back(std::abs(c));
    for (double c : src->y.values) magnitudes.push_back(std::abs(c));
  }
  if (magnitudes.empty()) throw InsufficientDataError("no coefficients to estimate thresholds from");
  const double peak = *std::max_element(magnitudes.begin(), magnitudes.end());
  QuantThresholds tau{percentile(magnitudes, percentile_small), percentile(magnitudes, percentile_large)};
  // Signals that are mostly flat put the percentile at 0; keep the pair valid.
  constexpr double kFloor = 1e-9;
  if (!(tau.small > 0.0)) tau.small = std::max(kFloor, 1e-6 * peak);
  if (!(tau.large > tau.small)) tau.large = std::max(2.0 * tau.small, tau.small + kFloor);
  return tau;
}

std::optional<QuantThresholds> configured_gaze_thresholds(const PipelineConfig& config) {
  if (config.tau_small && config.tau_large) return QuantThresholds{*config.tau_small, *config.tau_large};
  return std::nullopt;
}

bool is_uniformly_sampled(std::span<const GazeSample> samples) {
  if (samples.size() < 3) return true;
  const double mean_dt = (samples.back().t - samples.front().t) / static_cast<double>(samples.size() - 1);
  if (!(mean_dt > 0.0)) return false;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (std::abs((samples[i].t - samples[i - 1].t) - mean_dt) > 1e-6 * mean_dt) return false;
  }
  return true;
}

AxisCoefficients analyze_gaze(std::span<const GazeSample> gaze, const PipelineConfig& config) {
  if (!is_uniformly_sampled(gaze)) throw ParameterError("gaze must be uniformly sampled; resample first");
  std::vector<double> xs(gaze.size());
  std::vector<double> ys(gaze.size());
  for (std::size_t i = 0; i < gaze.size(); ++i) {
    xs[i] = gaze[i].x;
    ys[i] = gaze[i].y;
  }
  return analyze_axes(xs, ys, config.median_filter_width, config.wavelet_scale);
}

std::vector<MotionSymbol> encode_gaze_channel(std::span<const GazeSample> gaze, const PipelineConfig& config,
                                              const QuantThresholds& tau) {
  return quantize_and_encode(analyze_gaze(gaze, config), tau);
}

std::vector<MotionSymbol> encode_gaze_channel(std::span<const GazeSample> gaze, const PipelineConfig& config) {
  const auto coeffs = analyze_gaze(gaze, config);
  QuantThresholds tau;
  if (auto configured = configured_gaze_thresholds(config)) {
    tau = *configured;
  } else {
    const AxisCoefficients* src[] = {&coeffs};
    tau = estimate_thresholds(src, config.tau_percentile_small, config.tau_percentile_large);
  }
  return quantize_and_encode(coeffs, tau);
}

}  // namespace gazeact
