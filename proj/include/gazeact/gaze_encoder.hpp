#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gazeact/config.hpp"
#include "gazeact/core.hpp"
#include "gazeact/parallel.hpp"

namespace gazeact {

struct WaveletCoefficients {
  std::vector<double> values;  // one per signal position
  std::size_t scale = 0;
};

// Quantized coefficient, one of -2..2.
using QuantLevel = std::int8_t;

inline constexpr std::size_t kSymbolCount = 25;

// Joint code (qx + 2) * 5 + (qy + 2).
struct MotionSymbol {
  std::uint8_t code = 12;
  friend bool operator==(MotionSymbol, MotionSymbol) = default;
};

struct TimedSymbol {
  double t = 0.0;
  std::uint32_t code = 0;
};

struct QuantThresholds {
  double small = 0.0;
  double large = 0.0;

  void validate() const;  // 0 < small < large
};

// Centered running median; windows shrink symmetrically near the ends so
// every window has odd length.
std::vector<double> median_filter(std::span<const double> signal, std::size_t width,
                                  Execution exec = Execution::kParallel);

// Discrete Haar CWT with a causal support [b, b + scale):
//   C[b] = (sum x[b .. b+scale/2) - sum x[b+scale/2 .. b+scale)) / sqrt(scale)
// x is zero past the end, so the output has one coefficient per input sample.
WaveletCoefficients haar_cwt(std::span<const double> signal, std::size_t scale,
                             Execution exec = Execution::kParallel);

QuantLevel quantize_value(double c, const QuantThresholds& tau);
std::vector<QuantLevel> quantize(std::span<const double> coeffs, const QuantThresholds& tau);

MotionSymbol encode_pair(QuantLevel qx, QuantLevel qy);
std::array<QuantLevel, 2> decode_symbol(MotionSymbol symbol);
std::vector<MotionSymbol> encode_joint(std::span<const QuantLevel> qx, std::span<const QuantLevel> qy);

// Median filter followed by the Haar CWT for both axes of a 2-D signal.
struct AxisCoefficients {
  WaveletCoefficients x;
  WaveletCoefficients y;
};

AxisCoefficients analyze_axes(std::span<const double> xs, std::span<const double> ys,
                              std::size_t filter_width, std::size_t scale,
                              Execution exec = Execution::kParallel);

std::vector<MotionSymbol> quantize_and_encode(const AxisCoefficients& coeffs,
                                              const QuantThresholds& tau);

// Thresholds at the given percentiles of |C| pooled over every coefficient
// passed in. Degenerate inputs (all-zero coefficients, p_small == p_large)
// fall back to the smallest valid pair above the observed magnitudes.
QuantThresholds estimate_thresholds(std::span<const AxisCoefficients* const> sources,
                                    double percentile_small, double percentile_large);

// Linear-interpolated percentile (0..100) of a sample.
double percentile(std::vector<double> values, double pct);

// Gaze thresholds from the config when both are present.
std::optional<QuantThresholds> configured_gaze_thresholds(const PipelineConfig& config);

// True when the samples lie on a uniform grid (relative jitter <= 1e-6).
bool is_uniformly_sampled(std::span<const GazeSample> samples);

// median filter -> Haar CWT per axis -> quantize -> joint code.
std::vector<MotionSymbol> encode_gaze_channel(std::span<const GazeSample> gaze,
                                              const PipelineConfig& config,
                                              const QuantThresholds& tau);

// Uses the configured thresholds, or estimates them from this signal alone.
std::vector<MotionSymbol> encode_gaze_channel(std::span<const GazeSample> gaze,
                                              const PipelineConfig& config);

AxisCoefficients analyze_gaze(std::span<const GazeSample> gaze, const PipelineConfig& config);

}  // namespace gazeact
