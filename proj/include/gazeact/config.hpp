#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace gazeact {

// Every tunable of the pipeline. Absent thresholds are estimated from the
// training split (see estimate_thresholds).
struct PipelineConfig {
  // Quantization thresholds in wavelet-coefficient units. When given, they
  // apply to both motion channels unless the motion_* pair overrides them.
  std::optional<double> tau_small;
  std::optional<double> tau_large;
  std::optional<double> motion_tau_small;
  std::optional<double> motion_tau_large;
  double tau_percentile_small = 50.0;
  double tau_percentile_large = 90.0;

  std::size_t wavelet_scale = 10;
  std::size_t median_filter_width = 5;
  bool motion_use_wavelet = true;

  double sample_rate = 30.0;  // master (video frame) clock, Hz
  double window_seconds = 25.0;
  double stride_seconds = 1.0;

  std::size_t k_visual_words = 15;
  std::size_t kmeans_max_iter = 100;
  std::size_t embedding_dim = 4096;
  std::size_t patch_size = 200;

  std::size_t max_corners = 200;
  double corner_quality = 0.01;
  double corner_min_distance = 8.0;
  std::size_t lk_window = 15;
  std::size_t lk_levels = 3;
  std::size_t lk_max_iterations = 10;
  double lk_epsilon = 0.03;
  double fb_threshold = 1.0;

  std::size_t n_trees = 200;
  std::size_t mtry = 0;  // 0: floor(sqrt(feature dimension))
  std::size_t min_leaf = 1;
  std::size_t max_depth = 0;  // 0: unlimited

  std::uint64_t rng_seed = 0;
  int class_mode = 6;

  // Throws ParameterError on the first violated invariant.
  void validate() const;
};

// JSON object keyed by the field names above. Unknown keys and wrongly typed
// values raise ParseError.
PipelineConfig parse_config_json(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& config);

}  // namespace gazeact
