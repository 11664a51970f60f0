#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "gazeact/config.hpp"
#include "gazeact/core.hpp"
#include "gazeact/eval.hpp"
#include "gazeact/image.hpp"
#include "gazeact/rng.hpp"
#include "gazeact/windowing.hpp"

namespace gazeact {

// Smooth random texture in [0, 1]: sum of bilinearly upsampled noise octaves.
GrayImage random_texture(std::size_t width, std::size_t height, Rng& rng);

// frame(x, y) = source(x - dx, y - dy), edge-replicated.
GrayImage translate(const GrayImage& source, int dx, int dy);

GrayImage checkerboard(std::size_t cells, std::size_t cell_size);

struct SyntheticOptions {
  std::size_t subjects = 3;
  double segment_seconds = 120.0;
  double sample_rate = 30.0;
  std::size_t embedding_dim = 64;
};

// Three activities (read, write, browse) with distinct saccade amplitude
// distributions, head-motion pan patterns and visual-word priors. Every
// subject gets sessions 1 and 2 with differently ordered segments.
std::vector<SessionRecord> synthetic_sessions(std::uint64_t seed, const SyntheticOptions& options = {});

// Synthetic sessions through the full two-fold protocol.
EvalReport run_synthetic_selftest(std::uint64_t seed, const PipelineConfig& config = {},
                                  ChannelSet channels = ChannelSet::all(),
                                  const SyntheticOptions& options = {});

}  // namespace gazeact
