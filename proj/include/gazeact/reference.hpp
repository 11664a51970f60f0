#pragma once

// Plain single-threaded versions of the parallel kernels. They are kept
// deliberately naive and serve as the comparison point for tests and the
// benchmark.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gazeact/core.hpp"
#include "gazeact/gaze_encoder.hpp"
#include "gazeact/vocab.hpp"
#include "gazeact/windowing.hpp"

namespace gazeact::reference {

std::vector<double> median_filter(std::span<const double> signal, std::size_t width);

std::vector<double> haar_cwt(std::span<const double> signal, std::size_t scale);

std::vector<std::uint32_t> assign_words(const EmbeddingMatrix& embeddings, const VocabModel& vocab);

std::vector<WindowHistogram> window_histogram(std::span<const TimedSymbol> stream, std::size_t n_bins,
                                              double window, double stride, const TimeSpan& span);

}  // namespace gazeact::reference
