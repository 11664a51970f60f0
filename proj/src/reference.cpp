#include "gazeact/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gazeact/errors.hpp"

namespace gazeact::reference {

std::vector<double> median_filter(std::span<const double> signal, std::size_t width) {
  if (width % 2 == 0) throw ParameterError("median filter width must be odd");
  if (width > signal.size()) throw ParameterError("median filter width exceeds signal length");
  const std::size_t n = signal.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = width / 2;
    r = std::min(r, i);
    r = std::min(r, n - 1 - i);
    std::vector<double> window(signal.begin() + static_cast<std::ptrdiff_t>(i - r),
                               signal.begin() + static_cast<std::ptrdiff_t>(i + r + 1));
    std::sort(window.begin(), window.end());
    out[i] = window[r];
  }
  return out;
}

std::vector<double> haar_cwt(std::span<const double> signal, std::size_t scale) {
  if (scale < 2 || scale % 2 != 0) throw ParameterError("Haar wavelet scale must be even and >= 2");
  const std::size_t n = signal.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t b = 0; b < n; ++b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < scale && b + k < n; ++k) {
      const double psi = k < scale / 2 ? 1.0 : -1.0;
      acc += psi * signal[b + k];
    }
    out[b] = acc / std::sqrt(static_cast<double>(scale));
  }
  return out;
}

std::vector<std::uint32_t> assign_words(const EmbeddingMatrix& embeddings, const VocabModel& vocab) {
  if (embeddings.dim != vocab.dim) throw ParameterError("embedding dimension does not match vocabulary");
  std::vector<std::uint32_t> out(embeddings.rows());
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::size_t c = 0; c < vocab.k(); ++c) {
      double d = 0.0;
      for (std::size_t j = 0; j < vocab.dim; ++j) {
        const double diff = static_cast<double>(embeddings.row(i)[j]) - static_cast<double>(vocab.center(c)[j]);
        d += diff * diff;
      }
      if (d < best) {
        best = d;
        arg = static_cast<std::uint32_t>(c);
      }
    }
    out[i] = arg;
  }
  return out;
}

std::vector<WindowHistogram> window_histogram(std::span<const TimedSymbol> stream, std::size_t n_bins, double window,
                                              double stride, const TimeSpan& span) {
  const std::size_t count = window_count(span, window, stride);
  std::vector<WindowHistogram> out;
  for (std::size_t w = 0; w < count; ++w) {
    const double start = span.t0 + static_cast<double>(w) * stride;
    const double end = start + window;
    WindowHistogram h;
    h.t_center = start + window / 2.0;
    h.bins.assign(n_bins, 0.0);
    std::size_t total = 0;
    for (const auto& s : stream) {
      if (s.t >= start && s.t < end) {
        if (s.code >= n_bins) throw ParameterError("symbol code exceeds bin count");
        h.bins[s.code] += 1.0;
        ++total;
      }
    }
    if (total == 0) {
      h.empty = true;
      std::fill(h.bins.begin(), h.bins.end(), 1.0 / static_cast<double>(n_bins));
    } else {
      for (double& b : h.bins) b /= static_cast<double>(total);
    }
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace gazeact::reference
