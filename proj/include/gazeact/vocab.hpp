#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "gazeact/core.hpp"
#include "gazeact/parallel.hpp"

namespace gazeact {

struct VocabModel {
  std::size_t dim = 0;
  std::vector<float> centers;  // k x dim, row-major
  double training_inertia = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> inertia_history;  // inertia after each assignment pass

  std::size_t k() const { return dim == 0 ? 0 : centers.size() / dim; }
  std::span<const float> center(std::size_t i) const { return {centers.data() + i * dim, dim}; }
};

struct KMeansOptions {
  std::size_t k = 15;
  std::uint64_t seed = 0;
  std::size_t max_iter = 100;
  Execution exec = Execution::kParallel;
};

// Lloyd iterations from greedy k-means++ seeding. Empty clusters are re-seeded
// with the point farthest from its current center.
VocabModel fit_kmeans(const EmbeddingMatrix& embeddings, const KMeansOptions& options);

// Nearest center by squared Euclidean distance, ties to the lower index.
std::size_t assign_word(std::span<const float> embedding, const VocabModel& vocab);
std::vector<std::uint32_t> assign_words(const EmbeddingMatrix& embeddings, const VocabModel& vocab,
                                        Execution exec = Execution::kParallel);

double squared_distance(std::span<const float> a, std::span<const float> b);

// "GAVC" | u32 version (1) | u32 k | u32 dim | k*dim little-endian f32
void write_vocab(std::ostream& out, const VocabModel& vocab);
VocabModel read_vocab(std::istream& in);
void save_vocab(const std::filesystem::path& path, const VocabModel& vocab);
VocabModel load_vocab(const std::filesystem::path& path);

}  // namespace gazeact
