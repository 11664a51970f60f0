#include "gazeact/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "binary_io.hpp"
#include "gazeact/errors.hpp"
#include "gazeact/rng.hpp"

namespace gazeact {

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    acc += d * d;
  }
  return acc;
}

namespace {

double squared_distance(std::span<const float> a, const double* center) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = static_cast<double>(a[j]) - center[j];
    acc += d * d;
  }
  return acc;
}

std::ptrdiff_t signed_size(std::size_t n) { return static_cast<std::ptrdiff_t>(n); }

// Greedy k-means++: each new center is the best of several D^2-sampled
// candidates, judged by the potential it leaves behind.
std::vector<double> seed_centers(const EmbeddingMatrix& data, std::size_t k, Rng& rng, Execution exec) {
  const std::size_t n = data.rows();
  const std::size_t dim = data.dim;
  std::vector<double> centers(k * dim);
  auto set_center = [&](std::size_t c, std::size_t i) {
    const auto row = data.row(i);
    std::copy(row.begin(), row.end(), centers.begin() + signed_size(c * dim));
  };

  set_center(0, rng.index(n));
  std::vector<double> closest(n);
#pragma omp parallel for schedule(static) if (exec == Execution::kParallel)
  for (std::ptrdiff_t i = 0; i < signed_size(n); ++i) {
    closest[static_cast<std::size_t>(i)] = squared_distance(data.row(static_cast<std::size_t>(i)), centers.data());
  }

  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  std::vector<double> prefix(n);
  std::vector<double> candidate_d(n);
  std::vector<double> best_d(n);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += closest[i];
      prefix[i] = total;
    }
    if (!(total > 0.0)) throw ParameterError("fewer distinct embeddings than requested clusters");

    double best_potential = std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const double r = rng.uniform() * total;
      auto it = std::upper_bound(prefix.begin(), prefix.end(), r);
      std::size_t cand = it == prefix.end() ? n - 1 : static_cast<std::size_t>(it - prefix.begin());
      while (closest[cand] <= 0.0 && cand + 1 < n) ++cand;
      const auto cand_row = data.row(cand);
#pragma omp parallel for schedule(static) if (exec == Execution::kParallel)
      for (std::ptrdiff_t si = 0; si < signed_size(n); ++si) {
        const auto i = static_cast<std::size_t>(si);
        candidate_d[i] = std::min(closest[i], gazeact::squared_distance(data.row(i), cand_row));
      }
      double potential = 0.0;
      for (double d : candidate_d) potential += d;
      if (potential < best_potential) {
        best_potential = potential;
        best_index = cand;
        best_d.swap(candidate_d);
      }
    }
    set_center(c, best_index);
    closest.swap(best_d);
    best_d.resize(n);
  }
  return centers;
}

}  // namespace

VocabModel fit_kmeans(const EmbeddingMatrix& embeddings, const KMeansOptions& options) {
  const std::size_t n = embeddings.rows();
  const std::size_t k = options.k;
  const std::size_t dim = embeddings.dim;
  if (k == 0) throw ParameterError("k must be >= 1");
  if (dim == 0) throw ParameterError("embeddings have dimension 0");
  if (n < k) {
    throw ParameterError("k-means needs at least k points (" + std::to_string(n) + " < " + std::to_string(k) + ")");
  }
  if (options.max_iter == 0) throw ParameterError("max_iter must be >= 1");
  const Execution exec = options.exec;

  Rng rng(options.seed);
  std::vector<double> centers = seed_centers(embeddings, k, rng, exec);

  VocabModel model;
  model.dim = dim;
  model.seed = options.seed;

  std::vector<std::uint32_t> assign(n, UINT32_MAX);
  std::vector<std::uint32_t> previous;
  std::vector<double> dist(n);
  std::vector<std::vector<std::size_t>> members(k);

  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    previous = assign;
#pragma omp parallel for schedule(static) if (exec == Execution::kParallel)
    for (std::ptrdiff_t si = 0; si < signed_size(n); ++si) {
      const auto i = static_cast<std::size_t>(si);
      const auto row = embeddings.row(i);
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(row, centers.data() + c * dim);
        if (d < best) {
          best = d;
          arg = static_cast<std::uint32_t>(c);
        }
      }
      assign[i] = arg;
      dist[i] = best;
    }
    double inertia = 0.0;
    for (double d : dist) inertia += d;
    model.inertia_history.push_back(inertia);
    model.training_inertia = inertia;
    if (assign == previous) break;

    for (auto& m : members) m.clear();
    for (std::size_t i = 0; i < n; ++i) members[assign[i]].push_back(i);

    // Re-seed empty clusters with the worst-served points.
    for (std::size_t c = 0; c < k; ++c) {
      if (!members[c].empty()) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (members[assign[i]].size() < 2) continue;
        if (far == n || dist[i] > dist[far]) far = i;
      }
      if (far == n) throw ParameterError("cannot re-seed empty cluster");
      auto& old = members[assign[far]];
      old.erase(std::find(old.begin(), old.end(), far));
      members[c].push_back(far);
      assign[far] = static_cast<std::uint32_t>(c);
      dist[far] = 0.0;
      const auto row = embeddings.row(far);
      std::copy(row.begin(), row.end(), centers.begin() + signed_size(c * dim));
    }

#pragma omp parallel for schedule(dynamic) if (exec == Execution::kParallel)
    for (std::ptrdiff_t sc = 0; sc < signed_size(k); ++sc) {
      const auto c = static_cast<std::size_t>(sc);
      double* center = centers.data() + c * dim;
      std::fill(center, center + dim, 0.0);
      for (std::size_t i : members[c]) {
        const auto row = embeddings.row(i);
        for (std::size_t j = 0; j < dim; ++j) center[j] += row[j];
      }
      const double inv = 1.0 / static_cast<double>(members[c].size());
      for (std::size_t j = 0; j < dim; ++j) center[j] *= inv;
    }
  }

  model.centers.resize(k * dim);
  std::transform(centers.begin(), centers.end(), model.centers.begin(), [](double v) { return static_cast<float>(v); });
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      if (squared_distance(model.center(a), model.center(b)) == 0.0) {
        warn("k-means produced identical centers " + std::to_string(a) + " and " + std::to_string(b));
      }
    }
  }
  return model;
}

std::size_t assign_word(std::span<const float> embedding, const VocabModel& vocab) {
  if (embedding.size() != vocab.dim) {
    throw ParameterError("embedding dimension " + std::to_string(embedding.size()) + " != vocabulary dimension " +
                         std::to_string(vocab.dim));
  }
  if (vocab.k() == 0) throw ParameterError("empty vocabulary");
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t c = 0; c < vocab.k(); ++c) {
    const double d = squared_distance(embedding, vocab.center(c));
    if (d < best) {
      best = d;
      arg = c;
    }
  }
  return arg;
}

std::vector<std::uint32_t> assign_words(const EmbeddingMatrix& embeddings, const VocabModel& vocab, Execution exec) {
  if (embeddings.dim != vocab.dim) {
    throw ParameterError("embedding dimension " + std::to_string(embeddings.dim) + " != vocabulary dimension " +
                         std::to_string(vocab.dim));
  }
  std::vector<std::uint32_t> out(embeddings.rows());
#pragma omp parallel for schedule(static) if (exec == Execution::kParallel)
  for (std::ptrdiff_t i = 0; i < signed_size(out.size()); ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = static_cast<std::uint32_t>(assign_word(embeddings.row(k), vocab));
  }
  return out;
}

void write_vocab(std::ostream& out, const VocabModel& vocab) {
  out.write("GAVC", 4);
  detail::write_u32(out, 1);
  detail::write_u32(out, static_cast<std::uint32_t>(vocab.k()));
  detail::write_u32(out, static_cast<std::uint32_t>(vocab.dim));
  detail::write_f32_array(out, vocab.centers);
}

VocabModel read_vocab(std::istream& in) {
  detail::expect_magic(in, "GAVC", "vocabulary file");
  const auto version = detail::read_u32(in, "vocabulary header");
  if (version != 1) throw ParseError("unsupported vocabulary version " + std::to_string(version));
  const auto k = detail::read_u32(in, "vocabulary header");
  const auto dim = detail::read_u32(in, "vocabulary header");
  if (k == 0 || dim == 0) throw ParseError("vocabulary has zero size");
  VocabModel v;
  v.dim = dim;
  v.centers.resize(static_cast<std::size_t>(k) * dim);
  detail::read_f32_array(in, v.centers, "vocabulary centers");
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("trailing bytes after vocabulary centers");
  return v;
}

void save_vocab(const std::filesystem::path& path, const VocabModel& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_vocab(out, vocab);
}

VocabModel load_vocab(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return read_vocab(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace gazeact
