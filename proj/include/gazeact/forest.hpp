#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazeact/parallel.hpp"

namespace gazeact {

// Dense row-major training matrix.
struct Dataset {
  std::size_t n_features = 0;
  std::vector<double> x;            // rows x n_features
  std::vector<std::uint32_t> y;     // class index per row

  std::size_t rows() const { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * n_features, n_features}; }
  double at(std::size_t i, std::size_t f) const { return x[i * n_features + f]; }
};

struct ForestParams {
  std::size_t n_trees = 200;
  std::size_t mtry = 0;       // 0: floor(sqrt(n_features))
  std::size_t min_leaf = 1;
  std::size_t max_depth = 0;  // 0: unlimited
  std::uint64_t seed = 0;
};

struct TreeNode {
  static constexpr std::uint32_t kLeaf = UINT32_MAX;

  std::uint32_t feature = kLeaf;  // x[feature] <= threshold goes left
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t counts_offset = 0;  // leaves: class counts at counts[offset..offset+C)
  std::uint32_t vote = 0;           // leaves: argmax of counts, ties to lower class

  bool is_leaf() const { return feature == kLeaf; }
};

// Flat tree, root at index 0, nodes in preorder.
struct DecisionTree {
  std::vector<TreeNode> nodes;
  std::vector<std::uint32_t> counts;

  std::uint32_t predict(std::span<const double> x) const;
  std::size_t depth() const;
  std::size_t leaf_count() const;
};

struct ForestModel {
  ForestParams params;
  std::size_t n_features = 0;
  std::vector<std::string> classes;
  std::vector<DecisionTree> trees;
  double oob_error = 0.0;
  std::size_t oob_count = 0;  // points that were out of bag at least once

  std::size_t n_classes() const { return classes.size(); }
};

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = 0.0;  // weighted Gini of the two children
};

double gini(std::span<const std::uint32_t> counts, std::uint32_t total);

// Best Gini split of `rows` over `features`: thresholds at midpoints of
// consecutive distinct values, both children >= min_leaf, impurity strictly
// below the parent. Ties prefer the lower feature index, then the lower
// threshold.
std::optional<SplitCandidate> find_best_split(const Dataset& data, std::span<const std::size_t> rows,
                                              std::span<const std::size_t> features,
                                              std::size_t n_classes, std::size_t min_leaf);

// Tree t is grown from a bootstrap drawn from its own RNG stream (seed, t), so
// the model does not depend on execution order.
ForestModel train_forest(const Dataset& data, std::vector<std::string> classes, const ForestParams& params,
                         Execution exec = Execution::kParallel);

std::vector<std::uint32_t> vote_counts(const ForestModel& model, std::span<const double> x);
std::vector<double> predict_proba(const ForestModel& model, std::span<const double> x);
std::uint32_t predict(const ForestModel& model, std::span<const double> x);

// Batch prediction over dataset rows; rows evaluated concurrently under kParallel.
std::vector<std::vector<double>> predict_proba_batch(const ForestModel& model, const Dataset& data,
                                                     Execution exec = Execution::kParallel);

// Mean decrease in Gini impurity per feature, normalized to sum to 1.
std::vector<double> feature_importance(const ForestModel& model);

// "GARF" | u32 version | params | features | class list | oob | trees (preorder)
void write_forest(std::ostream& out, const ForestModel& model);
ForestModel read_forest(std::istream& in);
void save_forest(const std::filesystem::path& path, const ForestModel& model);
ForestModel load_forest(const std::filesystem::path& path);

}  // namespace gazeact
