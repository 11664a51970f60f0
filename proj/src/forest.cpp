#include "gazeact/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "binary_io.hpp"
#include "gazeact/errors.hpp"
#include "gazeact/rng.hpp"

namespace gazeact {

double gini(std::span<const std::uint32_t> counts, std::uint32_t total) {
  if (total == 0) return 0.0;
  double sum_sq = 0.0;
  for (auto c : counts) sum_sq += static_cast<double>(c) * static_cast<double>(c);
  const double n = total;
  return 1.0 - sum_sq / (n * n);
}

namespace {

// Weighted child impurity from integer class-count sums of squares:
//   (nL * gini(L) + nR * gini(R)) / n = (nL - sqL/nL + nR - sqR/nR) / n
double weighted_impurity(std::uint64_t n_left, std::uint64_t sq_left, std::uint64_t n_right, std::uint64_t sq_right) {
  const double nl = static_cast<double>(n_left);
  const double nr = static_cast<double>(n_right);
  double acc = 0.0;
  if (n_left > 0) acc += nl - static_cast<double>(sq_left) / nl;
  if (n_right > 0) acc += nr - static_cast<double>(sq_right) / nr;
  return acc / (nl + nr);
}

constexpr double kMinImprovement = 1e-12;

std::uint32_t argmax_vote(std::span<const std::uint32_t> counts) {
  std::uint32_t best = 0;
  for (std::uint32_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return best;
}

}  // namespace

std::optional<SplitCandidate> find_best_split(const Dataset& data, std::span<const std::size_t> rows,
                                              std::span<const std::size_t> features, std::size_t n_classes,
                                              std::size_t min_leaf) {
  const std::size_t n = rows.size();
  if (n < 2 * std::max<std::size_t>(min_leaf, 1)) return std::nullopt;

  std::vector<std::uint64_t> total(n_classes, 0);
  for (auto r : rows) ++total[data.y[r]];
  std::uint64_t parent_sq = 0;
  for (auto c : total) parent_sq += c * c;
  const double parent = weighted_impurity(n, parent_sq, 0, 0);

  std::optional<SplitCandidate> best;
  std::vector<std::pair<double, std::uint32_t>> column(n);
  std::vector<std::uint64_t> left(n_classes);
  for (std::size_t f : features) {
    for (std::size_t i = 0; i < n; ++i) column[i] = {data.at(rows[i], f), data.y[rows[i]]};
    std::sort(column.begin(), column.end());
    std::fill(left.begin(), left.end(), 0);
    std::uint64_t sq_left = 0;
    std::uint64_t sq_right = parent_sq;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto c = column[i].second;
      const std::uint64_t right_c = total[c] - left[c];
      sq_left += 2 * left[c] + 1;
      sq_right -= 2 * right_c - 1;
      ++left[c];
      const double lo = column[i].first;
      const double hi = column[i + 1].first;
      if (!(lo < hi)) continue;
      const std::size_t n_left = i + 1;
      const std::size_t n_right = n - n_left;
      if (n_left < min_leaf || n_right < min_leaf) continue;
      const double impurity = weighted_impurity(n_left, sq_left, n_right, sq_right);
      if (!(impurity < parent - kMinImprovement)) continue;
      double threshold = lo + (hi - lo) / 2.0;
      if (!(threshold < hi)) threshold = lo;
      // Impurities closer than rounding noise count as ties.
      const bool better = !best || impurity < best->impurity - kMinImprovement ||
                          (std::abs(impurity - best->impurity) <= kMinImprovement &&
                           (f < best->feature || (f == best->feature && threshold < best->threshold)));
      if (better) best = SplitCandidate{f, threshold, impurity};
    }
  }
  return best;
}

std::uint32_t DecisionTree::predict(std::span<const double> x) const {
  std::uint32_t i = 0;
  while (!nodes[i].is_leaf()) i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].vote;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf()) {
      d[nodes[i].left] = d[i] + 1;
      d[nodes[i].right] = d[i] + 1;
    }
  }
  return deepest;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

namespace {

struct GrownTree {
  DecisionTree tree;
  std::vector<std::uint8_t> in_bag;
};

GrownTree grow_tree(const Dataset& data, std::size_t n_classes, std::size_t mtry, const ForestParams& params,
                    std::uint64_t tree_index) {
  Rng rng = Rng::stream(params.seed, tree_index);
  const std::size_t n = data.rows();
  const std::size_t d = data.n_features;

  GrownTree out;
  out.in_bag.assign(n, 0);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) {
    r = static_cast<std::size_t>(rng.index(n));
    out.in_bag[r] = 1;
  }

  std::vector<std::size_t> feature_pool(d);
  std::vector<std::size_t> sampled(mtry);
  std::vector<std::uint32_t> counts(n_classes);

  struct Pending {
    std::size_t begin, end, depth;
    std::uint32_t parent;
    bool is_left;
  };
  std::vector<Pending> stack{{0, n, 0, TreeNode::kLeaf, true}};
  DecisionTree& tree = out.tree;

  while (!stack.empty()) {
    const Pending job = stack.back();
    stack.pop_back();
    const auto index = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (job.parent != TreeNode::kLeaf) {
      (job.is_left ? tree.nodes[job.parent].left : tree.nodes[job.parent].right) = index;
    }
    const std::span<std::size_t> node_rows(rows.data() + job.begin, job.end - job.begin);

    std::fill(counts.begin(), counts.end(), 0);
    for (auto r : node_rows) ++counts[data.y[r]];
    const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
    const bool depth_capped = params.max_depth != 0 && job.depth >= params.max_depth;

    std::optional<SplitCandidate> split;
    if (!pure && !depth_capped && node_rows.size() >= 2 * params.min_leaf) {
      std::iota(feature_pool.begin(), feature_pool.end(), std::size_t{0});
      for (std::size_t k = 0; k < mtry; ++k) {
        const auto pick = k + static_cast<std::size_t>(rng.index(d - k));
        std::swap(feature_pool[k], feature_pool[pick]);
        sampled[k] = feature_pool[k];
      }
      split = find_best_split(data, node_rows, sampled, n_classes, params.min_leaf);
    }

    TreeNode& node = tree.nodes[index];
    if (!split) {
      node.counts_offset = static_cast<std::uint32_t>(tree.counts.size());
      tree.counts.insert(tree.counts.end(), counts.begin(), counts.end());
      node.vote = argmax_vote(counts);
      continue;
    }
    node.feature = static_cast<std::uint32_t>(split->feature);
    node.threshold = split->threshold;
    const auto mid = std::stable_partition(node_rows.begin(), node_rows.end(), [&](std::size_t r) {
      return data.at(r, split->feature) <= split->threshold;
    });
    const std::size_t cut = job.begin + static_cast<std::size_t>(mid - node_rows.begin());
    // Right is pushed first so the left subtree is emitted next (preorder).
    stack.push_back({cut, job.end, job.depth + 1, index, false});
    stack.push_back({job.begin, cut, job.depth + 1, index, true});
  }
  return out;
}

}  // namespace

ForestModel train_forest(const Dataset& data, std::vector<std::string> classes, const ForestParams& params,
                         Execution exec) {
  const std::size_t n = data.rows();
  if (data.n_features == 0) throw ParameterError("dataset has no features");
  if (data.x.size() != n * data.n_features) {
    throw ParameterError("feature matrix has " + std::to_string(data.x.size()) + " values, expected " +
                         std::to_string(n * data.n_features));
  }
  if (n < 1) throw ParameterError("cannot train on an empty dataset");
  if (classes.empty()) throw ParameterError("class list is empty");
  if (params.n_trees == 0) throw ParameterError("n_trees must be >= 1");
  if (params.min_leaf == 0) throw ParameterError("min_leaf must be >= 1");
  const std::size_t mtry =
      params.mtry == 0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(data.n_features))))
                       : params.mtry;
  if (mtry > data.n_features) throw ParameterError("mtry exceeds the feature dimension");
  for (auto label : data.y) {
    if (label >= classes.size()) throw ParameterError("label index outside the class list");
  }
  {
    std::vector<bool> seen(classes.size(), false);
    for (auto label : data.y) seen[label] = true;
    if (std::count(seen.begin(), seen.end(), true) < 2) {
      warn("training data contains a single class; the forest is degenerate");
    }
  }

  ForestModel model;
  model.params = params;
  model.params.mtry = mtry;
  model.n_features = data.n_features;
  model.classes = std::move(classes);
  const std::size_t n_classes = model.classes.size();

  std::vector<GrownTree> grown(params.n_trees);
#pragma omp parallel for schedule(dynamic) if (exec == Execution::kParallel)
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(params.n_trees); ++t) {
    grown[static_cast<std::size_t>(t)] = grow_tree(data, n_classes, mtry, model.params, static_cast<std::uint64_t>(t));
  }

  std::vector<std::uint32_t> oob_votes(n * n_classes, 0);
  model.trees.reserve(params.n_trees);
  for (auto& g : grown) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!g.in_bag[i]) ++oob_votes[i * n_classes + g.tree.predict(data.row(i))];
    }
    model.trees.push_back(std::move(g.tree));
  }
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const std::uint32_t> votes(oob_votes.data() + i * n_classes, n_classes);
    if (std::accumulate(votes.begin(), votes.end(), std::uint64_t{0}) == 0) continue;
    ++model.oob_count;
    if (argmax_vote(votes) != data.y[i]) ++wrong;
  }
  model.oob_error = model.oob_count == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(model.oob_count);
  return model;
}

std::vector<std::uint32_t> vote_counts(const ForestModel& model, std::span<const double> x) {
  if (x.size() != model.n_features) {
    throw ParameterError("feature dimension " + std::to_string(x.size()) + " != model dimension " +
                         std::to_string(model.n_features));
  }
  std::vector<std::uint32_t> votes(model.n_classes(), 0);
  for (const auto& tree : model.trees) ++votes[tree.predict(x)];
  return votes;
}

std::vector<double> predict_proba(const ForestModel& model, std::span<const double> x) {
  const auto votes = vote_counts(model, x);
  std::vector<double> p(votes.size());
  const auto n = static_cast<double>(model.trees.size());
  for (std::size_t c = 0; c < votes.size(); ++c) p[c] = static_cast<double>(votes[c]) / n;
  return p;
}

std::uint32_t predict(const ForestModel& model, std::span<const double> x) { return argmax_vote(vote_counts(model, x)); }

std::vector<std::vector<double>> predict_proba_batch(const ForestModel& model, const Dataset& data, Execution exec) {
  if (data.n_features != model.n_features) throw ParameterError("dataset dimension does not match the model");
  std::vector<std::vector<double>> out(data.rows());
#pragma omp parallel for schedule(static) if (exec == Execution::kParallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(data.rows()); ++i) {
    out[static_cast<std::size_t>(i)] = predict_proba(model, data.row(static_cast<std::size_t>(i)));
  }
  return out;
}

std::vector<double> feature_importance(const ForestModel& model) {
  std::vector<double> importance(model.n_features, 0.0);
  const std::size_t c = model.n_classes();
  for (const auto& tree : model.trees) {
    // Children follow their parent, so a reverse sweep sees them first.
    std::vector<std::uint32_t> node_counts(tree.nodes.size() * c, 0);
    for (std::size_t i = tree.nodes.size(); i-- > 0;) {
      const TreeNode& node = tree.nodes[i];
      auto* dst = node_counts.data() + i * c;
      if (node.is_leaf()) {
        std::copy_n(tree.counts.data() + node.counts_offset, c, dst);
        continue;
      }
      const auto* l = node_counts.data() + static_cast<std::size_t>(node.left) * c;
      const auto* r = node_counts.data() + static_cast<std::size_t>(node.right) * c;
      for (std::size_t k = 0; k < c; ++k) dst[k] = l[k] + r[k];
      auto weighted = [c](const std::uint32_t* counts) {
        const auto total = std::accumulate(counts, counts + c, std::uint32_t{0});
        return static_cast<double>(total) * gini({counts, c}, total);
      };
      importance[node.feature] += weighted(dst) - weighted(l) - weighted(r);
    }
  }
  const double sum = std::accumulate(importance.begin(), importance.end(), 0.0);
  if (sum > 0.0) {
    for (double& v : importance) v /= sum;
  }
  return importance;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr std::uint32_t kForestVersion = 1;

void write_subtree(std::ostream& out, const DecisionTree& tree, std::uint32_t index, std::size_t n_classes) {
  // Iterative preorder: node, left subtree, right subtree.
  std::vector<std::uint32_t> stack{index};
  while (!stack.empty()) {
    const TreeNode& node = tree.nodes[stack.back()];
    stack.pop_back();
    if (node.is_leaf()) {
      detail::write_u8(out, 0);
      for (std::size_t k = 0; k < n_classes; ++k) detail::write_u32(out, tree.counts[node.counts_offset + k]);
    } else {
      detail::write_u8(out, 1);
      detail::write_u32(out, node.feature);
      detail::write_f64(out, node.threshold);
      stack.push_back(node.right);
      stack.push_back(node.left);
    }
  }
}

DecisionTree read_tree(std::istream& in, std::size_t n_classes, std::size_t n_features) {
  const auto node_count = detail::read_u32(in, "tree header");
  if (node_count == 0) throw ParseError("tree with no nodes");
  DecisionTree tree;
  tree.nodes.reserve(node_count);
  struct Slot {
    std::uint32_t parent;
    bool is_left;
  };
  std::vector<Slot> pending{{TreeNode::kLeaf, true}};
  for (std::uint32_t i = 0; i < node_count; ++i) {
    if (pending.empty()) throw ParseError("tree has more nodes than its structure allows");
    const Slot slot = pending.back();
    pending.pop_back();
    const auto index = static_cast<std::uint32_t>(tree.nodes.size());
    if (slot.parent != TreeNode::kLeaf) (slot.is_left ? tree.nodes[slot.parent].left : tree.nodes[slot.parent].right) = index;
    TreeNode node;
    const auto kind = detail::read_u8(in, "tree node");
    if (kind == 0) {
      node.counts_offset = static_cast<std::uint32_t>(tree.counts.size());
      for (std::size_t k = 0; k < n_classes; ++k) tree.counts.push_back(detail::read_u32(in, "leaf counts"));
      node.vote = argmax_vote({tree.counts.data() + node.counts_offset, n_classes});
      tree.nodes.push_back(node);
    } else if (kind == 1) {
      node.feature = detail::read_u32(in, "split feature");
      if (node.feature >= n_features) throw ParseError("split feature out of range");
      node.threshold = detail::read_f64(in, "split threshold");
      tree.nodes.push_back(node);
      pending.push_back({index, false});
      pending.push_back({index, true});
    } else {
      throw ParseError("bad tree node kind " + std::to_string(kind));
    }
  }
  if (!pending.empty()) throw ParseError("tree is truncated");
  return tree;
}

}  // namespace

void write_forest(std::ostream& out, const ForestModel& model) {
  out.write("GARF", 4);
  detail::write_u32(out, kForestVersion);
  detail::write_u32(out, static_cast<std::uint32_t>(model.params.n_trees));
  detail::write_u32(out, static_cast<std::uint32_t>(model.params.mtry));
  detail::write_u32(out, static_cast<std::uint32_t>(model.params.min_leaf));
  detail::write_u32(out, static_cast<std::uint32_t>(model.params.max_depth));
  detail::write_u64(out, model.params.seed);
  detail::write_u32(out, static_cast<std::uint32_t>(model.n_features));
  detail::write_u32(out, static_cast<std::uint32_t>(model.classes.size()));
  for (const auto& name : model.classes) {
    detail::write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  detail::write_f64(out, model.oob_error);
  detail::write_u64(out, model.oob_count);
  detail::write_u32(out, static_cast<std::uint32_t>(model.trees.size()));
  for (const auto& tree : model.trees) {
    detail::write_u32(out, static_cast<std::uint32_t>(tree.nodes.size()));
    write_subtree(out, tree, 0, model.classes.size());
  }
}

ForestModel read_forest(std::istream& in) {
  detail::expect_magic(in, "GARF", "forest model");
  const auto version = detail::read_u32(in, "forest header");
  if (version != kForestVersion) throw ParseError("unsupported forest version " + std::to_string(version));
  ForestModel model;
  model.params.n_trees = detail::read_u32(in, "forest header");
  model.params.mtry = detail::read_u32(in, "forest header");
  model.params.min_leaf = detail::read_u32(in, "forest header");
  model.params.max_depth = detail::read_u32(in, "forest header");
  model.params.seed = detail::read_u64(in, "forest header");
  model.n_features = detail::read_u32(in, "forest header");
  const auto n_classes = detail::read_u32(in, "forest header");
  if (n_classes == 0 || model.n_features == 0) throw ParseError("forest has no classes or features");
  for (std::uint32_t c = 0; c < n_classes; ++c) {
    const auto len = detail::read_u32(in, "class name");
    std::string name(len, '\0');
    detail::read_exact(in, name.data(), len, "class name");
    model.classes.push_back(std::move(name));
  }
  model.oob_error = detail::read_f64(in, "forest header");
  model.oob_count = detail::read_u64(in, "forest header");
  const auto n_trees = detail::read_u32(in, "forest header");
  if (n_trees != model.params.n_trees) throw ParseError("tree count does not match parameters");
  for (std::uint32_t t = 0; t < n_trees; ++t) model.trees.push_back(read_tree(in, n_classes, model.n_features));
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("trailing bytes after forest trees");
  return model;
}

void save_forest(const std::filesystem::path& path, const ForestModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_forest(out, model);
}

ForestModel load_forest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return read_forest(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace gazeact
