// Acceptance gate: one PASS/FAIL/SKIP line per criterion, nonzero exit on any FAIL.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gazeact/errors.hpp"
#include "gazeact/eval.hpp"
#include "gazeact/forest.hpp"
#include "gazeact/gaze_encoder.hpp"
#include "gazeact/motion.hpp"
#include "gazeact/rng.hpp"
#include "gazeact/synthetic.hpp"
#include "gazeact/vocab.hpp"
#include "test_util.hpp"

using namespace gazeact;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

enum class Outcome { kPass, kFail, kSkip };

struct Verdict {
  Outcome outcome;
  std::string detail;
};

Verdict verdict(bool ok, std::string detail) { return {ok ? Outcome::kPass : Outcome::kFail, std::move(detail)}; }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// ---------------------------------------------------------------------------

Verdict haar_equivalence() {
  Rng rng(20240101);
  double worst = 0.0;
  double elapsed = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = testutil::random_signal(rng, 500, rng.uniform(0.01, 1000.0));
    for (std::size_t scale : {2u, 10u, 64u}) {
      const auto t0 = Clock::now();
      const auto got = haar_cwt(x, scale).values;
      elapsed += seconds_since(t0);
      const auto want = testutil::haar_oracle(x, scale);
      for (std::size_t b = 0; b < x.size(); ++b) {
        const double err = std::abs(got[b] - want[b]);
        worst = std::max(worst, want[b] != 0.0 ? err / std::abs(want[b]) : err);
      }
    }
  }
  return verdict(worst <= 1e-9 && elapsed < 5.0,
                 fmt("100 signals x scales 2/10/64, max relative error %.3g (<= 1e-9), %.3f s (< 5 s)", worst, elapsed));
}

Verdict quantizer_exhaustive() {
  std::size_t round_trips = 0;
  std::set<int> codes;
  for (int qx = -2; qx <= 2; ++qx) {
    for (int qy = -2; qy <= 2; ++qy) {
      const std::vector<QuantLevel> vx = {static_cast<QuantLevel>(qx)};
      const std::vector<QuantLevel> vy = {static_cast<QuantLevel>(qy)};
      const auto s = encode_joint(vx, vy);
      const auto back = decode_symbol(s[0]);
      codes.insert(s[0].code);
      if (back[0] == qx && back[1] == qy && s[0].code == (qx + 2) * 5 + (qy + 2)) ++round_trips;
    }
  }
  const QuantThresholds tau{0.5, 2.0};
  const std::vector<double> c = {0.5, -0.5, 2.0, -2.0, 0.3, 1.0, 2.5, -1.0, -3.0};
  const std::vector<QuantLevel> want = {0, 0, 2, -2, 0, 1, 2, -1, -2};
  const auto got = quantize(c, tau);
  std::size_t boundary_ok = 0;
  for (std::size_t i = 0; i < c.size(); ++i) boundary_ok += got[i] == want[i];
  const bool ok = round_trips == 25 && codes.size() == 25 && *codes.begin() == 0 && *codes.rbegin() == 24 &&
                  boundary_ok == c.size();
  return verdict(ok, std::to_string(round_trips) + "/25 pairs round-trip onto 0..24, " + std::to_string(boundary_ok) +
                         "/" + std::to_string(c.size()) + " boundary and interior cases exact");
}

Verdict flow_recovery() {
  Rng rng(640480);
  const GrayImage a = random_texture(640, 480, rng);
  const GrayImage b = translate(a, 3, 2);
  PipelineConfig config;
  const auto lk = lk_params(config);
  const ImagePyramid pa(a, lk.levels);
  const ImagePyramid pb(b, lk.levels);
  const auto corners = detect_corners(a, corner_params(config));
  const auto forward = track_lk(pa, pb, corners, lk);
  const auto checked = fb_filter(forward, pa, pb, 1.0, lk);
  const auto clean = median_flow(checked);
  const bool clean_ok = std::abs(clean.dx - 3.0) <= 0.1 && std::abs(clean.dy - 2.0) <= 0.1;

  // Corrupt 40% of the tracked points by 10..30 px in a random direction.
  auto corrupted = checked;
  std::vector<std::size_t> ok_idx;
  for (std::size_t i = 0; i < corrupted.size(); ++i) {
    if (corrupted[i].status == TrackStatus::kOk) ok_idx.push_back(i);
  }
  for (std::size_t i = ok_idx.size(); i > 1; --i) std::swap(ok_idx[i - 1], ok_idx[rng.index(i)]);
  const std::size_t n_bad = (ok_idx.size() * 2) / 5;
  std::vector<bool> is_bad(corrupted.size(), false);
  for (std::size_t k = 0; k < n_bad; ++k) {
    auto& p = corrupted[ok_idx[k]];
    const double mag = rng.uniform(10.0, 30.0);
    const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
    p.destination.x += mag * std::cos(ang);
    p.destination.y += mag * std::sin(ang);
    is_bad[ok_idx[k]] = true;
  }
  const auto robust = median_flow(corrupted);
  const bool robust_ok = std::abs(robust.dx - clean.dx) <= 0.1 && std::abs(robust.dy - clean.dy) <= 0.1 &&
                         std::abs(robust.dx - 3.0) <= 0.1 && std::abs(robust.dy - 2.0) <= 0.1;

  const auto refiltered = fb_filter(corrupted, pa, pb, 1.0, lk);
  std::size_t rejected = 0;
  for (std::size_t i = 0; i < refiltered.size(); ++i) {
    if (is_bad[i] && refiltered[i].status != TrackStatus::kOk) ++rejected;
  }
  const auto after = median_flow(refiltered);
  const bool fb_ok = n_bad > 0 && rejected == n_bad && std::abs(after.dx - 3.0) <= 0.1 && std::abs(after.dy - 2.0) <= 0.1;

  std::ostringstream d;
  d << ok_idx.size() << " tracks, median " << fmt("(%.4f, %.4f)", clean.dx, clean.dy) << "; " << n_bad
    << " corrupted -> " << fmt("(%.4f, %.4f)", robust.dx, robust.dy) << "; FB rejected " << rejected << "/" << n_bad;
  return verdict(clean_ok && robust_ok && fb_ok, d.str());
}

Verdict kmeans_recovery() {
  constexpr std::size_t k = 15;
  constexpr std::size_t dim = 4096;
  constexpr std::size_t per = 50;
  constexpr double sigma = 1.0;
  const double spread = sigma * std::sqrt(static_cast<double>(dim));  // blob radius
  // Means on orthogonal axes, pairwise distance exactly 10 x spread.
  const double offset = 10.0 * spread / std::numbers::sqrt2;

  std::size_t recovered_runs = 0;
  std::size_t monotone_runs = 0;
  double worst_center = 0.0;
  double worst_radius = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(7000 + seed);
    EmbeddingMatrix data;
    data.dim = dim;
    data.values.reserve(k * per * dim);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t p = 0; p < per; ++p) {
        for (std::size_t j = 0; j < dim; ++j) {
          data.values.push_back(static_cast<float>((j == c ? offset : 0.0) + rng.normal(0.0, sigma)));
        }
      }
    }
    const auto model = fit_kmeans(data, KMeansOptions{k, seed, 100});

    bool monotone = true;
    for (std::size_t i = 1; i < model.inertia_history.size(); ++i) {
      if (model.inertia_history[i] > model.inertia_history[i - 1]) monotone = false;
    }
    monotone_runs += monotone;

    std::set<std::size_t> used;
    bool recovered = true;
    for (std::size_t c = 0; c < k; ++c) {
      // Measured radius of this blob: RMS distance of its members to the true mean.
      double sq = 0.0;
      for (std::size_t p = 0; p < per; ++p) {
        const auto row = data.row(c * per + p);
        for (std::size_t j = 0; j < dim; ++j) {
          const double d = row[j] - (j == c ? offset : 0.0);
          sq += d * d;
        }
      }
      const double radius = std::sqrt(sq / per);
      std::size_t nearest = 0;
      double best = 1e300;
      for (std::size_t m = 0; m < k; ++m) {
        double d2 = 0.0;
        const auto ctr = model.center(m);
        for (std::size_t j = 0; j < dim; ++j) {
          const double d = ctr[j] - (j == c ? offset : 0.0);
          d2 += d * d;
        }
        if (d2 < best) {
          best = d2;
          nearest = m;
        }
      }
      worst_center = std::max(worst_center, std::sqrt(best));
      worst_radius = std::max(worst_radius, radius);
      if (std::sqrt(best) > radius || !used.insert(nearest).second) recovered = false;
    }
    recovered_runs += recovered;
  }
  std::ostringstream d;
  d << recovered_runs << "/20 seeds recover all 15 blobs (worst center error "
    << fmt("%.2f, blob radius <= %.2f), ", worst_center, worst_radius) << monotone_runs
    << "/20 with non-increasing inertia";
  return verdict(recovered_runs == 20 && monotone_runs == 20, d.str());
}

Dataset gaussian_classes(Rng& rng, std::size_t n, std::size_t d, std::size_t classes, double gap) {
  Dataset data;
  data.n_features = d;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::uint32_t>(i % classes);
    for (std::size_t f = 0; f < d; ++f) data.x.push_back(rng.normal() + (f < 2 ? gap * c : 0.0));
    data.y.push_back(c);
  }
  return data;
}

std::string forest_bytes(const ForestModel& m) {
  std::ostringstream out;
  write_forest(out, m);
  return out.str();
}

Verdict forest_oracle() {
  // Exhaustive weighted Gini over every feature and midpoint.
  Rng rng(4242);
  std::size_t oracle_ok = 0;
  for (int trial = 0; trial < 25; ++trial) {
    Dataset data;
    data.n_features = 1 + rng.index(5);
    const std::size_t n = 2 + rng.index(49);
    const std::size_t k = 2 + rng.index(3);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < data.n_features; ++f) data.x.push_back(static_cast<double>(rng.index(10)) * 0.25);
      data.y.push_back(static_cast<std::uint32_t>(rng.index(k)));
    }
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::vector<std::size_t> feats(data.n_features);
    std::iota(feats.begin(), feats.end(), std::size_t{0});

    auto node_gini = [&](const std::vector<std::size_t>& s) {
      std::vector<double> cnt(k, 0.0);
      for (auto r : s) cnt[data.y[r]] += 1.0;
      double g = 1.0;
      for (double v : cnt) g -= (v / s.size()) * (v / s.size());
      return g;
    };
    const double parent = node_gini(rows);
    double best = parent;
    std::size_t best_f = 0;
    double best_t = 0.0;
    bool found = false;
    for (std::size_t f = 0; f < data.n_features; ++f) {
      std::vector<double> vals;
      for (auto r : rows) vals.push_back(data.at(r, f));
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      for (std::size_t v = 0; v + 1 < vals.size(); ++v) {
        const double t = (vals[v] + vals[v + 1]) / 2.0;
        std::vector<std::size_t> l, r;
        for (auto i : rows) (data.at(i, f) <= t ? l : r).push_back(i);
        const double w = (l.size() * node_gini(l) + r.size() * node_gini(r)) / n;
        // Strictly better by more than rounding; equal impurity keeps the earlier (lower) split.
        if (w < parent - 1e-12 && (!found || w < best - 1e-12)) {
          best = w;
          best_f = f;
          best_t = t;
          found = true;
        }
      }
    }
    const auto got = find_best_split(data, rows, feats, k, 1);
    if (!found) {
      oracle_ok += !got.has_value();
    } else if (got && got->feature == best_f && got->threshold == best_t && std::abs(got->impurity - best) <= 1e-12) {
      ++oracle_ok;
    }
  }

  Rng drng(99);
  const auto train = gaussian_classes(drng, 300, 6, 3, 8.0);
  const auto test = gaussian_classes(drng, 600, 6, 3, 8.0);
  ForestParams p;
  p.n_trees = 100;
  p.seed = 17;
  const std::vector<std::string> names = {"a", "b", "c"};
  omp_set_num_threads(4);
  const auto model = train_forest(train, names, p, Execution::kParallel);
  std::size_t right = 0;
  for (std::size_t i = 0; i < test.rows(); ++i) right += predict(model, test.row(i)) == test.y[i];
  const double acc = static_cast<double>(right) / static_cast<double>(test.rows());

  const auto first = forest_bytes(model);
  const auto again = forest_bytes(train_forest(train, names, p, Execution::kParallel));
  const auto serial = forest_bytes(train_forest(train, names, p, Execution::kSerial));

  std::ostringstream d;
  d << oracle_ok << "/25 splits equal the exhaustive search; held-out accuracy " << fmt("%.4f", acc)
    << " (>= 0.95); retrain " << (first == again ? "identical" : "DIFFERS") << "; 4-thread vs serial "
    << (first == serial ? "identical" : "DIFFERS");
  return verdict(oracle_ok == 25 && acc >= 0.95 && first == again && first == serial, d.str());
}

Verdict selftest() {
  testutil::WarningCapture quiet;
  const auto t0 = Clock::now();
  const auto r = run_synthetic_selftest(0);
  const double elapsed = seconds_since(t0);
  double worst_row = 0.0;
  bool zero_rows_ok = true;
  std::size_t supported = 0;
  for (std::size_t c = 0; c < r.confusion.size(); ++c) {
    const double sum = std::accumulate(r.confusion[c].begin(), r.confusion[c].end(), 0.0);
    if (r.zero_support[c]) {
      zero_rows_ok = zero_rows_ok && sum == 0.0;
    } else {
      ++supported;
      worst_row = std::max(worst_row, std::abs(sum - 1.0));
    }
  }
  std::ostringstream d;
  d << "accuracy " << fmt("%.4f (>= 0.95), folds %.4f / %.4f", r.overall_accuracy, r.folds[0].accuracy, r.folds[1].accuracy)
    << "; " << supported << " supported rows, max |row sum - 1| " << fmt("%.2g", worst_row) << ", "
    << r.zero_support.size() - supported << " zero-support rows flagged; " << fmt("%.2f s (< 60 s)", elapsed);
  return verdict(r.overall_accuracy >= 0.95 && supported == 3 && worst_row <= 1e-9 && zero_rows_ok && elapsed < 60.0,
                 d.str());
}

Verdict reference_ordering() {
  const char* root = std::getenv("GAZEACT_UTOKYO_ROOT");
  if (!root || !*root) return {Outcome::kSkip, "GAZEACT_UTOKYO_ROOT not set; dataset not available"};
  PipelineConfig config;
  if (const char* cfg = std::getenv("GAZEACT_UTOKYO_CONFIG"); cfg && *cfg) config = load_config(cfg);
  const auto sessions = load_dataset(root, config, true);
  std::map<std::pair<int, unsigned>, double> acc;
  std::ostringstream d;
  for (const auto& cell : reference_accuracies()) {
    PipelineConfig c = config;
    c.class_mode = cell.class_mode;
    const double a = run_two_fold(sessions, c, cell.channels).overall_accuracy;
    acc[{cell.class_mode, cell.channels.bits()}] = a;
    d << cell.class_mode << "/" << to_string(cell.channels) << fmt(" %.4f (delta %+.4f); ", a, a - cell.accuracy);
  }
  bool all = true;
  for (const auto& check : check_reference_ordering(acc)) {
    if (!check.holds) {
      all = false;
      d << "violated: " << check.description << "; ";
    }
  }
  return verdict(all, d.str());
}

Verdict ablation_plumbing() {
  testutil::WarningCapture quiet;
  SyntheticOptions opts;
  opts.segment_seconds = 60.0;
  const auto sessions = synthetic_sessions(5, opts);
  PipelineConfig config;
  config.embedding_dim = opts.embedding_dim;
  config.class_mode = 5;
  config.n_trees = 40;

  const std::vector<std::pair<std::string, std::size_t>> cases = {
      {"eye,ego,visual", 65}, {"eye,ego", 50}, {"eye", 25}, {"ego", 25}, {"visual", 15}};
  bool ok = true;
  std::ostringstream d;
  for (const auto& [spec, want] : cases) {
    const auto channels = parse_channels(spec);
    std::vector<SessionSignals> signals;
    for (const auto& s : sessions) {
      if (s.session_index == 1) signals.push_back(prepare_signals(s, config, channels));
    }
    const auto featurizer = fit_featurizer(signals, config, channels);
    const auto windows = featurize_session(signals.front(), featurizer, config, channels).windows;
    const bool dims = !windows.empty() && std::all_of(windows.begin(), windows.end(), [&](const LabeledWindow& w) {
      return w.feature.values.size() == want;
    });
    const auto report = run_two_fold(sessions, config, channels);
    const bool no_void =
        std::find(report.classes.begin(), report.classes.end(), ActivityLabel::kVoid) == report.classes.end() &&
        report.classes.size() == 5 && report_to_json(report).find("\"void\"") == std::string::npos;
    ok = ok && dims && report.feature_dim == want && no_void;
    d << spec << "=" << (windows.empty() ? 0 : windows.front().feature.values.size()) << (no_void ? "" : " (Void!)")
      << "; ";
  }
  d << "5-class reports list 5 classes without Void";
  return verdict(ok, d.str());
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"haar-oracle", haar_equivalence},
      {"quantizer-encoder", quantizer_exhaustive},
      {"flow-translation", flow_recovery},
      {"kmeans-recovery", kmeans_recovery},
      {"forest-oracle", forest_oracle},
      {"selftest", selftest},
      {"reference-ordering", reference_ordering},
      {"ablation-plumbing", ablation_plumbing},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {Outcome::kFail, std::string("exception: ") + e.what()};
    }
    const char* tag = v.outcome == Outcome::kPass ? "PASS" : v.outcome == Outcome::kFail ? "FAIL" : "SKIP";
    std::printf("%s %s: %s\n", tag, name.c_str(), v.detail.c_str());
    std::fflush(stdout);
    failures += v.outcome == Outcome::kFail;
  }
  return failures == 0 ? 0 : 1;
}
