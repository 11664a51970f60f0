#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <memory>
#include <numeric>
#include <sstream>

#include "gazeact/errors.hpp"
#include "gazeact/eval.hpp"
#include "gazeact/rng.hpp"
#include "gazeact/synthetic.hpp"
#include "test_util.hpp"

using namespace gazeact;

namespace {

using A = ActivityLabel;

// Precision at the score of each positive, counting every item scored at
// least as high; averaged over positives.
double ap_oracle(const std::vector<double>& scores, const std::vector<bool>& positive) {
  double sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    ++n_pos;
    std::size_t ranked = 0;
    std::size_t hits = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (scores[j] >= scores[i]) {
        ++ranked;
        hits += positive[j];
      }
    }
    sum += static_cast<double>(hits) / static_cast<double>(ranked);
  }
  return sum / static_cast<double>(n_pos);
}

SyntheticOptions quick() {
  SyntheticOptions o;
  o.segment_seconds = 90.0;
  return o;
}

PipelineConfig fast_config(int class_mode = 6) {
  PipelineConfig c;
  c.n_trees = 60;
  c.class_mode = class_mode;
  return c;
}

}  // namespace

TEST_CASE("confusion matrix: counts, normalization and zero support") {
  const std::vector<A> classes = {A::kRead, A::kWrite, A::kBrowse};
  const std::vector<A> truth = {A::kRead, A::kRead, A::kRead, A::kWrite};
  const std::vector<A> pred = {A::kRead, A::kWrite, A::kRead, A::kWrite};
  const auto m = confusion_matrix(truth, pred, classes);
  CHECK(m.counts[0] == std::vector<std::size_t>{2, 1, 0});
  CHECK(m.normalized[0][0] == doctest::Approx(2.0 / 3.0));
  CHECK(m.normalized[1][1] == 1.0);
  CHECK(m.zero_support == std::vector<bool>{false, false, true});
  CHECK(m.normalized[2] == std::vector<double>{0.0, 0.0, 0.0});
  const std::vector<A> alien = {A::kVoid, A::kRead, A::kRead, A::kRead};
  CHECK_THROWS_AS(confusion_matrix(alien, pred, classes), ParameterError);
}

TEST_CASE("average precision: matches the rank oracle") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(20);
    std::vector<double> scores(n);
    std::vector<bool> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.index(5)) / 4.0;  // many ties
      pos[i] = rng.uniform() < 0.4;
    }
    pos[rng.index(n)] = true;
    const std::unique_ptr<bool[]> buf(new bool[n]);
    for (std::size_t i = 0; i < n; ++i) buf[i] = pos[i];
    CHECK(average_precision(scores, std::span<const bool>(buf.get(), n)) ==
          doctest::Approx(ap_oracle(scores, pos)).epsilon(1e-12));
  }
}

TEST_CASE("average precision: constant scores and perfect ranking") {
  const std::vector<double> flat(10, 0.5);
  const bool pos[10] = {true, false, false, true, false, false, false, true, false, false};
  CHECK(average_precision(flat, pos) == doctest::Approx(0.3));
  const std::vector<double> ranked = {0.9, 0.1, 0.2, 0.8, 0.3, 0.0, 0.1, 0.7, 0.2, 0.05};
  CHECK(average_precision(ranked, pos) == 1.0);
  const bool none[10] = {};
  CHECK_THROWS_AS(average_precision(flat, none), ParameterError);
}

TEST_CASE("mean average precision skips absent classes with a warning") {
  const std::vector<std::vector<double>> scores = {{0.9, 0.1, 0.0}, {0.2, 0.8, 0.0}, {0.6, 0.4, 0.0}};
  const std::vector<std::size_t> truth = {0, 1, 0};
  testutil::WarningCapture w;
  CHECK(mean_average_precision(scores, truth, 3) == 1.0);
  CHECK(w.messages.size() == 1);
}

TEST_CASE("fold spec and provenance") {
  FoldSpec f;
  f.train_sessions = {{"s1", 1}, {"s2", 1}};
  f.test_sessions = {{"s1", 2}, {"s2", 2}};
  CHECK_NOTHROW(f.validate());
  auto overlap = f;
  overlap.test_sessions.push_back({"s1", 1});
  CHECK_THROWS_AS(overlap.validate(), ProtocolError);

  LabeledWindow clean;
  clean.subject_id = "s2";
  clean.session_index = 1;
  LabeledWindow leaked = clean;
  leaked.session_index = 2;
  const std::vector<LabeledWindow> ok = {clean};
  const std::vector<LabeledWindow> bad = {clean, leaked};
  CHECK_NOTHROW(check_provenance(ok, f));
  CHECK_THROWS_AS(check_provenance(bad, f), ProtocolError);
}

TEST_CASE("two-fold protocol: a subject without session 2 is named") {
  auto sessions = synthetic_sessions(3, quick());
  sessions.erase(std::remove_if(sessions.begin(), sessions.end(),
                                [](const SessionRecord& s) { return s.subject_id == "s2" && s.session_index == 2; }),
                 sessions.end());
  try {
    run_two_fold(sessions, fast_config(), ChannelSet::all());
    FAIL("expected ProtocolError");
  } catch (const ProtocolError& e) {
    CHECK(std::string(e.what()).find("s2") != std::string::npos);
  }
}

TEST_CASE("two-fold protocol: report structure on synthetic data") {
  const auto sessions = synthetic_sessions(4, quick());
  PipelineConfig cfg = fast_config(6);
  cfg.embedding_dim = quick().embedding_dim;
  testutil::WarningCapture w;  // absent classes in mAP
  const auto six = run_two_fold(sessions, cfg, ChannelSet::all());
  REQUIRE(six.folds.size() == 2);
  CHECK(six.classes.size() == 6);
  CHECK(six.feature_dim == 65);
  CHECK(std::abs(six.overall_accuracy - (six.folds[0].accuracy + six.folds[1].accuracy) / 2.0) <= 1e-12);
  CHECK(six.folds[0].spec.train_sessions == six.folds[1].spec.test_sessions);
  for (std::size_t r = 0; r < six.confusion.size(); ++r) {
    const double sum = std::accumulate(six.confusion[r].begin(), six.confusion[r].end(), 0.0);
    if (six.zero_support[r]) {
      CHECK(sum == 0.0);
    } else {
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }
  CHECK(six.per_subject_accuracy.size() == 3);

  cfg.class_mode = 5;
  const auto five = run_two_fold(sessions, cfg, ChannelSet::all());
  CHECK(five.classes.size() == 5);
  CHECK(std::find(five.classes.begin(), five.classes.end(), A::kVoid) == five.classes.end());

  const auto json = nlohmann::json::parse(report_to_json(five));
  CHECK(json["classes"].size() == 5);
  CHECK(json["folds"].size() == 2);
  std::ostringstream csv;
  write_confusion_csv(csv, five);
  CHECK(csv.str().rfind("truth,read,watch_video,write,copy_text,browse,zero_support\n", 0) == 0);
}

TEST_CASE("two-fold protocol: channel subsets have the right dimensions") {
  testutil::WarningCapture w;
  const auto sessions = synthetic_sessions(5, quick());
  PipelineConfig cfg = fast_config(5);
  cfg.embedding_dim = quick().embedding_dim;
  const std::vector<std::pair<std::string, std::size_t>> cases = {
      {"eye,ego,visual", 65}, {"eye,ego", 50}, {"eye", 25}, {"visual", 15}};
  for (const auto& [spec, dim] : cases) {
    const auto r = run_two_fold(sessions, cfg, parse_channels(spec));
    CHECK(r.feature_dim == dim);
  }
}

TEST_CASE("self-test: degenerate thresholds collapse motion to chance") {
  testutil::WarningCapture w;
  PipelineConfig cfg = fast_config(5);
  cfg.tau_small = 1e9 - 1.0;
  cfg.tau_large = 1e9;
  const auto r = run_synthetic_selftest(6, cfg, parse_channels("eye,ego"), quick());
  // Three equally long activities: every window has the same features.
  CHECK(r.overall_accuracy <= 0.45);
}

TEST_CASE("self-test: combining channels does not lose to the best single channel") {
  testutil::WarningCapture w;
  PipelineConfig cfg = fast_config(5);
  double best_single = 0.0;
  for (const char* ch : {"eye", "ego", "visual"}) {
    best_single = std::max(best_single, run_synthetic_selftest(7, cfg, parse_channels(ch), quick()).overall_accuracy);
  }
  const double combined = run_synthetic_selftest(7, cfg, ChannelSet::all(), quick()).overall_accuracy;
  CHECK(combined >= best_single - 0.02);
}

TEST_CASE("reference grid: published accuracies satisfy every ordering") {
  std::map<std::pair<int, unsigned>, double> acc;
  for (const auto& c : reference_accuracies()) acc[{c.class_mode, c.channels.bits()}] = c.accuracy;
  CHECK(acc.size() == 6);
  const auto checks = check_reference_ordering(acc);
  CHECK(checks.size() == 7);
  for (const auto& c : checks) CHECK_MESSAGE(c.holds, c.description);

  auto broken = acc;
  broken[{5, 7u}] = 0.5;
  const auto fails = check_reference_ordering(broken);
  CHECK(std::count_if(fails.begin(), fails.end(), [](const OrderingCheck& c) { return !c.holds; }) == 2);

  broken.erase({6, 4u});
  CHECK_THROWS_AS(check_reference_ordering(broken), ParameterError);
  CHECK(reference_accuracy(6, ChannelSet::all()) == 0.7709);
  CHECK_FALSE(reference_accuracy(6, parse_channels("eye")).has_value());
}
