#include "gazeact/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <set>

#include <json.hpp>

#include "gazeact/errors.hpp"
#include "gazeact/image.hpp"
#include "gazeact/motion.hpp"
#include "text_util.hpp"

namespace gazeact {

namespace {

std::string key_name(const SessionKey& k) { return k.subject + "/" + std::to_string(k.session); }

std::size_t class_index(ActivityLabel label, std::span<const ActivityLabel> classes) {
  const auto it = std::find(classes.begin(), classes.end(), label);
  if (it == classes.end()) {
    throw ParameterError("label '" + std::string(to_string(label)) + "' is not in the class list");
  }
  return static_cast<std::size_t>(it - classes.begin());
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace

void FoldSpec::validate() const {
  if (train_sessions.empty() || test_sessions.empty()) throw ProtocolError("fold needs training and test sessions");
  const std::set<SessionKey> train(train_sessions.begin(), train_sessions.end());
  for (const auto& k : test_sessions) {
    if (train.count(k)) throw ProtocolError("session " + key_name(k) + " is in both training and test sets");
  }
}

ConfusionMatrix confusion_matrix(std::span<const ActivityLabel> truth, std::span<const ActivityLabel> predicted,
                                 std::span<const ActivityLabel> classes) {
  if (truth.size() != predicted.size()) throw ParameterError("truth and prediction lengths differ");
  const std::size_t c = classes.size();
  ConfusionMatrix m;
  m.counts.assign(c, std::vector<std::size_t>(c, 0));
  m.normalized.assign(c, std::vector<double>(c, 0.0));
  m.zero_support.assign(c, false);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++m.counts[class_index(truth[i], classes)][class_index(predicted[i], classes)];
  }
  for (std::size_t r = 0; r < c; ++r) {
    const auto support = std::accumulate(m.counts[r].begin(), m.counts[r].end(), std::size_t{0});
    if (support == 0) {
      m.zero_support[r] = true;
      continue;
    }
    for (std::size_t k = 0; k < c; ++k) {
      m.normalized[r][k] = static_cast<double>(m.counts[r][k]) / static_cast<double>(support);
    }
  }
  return m;
}

double average_precision(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw ParameterError("score and relevance lengths differ");
  const auto n_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
  if (n_pos == 0) throw ParameterError("average precision needs at least one positive");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  // Every item in a group of tied scores shares the precision at the group's end.
  double sum = 0.0;
  std::size_t seen = 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t group_hits = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (positive[order[j]]) ++group_hits;
      ++j;
    }
    seen += j - i;
    hits += group_hits;
    sum += static_cast<double>(group_hits) * static_cast<double>(hits) / static_cast<double>(seen);
    i = j;
  }
  return sum / static_cast<double>(n_pos);
}

double mean_average_precision(std::span<const std::vector<double>> scores, std::span<const std::size_t> truth,
                              std::size_t n_classes) {
  if (scores.size() != truth.size()) throw ParameterError("score and truth lengths differ");
  for (const auto& row : scores) {
    if (row.size() != n_classes) throw ParameterError("score row has the wrong number of classes");
  }
  double sum = 0.0;
  std::size_t used = 0;
  std::vector<double> column(scores.size());
  std::unique_ptr<bool[]> flags(new bool[scores.size()]);
  for (std::size_t c = 0; c < n_classes; ++c) {
    bool any = false;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (truth[i] >= n_classes) throw ParameterError("truth index outside the class range");
      column[i] = scores[i][c];
      flags[i] = truth[i] == c;
      any = any || flags[i];
    }
    if (!any) {
      warn("class " + std::to_string(c) + " is absent from the truth labels; excluded from mAP");
      continue;
    }
    sum += average_precision(column, std::span<const bool>(flags.get(), scores.size()));
    ++used;
  }
  if (used == 0) throw ParameterError("no class is present in the truth labels");
  return sum / static_cast<double>(used);
}

// ---------------------------------------------------------------------------
// Dataset loading

SessionRecord load_session(const std::filesystem::path& dir, const std::string& subject, int session,
                           const PipelineConfig& config, bool need_embeddings) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ParseError("session directory not found: " + dir.string());
  SessionRecord rec;
  rec.subject_id = subject;
  rec.session_index = session;
  rec.sample_rate = config.sample_rate;
  rec.gaze = parse_gaze_log(dir / "gaze.csv", config.sample_rate);
  rec.labels = load_labels(dir / "labels.csv");
  if (fs::is_directory(dir / "frames")) {
    rec.frame_files = list_frame_files(dir / "frames");
  } else if (fs::exists(dir / "flows.csv")) {
    rec.flows = load_flows(dir / "flows.csv");
  } else {
    throw ParseError(dir.string() + ": neither frames/ nor flows.csv present");
  }
  if (fs::exists(dir / "embeddings.bin")) {
    rec.embeddings = load_embeddings(dir / "embeddings.bin");
  } else if (need_embeddings) {
    throw ParseError(dir.string() + ": embeddings.bin is required for the visual channel");
  }
  const auto issues = validate_session(rec, config.embedding_dim);
  if (!issues.empty()) {
    std::string msg = "invalid session";
    for (const auto& s : issues) msg += "\n  " + s;
    throw ParseError(msg);
  }
  return rec;
}

std::vector<SessionRecord> load_dataset(const std::filesystem::path& root, const PipelineConfig& config,
                                        bool need_embeddings) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw ParseError("dataset root not found: " + root.string());
  std::vector<fs::path> subjects;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) subjects.push_back(e.path());
  }
  std::sort(subjects.begin(), subjects.end());

  std::vector<SessionRecord> out;
  for (const auto& subject_dir : subjects) {
    for (int session : {1, 2}) {
      const fs::path dir = subject_dir / std::to_string(session);
      if (!fs::is_directory(dir)) continue;
      out.push_back(load_session(dir, subject_dir.filename().string(), session, config, need_embeddings));
    }
  }
  if (out.empty()) throw ParseError("no sessions found under " + root.string());
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline

SessionSignals prepare_signals(const SessionRecord& session, const PipelineConfig& config, ChannelSet channels) {
  SessionSignals s;
  s.key = {session.subject_id, session.session_index};
  s.labels = &session.labels;
  const double rate = session.sample_rate;
  if (channels.has(Channel::kEye)) {
    const auto gaze = resample_gaze(session.gaze, config.sample_rate, 0.0);
    s.gaze = analyze_gaze(gaze, config);
    s.gaze_times.reserve(gaze.size());
    for (const auto& g : gaze) s.gaze_times.push_back(g.t);
  }
  if (channels.has(Channel::kEgo)) {
    const auto flows = session.flows.empty() ? compute_flows(session.frame_files, config) : session.flows;
    if (flows.empty()) throw InsufficientDataError(key_name(s.key) + ": no motion data");
    s.motion = analyze_flows(flows, config);
    s.motion_times.resize(flows.size());
    for (std::size_t i = 0; i < flows.size(); ++i) s.motion_times[i] = static_cast<double>(i) / rate;
  }
  if (channels.has(Channel::kVisual)) {
    if (!session.embeddings) throw ParameterError(key_name(s.key) + ": visual channel needs embeddings");
    s.embeddings = &*session.embeddings;
    s.frame_times.resize(session.embeddings->rows());
    for (std::size_t i = 0; i < s.frame_times.size(); ++i) s.frame_times[i] = static_cast<double>(i) / rate;
  }
  return s;
}

FittedFeaturizer fit_featurizer(std::span<const SessionSignals> training, const PipelineConfig& config,
                                ChannelSet channels) {
  if (training.empty()) throw InsufficientDataError("no training sessions");
  FittedFeaturizer f;
  for (const auto& s : training) f.fitted_on.push_back(s.key);

  auto thresholds = [&](std::optional<QuantThresholds> configured, AxisCoefficients SessionSignals::*member) {
    if (configured) {
      configured->validate();
      return *configured;
    }
    std::vector<const AxisCoefficients*> sources;
    for (const auto& s : training) sources.push_back(&(s.*member));
    return estimate_thresholds(sources, config.tau_percentile_small, config.tau_percentile_large);
  };
  if (channels.has(Channel::kEye)) f.gaze_thresholds = thresholds(configured_gaze_thresholds(config), &SessionSignals::gaze);
  if (channels.has(Channel::kEgo)) {
    f.motion_thresholds = thresholds(configured_motion_thresholds(config), &SessionSignals::motion);
  }
  if (channels.has(Channel::kVisual)) {
    EmbeddingMatrix pooled;
    pooled.dim = training.front().embeddings->dim;
    for (const auto& s : training) {
      if (s.embeddings->dim != pooled.dim) throw ParameterError("training embeddings differ in dimension");
      pooled.values.insert(pooled.values.end(), s.embeddings->values.begin(), s.embeddings->values.end());
    }
    f.vocab = fit_kmeans(pooled, {config.k_visual_words, config.rng_seed, config.kmeans_max_iter});
  }
  return f;
}

LabelingResult featurize_session(const SessionSignals& signals, const FittedFeaturizer& featurizer,
                                 const PipelineConfig& config, ChannelSet channels) {
  if (channels.empty()) throw ParameterError("no channels selected");
  const double dt = 1.0 / config.sample_rate;
  TimeSpan span{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  auto clip = [&](const std::vector<double>& times) {
    if (times.empty()) throw InsufficientDataError(key_name(signals.key) + ": empty channel stream");
    span.t0 = std::max(span.t0, times.front());
    span.t1 = std::min(span.t1, times.back() + dt);
  };
  auto timed = [](const std::vector<double>& times, const std::vector<MotionSymbol>& codes) {
    std::vector<TimedSymbol> out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) out[i] = {times[i], codes[i].code};
    return out;
  };

  std::vector<TimedSymbol> eye, ego, visual;
  if (channels.has(Channel::kEye)) {
    clip(signals.gaze_times);
    eye = timed(signals.gaze_times, quantize_and_encode(signals.gaze, featurizer.gaze_thresholds));
  }
  if (channels.has(Channel::kEgo)) {
    clip(signals.motion_times);
    ego = timed(signals.motion_times, quantize_and_encode(signals.motion, featurizer.motion_thresholds));
  }
  if (channels.has(Channel::kVisual)) {
    clip(signals.frame_times);
    const auto words = assign_words(*signals.embeddings, featurizer.vocab);
    visual.resize(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) visual[i] = {signals.frame_times[i], words[i]};
  }

  const double w = config.window_seconds;
  const double s = config.stride_seconds;
  std::vector<WindowHistogram> eye_h, ego_h, visual_h;
  if (channels.has(Channel::kEye)) eye_h = window_histogram(eye, kSymbolCount, w, s, span);
  if (channels.has(Channel::kEgo)) ego_h = window_histogram(ego, kSymbolCount, w, s, span);
  if (channels.has(Channel::kVisual)) visual_h = window_histogram(visual, featurizer.vocab.k(), w, s, span);

  const std::size_t n = window_count(span, w, s);
  std::vector<WindowFeature> features;
  features.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ChannelWindows parts;
    if (!eye_h.empty()) parts.eye = eye_h[i];
    if (!ego_h.empty()) parts.ego = ego_h[i];
    if (!visual_h.empty()) parts.visual = visual_h[i];
    features.push_back(fuse(parts, channels, s));
  }
  if (!signals.labels) throw ParameterError(key_name(signals.key) + ": session has no labels");
  return label_windows(features, *signals.labels, config.class_mode, w, signals.key.subject, signals.key.session);
}

void check_provenance(std::span<const LabeledWindow> training, const FoldSpec& fold) {
  const std::set<SessionKey> test(fold.test_sessions.begin(), fold.test_sessions.end());
  const std::set<SessionKey> train(fold.train_sessions.begin(), fold.train_sessions.end());
  for (const auto& w : training) {
    const SessionKey k{w.subject_id, w.session_index};
    if (test.count(k)) throw ProtocolError("training window from test session " + key_name(k));
    if (!train.count(k)) throw ProtocolError("training window from unlisted session " + key_name(k));
  }
}

Dataset to_dataset(std::span<const LabeledWindow> windows, std::span<const ActivityLabel> classes) {
  Dataset d;
  if (windows.empty()) return d;
  d.n_features = windows.front().feature.values.size();
  d.x.reserve(windows.size() * d.n_features);
  d.y.reserve(windows.size());
  for (const auto& w : windows) {
    if (w.feature.values.size() != d.n_features) throw ParameterError("feature rows differ in dimension");
    d.x.insert(d.x.end(), w.feature.values.begin(), w.feature.values.end());
    d.y.push_back(static_cast<std::uint32_t>(class_index(w.label, classes)));
  }
  return d;
}

std::vector<std::string> class_names(std::span<const ActivityLabel> classes) {
  std::vector<std::string> out;
  for (auto c : classes) out.emplace_back(to_string(c));
  return out;
}

ForestParams forest_params(const PipelineConfig& config) {
  ForestParams p;
  p.n_trees = config.n_trees;
  p.mtry = config.mtry;
  p.min_leaf = config.min_leaf;
  p.max_depth = config.max_depth;
  p.seed = config.rng_seed;
  return p;
}

namespace {

// Scores `test` with `model`; fills the accuracy-related fields of a fold.
void score_fold(const ForestModel& model, std::span<const LabeledWindow> test, std::span<const ActivityLabel> classes,
                FoldResult& r) {
  if (test.empty()) throw InsufficientDataError("no labeled test windows");
  const Dataset data = to_dataset(test, classes);
  if (data.n_features != model.n_features) {
    throw ParameterError("test features have dimension " + std::to_string(data.n_features) + ", model expects " +
                         std::to_string(model.n_features));
  }
  const auto proba = predict_proba_batch(model, data);
  std::vector<ActivityLabel> truth, predicted;
  std::vector<std::size_t> truth_idx;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_subject;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const std::size_t p = argmax(proba[i]);
    truth.push_back(test[i].label);
    predicted.push_back(classes[p]);
    truth_idx.push_back(data.y[i]);
    const bool hit = p == data.y[i];
    correct += hit;
    auto& ps = per_subject[test[i].subject_id];
    ps.first += hit;
    ++ps.second;
  }
  r.n_test = test.size();
  r.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  r.mean_average_precision = mean_average_precision(proba, truth_idx, classes.size());
  r.confusion = confusion_matrix(truth, predicted, classes);
  for (const auto& [subject, c] : per_subject) {
    r.per_subject_accuracy[subject] = static_cast<double>(c.first) / static_cast<double>(c.second);
  }
}

EvalReport assemble_report(std::vector<FoldResult> folds, std::span<const ActivityLabel> classes, ChannelSet channels,
                           int class_mode, std::size_t feature_dim) {
  EvalReport rep;
  rep.classes.assign(classes.begin(), classes.end());
  rep.channels = channels;
  rep.class_mode = class_mode;
  rep.feature_dim = feature_dim;
  const std::size_t c = classes.size();
  rep.confusion.assign(c, std::vector<double>(c, 0.0));
  rep.zero_support.assign(c, true);
  rep.per_class_accuracy.assign(c, 0.0);
  const auto n_folds = static_cast<double>(folds.size());
  // Row r is averaged over the folds in which class r had support.
  for (std::size_t r = 0; r < c; ++r) {
    std::size_t supported = 0;
    for (const auto& f : folds) {
      if (f.confusion.zero_support[r]) continue;
      ++supported;
      for (std::size_t k = 0; k < c; ++k) rep.confusion[r][k] += f.confusion.normalized[r][k];
    }
    if (supported == 0) continue;
    rep.zero_support[r] = false;
    for (double& v : rep.confusion[r]) v /= static_cast<double>(supported);
    rep.per_class_accuracy[r] = rep.confusion[r][r];
  }
  std::map<std::string, std::pair<double, std::size_t>> subjects;
  for (const auto& f : folds) {
    rep.overall_accuracy += f.accuracy;
    rep.mean_average_precision += f.mean_average_precision;
    for (const auto& [s, a] : f.per_subject_accuracy) {
      subjects[s].first += a;
      ++subjects[s].second;
    }
  }
  rep.overall_accuracy /= n_folds;
  rep.mean_average_precision /= n_folds;
  for (const auto& [s, acc] : subjects) rep.per_subject_accuracy[s] = acc.first / static_cast<double>(acc.second);
  rep.folds = std::move(folds);
  return rep;
}

}  // namespace

FoldResult run_fold(std::span<const SessionSignals> signals, const FoldSpec& fold, const PipelineConfig& config,
                    ChannelSet channels) {
  fold.validate();
  auto select = [&](const std::vector<SessionKey>& keys) {
    std::vector<SessionSignals> out;
    for (const auto& k : keys) {
      const auto it = std::find_if(signals.begin(), signals.end(), [&](const SessionSignals& s) { return s.key == k; });
      if (it == signals.end()) throw ProtocolError("session " + key_name(k) + " is missing for subject " + k.subject);
      out.push_back(*it);
    }
    return out;
  };
  const auto train = select(fold.train_sessions);
  const auto test = select(fold.test_sessions);

  const FittedFeaturizer featurizer = fit_featurizer(train, config, channels);
  if (featurizer.fitted_on != fold.train_sessions) throw ProtocolError("featurizer fitted outside the training fold");

  std::vector<LabeledWindow> train_windows;
  for (const auto& s : train) {
    auto lw = featurize_session(s, featurizer, config, channels);
    train_windows.insert(train_windows.end(), lw.windows.begin(), lw.windows.end());
  }
  check_provenance(train_windows, fold);
  if (train_windows.empty()) throw InsufficientDataError("no labeled training windows");

  const auto classes = classes_for_mode(config.class_mode);
  const ForestModel model = train_forest(to_dataset(train_windows, classes), class_names(classes), forest_params(config));

  std::vector<LabeledWindow> test_windows;
  for (const auto& s : test) {
    auto lw = featurize_session(s, featurizer, config, channels);
    test_windows.insert(test_windows.end(), lw.windows.begin(), lw.windows.end());
  }

  FoldResult r;
  r.spec = fold;
  r.oob_error = model.oob_error;
  r.n_train = train_windows.size();
  r.gaze_thresholds = featurizer.gaze_thresholds;
  r.motion_thresholds = featurizer.motion_thresholds;
  score_fold(model, test_windows, classes, r);
  return r;
}

EvalReport run_two_fold(std::span<const SessionRecord> sessions, const PipelineConfig& config, ChannelSet channels) {
  config.validate();
  if (channels.empty()) throw ParameterError("no channels selected");
  std::map<std::string, std::array<int, 2>> seen;
  for (const auto& s : sessions) {
    if (s.session_index != 1 && s.session_index != 2) {
      throw ProtocolError("subject " + s.subject_id + " has session " + std::to_string(s.session_index));
    }
    if (++seen[s.subject_id][static_cast<std::size_t>(s.session_index - 1)] > 1) {
      throw ProtocolError("subject " + s.subject_id + " has session " + std::to_string(s.session_index) + " twice");
    }
  }
  if (seen.empty()) throw ProtocolError("no sessions");
  FoldSpec a, b;
  for (const auto& [subject, count] : seen) {
    for (int i = 0; i < 2; ++i) {
      if (count[static_cast<std::size_t>(i)] == 0) {
        throw ProtocolError("subject " + subject + " is missing session " + std::to_string(i + 1));
      }
    }
    a.train_sessions.push_back({subject, 1});
    a.test_sessions.push_back({subject, 2});
    b.train_sessions.push_back({subject, 2});
    b.test_sessions.push_back({subject, 1});
  }

  std::vector<SessionSignals> signals;
  signals.reserve(sessions.size());
  for (const auto& s : sessions) signals.push_back(prepare_signals(s, config, channels));

  std::vector<FoldResult> folds;
  folds.push_back(run_fold(signals, a, config, channels));
  folds.push_back(run_fold(signals, b, config, channels));
  const auto classes = classes_for_mode(config.class_mode);
  return assemble_report(std::move(folds), classes, channels, config.class_mode,
                         feature_dimension(channels, config.k_visual_words));
}

EvalReport evaluate_model(const ForestModel& model, std::span<const LabeledWindow> test, int class_mode,
                          ChannelSet channels) {
  const auto classes = classes_for_mode(class_mode);
  if (model.classes != class_names(classes)) {
    throw ParameterError("model classes do not match the " + std::to_string(class_mode) + "-class mode");
  }
  FoldResult r;
  r.oob_error = model.oob_error;
  std::set<SessionKey> keys;
  for (const auto& w : test) keys.insert({w.subject_id, w.session_index});
  r.spec.test_sessions.assign(keys.begin(), keys.end());
  score_fold(model, test, classes, r);
  return assemble_report({std::move(r)}, classes, channels, class_mode, model.n_features);
}

// ---------------------------------------------------------------------------
// Reports

namespace {

nlohmann::json thresholds_json(const QuantThresholds& t) { return {{"small", t.small}, {"large", t.large}}; }

nlohmann::json sessions_json(const std::vector<SessionKey>& keys) {
  auto out = nlohmann::json::array();
  for (const auto& k : keys) out.push_back(key_name(k));
  return out;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  using nlohmann::json;
  const auto names = class_names(report.classes);
  json j;
  j["classes"] = names;
  j["channels"] = to_string(report.channels);
  j["feature_dim"] = report.feature_dim;
  j["class_mode"] = report.class_mode;
  j["overall_accuracy"] = report.overall_accuracy;
  j["mean_average_precision"] = report.mean_average_precision;
  j["confusion"] = report.confusion;
  json zero = json::array();
  json per_class = json::object();
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (report.zero_support[c]) {
      zero.push_back(names[c]);
    } else {
      per_class[names[c]] = report.per_class_accuracy[c];
    }
  }
  j["zero_support"] = zero;
  j["per_class_accuracy"] = per_class;
  j["per_subject_accuracy"] = report.per_subject_accuracy;
  if (const auto ref = reference_accuracy(report.class_mode, report.channels)) {
    j["reference_accuracy"] = *ref;
    j["delta_vs_reference"] = report.overall_accuracy - *ref;
  }
  json folds = json::array();
  for (const auto& f : report.folds) {
    json fj;
    fj["train_sessions"] = sessions_json(f.spec.train_sessions);
    fj["test_sessions"] = sessions_json(f.spec.test_sessions);
    fj["accuracy"] = f.accuracy;
    fj["mean_average_precision"] = f.mean_average_precision;
    fj["oob_error"] = f.oob_error;
    fj["n_train"] = f.n_train;
    fj["n_test"] = f.n_test;
    if (report.channels.has(Channel::kEye)) fj["gaze_thresholds"] = thresholds_json(f.gaze_thresholds);
    if (report.channels.has(Channel::kEgo)) fj["motion_thresholds"] = thresholds_json(f.motion_thresholds);
    fj["confusion_counts"] = f.confusion.counts;
    fj["per_subject_accuracy"] = f.per_subject_accuracy;
    folds.push_back(std::move(fj));
  }
  j["folds"] = folds;
  return j.dump(2);
}

void write_confusion_csv(std::ostream& out, const EvalReport& report) {
  const auto names = class_names(report.classes);
  out << "truth";
  for (const auto& n : names) out << ',' << n;
  out << ",zero_support\n";
  for (std::size_t r = 0; r < names.size(); ++r) {
    out << names[r];
    for (double v : report.confusion[r]) out << ',' << detail::format_double(v);
    out << ',' << (report.zero_support[r] ? 1 : 0) << '\n';
  }
}

void write_report(const std::filesystem::path& dir, const EvalReport& report) {
  std::filesystem::create_directories(dir);
  std::ofstream json(dir / "report.json");
  if (!json) throw Error("cannot write " + (dir / "report.json").string());
  json << report_to_json(report) << '\n';
  std::ofstream csv(dir / "confusion.csv");
  if (!csv) throw Error("cannot write " + (dir / "confusion.csv").string());
  write_confusion_csv(csv, report);
}

// ---------------------------------------------------------------------------
// Published reference values

namespace {

constexpr ChannelSet kCombined = ChannelSet::all();
constexpr ChannelSet kEyeEgo{3u};
constexpr ChannelSet kVisualOnly{4u};

constexpr std::array<ReferenceCell, 6> kReference = {{
    {6, kCombined, 0.7709},
    {6, kEyeEgo, 0.7249},
    {6, kVisualOnly, 0.4503},
    {5, kCombined, 0.8565},
    {5, kEyeEgo, 0.7938},
    {5, kVisualOnly, 0.6297},
}};

}  // namespace

std::span<const ReferenceCell> reference_accuracies() { return kReference; }

std::optional<double> reference_accuracy(int class_mode, ChannelSet channels) {
  for (const auto& c : kReference) {
    if (c.class_mode == class_mode && c.channels == channels) return c.accuracy;
  }
  return std::nullopt;
}

std::vector<OrderingCheck> check_reference_ordering(const std::map<std::pair<int, unsigned>, double>& accuracies) {
  auto acc = [&](int mode, ChannelSet ch) {
    const auto it = accuracies.find({mode, ch.bits()});
    if (it == accuracies.end()) {
      throw ParameterError("missing accuracy for " + to_string(ch) + " in " + std::to_string(mode) + "-class mode");
    }
    return it->second;
  };
  std::vector<OrderingCheck> out;
  for (int mode : {6, 5}) {
    const std::string m = std::to_string(mode) + "-class";
    out.push_back({m + ": combined >= eye+ego", acc(mode, kCombined) >= acc(mode, kEyeEgo)});
    out.push_back({m + ": eye+ego >= visual", acc(mode, kEyeEgo) >= acc(mode, kVisualOnly)});
  }
  for (auto ch : {kCombined, kEyeEgo, kVisualOnly}) {
    out.push_back({to_string(ch) + ": 5-class > 6-class", acc(5, ch) > acc(6, ch)});
  }
  return out;
}

}  // namespace gazeact
