#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gazeact/config.hpp"
#include "gazeact/core.hpp"
#include "gazeact/errors.hpp"
#include "gazeact/eval.hpp"
#include "gazeact/forest.hpp"
#include "gazeact/gaze_encoder.hpp"
#include "gazeact/motion.hpp"
#include "gazeact/synthetic.hpp"
#include "gazeact/vocab.hpp"
#include "gazeact/windowing.hpp"

namespace fs = std::filesystem;
using namespace gazeact;

namespace {

struct Common {
  std::string config_path;
  std::string channels = "eye,ego,visual";
  int classes = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "pipeline config (JSON)");
  cmd->add_option("--channels", c.channels, "channel subset: eye,ego,visual");
  cmd->add_option("--classes", c.classes, "class mode (5 or 6)")->check(CLI::IsMember({5, 6}));
  cmd->add_option("--seed", c.seed, "RNG seed");
  cmd->add_option("--out", c.out, "output directory");
}

PipelineConfig make_config(const Common& c) {
  PipelineConfig config = c.config_path.empty() ? PipelineConfig{} : load_config(c.config_path);
  if (c.classes != 0) config.class_mode = c.classes;
  if (c.seed) config.rng_seed = *c.seed;
  config.validate();
  return config;
}

std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// Writes to <out>/<name>, or stdout when no output directory was given.
template <class F>
void emit(const Common& c, const std::string& name, F&& write) {
  if (c.out.empty()) {
    write(std::cout);
    return;
  }
  fs::create_directories(c.out);
  const fs::path path = fs::path(c.out) / name;
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  write(f);
  std::cerr << "wrote " << path.string() << '\n';
}

void write_symbols(std::ostream& out, const std::vector<MotionSymbol>& symbols, double rate,
                   std::span<const double> times = {}) {
  out << "t,code\n";
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const double t = times.empty() ? static_cast<double>(i) / rate : times[i];
    out << num(t) << ',' << int{symbols[i].code} << '\n';
  }
}

QuantThresholds thresholds_for(const AxisCoefficients& coeffs, std::optional<QuantThresholds> configured,
                               const PipelineConfig& config) {
  if (configured) return *configured;
  warn("no thresholds configured; estimating them from this input alone");
  const AxisCoefficients* src[] = {&coeffs};
  return estimate_thresholds(src, config.tau_percentile_small, config.tau_percentile_large);
}

std::vector<LabeledWindow> read_features(const std::vector<std::string>& paths) {
  std::vector<LabeledWindow> all;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw ParseError("cannot open " + p);
    auto rows = read_feature_csv(in);
    all.insert(all.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
  }
  return all;
}

void print_summary(const EvalReport& r) {
  std::cout << "channels " << to_string(r.channels) << ", " << r.class_mode << "-class, " << r.feature_dim
            << " features\n";
  std::cout << "overall accuracy " << num(r.overall_accuracy) << ", mAP " << num(r.mean_average_precision) << '\n';
  for (std::size_t f = 0; f < r.folds.size(); ++f) {
    std::cout << "  fold " << f << ": accuracy " << num(r.folds[f].accuracy) << ", train " << r.folds[f].n_train
              << ", test " << r.folds[f].n_test << ", oob error " << num(r.folds[f].oob_error) << '\n';
  }
  if (auto ref = reference_accuracy(r.class_mode, r.channels)) {
    std::cout << "  reference " << num(*ref) << ", delta " << num(r.overall_accuracy - *ref) << '\n';
  }
}

void emit_report(const Common& c, const EvalReport& report) {
  if (c.out.empty()) {
    std::cout << report_to_json(report) << '\n';
  } else {
    write_report(c.out, report);
    std::cerr << "wrote " << c.out << "/report.json and confusion.csv\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaze-act: activity recognition from egocentric gaze, head motion and visual words"};
  app.require_subcommand(1);

  // encode-gaze
  Common eg;
  std::string gaze_path;
  auto* encode_gaze = app.add_subcommand("encode-gaze", "gaze CSV -> per-sample symbol CSV");
  add_common(encode_gaze, eg);
  encode_gaze->add_option("--gaze", gaze_path, "gaze CSV (t,x,y,valid)")->required();

  // encode-motion
  Common em;
  std::string frames_dir, flows_path;
  auto* encode_motion = app.add_subcommand("encode-motion", "frames or flows -> per-pair symbol CSV");
  add_common(encode_motion, em);
  auto* frames_opt = encode_motion->add_option("--frames", frames_dir, "frame image directory");
  auto* flows_opt = encode_motion->add_option("--flows", flows_path, "precomputed flow CSV");
  frames_opt->excludes(flows_opt);

  // vocab
  Common vc;
  std::vector<std::string> fit_paths;
  std::string assign_path, vocab_path;
  auto* vocab = app.add_subcommand("vocab", "fit or apply the visual vocabulary");
  add_common(vocab, vc);
  auto* fit_opt = vocab->add_option("--fit", fit_paths, "embeddings files to cluster");
  auto* assign_opt = vocab->add_option("--assign", assign_path, "embeddings file to map to words");
  vocab->add_option("--model", vocab_path, "vocabulary file (read for --assign)");
  fit_opt->excludes(assign_opt);

  // featurize
  Common ft;
  std::string session_dir, vocab_model;
  auto* featurize = app.add_subcommand("featurize", "session directory -> labeled window features");
  add_common(featurize, ft);
  featurize->add_option("--session", session_dir, "<root>/<subject>/<session> directory")->required();
  featurize->add_option("--vocab", vocab_model, "vocabulary file (visual channel)");

  // train
  Common tr;
  std::vector<std::string> train_features;
  auto* train = app.add_subcommand("train", "feature CSVs -> forest model");
  add_common(train, tr);
  train->add_option("--features", train_features, "feature CSV files")->required();

  // evaluate
  Common ev;
  std::string model_path;
  std::vector<std::string> test_features;
  auto* evaluate = app.add_subcommand("evaluate", "score a forest on feature CSVs");
  add_common(evaluate, ev);
  evaluate->add_option("--model", model_path, "forest model file")->required();
  evaluate->add_option("--features", test_features, "feature CSV files")->required();

  // pipeline
  Common pl;
  std::string dataset_root;
  bool grid = false;
  auto* pipeline = app.add_subcommand("pipeline", "two-fold session-swap evaluation over a dataset");
  add_common(pipeline, pl);
  pipeline->add_option("--dataset", dataset_root, "<root>/<subject>/<session>/...")->required();
  pipeline->add_flag("--reference-grid", grid, "run every channel set in both class modes and check the reference ordering");

  // selftest
  Common st;
  auto* selftest = app.add_subcommand("selftest", "synthetic end-to-end run of the two-fold protocol");
  add_common(selftest, st);

  CLI11_PARSE(app, argc, argv);

  try {
    if (encode_gaze->parsed()) {
      const auto config = make_config(eg);
      const auto raw = parse_gaze_log(gaze_path, config.sample_rate);
      const auto gaze = resample_gaze(raw, config.sample_rate, 0.0);
      const auto coeffs = analyze_gaze(gaze, config);
      const auto tau = thresholds_for(coeffs, configured_gaze_thresholds(config), config);
      std::cerr << "thresholds small " << num(tau.small) << " large " << num(tau.large) << '\n';
      std::vector<double> times;
      for (const auto& g : gaze) times.push_back(g.t);
      const auto symbols = quantize_and_encode(coeffs, tau);
      emit(eg, "gaze_symbols.csv", [&](std::ostream& o) { write_symbols(o, symbols, config.sample_rate, times); });
    } else if (encode_motion->parsed()) {
      const auto config = make_config(em);
      if (frames_dir.empty() && flows_path.empty()) throw ParameterError("need --frames or --flows");
      std::vector<FlowEstimate> flows;
      if (!frames_dir.empty()) {
        flows = compute_flows(list_frame_files(frames_dir), config);
        emit(em, "flows.csv", [&](std::ostream& o) { write_flow_csv(o, flows); });
      } else {
        flows = load_flows(flows_path);
      }
      const auto coeffs = analyze_flows(flows, config);
      const auto tau = thresholds_for(coeffs, configured_motion_thresholds(config), config);
      std::cerr << "thresholds small " << num(tau.small) << " large " << num(tau.large) << '\n';
      const auto symbols = quantize_and_encode(coeffs, tau);
      emit(em, "motion_symbols.csv", [&](std::ostream& o) { write_symbols(o, symbols, config.sample_rate); });
    } else if (vocab->parsed()) {
      const auto config = make_config(vc);
      if (!fit_paths.empty()) {
        EmbeddingMatrix pooled;
        for (const auto& p : fit_paths) {
          const auto e = load_embeddings(p);
          if (pooled.dim == 0) pooled.dim = e.dim;
          if (e.dim != pooled.dim) throw ParameterError(p + ": embedding dimension differs");
          pooled.values.insert(pooled.values.end(), e.values.begin(), e.values.end());
        }
        const auto model = fit_kmeans(pooled, {config.k_visual_words, config.rng_seed, config.kmeans_max_iter});
        std::cerr << "k-means: " << model.inertia_history.size() << " passes, inertia "
                  << num(model.training_inertia) << '\n';
        const fs::path dir = vc.out.empty() ? fs::path(".") : fs::path(vc.out);
        fs::create_directories(dir);
        save_vocab(dir / "vocab.bin", model);
        std::cerr << "wrote " << (dir / "vocab.bin").string() << '\n';
      } else if (!assign_path.empty()) {
        if (vocab_path.empty()) throw ParameterError("--assign needs --model");
        const auto words = assign_words(load_embeddings(assign_path), load_vocab(vocab_path));
        emit(vc, "words.csv", [&](std::ostream& o) {
          o << "frame_index,word\n";
          for (std::size_t i = 0; i < words.size(); ++i) o << i << ',' << words[i] << '\n';
        });
      } else {
        throw ParameterError("need --fit or --assign");
      }
    } else if (featurize->parsed()) {
      const auto config = make_config(ft);
      const auto channels = parse_channels(ft.channels);
      const fs::path dir = fs::absolute(session_dir).lexically_normal();
      const fs::path leaf = dir.has_filename() ? dir : dir.parent_path();
      const int session = std::stoi(leaf.filename().string());
      const auto rec = load_session(leaf, leaf.parent_path().filename().string(), session, config,
                                    channels.has(Channel::kVisual));
      const auto signals = prepare_signals(rec, config, channels);
      FittedFeaturizer featurizer;
      if (channels.has(Channel::kEye)) featurizer.gaze_thresholds = thresholds_for(signals.gaze, configured_gaze_thresholds(config), config);
      if (channels.has(Channel::kEgo)) {
        featurizer.motion_thresholds = thresholds_for(signals.motion, configured_motion_thresholds(config), config);
      }
      if (channels.has(Channel::kVisual)) {
        if (vocab_model.empty()) throw ParameterError("visual channel needs --vocab");
        featurizer.vocab = load_vocab(vocab_model);
      }
      const auto result = featurize_session(signals, featurizer, config, channels);
      std::cerr << result.windows.size() << " windows, " << result.dropped_unlabeled << " unlabeled, "
                << result.dropped_void << " void dropped\n";
      emit(ft, "features.csv", [&](std::ostream& o) { write_feature_csv(o, result.windows); });
    } else if (train->parsed()) {
      const auto config = make_config(tr);
      const auto windows = read_features(train_features);
      const auto classes = classes_for_mode(config.class_mode);
      std::vector<LabeledWindow> usable;
      for (const auto& w : windows) {
        if (std::find(classes.begin(), classes.end(), w.label) != classes.end()) usable.push_back(w);
      }
      if (usable.size() != windows.size()) {
        warn(std::to_string(windows.size() - usable.size()) + " windows outside the class mode were skipped");
      }
      const auto model = train_forest(to_dataset(usable, classes), class_names(classes), forest_params(config));
      std::cerr << model.trees.size() << " trees, OOB error " << num(model.oob_error) << '\n';
      const fs::path dir = tr.out.empty() ? fs::path(".") : fs::path(tr.out);
      fs::create_directories(dir);
      save_forest(dir / "model.garf", model);
      std::cerr << "wrote " << (dir / "model.garf").string() << '\n';
    } else if (evaluate->parsed()) {
      make_config(ev);
      const auto model = load_forest(model_path);
      const auto mode = static_cast<int>(model.n_classes());
      if (ev.classes != 0 && ev.classes != mode) throw ParameterError("--classes does not match the model");
      auto windows = read_features(test_features);
      if (mode == 5) std::erase_if(windows, [](const LabeledWindow& w) { return w.label == ActivityLabel::kVoid; });
      const auto channels = parse_channels(ev.channels);
      const auto report = evaluate_model(model, windows, mode, channels);
      print_summary(report);
      emit_report(ev, report);
    } else if (pipeline->parsed()) {
      const auto config = make_config(pl);
      if (!grid) {
        const auto channels = parse_channels(pl.channels);
        const auto sessions = load_dataset(dataset_root, config, channels.has(Channel::kVisual));
        const auto report = run_two_fold(sessions, config, channels);
        print_summary(report);
        emit_report(pl, report);
      } else {
        const auto sessions = load_dataset(dataset_root, config, true);
        std::map<std::pair<int, unsigned>, double> acc;
        for (const auto& cell : reference_accuracies()) {
          PipelineConfig c = config;
          c.class_mode = cell.class_mode;
          const auto report = run_two_fold(sessions, c, cell.channels);
          acc[{cell.class_mode, cell.channels.bits()}] = report.overall_accuracy;
          std::cout << cell.class_mode << "-class " << to_string(cell.channels) << ": " << num(report.overall_accuracy)
                    << " (reference " << num(cell.accuracy) << ", delta " << num(report.overall_accuracy - cell.accuracy)
                    << ")\n";
          if (!pl.out.empty()) {
            write_report(fs::path(pl.out) / (std::to_string(cell.class_mode) + "class_" +
                                              std::to_string(cell.channels.bits())),
                         report);
          }
        }
        bool all = true;
        for (const auto& check : check_reference_ordering(acc)) {
          std::cout << (check.holds ? "holds   " : "VIOLATED ") << check.description << '\n';
          all = all && check.holds;
        }
        return all ? 0 : 1;
      }
    } else if (selftest->parsed()) {
      const auto config = make_config(st);
      const auto channels = parse_channels(st.channels);
      const auto report = run_synthetic_selftest(config.rng_seed, config, channels);
      print_summary(report);
      if (!st.out.empty()) emit_report(st, report);
      return report.overall_accuracy >= 0.95 ? 0 : 1;
    }
  } catch (const ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
