#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gazeact/config.hpp"
#include "gazeact/core.hpp"
#include "gazeact/forest.hpp"
#include "gazeact/gaze_encoder.hpp"
#include "gazeact/vocab.hpp"
#include "gazeact/windowing.hpp"

namespace gazeact {

struct SessionKey {
  std::string subject;
  int session = 0;
  friend auto operator<=>(const SessionKey&, const SessionKey&) = default;
};

struct FoldSpec {
  std::vector<SessionKey> train_sessions;
  std::vector<SessionKey> test_sessions;

  void validate() const;  // disjoint, both non-empty; throws ProtocolError
};

struct ConfusionMatrix {
  std::vector<std::vector<std::size_t>> counts;   // rows = truth
  std::vector<std::vector<double>> normalized;    // row-normalized by support
  std::vector<bool> zero_support;
};

ConfusionMatrix confusion_matrix(std::span<const ActivityLabel> truth, std::span<const ActivityLabel> predicted,
                                 std::span<const ActivityLabel> classes);

// Non-interpolated AP per class (precision at the score of each positive,
// tied scores grouped), averaged over classes present in `truth`.
// scores[i][c] is window i's vote fraction for classes[c].
double mean_average_precision(std::span<const std::vector<double>> scores, std::span<const std::size_t> truth,
                              std::size_t n_classes);
double average_precision(std::span<const double> scores, std::span<const bool> positive);

struct FoldResult {
  FoldSpec spec;
  double accuracy = 0.0;
  double mean_average_precision = 0.0;
  double oob_error = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  QuantThresholds gaze_thresholds;
  QuantThresholds motion_thresholds;
  ConfusionMatrix confusion;
  std::map<std::string, double> per_subject_accuracy;
};

struct EvalReport {
  std::vector<ActivityLabel> classes;
  ChannelSet channels;
  std::size_t feature_dim = 0;
  int class_mode = 6;
  std::vector<std::vector<double>> confusion;  // fold-averaged normalized matrix
  std::vector<bool> zero_support;
  std::vector<double> per_class_accuracy;
  double overall_accuracy = 0.0;
  std::map<std::string, double> per_subject_accuracy;
  double mean_average_precision = 0.0;
  std::vector<FoldResult> folds;
};

std::string report_to_json(const EvalReport& report);
void write_confusion_csv(std::ostream& out, const EvalReport& report);
// Writes report.json and confusion.csv into `dir`.
void write_report(const std::filesystem::path& dir, const EvalReport& report);

// One session directory: gaze.csv, labels.csv, frames/ or flows.csv, and
// embeddings.bin (required when need_embeddings). Throws ParseError when the
// session fails validation.
SessionRecord load_session(const std::filesystem::path& dir, const std::string& subject, int session,
                           const PipelineConfig& config, bool need_embeddings);

// <root>/<subject>/<session>/{gaze.csv, labels.csv, frames/ | flows.csv, embeddings.bin}
std::vector<SessionRecord> load_dataset(const std::filesystem::path& root, const PipelineConfig& config,
                                        bool need_embeddings);

// Channel features of one session, independent of any training data.
struct SessionSignals {
  SessionKey key;
  AxisCoefficients gaze;
  std::vector<double> gaze_times;
  AxisCoefficients motion;
  std::vector<double> motion_times;
  const EmbeddingMatrix* embeddings = nullptr;
  std::vector<double> frame_times;
  const LabelTrack* labels = nullptr;
};

SessionSignals prepare_signals(const SessionRecord& session, const PipelineConfig& config, ChannelSet channels);

// Models fit on the training fold; everything needed to featurize any session.
struct FittedFeaturizer {
  QuantThresholds gaze_thresholds;
  QuantThresholds motion_thresholds;
  VocabModel vocab;
  std::vector<SessionKey> fitted_on;
};

FittedFeaturizer fit_featurizer(std::span<const SessionSignals> training, const PipelineConfig& config,
                                ChannelSet channels);

LabelingResult featurize_session(const SessionSignals& signals, const FittedFeaturizer& featurizer,
                                 const PipelineConfig& config, ChannelSet channels);

// Throws ProtocolError when any training window comes from a test session.
void check_provenance(std::span<const LabeledWindow> training, const FoldSpec& fold);

Dataset to_dataset(std::span<const LabeledWindow> windows, std::span<const ActivityLabel> classes);
std::vector<std::string> class_names(std::span<const ActivityLabel> classes);
ForestParams forest_params(const PipelineConfig& config);

FoldResult run_fold(std::span<const SessionSignals> signals, const FoldSpec& fold, const PipelineConfig& config,
                    ChannelSet channels);

// Session 1 -> session 2 and the swap, averaged.
EvalReport run_two_fold(std::span<const SessionRecord> sessions, const PipelineConfig& config, ChannelSet channels);

// Single-fold report (the `evaluate` command).
EvalReport evaluate_model(const ForestModel& model, std::span<const LabeledWindow> test, int class_mode,
                          ChannelSet channels);

// Published UTokyo accuracies for the combined, eye+ego and visual columns
// and their ordering checks.
struct ReferenceCell {
  int class_mode = 0;
  ChannelSet channels;
  double accuracy = 0.0;
};

std::span<const ReferenceCell> reference_accuracies();
std::optional<double> reference_accuracy(int class_mode, ChannelSet channels);

struct OrderingCheck {
  std::string description;
  bool holds = false;
};

// acc(mode, channels) lookup over the six reference cells.
std::vector<OrderingCheck> check_reference_ordering(
    const std::map<std::pair<int, unsigned>, double>& accuracies);

}  // namespace gazeact
