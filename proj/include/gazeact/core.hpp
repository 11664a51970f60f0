#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gazeact {

enum class ActivityLabel { kRead = 0, kWatchVideo, kWrite, kCopyText, kBrowse, kVoid };

inline constexpr std::size_t kActivityCount = 6;

// CSV spelling: read, watch_video, write, copy_text, browse, void.
std::string_view to_string(ActivityLabel label);
ActivityLabel parse_activity(std::string_view text);  // throws ParseError

// Ordered class list of a class mode: the five activities, plus Void in mode 6.
std::vector<ActivityLabel> classes_for_mode(int class_mode);

struct GazeSample {
  double t = 0.0;  // seconds
  double x = 0.0;  // pixels
  double y = 0.0;
  bool valid = true;

  friend bool operator==(const GazeSample&, const GazeSample&) = default;
};

// Reads a `t,x,y,valid` CSV. Rows are sorted by time (with a warning when the
// file was out of order), duplicate timestamps are rejected, invalid runs
// bracketed by valid samples at most max_gap_seconds apart are linearly
// interpolated and marked valid; longer runs hold the last valid value and
// stay flagged.
std::vector<GazeSample> parse_gaze_log(const std::filesystem::path& path, double sample_rate);
std::vector<GazeSample> parse_gaze_csv(std::istream& in, double sample_rate);
void write_gaze_csv(std::ostream& out, std::span<const GazeSample> samples);

inline constexpr double kMaxInterpolatedGapSeconds = 0.2;

// Linear resampling onto a uniform grid. The grid starts at the first sample,
// or at the first multiple of 1/target_rate past `grid_origin` when given.
std::vector<GazeSample> resample_gaze(std::span<const GazeSample> samples, double target_rate,
                                      std::optional<double> grid_origin = std::nullopt);

struct LabelSegment {
  double t_start = 0.0;
  double t_end = 0.0;
  ActivityLabel label = ActivityLabel::kVoid;
};

struct LabelTrack {
  std::vector<LabelSegment> segments;  // sorted by t_start
};

LabelTrack parse_label_csv(std::istream& in);
LabelTrack load_labels(const std::filesystem::path& path);
void write_label_csv(std::ostream& out, const LabelTrack& labels);

// Global image motion between frame i and i+1. n_points == 0 marks a pair
// where no track survived; dx = dy = 0 then.
struct FlowEstimate {
  double dx = 0.0;
  double dy = 0.0;
  std::size_t n_points = 0;

  bool flagged() const { return n_points == 0; }
  friend bool operator==(const FlowEstimate&, const FlowEstimate&) = default;
};

// `frame_index,dx,dy,n_points`
std::vector<FlowEstimate> parse_flow_csv(std::istream& in);
std::vector<FlowEstimate> load_flows(const std::filesystem::path& path);
void write_flow_csv(std::ostream& out, std::span<const FlowEstimate> flows);

// Row-major frames x dim matrix of float embeddings.
struct EmbeddingMatrix {
  std::size_t dim = 0;
  std::vector<float> values;
  std::string comment;  // free-form provenance carried in the file header

  std::size_t rows() const { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  std::span<float> row(std::size_t i) { return {values.data() + i * dim, dim}; }
};

inline constexpr std::size_t kFc7Dim = 4096;

// Binary layout, all little-endian:
//   "GAEM" | u32 version (1) | u32 frame count | u32 dim | u32 comment bytes |
//   comment | frame-major f32 values
EmbeddingMatrix read_embeddings(std::istream& in);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void write_embeddings(std::ostream& out, const EmbeddingMatrix& embeddings);
void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& embeddings);

// One recording session. Motion comes either from frame image files or from a
// precomputed flow sequence (one entry per consecutive frame pair).
struct SessionRecord {
  std::string subject_id;
  int session_index = 1;
  std::vector<GazeSample> gaze;
  std::vector<std::filesystem::path> frame_files;
  std::vector<FlowEstimate> flows;
  std::optional<EmbeddingMatrix> embeddings;
  LabelTrack labels;
  double sample_rate = 30.0;  // frame clock, Hz; frame i is at i / sample_rate

  std::size_t frame_count() const;
};

// Empty result means the session is usable.
std::vector<std::string> validate_session(const SessionRecord& session,
                                          std::size_t expected_dim = kFc7Dim);

}  // namespace gazeact
