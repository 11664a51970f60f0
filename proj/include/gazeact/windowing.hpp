#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazeact/core.hpp"
#include "gazeact/gaze_encoder.hpp"
#include "gazeact/parallel.hpp"

namespace gazeact {

struct WindowHistogram {
  double t_center = 0.0;
  std::vector<double> bins;
  bool empty = false;  // no symbols fell in the window; bins are uniform
};

struct TimeSpan {
  double t0 = 0.0;
  double t1 = 0.0;
};

// floor((span - window) / stride) + 1, 0 when the span is shorter than the window.
std::size_t window_count(const TimeSpan& span, double window, double stride);

// Sliding normalized histograms over windows [start, start + window) with
// starts t0, t0 + stride, ... while the window fits in the span. `stream`
// must be sorted by time.
std::vector<WindowHistogram> window_histogram(std::span<const TimedSymbol> stream, std::size_t n_bins,
                                              double window, double stride, const TimeSpan& span,
                                              Execution exec = Execution::kParallel);

enum class Channel : unsigned { kEye = 1u, kEgo = 2u, kVisual = 4u };

class ChannelSet {
 public:
  constexpr ChannelSet() = default;
  constexpr explicit ChannelSet(unsigned bits) : bits_(bits) {}
  static constexpr ChannelSet all() { return ChannelSet(7u); }

  constexpr bool has(Channel c) const { return (bits_ & static_cast<unsigned>(c)) != 0; }
  constexpr ChannelSet with(Channel c) const { return ChannelSet(bits_ | static_cast<unsigned>(c)); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr unsigned bits() const { return bits_; }
  friend constexpr bool operator==(ChannelSet, ChannelSet) = default;

 private:
  unsigned bits_ = 0;
};

// "eye,ego,visual" in any order/subset; throws ParameterError.
ChannelSet parse_channels(std::string_view text);
std::string to_string(ChannelSet channels);

std::size_t feature_dimension(ChannelSet channels, std::size_t n_words = 15);

struct WindowFeature {
  double t_center = 0.0;
  ChannelSet channels;
  std::vector<double> values;  // eye | ego | visual blocks, selected ones only
  bool flagged = false;        // some block came from an empty window
};

struct ChannelWindows {
  std::optional<WindowHistogram> eye;
  std::optional<WindowHistogram> ego;
  std::optional<WindowHistogram> visual;
};

// Concatenates the selected blocks in fixed eye, ego, visual order. Throws
// AlignmentError when block centers differ by more than stride / 2.
WindowFeature fuse(const ChannelWindows& parts, ChannelSet channels, double stride);
WindowFeature fuse(const WindowHistogram& eye, const WindowHistogram& ego, const WindowHistogram& visual,
                   double stride);

struct LabeledWindow {
  WindowFeature feature;
  ActivityLabel label = ActivityLabel::kVoid;
  std::string subject_id;
  int session_index = 0;
};

struct LabelingResult {
  std::vector<LabeledWindow> windows;
  std::size_t dropped_unlabeled = 0;
  std::size_t dropped_void = 0;
};

// Majority-duration label of each window [t_center - window/2, t_center + window/2).
// Ties go to the lower activity index. Void-majority windows are dropped in
// 5-class mode, windows with no label coverage always.
LabelingResult label_windows(std::span<const WindowFeature> windows, const LabelTrack& labels,
                             int class_mode, double window_seconds, const std::string& subject_id = {},
                             int session_index = 0);

// `t_center,subject,session,label,f0..f{d-1}`
void write_feature_csv(std::ostream& out, std::span<const LabeledWindow> windows);
std::vector<LabeledWindow> read_feature_csv(std::istream& in);

}  // namespace gazeact
