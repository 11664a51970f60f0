#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "gazeact/config.hpp"
#include "gazeact/core.hpp"
#include "gazeact/gaze_encoder.hpp"
#include "gazeact/image.hpp"
#include "gazeact/parallel.hpp"

namespace gazeact {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

enum class TrackStatus { kOk, kLost, kRejected };

struct TrackedPoint {
  Point2 origin;
  Point2 destination;
  double fb_error = 0.0;
  TrackStatus status = TrackStatus::kLost;

  double dx() const { return destination.x - origin.x; }
  double dy() const { return destination.y - origin.y; }
};

struct CornerParams {
  std::size_t max_corners = 200;
  double quality = 0.01;
  double min_distance = 8.0;
};

struct LkParams {
  std::size_t window = 15;  // odd, pixels
  std::size_t levels = 3;
  std::size_t max_iterations = 10;
  double epsilon = 0.03;  // pixels
  double min_eigen = 1e-6;  // per-pixel structure tensor floor
};

CornerParams corner_params(const PipelineConfig& config);
LkParams lk_params(const PipelineConfig& config);

// Shi-Tomasi corners: minimum eigenvalue of the 3x3-summed structure tensor,
// local maxima above quality * best, strongest first, greedily spaced.
std::vector<Point2> detect_corners(const GrayImage& frame, const CornerParams& params,
                                   Execution exec = Execution::kParallel);

// Gaussian pyramid with per-level central-difference gradients.
class ImagePyramid {
 public:
  ImagePyramid(const GrayImage& base, std::size_t levels);

  std::size_t levels() const { return images_.size(); }
  const GrayImage& image(std::size_t level) const { return images_[level]; }
  const GrayImage& grad_x(std::size_t level) const { return grad_x_[level]; }
  const GrayImage& grad_y(std::size_t level) const { return grad_y_[level]; }

 private:
  std::vector<GrayImage> images_;
  std::vector<GrayImage> grad_x_;
  std::vector<GrayImage> grad_y_;
};

// Pyramidal iterative Lucas-Kanade. Points whose level-0 window leaves a frame
// or whose structure tensor is near singular come back kLost.
std::vector<TrackedPoint> track_lk(const ImagePyramid& a, const ImagePyramid& b,
                                   std::span<const Point2> points, const LkParams& params,
                                   Execution exec = Execution::kParallel);
std::vector<TrackedPoint> track_lk(const GrayImage& a, const GrayImage& b,
                                   std::span<const Point2> points, const LkParams& params,
                                   Execution exec = Execution::kParallel);

// Re-tracks every kOk point from its destination back into frame a; points
// whose round trip misses the origin by more than `threshold` become
// kRejected. Flows of survivors are untouched.
std::vector<TrackedPoint> fb_filter(std::span<const TrackedPoint> forward, const ImagePyramid& a,
                                    const ImagePyramid& b, double threshold, const LkParams& params,
                                    Execution exec = Execution::kParallel);
std::vector<TrackedPoint> fb_filter(std::span<const TrackedPoint> forward, const GrayImage& a,
                                    const GrayImage& b, double threshold, const LkParams& params,
                                    Execution exec = Execution::kParallel);

// Component-wise median over kOk points; throws NoFlowError when none.
FlowEstimate median_flow(std::span<const TrackedPoint> points);

// Corners -> forward LK -> FB check -> median, for one frame pair. Pairs with
// no survivor give (0, 0) with n_points = 0.
FlowEstimate estimate_pair_flow(const GrayImage& a, const GrayImage& b, const PipelineConfig& config,
                                Execution exec = Execution::kSerial);

// One estimate per consecutive pair. Pairs run concurrently under kParallel.
std::vector<FlowEstimate> compute_flows(std::span<const GrayImage> frames, const PipelineConfig& config,
                                        Execution exec = Execution::kParallel);
std::vector<FlowEstimate> compute_flows(std::span<const std::filesystem::path> frame_files,
                                        const PipelineConfig& config,
                                        Execution exec = Execution::kParallel);

// Median filter and (unless motion_use_wavelet is off) Haar CWT of the flow.
AxisCoefficients analyze_flows(std::span<const FlowEstimate> flows, const PipelineConfig& config);

std::optional<QuantThresholds> configured_motion_thresholds(const PipelineConfig& config);

std::vector<MotionSymbol> encode_motion_channel(std::span<const FlowEstimate> flows,
                                                const PipelineConfig& config,
                                                const QuantThresholds& tau);
std::vector<MotionSymbol> encode_motion_channel(std::span<const GrayImage> frames,
                                                const PipelineConfig& config,
                                                const QuantThresholds& tau);

}  // namespace gazeact
