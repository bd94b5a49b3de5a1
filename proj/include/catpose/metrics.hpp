#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "catpose/geometry.hpp"

namespace catpose {

inline constexpr int kSymmetricRotations = 100;
inline constexpr double kIoUThreshold = 0.5;
inline constexpr double kAzimuthThresholdDeg = 15.0;
inline constexpr double kElevationThresholdDeg = 10.0;

/// Volume of the intersection of two oriented boxes (convex polytope clipping).
double intersection_volume(const OrientedBox& a, const OrientedBox& b);

double iou3d(const OrientedBox& a, const OrientedBox& b);

/// One evaluated instance. A record has a ground truth, a prediction, or both
/// (matched). Unmatched predictions are false positives, unmatched ground truths
/// are misses.
struct EvalRecord {
  int scene = 0;
  int gt_index = -1;
  double score = 0.0;
  bool has_prediction = false;
  bool has_gt = false;
  bool matched = false;
  bool symmetric = false;
  double iou3d = 0.0;
  double pixel_error = 0.0;
  bool pixel_valid = true;  // false when a box vertex projects behind the camera
  double azimuth_err = 0.0;
  double elevation_err = 0.0;
  double dim_rel_err = 0.0;
  double rotation_err = 0.0;

  bool operator==(const EvalRecord&) const = default;
};

enum class MetricKey { kIoU3D, kAzimuth, kElevation };

std::string_view metric_key_name(MetricKey k);

/// Whether a matched record passes `threshold` under `key` (IoU >= threshold,
/// angular errors <= threshold).
bool passes(const EvalRecord& r, MetricKey key, double threshold);

/// Detection AP: predictions ranked by score (stable), true positive when matched
/// and passing; all-point interpolated precision over recall against the ground
/// truth count. Empty when there is no ground truth.
std::optional<double> average_precision(std::span<const EvalRecord> records, MetricKey key,
                                        double threshold);

/// Mean over the eight vertices of the pixel distance, divided by the image diagonal.
double pixel_projection_error(const Keypoints2D& pred, const Keypoints2D& gt,
                              const CameraIntrinsics& camera);
double pixel_projection_error(const OrientedBox& pred, const OrientedBox& gt,
                              const CameraIntrinsics& camera);

struct ViewpointError {
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
};

/// Camera direction in the object frame, d = -R^T t / |t|.
Vec3 viewing_direction(const Pose& pose);
double azimuth_deg(const Pose& pose);
double elevation_deg(const Pose& pose);

/// Azimuth error wrapped to [0, 180] degrees and absolute elevation error.
ViewpointError viewpoint_errors(const Pose& pred, const Pose& gt);

enum class Best { kMax, kMin };

/// Evaluates `metric` on the prediction rotated about its y axis by 2*pi*k/n,
/// k = 0..n-1, and keeps the best value.
double symmetric_best(const std::function<double(const OrientedBox&)>& metric,
                      const OrientedBox& pred, Best best, int n = kSymmetricRotations);

/// Mean over instances and over (rx, rz) of |pred - gt| / gt. Zero for no instances.
double mean_relative_dim_error(std::span<const RelativeDims> preds,
                               std::span<const RelativeDims> gts);

/// Greedy one-to-one assignment in descending score order: each prediction takes
/// the nearest unassigned ground truth whose center lies within that ground
/// truth's gate radius. Returns, per prediction, the matched ground-truth index.
std::vector<std::optional<int>> greedy_match(std::span<const double> scores,
                                             std::span<const Vec2> pred_centers,
                                             std::span<const Vec2> gt_centers,
                                             std::span<const double> gt_gates);

}  // namespace catpose
