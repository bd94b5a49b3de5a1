#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "catpose/decode.hpp"
#include "catpose/errors.hpp"
#include "catpose/geometry.hpp"

namespace catpose {

struct PnPConfig {
  int max_iters = 100;
  double initial_damping = 1e-3;
  double damping_up = 10.0;
  double damping_down = 0.1;
  double step_tolerance = 1e-10;
  double cost_tolerance = 1e-12;
  // Huber threshold in pixels; disabled when unset.
  std::optional<double> huber_px;
  // Restart from the canonical rotation grid when the DLT-seeded solve ends
  // above this RMS (pixels).
  double restart_rms_px = 8.0;

  void validate() const;
};

struct PnPResult {
  Pose pose;  // unit-height model frame
  double rms_px = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Solver failure. Carries the best state reached before the failure.
class PnPFailure : public NumericalFailure {
 public:
  PnPFailure(const std::string& what, PnPResult best) : NumericalFailure(what), best_(best) {}
  const PnPResult& best() const { return best_; }

 private:
  PnPResult best_;
};

/// Residual vector (2 per correspondence, scaled by sqrt(weight)) and its
/// Jacobian with respect to a 6-vector increment: a left-multiplied axis-angle
/// rotation followed by an additive translation.
struct Linearization {
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
};

Linearization pnp_linearize(const Pose& pose, std::span<const Correspondence> corr,
                            std::span<const Vec3> model, const CameraIntrinsics& camera);

/// Applies the increment used by the Jacobian above.
Pose apply_increment(const Pose& pose, const Eigen::Matrix<double, 6, 1>& delta);

/// Direct linear transform estimate, orthonormalized. Empty when fewer than six
/// distinct vertices are present or the estimate puts the model behind the camera.
std::optional<Pose> dlt_initialize(std::span<const Correspondence> corr,
                                   std::span<const Vec3> model, const CameraIntrinsics& camera);

/// Four front-facing starting poses (object up = image up, yaw 0/90/180/270 deg)
/// placed at a depth consistent with the 2D spread of the correspondences.
std::vector<Pose> canonical_initial_poses(std::span<const Correspondence> corr,
                                          std::span<const Vec3> model,
                                          const CameraIntrinsics& camera);

/// Dimension-aware Levenberg-Marquardt PnP on the unit-height cuboid `dims`.
PnPResult solve_pnp_lm(std::span<const Correspondence> corr, const RelativeDims& dims,
                       const CameraIntrinsics& camera, const PnPConfig& cfg = {});

/// Same problem, refined from a caller-supplied pose on an arbitrary model
/// (vertex indices refer to `model`).
PnPResult refine_pnp_lm(std::span<const Correspondence> corr, std::span<const Vec3> model,
                        const CameraIntrinsics& camera, const Pose& initial,
                        const PnPConfig& cfg = {});

struct LiftingResult {
  PnPResult result;
  RelativeDims implied_dims;
  std::array<Vec3, kNumVertices> camera_vertices;  // lifted, before box fitting
};

/// Keypoint lifting baseline: EPnP with the barycentric coordinates of a unit
/// cube held fixed for every vertex. Needs all eight keypoints. The returned
/// pose and box are normalized to unit height.
LiftingResult solve_keypoint_lifting(const Keypoints2D& kps, const CameraIntrinsics& camera);

/// Scales the unit-height solution to metric units given the object height.
OrientedBox resolve_scale(const Pose& relative_pose, const RelativeDims& dims, double height_m);

}  // namespace catpose
