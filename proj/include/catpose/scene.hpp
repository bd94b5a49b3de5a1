#pragma once

#include <string>
#include <vector>

#include "catpose/geometry.hpp"

namespace catpose {

/// One annotated object. The pose translation is metric (meters).
struct SceneObject {
  Pose pose;
  RelativeDims dims;
  double height_m = 1.0;
  bool symmetric = false;
  std::string category;

  /// Absolute cuboid extents in meters: (rx*h, h, rz*h).
  Vec3 metric_extents() const { return dims.extents() * height_m; }
  /// Same transform expressed for the unit-height model (translation / h).
  Pose relative_pose() const { return pose.with_translation(pose.translation() / height_m); }
};

struct Scene {
  CameraIntrinsics camera;
  std::vector<SceneObject> objects;
};

}  // namespace catpose
