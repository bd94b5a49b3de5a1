#pragma once

#include <optional>

#include "catpose/geometry.hpp"

namespace catpose {

/// A decoded object. Coordinates are input-resolution pixels.
struct Detection {
  Vec2 center = Vec2::Zero();
  double score = 0.0;
  Rect bbox2d;
  Keypoints2D kps_disp;
  Keypoints2D kps_heat;
  RelativeDims rel_dims;
  // Unit-height model frame; translation is only known up to scale.
  std::optional<Pose> pose;
};

}  // namespace catpose
