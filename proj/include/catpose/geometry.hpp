#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace catpose {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr int kNumVertices = 8;
inline constexpr double kDepthEpsilon = 1e-9;

/// Pinhole camera. Maps camera-frame points to pixels.
struct CameraIntrinsics {
  double fx = 500.0;
  double fy = 500.0;
  double cx = 256.0;
  double cy = 256.0;
  int width = 512;
  int height = 512;

  /// Throws InvalidArgument when focal lengths or principal point are out of range.
  void validate() const;
  double diagonal() const;
  Vec2 project(const Vec3& camera_point) const;
};

/// Rigid transform from the object frame to the camera frame.
///
/// The rotation is kept as a unit quaternion with non-negative scalar part, so
/// two poses describing the same transform compare equal component-wise.
class Pose {
 public:
  Pose();
  Pose(const Quat& rotation, const Vec3& translation);
  Pose(const Mat3& rotation, const Vec3& translation);

  static Pose identity() { return Pose(); }

  const Quat& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Mat3 rotation_matrix() const { return rotation_.toRotationMatrix(); }

  Vec3 apply(const Vec3& object_point) const;
  Eigen::Matrix4d matrix() const;

  Pose with_translation(const Vec3& t) const { return Pose(rotation_, t); }

 private:
  Quat rotation_;
  Vec3 translation_;
};

Pose pose_compose(const Pose& a, const Pose& b);
Pose pose_invert(const Pose& p);

/// Geodesic angle between the rotations of two poses, in radians.
double rotation_error(const Pose& a, const Pose& b);

/// Rotation by `angle` radians about the object up (y) axis.
Mat3 rotation_about_y(double angle);

/// Cuboid extents normalized by the up-axis extent: (x/y, 1, z/y).
struct RelativeDims {
  double rx = 1.0;
  double rz = 1.0;

  void validate() const;
  Vec3 extents() const { return {rx, 1.0, rz}; }
};

struct Cuboid {
  RelativeDims dims;
  std::optional<double> height_m;
};

/// Metric oriented box: pose (object frame -> camera) and absolute extents.
struct OrientedBox {
  Pose pose;
  Vec3 extents = Vec3::Ones();

  double volume() const { return extents.prod(); }
  std::array<Vec3, 8> corners() const;
};

/// 2D axis-aligned rectangle in pixels. Not clamped to the image.
struct Rect {
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;

  double width() const { return u_max - u_min; }
  double height() const { return v_max - v_min; }
  double diagonal() const;
  Vec2 center() const { return {(u_min + u_max) / 2.0, (v_min + v_max) / 2.0}; }
  double area() const { return width() * height(); }
  Rect expanded(double margin) const {
    return {u_min - margin, v_min - margin, u_max + margin, v_max + margin};
  }
  bool contains(const Vec2& p) const {
    return p.x() >= u_min && p.x() <= u_max && p.y() >= v_min && p.y() <= v_max;
  }
};

struct Keypoints2D {
  Keypoints2D() {
    for (auto& p : points) p.setZero();
  }

  std::array<Vec2, kNumVertices> points;
  std::array<bool, kNumVertices> valid{};
  std::array<double, kNumVertices> confidence{};

  static Keypoints2D all_valid(std::span<const Vec2> pts);
  int valid_count() const;
};

/// Eight cuboid vertices for the given extents, centred at the origin.
///
/// Vertex i has sign bits bit0 -> x, bit1 -> y, bit2 -> z (set = positive
/// half-extent), so vertex 0 is (-x,-y,-z)/2 and vertex 7 is (+x,+y,+z)/2.
std::array<Vec3, kNumVertices> box_vertices(const Vec3& extents);
std::array<Vec3, kNumVertices> cuboid_vertices(const RelativeDims& dims);

/// Rotates a box about its own y axis by `angle` radians.
OrientedBox rotate_about_own_y(const OrientedBox& box, double angle);

/// Inverse of the vertex sign convention: index from the signs of a point.
int vertex_index_from_signs(const Vec3& p);

std::vector<Vec2> project(std::span<const Vec3> points, const Pose& pose,
                          const CameraIntrinsics& camera);

Rect bbox2d_from_keypoints(const Keypoints2D& kps);
Rect bbox2d_from_points(std::span<const Vec2> pts);

}  // namespace catpose
