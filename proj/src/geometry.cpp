#include "catpose/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "catpose/errors.hpp"

namespace catpose {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("focal lengths must be positive");
  if (width <= 0 || height <= 0) throw InvalidArgument("image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw InvalidArgument("principal point outside the image");
  }
}

double CameraIntrinsics::diagonal() const {
  return std::hypot(static_cast<double>(width), static_cast<double>(height));
}

Vec2 CameraIntrinsics::project(const Vec3& p) const {
  if (p.z() <= kDepthEpsilon) throw BehindCamera("point at or behind the camera plane");
  return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
}

namespace {

Quat canonical(Quat q) {
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

}  // namespace

Pose::Pose() : rotation_(Quat::Identity()), translation_(Vec3::Zero()) {}

Pose::Pose(const Quat& rotation, const Vec3& translation)
    : rotation_(canonical(rotation)), translation_(translation) {}

Pose::Pose(const Mat3& rotation, const Vec3& translation)
    : rotation_(canonical(Quat(rotation))), translation_(translation) {}

Vec3 Pose::apply(const Vec3& p) const { return rotation_ * p + translation_; }

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix();
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Pose pose_compose(const Pose& a, const Pose& b) {
  return Pose(a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation());
}

Pose pose_invert(const Pose& p) {
  const Quat inv = p.rotation().conjugate();
  return Pose(inv, -(inv * p.translation()));
}

double rotation_error(const Pose& a, const Pose& b) {
  return a.rotation().angularDistance(b.rotation());
}

Mat3 rotation_about_y(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitY()).toRotationMatrix();
}

void RelativeDims::validate() const {
  if (!std::isfinite(rx) || !std::isfinite(rz) || !(rx > 0.0) || !(rz > 0.0)) {
    throw InvalidArgument("relative dims must be finite and positive");
  }
}

double Rect::diagonal() const { return std::hypot(width(), height()); }

Keypoints2D Keypoints2D::all_valid(std::span<const Vec2> pts) {
  if (pts.size() != kNumVertices) throw InvalidArgument("expected 8 keypoints");
  Keypoints2D k;
  for (int i = 0; i < kNumVertices; ++i) {
    k.points[i] = pts[i];
    k.valid[i] = true;
    k.confidence[i] = 1.0;
  }
  return k;
}

int Keypoints2D::valid_count() const {
  return static_cast<int>(std::count(valid.begin(), valid.end(), true));
}

std::array<Vec3, kNumVertices> box_vertices(const Vec3& extents) {
  std::array<Vec3, kNumVertices> v;
  const Vec3 half = extents / 2.0;
  for (int i = 0; i < kNumVertices; ++i) {
    v[i] = Vec3((i & 1) ? half.x() : -half.x(), (i & 2) ? half.y() : -half.y(),
                (i & 4) ? half.z() : -half.z());
  }
  return v;
}

std::array<Vec3, kNumVertices> cuboid_vertices(const RelativeDims& dims) {
  dims.validate();
  return box_vertices(dims.extents());
}

std::array<Vec3, 8> OrientedBox::corners() const {
  auto v = box_vertices(extents);
  for (auto& p : v) p = pose.apply(p);
  return v;
}

OrientedBox rotate_about_own_y(const OrientedBox& box, double angle) {
  return {Pose(box.pose.rotation_matrix() * rotation_about_y(angle), box.pose.translation()),
          box.extents};
}

int vertex_index_from_signs(const Vec3& p) {
  return (p.x() > 0.0 ? 1 : 0) | (p.y() > 0.0 ? 2 : 0) | (p.z() > 0.0 ? 4 : 0);
}

std::vector<Vec2> project(std::span<const Vec3> points, const Pose& pose,
                          const CameraIntrinsics& camera) {
  const Mat3 r = pose.rotation_matrix();
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    out.push_back(camera.project(r * p + pose.translation()));
  }
  return out;
}

Rect bbox2d_from_points(std::span<const Vec2> pts) {
  if (pts.empty()) throw EmptyDetection("no valid keypoints");
  constexpr double inf = std::numeric_limits<double>::infinity();
  Rect r{inf, inf, -inf, -inf};
  for (const auto& p : pts) {
    r.u_min = std::min(r.u_min, p.x());
    r.v_min = std::min(r.v_min, p.y());
    r.u_max = std::max(r.u_max, p.x());
    r.v_max = std::max(r.v_max, p.y());
  }
  return r;
}

Rect bbox2d_from_keypoints(const Keypoints2D& kps) {
  std::vector<Vec2> pts;
  for (int i = 0; i < kNumVertices; ++i) {
    if (kps.valid[i]) pts.push_back(kps.points[i]);
  }
  return bbox2d_from_points(pts);
}

}  // namespace catpose
