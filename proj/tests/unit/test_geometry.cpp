#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "catpose/errors.hpp"
#include "catpose/geometry.hpp"
#include "generators.hpp"

using namespace catpose;
using catpose::testing::Gen;

namespace {

// Rotation matrix written out from the quaternion components.
void quat_to_rows(const Quat& q, double r[3][3]) {
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  r[0][0] = 1 - 2 * (y * y + z * z);
  r[0][1] = 2 * (x * y - w * z);
  r[0][2] = 2 * (x * z + w * y);
  r[1][0] = 2 * (x * y + w * z);
  r[1][1] = 1 - 2 * (x * x + z * z);
  r[1][2] = 2 * (y * z - w * x);
  r[2][0] = 2 * (x * z - w * y);
  r[2][1] = 2 * (y * z + w * x);
  r[2][2] = 1 - 2 * (x * x + y * y);
}

Vec2 project_oracle(const Vec3& p, const Pose& pose, const CameraIntrinsics& k) {
  double r[3][3];
  quat_to_rows(pose.rotation(), r);
  double c[3];
  for (int i = 0; i < 3; ++i) {
    c[i] = pose.translation()[i];
    for (int j = 0; j < 3; ++j) c[i] += r[i][j] * p[j];
  }
  return {k.fx * c[0] / c[2] + k.cx, k.fy * c[1] / c[2] + k.cy};
}

Eigen::Matrix4d homogeneous(const Pose& p) {
  double r[3][3];
  quat_to_rows(p.rotation(), r);
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m(i, j) = r[i][j];
    m(i, 3) = p.translation()[i];
  }
  return m;
}

Keypoints2D from_points(const std::vector<Vec2>& pts) {
  Keypoints2D k;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    k.points[i] = pts[i];
    k.valid[i] = true;
  }
  return k;
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("cuboid vertices follow the sign-bit convention") {
    const auto unit = cuboid_vertices({1.0, 1.0});
    CHECK(unit[0].isApprox(Vec3(-0.5, -0.5, -0.5)));
    CHECK(unit[7].isApprox(Vec3(0.5, 0.5, 0.5)));
    CHECK(unit[1].isApprox(Vec3(0.5, -0.5, -0.5)));
    CHECK(unit[2].isApprox(Vec3(-0.5, 0.5, -0.5)));
    CHECK(unit[4].isApprox(Vec3(-0.5, -0.5, 0.5)));

    const auto cereal = cuboid_vertices({0.75, 0.25});
    CHECK(cereal[7].x() - cereal[0].x() == doctest::Approx(0.75));
    CHECK(cereal[7].z() - cereal[0].z() == doctest::Approx(0.25));

    const auto book = cuboid_vertices({11.0, 8.5});
    CHECK(book[7].isApprox(Vec3(5.5, 0.5, 4.25)));
  }

  TEST_CASE("cuboid vertices reject invalid dims") {
    CHECK_THROWS_AS(cuboid_vertices({0.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(cuboid_vertices({1.0, -2.0}), InvalidArgument);
    CHECK_THROWS_AS(cuboid_vertices({std::nan(""), 1.0}), InvalidArgument);
    CHECK_THROWS_AS(cuboid_vertices({INFINITY, 1.0}), InvalidArgument);
  }

  TEST_CASE("vertex centroid is the origin and indices round trip") {
    Gen g(11);
    for (int t = 0; t < 100; ++t) {
      const auto v = cuboid_vertices(g.dims(0.05, 20.0));
      Vec3 c = Vec3::Zero();
      for (int k = 0; k < kNumVertices; ++k) {
        c += v[k];
        CHECK(vertex_index_from_signs(v[k]) == k);
      }
      CHECK(c.norm() < 1e-12);
    }
  }

  TEST_CASE("projection examples") {
    const CameraIntrinsics k;
    const std::vector<Vec3> pts{{0, 0, 1}, {1, 0, 2}};
    const auto uv = project(pts, Pose::identity(), k);
    CHECK(uv[0].isApprox(Vec2(256, 256)));
    CHECK(uv[1].isApprox(Vec2(506, 256)));
    const std::vector<Vec3> behind{{0, 0, 0}};
    CHECK_THROWS_AS(project(behind, Pose::identity(), k), BehindCamera);
    const std::vector<Vec3> negative{{0, 0, -1}};
    CHECK_THROWS_AS(project(negative, Pose::identity(), k), BehindCamera);
  }

  TEST_CASE("projection matches the matrix-multiply oracle") {
    Gen g(12);
    const CameraIntrinsics k{480.0, 520.0, 250.0, 260.0, 512, 512};
    for (int t = 0; t < 200; ++t) {
      const Pose pose = g.pose_in_front();
      const auto v = cuboid_vertices(g.dims());
      const auto uv = project(v, pose, k);
      for (int i = 0; i < kNumVertices; ++i) {
        CHECK((uv[i] - project_oracle(v[i], pose, k)).norm() < 1e-9);
      }
    }
  }

  TEST_CASE("projection is invariant to joint scaling of model and translation") {
    Gen g(13);
    const CameraIntrinsics k;
    for (int t = 0; t < 100; ++t) {
      const Pose pose = g.pose_in_front();
      const double s = std::exp(g.uniform(-3.0, 3.0));
      auto v = cuboid_vertices(g.dims());
      const auto a = project(v, pose, k);
      for (auto& p : v) p *= s;
      const auto b = project(v, pose.with_translation(pose.translation() * s), k);
      for (int i = 0; i < kNumVertices; ++i) CHECK((a[i] - b[i]).norm() < 1e-9);
    }
  }

  TEST_CASE("bbox from keypoints") {
    const Rect r = bbox2d_from_keypoints(from_points({{10, 10}, {20, 5}, {15, 30}}));
    CHECK(r.u_min == 10);
    CHECK(r.v_min == 5);
    CHECK(r.u_max == 20);
    CHECK(r.v_max == 30);

    const Rect single = bbox2d_from_keypoints(from_points({{7.5, 3.25}}));
    CHECK(single.u_min == 7.5);
    CHECK(single.u_max == 7.5);
    CHECK(single.v_min == 3.25);
    CHECK(single.v_max == 3.25);

    CHECK_THROWS_AS(bbox2d_from_keypoints(Keypoints2D{}), EmptyDetection);

    Keypoints2D partial = from_points({{1, 1}, {100, 100}});
    partial.valid[1] = false;
    const Rect p = bbox2d_from_keypoints(partial);
    CHECK(p.u_max == 1);
  }

  TEST_CASE("bbox of a centered unit cube matches brute force over its vertices") {
    const CameraIntrinsics k;
    const Pose pose(Quat::Identity(), Vec3(0, 0, 4));
    const auto uv = project(cuboid_vertices({1, 1}), pose, k);
    const Rect r = bbox2d_from_points(uv);
    double umin = 1e9, umax = -1e9, vmin = 1e9, vmax = -1e9;
    for (const auto& p : uv) {
      umin = std::min(umin, p.x());
      umax = std::max(umax, p.x());
      vmin = std::min(vmin, p.y());
      vmax = std::max(vmax, p.y());
    }
    CHECK(r.u_min == umin);
    CHECK(r.u_max == umax);
    CHECK(r.v_min == vmin);
    CHECK(r.v_max == vmax);
    CHECK(r.center().isApprox(Vec2(256, 256)));
    CHECK(r.width() == doctest::Approx(r.height()));
    // Nearest face at z = 3.5 sets the extent: 500 * 0.5 / 3.5.
    CHECK(r.u_max == doctest::Approx(256 + 500.0 * 0.5 / 3.5));
  }

  TEST_CASE("bbox is permutation invariant") {
    Gen g(14);
    for (int t = 0; t < 100; ++t) {
      std::vector<Vec2> pts;
      const int n = g.integer(1, 8);
      for (int i = 0; i < n; ++i) pts.emplace_back(g.uniform(-100, 600), g.uniform(-100, 600));
      const Rect a = bbox2d_from_points(pts);
      std::shuffle(pts.begin(), pts.end(), g.engine());
      const Rect b = bbox2d_from_keypoints(from_points(pts));
      CHECK(a.u_min == b.u_min);
      CHECK(a.v_min == b.v_min);
      CHECK(a.u_max == b.u_max);
      CHECK(a.v_max == b.v_max);
    }
  }

  TEST_CASE("compose and invert") {
    const Pose id = pose_invert(Pose::identity());
    CHECK(id.rotation().w() == doctest::Approx(1.0));
    CHECK(id.translation().norm() < 1e-15);

    Gen g(15);
    for (int t = 0; t < 200; ++t) {
      const Pose p = g.pose_in_front();
      const Pose q = g.pose_in_front();
      const Pose e1 = pose_compose(p, pose_invert(p));
      const Pose e2 = pose_compose(pose_invert(p), p);
      CHECK((e1.matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((e2.matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
      const Eigen::Matrix4d oracle = homogeneous(p) * homogeneous(q);
      CHECK((pose_compose(p, q).matrix() - oracle).cwiseAbs().maxCoeff() < 1e-9);
      const Vec3 x(g.uniform(-1, 1), g.uniform(-1, 1), g.uniform(-1, 1));
      CHECK((pose_compose(p, q).apply(x) - p.apply(q.apply(x))).norm() < 1e-9);
    }
  }

  TEST_CASE("quaternions are unit and sign-canonical") {
    Gen g(16);
    for (int t = 0; t < 1000; ++t) {
      const Quat q = g.rotation();
      const Pose p(q, Vec3::Zero());
      CHECK(std::abs(p.rotation().norm() - 1.0) < 1e-9);
      CHECK(p.rotation().w() >= 0.0);
      const Pose neg(Quat(-q.w(), -q.x(), -q.y(), -q.z()), Vec3::Zero());
      CHECK(neg.rotation().coeffs() == p.rotation().coeffs());
      const Mat3 m = p.rotation_matrix();
      const Pose back(m, Vec3::Zero());
      CHECK((back.rotation_matrix() - m).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  TEST_CASE("rotation error and rotation about y") {
    CHECK(rotation_error(Pose::identity(), Pose::identity()) == doctest::Approx(0.0));
    const Pose r(rotation_about_y(0.7), Vec3::Zero());
    CHECK(rotation_error(Pose::identity(), r) == doctest::Approx(0.7));
    CHECK((rotation_about_y(0.3) * Vec3(0, 1, 0) - Vec3(0, 1, 0)).norm() < 1e-15);
  }

  TEST_CASE("camera validation") {
    CHECK_NOTHROW(CameraIntrinsics{}.validate());
    CHECK_THROWS_AS((CameraIntrinsics{0.0, 500, 256, 256, 512, 512}.validate()), InvalidArgument);
    CHECK_THROWS_AS((CameraIntrinsics{500, 500, 512, 256, 512, 512}.validate()), InvalidArgument);
    CHECK_THROWS_AS((CameraIntrinsics{500, 500, 256, -1, 512, 512}.validate()), InvalidArgument);
    CHECK(CameraIntrinsics{}.diagonal() == doctest::Approx(std::sqrt(2.0) * 512));
  }
}
