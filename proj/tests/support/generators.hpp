#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "catpose/decode.hpp"
#include "catpose/geometry.hpp"
#include "catpose/tensor.hpp"

namespace catpose::testing {

/// Small hand-rolled generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal(double sigma) { return std::normal_distribution<double>(0.0, sigma)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

  Quat rotation() {
    Eigen::Vector4d q(normal(1.0), normal(1.0), normal(1.0), normal(1.0));
    q.normalize();
    return Quat(q[0], q[1], q[2], q[3]);
  }

  Vec3 unit_vector() {
    Vec3 v(normal(1.0), normal(1.0), normal(1.0));
    return v.normalized();
  }

  RelativeDims dims(double lo = 0.3, double hi = 2.5) {
    return {std::exp(uniform(std::log(lo), std::log(hi))), std::exp(uniform(std::log(lo), std::log(hi)))};
  }

  /// Unit-height model pose whose cuboid (dims <= 2.5) stays well in front of the camera.
  Pose pose_in_front(double z_lo = 4.0, double z_hi = 8.0) {
    const double z = uniform(z_lo, z_hi);
    return Pose(rotation(), Vec3(uniform(-0.25, 0.25) * z, uniform(-0.25, 0.25) * z, z));
  }

  Tensor tensor(int c, int h, int w, double lo, double hi) {
    Tensor t(c, h, w);
    for (double& v : t.data()) v = uniform(lo, hi);
    return t;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline CameraIntrinsics default_camera() { return CameraIntrinsics{}; }

/// Exact 2D-3D correspondences, one per vertex.
inline std::vector<Correspondence> exact_correspondences(const Pose& pose, const RelativeDims& dims,
                                                         const CameraIntrinsics& camera) {
  const auto verts = cuboid_vertices(dims);
  const auto uv = project(verts, pose, camera);
  std::vector<Correspondence> corr;
  for (int k = 0; k < kNumVertices; ++k) corr.push_back({k, uv[k], 1.0});
  return corr;
}

inline double relative_translation_error(const Pose& est, const Pose& truth) {
  return (est.translation() - truth.translation()).norm() / truth.translation().norm();
}

}  // namespace catpose::testing
