#include "catpose/pnp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>

namespace catpose {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

int distinct_vertices(std::span<const Correspondence> corr) {
  std::array<bool, 64> seen{};
  int n = 0;
  for (const auto& c : corr) {
    if (c.vertex < 0 || c.vertex >= static_cast<int>(seen.size())) {
      throw InvalidArgument("correspondence vertex index out of range");
    }
    if (!seen[c.vertex]) {
      seen[c.vertex] = true;
      ++n;
    }
  }
  return n;
}

bool points_collinear(std::span<const Correspondence> corr) {
  Vec2 mean = Vec2::Zero();
  for (const auto& c : corr) mean += c.point;
  mean /= static_cast<double>(corr.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& c : corr) {
    const Vec2 d = c.point - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  const double hi = es.eigenvalues()(1);
  return !(hi > 0.0) || es.eigenvalues()(0) <= 1e-12 * hi;
}

// Sum of weighted (optionally Huber) squared reprojection errors. Infinity when
// a model point falls behind the camera.
struct CostEval {
  double robust = 0.0;
  double squared = 0.0;
};

CostEval evaluate_cost(const Pose& pose, std::span<const Correspondence> corr,
                       std::span<const Vec3> model, const CameraIntrinsics& camera,
                       const std::optional<double>& huber) {
  const Mat3 r = pose.rotation_matrix();
  CostEval out;
  for (const auto& c : corr) {
    const Vec3 x = r * model[c.vertex] + pose.translation();
    if (!(x.z() > kDepthEpsilon)) {
      if (std::isnan(x.z())) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
      return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    }
    const Vec2 e = Vec2(camera.fx * x.x() / x.z() + camera.cx, camera.fy * x.y() / x.z() + camera.cy) -
                   c.point;
    const double e2 = e.squaredNorm();
    out.squared += c.weight * e2;
    if (huber) {
      const double n = std::sqrt(e2);
      out.robust += c.weight * (n <= *huber ? e2 : 2.0 * *huber * n - *huber * *huber);
    } else {
      out.robust += c.weight * e2;
    }
  }
  return out;
}

double total_weight(std::span<const Correspondence> corr) {
  double w = 0.0;
  for (const auto& c : corr) w += c.weight;
  return w;
}

PnPResult run_lm(std::span<const Correspondence> corr, std::span<const Vec3> model,
                 const CameraIntrinsics& camera, const Pose& initial, const PnPConfig& cfg) {
  const double wsum = total_weight(corr);
  auto rms_of = [&](double squared) { return std::sqrt(squared / wsum); };

  Pose pose = initial;
  CostEval cost = evaluate_cost(pose, corr, model, camera, cfg.huber_px);
  PnPResult res{pose, rms_of(cost.squared), 0, false};
  if (std::isnan(cost.robust)) throw PnPFailure("non-finite initial cost", res);
  if (std::isinf(cost.robust)) return res;  // initial pose not in front of camera

  double lambda = cfg.initial_damping;
  int it = 0;
  bool converged = cost.robust == 0.0;
  while (!converged && it < cfg.max_iters) {
    ++it;
    Linearization lin = pnp_linearize(pose, corr, model, camera);
    if (cfg.huber_px) {
      // Iteratively reweighted least squares for the Huber loss.
      for (std::size_t i = 0; i < corr.size(); ++i) {
        const double n = lin.residuals.segment<2>(2 * i).norm() /
                         std::sqrt(std::max(corr[i].weight, 1e-300));
        if (n > *cfg.huber_px) {
          const double s = std::sqrt(*cfg.huber_px / n);
          lin.residuals.segment<2>(2 * i) *= s;
          lin.jacobian.middleRows<2>(2 * i) *= s;
        }
      }
    }
    const Mat6 h = lin.jacobian.transpose() * lin.jacobian;
    const Vec6 g = lin.jacobian.transpose() * lin.residuals;
    const double diag_floor = 1e-12 * std::max(h.diagonal().maxCoeff(), 1e-300);

    bool accepted = false;
    while (lambda < 1e16) {
      Mat6 a = h;
      for (int k = 0; k < 6; ++k) a(k, k) += lambda * std::max(h(k, k), diag_floor);
      const Vec6 delta = a.ldlt().solve(-g);
      if (!delta.allFinite()) throw PnPFailure("non-finite LM step", res);
      const Pose cand = apply_increment(pose, delta);
      const CostEval c = evaluate_cost(cand, corr, model, camera, cfg.huber_px);
      if (std::isnan(c.robust)) throw PnPFailure("non-finite cost", res);
      if (c.robust < cost.robust) {
        const double rel = (cost.robust - c.robust) / cost.robust;
        pose = cand;
        cost = c;
        res = {pose, rms_of(cost.squared), it, false};
        lambda = std::max(lambda * cfg.damping_down, 1e-12);
        accepted = true;
        if (delta.norm() < cfg.step_tolerance || rel < cfg.cost_tolerance || cost.robust == 0.0) {
          converged = true;
        }
        break;
      }
      lambda *= cfg.damping_up;
    }
    // No descent direction left at any damping: a (numerical) minimum.
    if (!accepted) converged = true;
  }
  res.pose = pose;
  res.rms_px = rms_of(cost.squared);
  res.iterations = it;
  res.converged = converged;
  return res;
}

void check_solvable(std::span<const Correspondence> corr) {
  const int distinct = distinct_vertices(corr);
  if (distinct < 4) {
    throw InsufficientCorrespondences("need at least 4 distinct vertices, got " +
                                      std::to_string(distinct));
  }
  if (!(total_weight(corr) > 0.0)) throw InvalidArgument("correspondence weights sum to zero");
  if (points_collinear(corr)) {
    throw PnPFailure("2D points are collinear", PnPResult{});
  }
}

}  // namespace

void PnPConfig::validate() const {
  if (max_iters < 1 || !(initial_damping > 0.0) || !(damping_up > 1.0) || !(damping_down > 0.0) ||
      !(damping_down < 1.0) || !(step_tolerance > 0.0) || !(cost_tolerance > 0.0)) {
    throw InvalidArgument("invalid PnP configuration");
  }
  if (huber_px && !(*huber_px > 0.0)) throw InvalidArgument("huber threshold must be positive");
}

Linearization pnp_linearize(const Pose& pose, std::span<const Correspondence> corr,
                            std::span<const Vec3> model, const CameraIntrinsics& camera) {
  const Mat3 r = pose.rotation_matrix();
  Linearization lin{Eigen::VectorXd(2 * corr.size()), Eigen::MatrixXd(2 * corr.size(), 6)};
  for (std::size_t i = 0; i < corr.size(); ++i) {
    const auto& c = corr[i];
    const Vec3 rv = r * model[c.vertex];
    const Vec3 x = rv + pose.translation();
    if (!(x.z() > kDepthEpsilon)) throw BehindCamera("model point behind camera during PnP");
    const double iz = 1.0 / x.z();
    const double sw = std::sqrt(c.weight);
    const Vec2 proj(camera.fx * x.x() * iz + camera.cx, camera.fy * x.y() * iz + camera.cy);
    lin.residuals.segment<2>(2 * i) = sw * (proj - c.point);

    Eigen::Matrix<double, 2, 3> dproj;
    dproj << camera.fx * iz, 0.0, -camera.fx * x.x() * iz * iz, 0.0, camera.fy * iz,
        -camera.fy * x.y() * iz * iz;
    Eigen::Matrix<double, 3, 6> dx;
    dx.leftCols<3>() = -skew(rv);
    dx.rightCols<3>() = Mat3::Identity();
    lin.jacobian.middleRows<2>(2 * i) = sw * dproj * dx;
  }
  return lin;
}

Pose apply_increment(const Pose& pose, const Eigen::Matrix<double, 6, 1>& delta) {
  const Vec3 w = delta.head<3>();
  const double angle = w.norm();
  Quat dq = Quat::Identity();
  if (angle > 0.0) dq = Quat(Eigen::AngleAxisd(angle, w / angle));
  return Pose(dq * pose.rotation(), pose.translation() + delta.tail<3>());
}

std::optional<Pose> dlt_initialize(std::span<const Correspondence> corr,
                                   std::span<const Vec3> model, const CameraIntrinsics& camera) {
  if (distinct_vertices(corr) < 6) return std::nullopt;
  Eigen::Matrix<double, 12, 12> ata = Eigen::Matrix<double, 12, 12>::Zero();
  for (const auto& c : corr) {
    const double xn = (c.point.x() - camera.cx) / camera.fx;
    const double yn = (c.point.y() - camera.cy) / camera.fy;
    Eigen::Vector4d xh;
    xh << model[c.vertex], 1.0;
    Eigen::Matrix<double, 2, 12> rows = Eigen::Matrix<double, 2, 12>::Zero();
    rows.block<1, 4>(0, 0) = xh.transpose();
    rows.block<1, 4>(0, 8) = -xn * xh.transpose();
    rows.block<1, 4>(1, 4) = xh.transpose();
    rows.block<1, 4>(1, 8) = -yn * xh.transpose();
    ata += c.weight * rows.transpose() * rows;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 12, 12>> es(ata);
  if (es.info() != Eigen::Success) return std::nullopt;
  const Eigen::Matrix<double, 12, 1> p = es.eigenvectors().col(0);
  Eigen::Matrix<double, 3, 4> P;
  P.row(0) = p.segment<4>(0).transpose();
  P.row(1) = p.segment<4>(4).transpose();
  P.row(2) = p.segment<4>(8).transpose();
  if (!P.allFinite()) return std::nullopt;
  Mat3 m = P.leftCols<3>();
  if (m.determinant() < 0.0) {
    P = -P;
    m = -m;
  }
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 rot = svd.matrixU() * svd.matrixV().transpose();
  if (rot.determinant() < 0.0) return std::nullopt;
  const double scale = svd.singularValues().mean();
  if (!(scale > 0.0)) return std::nullopt;
  const Vec3 t = P.col(3) / scale;
  const Pose pose(rot, t);
  for (const auto& c : corr) {
    if (!(pose.apply(model[c.vertex]).z() > kDepthEpsilon)) return std::nullopt;
  }
  return pose;
}

std::vector<Pose> canonical_initial_poses(std::span<const Correspondence> corr,
                                          std::span<const Vec3> model,
                                          const CameraIntrinsics& camera) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& v : model) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double model_diag = (hi - lo).norm();
  std::vector<Vec2> pts;
  Vec2 centroid = Vec2::Zero();
  double wsum = 0.0;
  for (const auto& c : corr) {
    pts.push_back(c.point);
    centroid += c.weight * c.point;
    wsum += c.weight;
  }
  centroid /= wsum;
  const double img_diag = std::max(bbox2d_from_points(pts).diagonal(), 1.0);
  const double f = 0.5 * (camera.fx + camera.fy);
  const double z = std::max(f * model_diag / img_diag, 2.0 * model_diag);
  const Vec3 t((centroid.x() - camera.cx) * z / camera.fx, (centroid.y() - camera.cy) * z / camera.fy,
               z);
  // Object +y (up) maps to camera -y (image up).
  const Mat3 upright = Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitX()).toRotationMatrix();
  std::vector<Pose> out;
  for (int k = 0; k < 4; ++k) {
    out.emplace_back(upright * rotation_about_y(k * std::numbers::pi / 2.0), t);
  }
  return out;
}

PnPResult refine_pnp_lm(std::span<const Correspondence> corr, std::span<const Vec3> model,
                        const CameraIntrinsics& camera, const Pose& initial,
                        const PnPConfig& cfg) {
  cfg.validate();
  check_solvable(corr);
  for (const auto& c : corr) {
    if (c.vertex >= static_cast<int>(model.size())) throw InvalidArgument("vertex not in model");
  }
  return run_lm(corr, model, camera, initial, cfg);
}

PnPResult solve_pnp_lm(std::span<const Correspondence> corr, const RelativeDims& dims,
                       const CameraIntrinsics& camera, const PnPConfig& cfg) {
  cfg.validate();
  const auto model = cuboid_vertices(dims);
  check_solvable(corr);
  for (const auto& c : corr) {
    if (c.vertex >= kNumVertices) throw InvalidArgument("vertex index out of range");
  }

  std::optional<PnPResult> best;
  auto consider = [&](const PnPResult& r) {
    if (!std::isfinite(r.rms_px)) return;
    if (!best || r.rms_px < best->rms_px) best = r;
  };
  if (auto init = dlt_initialize(corr, model, camera)) {
    consider(run_lm(corr, model, camera, *init, cfg));
    if (best && best->rms_px <= cfg.restart_rms_px) return *best;
  }
  for (const Pose& init : canonical_initial_poses(corr, model, camera)) {
    consider(run_lm(corr, model, camera, init, cfg));
  }
  if (!best) throw PnPFailure("no initialization produced a finite solution", PnPResult{});
  return *best;
}

LiftingResult solve_keypoint_lifting(const Keypoints2D& kps, const CameraIntrinsics& camera) {
  if (kps.valid_count() != kNumVertices) {
    throw InsufficientCorrespondences("keypoint lifting needs all eight keypoints");
  }
  {
    std::vector<Correspondence> corr;
    for (int k = 0; k < kNumVertices; ++k) corr.push_back({k, kps.points[k], 1.0});
    if (points_collinear(corr)) throw PnPFailure("keypoints are collinear", PnPResult{});
  }

  // Control points of the unit cube: centre and the three half-axis endpoints.
  // Vertex (sx, sy, sz)/2 = (1 - sx - sy - sz) c0 + sx c1 + sy c2 + sz c3.
  Eigen::Matrix<double, 2 * kNumVertices, 12> m = Eigen::Matrix<double, 2 * kNumVertices, 12>::Zero();
  std::array<Eigen::Vector4d, kNumVertices> alphas;
  for (int i = 0; i < kNumVertices; ++i) {
    const double sx = (i & 1) ? 1.0 : -1.0;
    const double sy = (i & 2) ? 1.0 : -1.0;
    const double sz = (i & 4) ? 1.0 : -1.0;
    alphas[i] << 1.0 - sx - sy - sz, sx, sy, sz;
    const Vec2& p = kps.points[i];
    for (int j = 0; j < 4; ++j) {
      const double a = alphas[i](j);
      m(2 * i, 3 * j) = a * camera.fx;
      m(2 * i, 3 * j + 2) = a * (camera.cx - p.x());
      m(2 * i + 1, 3 * j + 1) = a * camera.fy;
      m(2 * i + 1, 3 * j + 2) = a * (camera.cy - p.y());
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (!(s(0) > 0.0) || s(10) <= 1e-9 * s(0)) {
    throw PnPFailure("rank-deficient keypoint lifting system", PnPResult{});
  }
  Eigen::Matrix<double, 12, 1> null = svd.matrixV().col(11);
  std::array<Vec3, 4> ctrl;
  for (int j = 0; j < 4; ++j) ctrl[j] = null.segment<3>(3 * j);
  if (ctrl[0].z() < 0.0) {
    for (auto& c : ctrl) c = -c;
  }

  LiftingResult out;
  for (int i = 0; i < kNumVertices; ++i) {
    Vec3 v = Vec3::Zero();
    for (int j = 0; j < 4; ++j) v += alphas[i](j) * ctrl[j];
    out.camera_vertices[i] = v;
  }

  // Fit an oriented box to the lifted vertices.
  Vec3 center = Vec3::Zero();
  for (const auto& v : out.camera_vertices) center += v;
  center /= kNumVertices;
  Mat3 axes = Mat3::Zero();
  for (int axis = 0; axis < 3; ++axis) {
    const int bit = 1 << axis;
    for (int i = 0; i < kNumVertices; ++i) {
      if (i & bit) continue;
      axes.col(axis) += out.camera_vertices[i | bit] - out.camera_vertices[i];
    }
    axes.col(axis) /= 4.0;
  }
  const Vec3 ext(axes.col(0).norm(), axes.col(1).norm(), axes.col(2).norm());
  if (!(ext.minCoeff() > 0.0) || !(center.z() > 0.0)) {
    throw PnPFailure("lifted box is degenerate or behind the camera", PnPResult{});
  }
  Mat3 dirs;
  for (int axis = 0; axis < 3; ++axis) dirs.col(axis) = axes.col(axis) / ext(axis);
  Eigen::JacobiSVD<Mat3> polar(dirs, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 rot = polar.matrixU() * polar.matrixV().transpose();
  if (rot.determinant() < 0.0) {
    throw PnPFailure("lifted box has mirrored handedness", PnPResult{});
  }
  out.implied_dims = {ext.x() / ext.y(), ext.z() / ext.y()};
  const Pose pose(rot, center / ext.y());

  const auto model = cuboid_vertices(out.implied_dims);
  double sq = 0.0;
  bool in_front = true;
  for (int i = 0; i < kNumVertices; ++i) {
    const Vec3 x = pose.apply(model[i]);
    if (!(x.z() > kDepthEpsilon)) {
      in_front = false;
      break;
    }
    sq += (camera.project(x) - kps.points[i]).squaredNorm();
  }
  if (!in_front) throw PnPFailure("lifted box crosses the camera plane", PnPResult{pose, 0.0, 1, false});
  out.result = {pose, std::sqrt(sq / kNumVertices), 1, true};
  return out;
}

OrientedBox resolve_scale(const Pose& relative_pose, const RelativeDims& dims, double height_m) {
  if (!(height_m > 0.0)) throw InvalidArgument("object height must be positive");
  return {relative_pose.with_translation(relative_pose.translation() * height_m),
          dims.extents() * height_m};
}

}  // namespace catpose
