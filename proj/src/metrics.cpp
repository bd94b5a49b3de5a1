#include "catpose/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "catpose/errors.hpp"

namespace catpose {

namespace {

constexpr double kPlaneEps = 1e-12;
constexpr double kMinVolume = 1e-15;

using Polygon = std::vector<Vec3>;

struct Plane {
  Vec3 n;  // outward unit normal
  double d = 0.0;
  double signed_distance(const Vec3& p) const { return n.dot(p) - d; }
};

// Orders coplanar points counter-clockwise when viewed from the side `normal` points to.
void order_ccw(Polygon& pts, const Vec3& normal) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  const Vec3 u = normal.unitOrthogonal();
  const Vec3 v = normal.cross(u);
  std::vector<std::pair<double, Vec3>> keyed;
  keyed.reserve(pts.size());
  for (const auto& p : pts) {
    const Vec3 d = p - c;
    keyed.emplace_back(std::atan2(d.dot(v), d.dot(u)), p);
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = keyed[i].second;
}

void dedupe(Polygon& pts, double tol) {
  Polygon out;
  for (const auto& p : pts) {
    bool dup = false;
    for (const auto& q : out) {
      if ((p - q).norm() <= tol) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(p);
  }
  pts = std::move(out);
}

std::array<Plane, 6> box_planes(const OrientedBox& box) {
  const Mat3 r = box.pose.rotation_matrix();
  const Vec3& t = box.pose.translation();
  std::array<Plane, 6> planes;
  for (int axis = 0; axis < 3; ++axis) {
    const Vec3 n = r.col(axis);
    const double half = box.extents(axis) / 2.0;
    planes[2 * axis] = {n, n.dot(t) + half};
    planes[2 * axis + 1] = {-n, -n.dot(t) + half};
  }
  return planes;
}

std::vector<Polygon> box_faces(const OrientedBox& box) {
  const auto corners = box.corners();
  const Mat3 r = box.pose.rotation_matrix();
  std::vector<Polygon> faces;
  for (int axis = 0; axis < 3; ++axis) {
    for (int positive = 0; positive < 2; ++positive) {
      Polygon f;
      for (int i = 0; i < kNumVertices; ++i) {
        if (((i >> axis) & 1) == positive) f.push_back(corners[i]);
      }
      order_ccw(f, positive ? Vec3(r.col(axis)) : Vec3(-r.col(axis)));
      faces.push_back(std::move(f));
    }
  }
  return faces;
}

std::vector<Polygon> clip(const std::vector<Polygon>& faces, const Plane& plane, double tol) {
  std::vector<Polygon> out;
  Polygon cap;
  bool face_on_plane = false;
  for (const auto& face : faces) {
    Polygon kept;
    bool all_on = true;
    const std::size_t n = face.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& p = face[i];
      const Vec3& q = face[(i + 1) % n];
      const double dp = plane.signed_distance(p);
      const double dq = plane.signed_distance(q);
      if (std::abs(dp) > kPlaneEps) all_on = false;
      if (dp <= kPlaneEps) {
        kept.push_back(p);
        if (std::abs(dp) <= kPlaneEps) cap.push_back(p);
      }
      if ((dp < -kPlaneEps && dq > kPlaneEps) || (dp > kPlaneEps && dq < -kPlaneEps)) {
        const Vec3 x = p + (q - p) * (dp / (dp - dq));
        kept.push_back(x);
        cap.push_back(x);
      }
    }
    if (all_on) face_on_plane = true;
    if (kept.size() >= 3) out.push_back(std::move(kept));
  }
  if (!face_on_plane && cap.size() >= 3) {
    dedupe(cap, tol);
    if (cap.size() >= 3) {
      order_ccw(cap, plane.n);
      out.push_back(std::move(cap));
    }
  }
  return out;
}

double polyhedron_volume(const std::vector<Polygon>& faces, const Vec3& origin) {
  double v = 0.0;
  for (const auto& f : faces) {
    const Vec3 p0 = f[0] - origin;
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
      v += p0.dot((f[i] - origin).cross(f[i + 1] - origin));
    }
  }
  return v / 6.0;
}

}  // namespace

double intersection_volume(const OrientedBox& a, const OrientedBox& b) {
  const double ra = a.extents.norm() / 2.0;
  const double rb = b.extents.norm() / 2.0;
  if ((a.pose.translation() - b.pose.translation()).norm() > ra + rb) return 0.0;

  const double tol = 1e-10 * (ra + rb);
  std::vector<Polygon> poly = box_faces(a);
  for (const Plane& plane : box_planes(b)) {
    poly = clip(poly, plane, tol);
    if (poly.size() < 4) return 0.0;
  }
  const double v = polyhedron_volume(poly, a.pose.translation());
  return v < kMinVolume ? 0.0 : std::min(v, std::min(a.volume(), b.volume()));
}

double iou3d(const OrientedBox& a, const OrientedBox& b) {
  const double inter = intersection_volume(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.volume() + b.volume() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::string_view metric_key_name(MetricKey k) {
  switch (k) {
    case MetricKey::kIoU3D: return "iou3d";
    case MetricKey::kAzimuth: return "azimuth";
    case MetricKey::kElevation: return "elevation";
  }
  return "";
}

bool passes(const EvalRecord& r, MetricKey key, double threshold) {
  if (!r.matched) return false;
  switch (key) {
    case MetricKey::kIoU3D: return r.iou3d >= threshold;
    case MetricKey::kAzimuth: return r.azimuth_err <= threshold;
    case MetricKey::kElevation: return r.elevation_err <= threshold;
  }
  return false;
}

std::optional<double> average_precision(std::span<const EvalRecord> records, MetricKey key,
                                        double threshold) {
  const auto n_gt = std::count_if(records.begin(), records.end(),
                                  [](const EvalRecord& r) { return r.has_gt; });
  if (n_gt == 0) return std::nullopt;

  std::vector<const EvalRecord*> preds;
  for (const auto& r : records) {
    if (r.has_prediction) preds.push_back(&r);
  }
  std::stable_sort(preds.begin(), preds.end(),
                   [](const EvalRecord* a, const EvalRecord* b) { return a->score > b->score; });

  std::vector<double> precision(preds.size());
  std::vector<bool> tp(preds.size());
  int hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    tp[i] = passes(*preds[i], key, threshold);
    if (tp[i]) ++hits;
    precision[i] = static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  // Precision envelope: monotone non-increasing from the right.
  for (std::size_t i = preds.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (tp[i]) ap += precision[i];
  }
  return ap / static_cast<double>(n_gt);
}

double pixel_projection_error(const Keypoints2D& pred, const Keypoints2D& gt,
                              const CameraIntrinsics& camera) {
  double sum = 0.0;
  for (int k = 0; k < kNumVertices; ++k) sum += (pred.points[k] - gt.points[k]).norm();
  return sum / kNumVertices / camera.diagonal();
}

double pixel_projection_error(const OrientedBox& pred, const OrientedBox& gt,
                              const CameraIntrinsics& camera) {
  const auto pv = box_vertices(pred.extents);
  const auto gv = box_vertices(gt.extents);
  const auto pp = project(pv, pred.pose, camera);
  const auto gp = project(gv, gt.pose, camera);
  return pixel_projection_error(Keypoints2D::all_valid(pp), Keypoints2D::all_valid(gp), camera);
}

Vec3 viewing_direction(const Pose& pose) {
  const Vec3& t = pose.translation();
  const double n = t.norm();
  if (!(n > 1e-12)) throw UndefinedViewpoint("zero-length translation has no viewpoint");
  return -(pose.rotation().conjugate() * t) / n;
}

double azimuth_deg(const Pose& pose) {
  const Vec3 d = viewing_direction(pose);
  return std::atan2(d.x(), d.z()) * 180.0 / std::numbers::pi;
}

double elevation_deg(const Pose& pose) {
  const Vec3 d = viewing_direction(pose);
  return std::asin(std::clamp(d.y(), -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

ViewpointError viewpoint_errors(const Pose& pred, const Pose& gt) {
  double daz = std::fmod(std::abs(azimuth_deg(pred) - azimuth_deg(gt)), 360.0);
  if (daz > 180.0) daz = 360.0 - daz;
  return {daz, std::abs(elevation_deg(pred) - elevation_deg(gt))};
}

double symmetric_best(const std::function<double(const OrientedBox&)>& metric,
                      const OrientedBox& pred, Best best, int n) {
  if (n < 1) throw InvalidArgument("rotation count must be positive");
  double out = best == Best::kMax ? -std::numeric_limits<double>::infinity()
                                  : std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    const double v =
        k == 0 ? metric(pred) : metric(rotate_about_own_y(pred, 2.0 * std::numbers::pi * k / n));
    out = best == Best::kMax ? std::max(out, v) : std::min(out, v);
  }
  return out;
}

double mean_relative_dim_error(std::span<const RelativeDims> preds,
                               std::span<const RelativeDims> gts) {
  if (preds.size() != gts.size()) throw InvalidArgument("prediction/ground-truth count mismatch");
  if (preds.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    gts[i].validate();
    sum += std::abs(preds[i].rx - gts[i].rx) / gts[i].rx;
    sum += std::abs(preds[i].rz - gts[i].rz) / gts[i].rz;
  }
  return sum / (2.0 * static_cast<double>(preds.size()));
}

std::vector<std::optional<int>> greedy_match(std::span<const double> scores,
                                             std::span<const Vec2> pred_centers,
                                             std::span<const Vec2> gt_centers,
                                             std::span<const double> gt_gates) {
  if (scores.size() != pred_centers.size() || gt_centers.size() != gt_gates.size()) {
    throw InvalidArgument("greedy_match: size mismatch");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<bool> taken(gt_centers.size(), false);
  std::vector<std::optional<int>> out(scores.size());
  for (std::size_t p : order) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < gt_centers.size(); ++g) {
      if (taken[g]) continue;
      const double d = (pred_centers[p] - gt_centers[g]).norm();
      if (d <= gt_gates[g] && d < best_d) {
        best = static_cast<int>(g);
        best_d = d;
      }
    }
    if (best >= 0) {
      taken[best] = true;
      out[p] = best;
    }
  }
  return out;
}

}  // namespace catpose
