#include "catpose/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>

#include "catpose/errors.hpp"

namespace catpose {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_range(const Range& r, const std::string& what, bool positive) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi || (positive && r.lo <= 0.0)) {
    throw InvalidArgument("invalid range for " + what);
  }
}

double uniform(std::mt19937_64& rng, const Range& r) {
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

double log_uniform(std::mt19937_64& rng, const Range& r) {
  return std::exp(std::uniform_real_distribution<double>(std::log(r.lo), std::log(r.hi))(rng));
}

int floor_cell(double v) { return static_cast<int>(std::floor(v / kOutputStride)); }

bool boxes_separated(const Rect& a, const Rect& b, double gap) {
  return a.u_max + gap <= b.u_min || b.u_max + gap <= a.u_min || a.v_max + gap <= b.v_min ||
         b.v_max + gap <= a.v_min;
}

struct GroundTruthGates {
  std::vector<Vec2> centers;
  std::vector<double> gates;
};

GroundTruthGates gates_for(const Scene& scene, double frac) {
  GroundTruthGates g;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const ObjectLabel lab = make_object_label(scene.objects[i], scene.camera, static_cast<int>(i));
    g.centers.push_back(lab.center);
    g.gates.push_back(frac * lab.bbox.diagonal());
  }
  return g;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return splitmix(splitmix(splitmix(base) ^ a) ^ b);
}

void CategoryProfile::validate() const {
  if (name.empty()) throw InvalidArgument("profile needs a name");
  check_range(rx, name + ".rx", true);
  if (!square_section) check_range(rz, name + ".rz", true);
  check_range(height_m, name + ".height_m", true);
  check_range(azimuth_deg, name + ".azimuth_deg", false);
  check_range(elevation_deg, name + ".elevation_deg", false);
  if (elevation_deg.lo < -89.0 || elevation_deg.hi > 89.0) {
    throw InvalidArgument(name + ": elevation must stay within (-90, 90) degrees");
  }
  check_range(distance_m, name + ".distance_m", true);
}

const std::vector<CategoryProfile>& builtin_profiles() {
  static const std::vector<CategoryProfile> profiles = [] {
    std::vector<CategoryProfile> p;
    p.push_back({.name = "cereal_box",
                 .rx = {0.55, 0.85},
                 .rz = {0.2, 0.4},
                 .height_m = {0.25, 0.35},
                 .elevation_deg = {0.0, 40.0},
                 .distance_m = {0.9, 1.8}});
    p.push_back({.name = "book",
                 .rx = {4.0, 12.0},
                 .rz = {3.0, 9.0},
                 .height_m = {0.02, 0.05},
                 .elevation_deg = {20.0, 70.0},
                 .distance_m = {0.8, 1.6}});
    p.push_back({.name = "cup",
                 .rx = {0.8, 1.3},
                 .rz = {1.0, 1.0},
                 .square_section = true,
                 .height_m = {0.08, 0.12},
                 .symmetric = true,
                 .elevation_deg = {10.0, 50.0},
                 .distance_m = {0.35, 0.7}});
    p.push_back({.name = "bottle",
                 .rx = {0.3, 0.5},
                 .rz = {1.0, 1.0},
                 .square_section = true,
                 .height_m = {0.2, 0.32},
                 .symmetric = true,
                 .elevation_deg = {0.0, 35.0},
                 .distance_m = {0.7, 1.4}});
    return p;
  }();
  return profiles;
}

const CategoryProfile& profile_by_name(std::string_view name) {
  for (const auto& p : builtin_profiles()) {
    if (p.name == name) return p;
  }
  throw InvalidArgument("unknown profile: " + std::string(name));
}

void SceneSamplingConfig::validate() const {
  camera.validate();
  if (min_objects < 1 || max_objects < min_objects) {
    throw InvalidArgument("object count range must satisfy 1 <= min <= max");
  }
  if (!(margin_px >= 0.0) || !(gap_frac >= 0.0)) throw InvalidArgument("margins must be >= 0");
  if (max_attempts < 1) throw InvalidArgument("max_attempts must be positive");
}

Pose pose_from_viewpoint(double azimuth_deg, double elevation_deg, double distance,
                         const Vec2& target, const CameraIntrinsics& camera) {
  if (!(distance > 0.0)) throw InvalidArgument("distance must be positive");
  const double az = azimuth_deg * kDeg;
  const double el = elevation_deg * kDeg;
  const Vec3 d(std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az));
  const Vec3 up = Vec3::UnitY();
  const Vec3 z_c = -d;
  const Vec3 y_c = (-up - (-up).dot(z_c) * z_c).normalized();
  const Vec3 x_c = y_c.cross(z_c);
  Mat3 r;
  r.row(0) = x_c.transpose();
  r.row(1) = y_c.transpose();
  r.row(2) = z_c.transpose();
  const Vec3 ray = Vec3((target.x() - camera.cx) / camera.fx, (target.y() - camera.cy) / camera.fy,
                        1.0)
                       .normalized();
  const Quat q = Quat::FromTwoVectors(Vec3::UnitZ(), ray);
  return Pose(Mat3(q.toRotationMatrix() * r), distance * ray);
}

std::vector<Scene> sample_scenes(const CategoryProfile& profile, int count, std::uint64_t seed,
                                 const SceneSamplingConfig& cfg) {
  if (count < 1) throw InvalidArgument("scene count must be positive");
  profile.validate();
  cfg.validate();
  const CameraIntrinsics& cam = cfg.camera;
  const Range u_range{cfg.margin_px, cam.width - cfg.margin_px};
  const Range v_range{cfg.margin_px, cam.height - cfg.margin_px};
  if (u_range.lo >= u_range.hi || v_range.lo >= v_range.hi) {
    throw InvalidArgument("image margins leave no room for objects");
  }

  std::vector<Scene> scenes;
  scenes.reserve(count);
  for (int s = 0; s < count; ++s) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    const int n = std::uniform_int_distribution<int>(cfg.min_objects, cfg.max_objects)(rng);
    bool accepted = false;
    for (int attempt = 0; attempt < cfg.max_attempts && !accepted; ++attempt) {
      Scene scene;
      scene.camera = cam;
      std::vector<Rect> boxes;
      std::vector<std::pair<int, int>> cells;
      bool ok = true;
      for (int i = 0; i < n && ok; ++i) {
        SceneObject obj;
        obj.category = profile.name;
        obj.symmetric = profile.symmetric;
        obj.dims.rx = log_uniform(rng, profile.rx);
        obj.dims.rz = profile.square_section ? obj.dims.rx : log_uniform(rng, profile.rz);
        obj.height_m = uniform(rng, profile.height_m);
        const double az = uniform(rng, profile.azimuth_deg);
        const double el = uniform(rng, profile.elevation_deg);
        const double dist = uniform(rng, profile.distance_m);
        const Vec2 target(uniform(rng, u_range), uniform(rng, v_range));
        obj.pose = pose_from_viewpoint(az, el, dist, target, cam);

        const auto verts = box_vertices(obj.metric_extents());
        for (const auto& v : verts) {
          if (obj.pose.apply(v).z() <= 0.05 * dist) ok = false;
        }
        if (!ok) break;
        const Rect box = bbox2d_from_points(project(verts, obj.pose, cam));
        if (box.u_min < cfg.margin_px || box.v_min < cfg.margin_px ||
            box.u_max > cam.width - cfg.margin_px || box.v_max > cam.height - cfg.margin_px) {
          ok = false;
          break;
        }
        const std::pair<int, int> cell{floor_cell(box.center().x()), floor_cell(box.center().y())};
        for (std::size_t j = 0; j < boxes.size() && ok; ++j) {
          const double gap = cfg.gap_frac * std::max(box.diagonal(), boxes[j].diagonal());
          if (!boxes_separated(box, boxes[j], gap) || cells[j] == cell) ok = false;
        }
        boxes.push_back(box);
        cells.push_back(cell);
        scene.objects.push_back(std::move(obj));
      }
      if (ok) {
        scenes.push_back(std::move(scene));
        accepted = true;
      }
    }
    if (!accepted) {
      throw GenerationError("profile " + profile.name + ": scene " + std::to_string(s) +
                            " not placed after " + std::to_string(cfg.max_attempts) + " attempts");
    }
  }
  return scenes;
}

void NoiseConfig::validate() const {
  if (!(keypoint_jitter_px >= 0.0) || !(dims_log_sigma >= 0.0) || !(center_jitter_px >= 0.0)) {
    throw InvalidArgument("noise sigmas must be >= 0");
  }
  if (!(heat_dropout >= 0.0 && heat_dropout <= 1.0)) {
    throw InvalidArgument("heat_dropout must lie in [0, 1]");
  }
}

bool NoiseConfig::is_zero() const {
  return keypoint_jitter_px == 0.0 && heat_dropout == 0.0 && dims_log_sigma == 0.0 &&
         center_jitter_px == 0.0;
}

std::vector<std::string> noise_preset_names() { return {"none", "paper-like", "heavy"}; }

NoiseConfig noise_preset(std::string_view name) {
  if (name == "none") return {};
  if (name == "paper-like") {
    return {.keypoint_jitter_px = 1.5, .heat_dropout = 0.1, .dims_log_sigma = 0.03,
            .center_jitter_px = 1.0};
  }
  if (name == "heavy") {
    return {.keypoint_jitter_px = 4.0, .heat_dropout = 0.3, .dims_log_sigma = 0.1,
            .center_jitter_px = 2.0};
  }
  throw InvalidArgument("unknown noise preset: " + std::string(name));
}

std::vector<ObjectLabel> perturb_labels(std::span<const ObjectLabel> labels,
                                        const NoiseConfig& noise, std::uint64_t stream) {
  noise.validate();
  std::vector<ObjectLabel> out(labels.begin(), labels.end());
  if (noise.is_zero()) return out;
  std::mt19937_64 rng(derive_seed(noise.seed, stream));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& lab : out) {
    const Vec2 dc(normal(rng), normal(rng));
    const Vec2 shift = noise.center_jitter_px * dc;
    lab.center += shift;
    lab.bbox = {lab.bbox.u_min + shift.x(), lab.bbox.v_min + shift.y(), lab.bbox.u_max + shift.x(),
                lab.bbox.v_max + shift.y()};
    for (int k = 0; k < kNumVertices; ++k) {
      const Vec2 dh(normal(rng), normal(rng));
      const Vec2 dd(normal(rng), normal(rng));
      lab.kp_heat[k] += noise.keypoint_jitter_px * dh;
      lab.kp_disp[k] += shift + noise.keypoint_jitter_px * dd;
      if (unit(rng) < noise.heat_dropout) lab.heat_present[k] = false;
    }
    const double nx = normal(rng);
    const double nz = normal(rng);
    lab.dims.rx *= std::exp(noise.dims_log_sigma * nx);
    lab.dims.rz *= std::exp(noise.dims_log_sigma * nz);
  }
  return out;
}

OutputMaps perturb(const EncodedScene& encoded, const NoiseConfig& noise, std::uint64_t stream) {
  if (noise.is_zero()) return encoded.maps;
  const auto labels = perturb_labels(encoded.objects, noise, stream);
  return render_labels(labels, encoded.maps.height(), encoded.maps.width()).maps;
}

std::string_view solver_name(Solver s) {
  switch (s) {
    case Solver::kLifting: return "lifting";
    case Solver::kLmEstimatedDims: return "lm_estimated_dims";
    case Solver::kLmGtDims: return "lm_gt_dims";
  }
  return "";
}

Solver solver_from_name(std::string_view name) {
  for (Solver s : kAllSolvers) {
    if (solver_name(s) == name) return s;
  }
  throw InvalidArgument("unknown solver: " + std::string(name));
}

void EvalConfig::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw InvalidArgument("iou_threshold must lie in (0, 1]");
  }
  if (!(azimuth_threshold_deg > 0.0) || !(elevation_threshold_deg > 0.0)) {
    throw InvalidArgument("angle thresholds must be positive");
  }
  if (symmetric_rotations < 1) throw InvalidArgument("symmetric_rotations must be positive");
  if (!(match_gate_frac > 0.0)) throw InvalidArgument("match_gate_frac must be positive");
}

std::vector<EvalRecord> evaluate_scene(std::span<const Prediction> preds, const Scene& scene,
                                       int scene_index, const EvalConfig& cfg) {
  cfg.validate();
  const GroundTruthGates gt = gates_for(scene, cfg.match_gate_frac);

  std::vector<const Prediction*> solved;
  for (const auto& p : preds) {
    if (p.pose) solved.push_back(&p);
  }
  std::stable_sort(solved.begin(), solved.end(),
                   [](const Prediction* a, const Prediction* b) { return a->score > b->score; });
  std::vector<double> scores;
  std::vector<Vec2> centers;
  for (const Prediction* p : solved) {
    scores.push_back(p->score);
    centers.push_back(p->center);
  }
  const auto match = greedy_match(scores, centers, gt.centers, gt.gates);

  std::vector<EvalRecord> records;
  std::vector<bool> covered(scene.objects.size(), false);
  for (std::size_t i = 0; i < solved.size(); ++i) {
    const Prediction& p = *solved[i];
    EvalRecord r;
    r.scene = scene_index;
    r.score = p.score;
    r.has_prediction = true;
    if (match[i]) {
      const int g = *match[i];
      const SceneObject& obj = scene.objects[g];
      covered[g] = true;
      r.gt_index = g;
      r.has_gt = true;
      r.matched = true;
      r.symmetric = obj.symmetric;
      const OrientedBox gt_box{obj.pose, obj.metric_extents()};
      const OrientedBox box = resolve_scale(*p.pose, p.dims, obj.height_m);
      const int n = cfg.symmetric_rotations;
      const auto iou_fn = [&](const OrientedBox& b) { return iou3d(b, gt_box); };
      const auto rot_fn = [&](const OrientedBox& b) { return rotation_error(b.pose, obj.pose); };
      const auto az_fn = [&](const OrientedBox& b) {
        return viewpoint_errors(b.pose, obj.pose).azimuth_deg;
      };
      r.iou3d = obj.symmetric ? symmetric_best(iou_fn, box, Best::kMax, n) : iou_fn(box);
      r.rotation_err = obj.symmetric ? symmetric_best(rot_fn, box, Best::kMin, n) : rot_fn(box);
      try {
        r.azimuth_err = obj.symmetric ? symmetric_best(az_fn, box, Best::kMin, n) : az_fn(box);
        r.elevation_err = viewpoint_errors(box.pose, obj.pose).elevation_deg;
      } catch (const UndefinedViewpoint&) {
        r.azimuth_err = 180.0;
        r.elevation_err = 180.0;
      }
      try {
        const auto px_fn = [&](const OrientedBox& b) {
          return pixel_projection_error(b, gt_box, scene.camera);
        };
        r.pixel_error = obj.symmetric ? symmetric_best(px_fn, box, Best::kMin, n) : px_fn(box);
      } catch (const BehindCamera&) {
        r.pixel_valid = false;
        r.pixel_error = 0.0;
      }
      const RelativeDims pd[] = {p.dims};
      const RelativeDims gd[] = {obj.dims};
      r.dim_rel_err = mean_relative_dim_error(pd, gd);
    }
    records.push_back(r);
  }
  for (std::size_t g = 0; g < scene.objects.size(); ++g) {
    if (covered[g]) continue;
    EvalRecord r;
    r.scene = scene_index;
    r.gt_index = static_cast<int>(g);
    r.has_gt = true;
    r.symmetric = scene.objects[g].symmetric;
    records.push_back(r);
  }
  return records;
}

std::vector<EvalRecord> evaluate_predictions(std::span<const Prediction> preds,
                                             std::span<const Scene> scenes, const EvalConfig& cfg) {
  std::vector<std::vector<Prediction>> per_scene(scenes.size());
  for (const auto& p : preds) {
    if (p.scene < 0 || static_cast<std::size_t>(p.scene) >= scenes.size()) {
      throw InvalidArgument("prediction refers to unknown scene " + std::to_string(p.scene));
    }
    per_scene[p.scene].push_back(p);
  }
  std::vector<EvalRecord> out;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    auto recs = evaluate_scene(per_scene[s], scenes[s], static_cast<int>(s), cfg);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

MetricSummary summarize(std::span<const EvalRecord> records, const EvalConfig& cfg,
                        int solver_failures) {
  MetricSummary m;
  m.ap_iou = average_precision(records, MetricKey::kIoU3D, cfg.iou_threshold);
  m.ap_azimuth = average_precision(records, MetricKey::kAzimuth, cfg.azimuth_threshold_deg);
  m.ap_elevation = average_precision(records, MetricKey::kElevation, cfg.elevation_threshold_deg);
  m.solver_failures = solver_failures;
  std::vector<double> rot;
  double iou = 0.0;
  double dim = 0.0;
  double px = 0.0;
  int px_n = 0;
  for (const auto& r : records) {
    if (r.has_gt) ++m.num_gt;
    if (r.has_prediction) ++m.num_predictions;
    if (!r.matched) continue;
    ++m.num_matched;
    iou += r.iou3d;
    dim += r.dim_rel_err;
    rot.push_back(r.rotation_err);
    if (r.pixel_valid) {
      px += r.pixel_error;
      ++px_n;
    }
  }
  if (m.num_matched > 0) {
    m.mean_iou = iou / m.num_matched;
    m.mean_dim_error = dim / m.num_matched;
    std::sort(rot.begin(), rot.end());
    const std::size_t h = rot.size() / 2;
    m.median_rotation_error = rot.size() % 2 == 1 ? rot[h] : 0.5 * (rot[h - 1] + rot[h]);
  }
  if (px_n > 0) m.mean_pixel_error = px / px_n;
  return m;
}

std::vector<PreparedScene> prepare_scenes(std::span<const Scene> scenes, const NoiseConfig& noise) {
  noise.validate();
  std::vector<PreparedScene> out;
  out.reserve(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    PreparedScene p;
    p.scene = scenes[i];
    p.encoded = encode_scene(scenes[i]);
    p.maps = perturb(p.encoded, noise, static_cast<std::uint64_t>(i));
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Prediction> solve_detections(std::span<const Detection> dets,
                                         const CameraIntrinsics& camera, int scene_index,
                                         const DecodeConfig& decode, Solver solver,
                                         const PnPConfig& pnp,
                                         std::span<const std::optional<RelativeDims>> known_dims,
                                         int* solver_failures) {
  if (!known_dims.empty() && known_dims.size() != dets.size()) {
    throw InvalidArgument("known_dims must be empty or have one entry per detection");
  }
  std::vector<Prediction> preds;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const Detection& det = dets[i];
    Prediction p;
    p.scene = scene_index;
    p.score = det.score;
    p.center = det.center;
    p.dims = det.rel_dims;
    DecodeConfig cfg = decode;
    cfg.seed = derive_seed(decode.seed, static_cast<std::uint64_t>(scene_index), i);
    try {
      const auto corr = build_correspondences(det, cfg);
      switch (solver) {
        case Solver::kLifting: {
          const LiftingResult lr =
              solve_keypoint_lifting(keypoints_from_correspondences(corr), camera);
          p.pose = lr.result.pose;
          p.dims = lr.implied_dims;
          break;
        }
        case Solver::kLmEstimatedDims:
          p.pose = solve_pnp_lm(corr, det.rel_dims, camera, pnp).pose;
          break;
        case Solver::kLmGtDims:
          if (!known_dims.empty() && known_dims[i]) p.dims = *known_dims[i];
          p.pose = solve_pnp_lm(corr, p.dims, camera, pnp).pose;
          break;
      }
    } catch (const Error&) {
      p.pose.reset();
      if (solver_failures != nullptr) ++*solver_failures;
    }
    preds.push_back(p);
  }
  return preds;
}

std::vector<Prediction> predict_scene(const PreparedScene& prepared, int scene_index,
                                      const DecodeConfig& decode, Solver solver,
                                      const PnPConfig& pnp, int* solver_failures) {
  const Scene& scene = prepared.scene;
  const auto dets = decode_objects(prepared.maps, decode, scene.camera);
  std::vector<std::optional<RelativeDims>> known(dets.size());
  if (solver == Solver::kLmGtDims) {
    const GroundTruthGates gt = gates_for(scene, EvalConfig{}.match_gate_frac);
    std::vector<double> scores;
    std::vector<Vec2> centers;
    for (const auto& d : dets) {
      scores.push_back(d.score);
      centers.push_back(d.center);
    }
    const auto match = greedy_match(scores, centers, gt.centers, gt.gates);
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (match[i]) known[i] = scene.objects[*match[i]].dims;
    }
  }
  return solve_detections(dets, scene.camera, scene_index, decode, solver, pnp, known,
                          solver_failures);
}

RunReport run_prepared(std::span<const PreparedScene> prepared, const DecodeConfig& decode,
                       Solver solver, const EvalConfig& eval, const PnPConfig& pnp) {
  decode.validate();
  eval.validate();
  pnp.validate();
  RunReport rep;
  rep.strategy = decode.strategy;
  rep.solver = solver;
  rep.decode = decode;
  rep.eval = eval;
  rep.pnp = pnp;
  rep.seed = decode.seed;
  rep.num_scenes = static_cast<int>(prepared.size());
  int failures = 0;
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    const auto preds =
        predict_scene(prepared[i], static_cast<int>(i), decode, solver, pnp, &failures);
    auto recs = evaluate_scene(preds, prepared[i].scene, static_cast<int>(i), eval);
    rep.records.insert(rep.records.end(), recs.begin(), recs.end());
  }
  rep.summary = summarize(rep.records, eval, failures);
  return rep;
}

RunReport run_pipeline(std::span<const Scene> scenes, const NoiseConfig& noise,
                       const DecodeConfig& decode, Solver solver, const EvalConfig& eval,
                       const PnPConfig& pnp) {
  const auto prepared = prepare_scenes(scenes, noise);
  RunReport rep = run_prepared(prepared, decode, solver, eval, pnp);
  rep.noise = noise;
  return rep;
}

std::vector<std::string> SweepReport::variants() const {
  std::vector<std::string> out;
  for (const auto& r : runs) {
    if (std::find(out.begin(), out.end(), r.variant) == out.end()) out.push_back(r.variant);
  }
  return out;
}

std::vector<std::string> SweepReport::profiles() const {
  std::vector<std::string> out;
  for (const auto& r : runs) {
    if (std::find(out.begin(), out.end(), r.profile) == out.end()) out.push_back(r.profile);
  }
  return out;
}

double SweepReport::mean_ap_iou(std::string_view variant) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : runs) {
    if (r.variant != variant || !r.summary.ap_iou) continue;
    sum += *r.summary.ap_iou;
    ++n;
  }
  if (n == 0) throw InvalidArgument("no runs for variant " + std::string(variant));
  return sum / n;
}

const RunReport& SweepReport::run(std::string_view variant, std::string_view profile) const {
  for (const auto& r : runs) {
    if (r.variant == variant && r.profile == profile) return r;
  }
  throw InvalidArgument("no run for " + std::string(variant) + "/" + std::string(profile));
}

namespace {

struct ProfileBatch {
  std::string profile;
  std::vector<Scene> scenes;
  NoiseConfig noise;
};

std::vector<ProfileBatch> batches_for(const SweepConfig& cfg) {
  std::vector<std::string> names = cfg.profiles;
  if (names.empty()) {
    for (const auto& p : builtin_profiles()) names.push_back(p.name);
  }
  std::vector<ProfileBatch> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    ProfileBatch b;
    b.profile = names[i];
    b.scenes = sample_scenes(profile_by_name(names[i]), cfg.scenes_per_profile,
                             derive_seed(cfg.seed, i), cfg.sampling);
    b.noise = cfg.noise;
    b.noise.seed = derive_seed(cfg.noise.seed, cfg.seed, i);
    out.push_back(std::move(b));
  }
  return out;
}

void finish(RunReport& rep, const SweepConfig& cfg, const ProfileBatch& b, std::string variant) {
  rep.variant = std::move(variant);
  rep.profile = b.profile;
  rep.noise = b.noise;
  rep.seed = cfg.seed;
  if (!cfg.keep_records) rep.records.clear();
}

}  // namespace

SweepReport ablate_decode(const SweepConfig& cfg, std::span<const Strategy> strategies) {
  SweepReport out;
  out.title = "decoding strategies (" + std::string(solver_name(cfg.solver)) + ")";
  for (const auto& b : batches_for(cfg)) {
    const auto prepared = prepare_scenes(b.scenes, b.noise);
    for (Strategy s : strategies) {
      DecodeConfig d = cfg.decode;
      d.strategy = s;
      RunReport rep = run_prepared(prepared, d, cfg.solver, cfg.eval, cfg.pnp);
      finish(rep, cfg, b, std::string(strategy_name(s)));
      out.runs.push_back(std::move(rep));
    }
  }
  return out;
}

SweepReport ablate_dims(const SweepConfig& cfg, std::span<const Solver> solvers) {
  SweepReport out;
  out.title = "cuboid dimension strategies (" + std::string(strategy_name(cfg.decode.strategy)) +
              " decoding)";
  for (const auto& b : batches_for(cfg)) {
    const auto prepared = prepare_scenes(b.scenes, b.noise);
    for (Solver s : solvers) {
      RunReport rep = run_prepared(prepared, cfg.decode, s, cfg.eval, cfg.pnp);
      finish(rep, cfg, b, std::string(solver_name(s)));
      out.runs.push_back(std::move(rep));
    }
  }
  return out;
}

SweepReport noise_sweep(const SweepConfig& cfg, std::span<const double> jitter_px) {
  SweepReport out;
  out.title = "keypoint jitter sweep (" + std::string(strategy_name(cfg.decode.strategy)) + ", " +
              std::string(solver_name(cfg.solver)) + ")";
  for (const auto& b : batches_for(cfg)) {
    for (double j : jitter_px) {
      ProfileBatch level = b;
      level.noise.keypoint_jitter_px = j;
      const auto prepared = prepare_scenes(level.scenes, level.noise);
      RunReport rep = run_prepared(prepared, cfg.decode, cfg.solver, cfg.eval, cfg.pnp);
      char label[32];
      std::snprintf(label, sizeof label, "jitter=%g", j);
      finish(rep, cfg, level, label);
      out.runs.push_back(std::move(rep));
    }
  }
  return out;
}

}  // namespace catpose
