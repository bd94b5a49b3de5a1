#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catpose/decode.hpp"
#include "catpose/labelgen.hpp"
#include "catpose/metrics.hpp"
#include "catpose/pnp.hpp"
#include "catpose/scene.hpp"

namespace catpose {

/// Deterministic 64-bit seed mixing (splitmix64 finalizer over the inputs).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Distribution of one object category. Ratios are drawn log-uniformly, the
/// remaining quantities uniformly. Angles are degrees; the camera direction in
/// the object frame has the sampled azimuth and elevation.
struct CategoryProfile {
  std::string name;
  Range rx;
  Range rz;
  bool square_section = false;  // rz tied to rx
  Range height_m;
  bool symmetric = false;
  Range azimuth_deg{-180.0, 180.0};
  Range elevation_deg{0.0, 45.0};
  Range distance_m;

  void validate() const;
};

const std::vector<CategoryProfile>& builtin_profiles();
const CategoryProfile& profile_by_name(std::string_view name);

struct SceneSamplingConfig {
  CameraIntrinsics camera;
  int min_objects = 1;
  int max_objects = 3;
  double margin_px = 16.0;
  // Minimum gap between 2D boxes, as a fraction of the larger box diagonal.
  double gap_frac = 0.15;
  int max_attempts = 1000;

  void validate() const;
};

/// Scenes whose objects lie in front of the camera, with 2D boxes inside the
/// image margins, pairwise separated, and distinct center cells. Throws
/// GenerationError when a scene needs more than `max_attempts` tries.
std::vector<Scene> sample_scenes(const CategoryProfile& profile, int count, std::uint64_t seed,
                                 const SceneSamplingConfig& cfg = {});

/// Camera-frame pose for an object seen from (azimuth, elevation) at `distance`,
/// with its center on the ray through pixel `target`.
Pose pose_from_viewpoint(double azimuth_deg, double elevation_deg, double distance,
                         const Vec2& target, const CameraIntrinsics& camera);

struct NoiseConfig {
  double keypoint_jitter_px = 0.0;  // heat peaks and displacement endpoints, independently
  double heat_dropout = 0.0;
  double dims_log_sigma = 0.0;
  double center_jitter_px = 0.0;  // moves the center and the displacement endpoints together
  std::uint64_t seed = 0;

  void validate() const;
  bool is_zero() const;
};

std::vector<std::string> noise_preset_names();
NoiseConfig noise_preset(std::string_view name);

/// Corrupts per-object labels. `stream` selects an independent random stream
/// (typically the scene index). Zero noise returns the labels unchanged.
std::vector<ObjectLabel> perturb_labels(std::span<const ObjectLabel> labels,
                                        const NoiseConfig& noise, std::uint64_t stream);

/// Re-renders the output maps from corrupted labels.
OutputMaps perturb(const EncodedScene& encoded, const NoiseConfig& noise, std::uint64_t stream);

enum class Solver { kLifting, kLmEstimatedDims, kLmGtDims };

inline constexpr std::array<Solver, 3> kAllSolvers = {Solver::kLifting, Solver::kLmEstimatedDims,
                                                      Solver::kLmGtDims};

std::string_view solver_name(Solver s);
Solver solver_from_name(std::string_view name);

struct EvalConfig {
  double iou_threshold = kIoUThreshold;
  double azimuth_threshold_deg = kAzimuthThresholdDeg;
  double elevation_threshold_deg = kElevationThresholdDeg;
  int symmetric_rotations = kSymmetricRotations;
  // Match gate: predicted center within this fraction of the ground-truth box diagonal.
  double match_gate_frac = 0.5;

  void validate() const;
};

/// A scored object hypothesis. The pose lives in the unit-height model frame;
/// evaluation scales it by the ground-truth height. No pose means the solver failed.
struct Prediction {
  int scene = 0;
  double score = 0.0;
  Vec2 center = Vec2::Zero();
  std::optional<Pose> pose;
  RelativeDims dims;
};

/// Matches and scores the predictions of one scene. Records come out in
/// descending score order, followed by unmatched ground truths in index order.
std::vector<EvalRecord> evaluate_scene(std::span<const Prediction> preds, const Scene& scene,
                                       int scene_index, const EvalConfig& cfg);

std::vector<EvalRecord> evaluate_predictions(std::span<const Prediction> preds,
                                             std::span<const Scene> scenes, const EvalConfig& cfg);

struct MetricSummary {
  std::optional<double> ap_iou;
  std::optional<double> ap_azimuth;
  std::optional<double> ap_elevation;
  double mean_iou = 0.0;
  double mean_pixel_error = 0.0;
  double mean_dim_error = 0.0;
  double median_rotation_error = 0.0;
  int num_gt = 0;
  int num_predictions = 0;
  int num_matched = 0;
  int solver_failures = 0;

  bool operator==(const MetricSummary&) const = default;
};

/// Aggregates recomputed from per-instance records. Means run over matched records.
MetricSummary summarize(std::span<const EvalRecord> records, const EvalConfig& cfg,
                        int solver_failures = 0);

struct RunReport {
  std::string variant;
  std::string profile;
  Strategy strategy = Strategy::kCombined;
  Solver solver = Solver::kLmEstimatedDims;
  NoiseConfig noise;
  DecodeConfig decode;
  EvalConfig eval;
  PnPConfig pnp;
  std::uint64_t seed = 0;
  int num_scenes = 0;
  MetricSummary summary;
  std::vector<EvalRecord> records;
};

/// A scene with its clean labels and the (possibly corrupted) maps fed to decoding.
struct PreparedScene {
  Scene scene;
  EncodedScene encoded;
  OutputMaps maps;
};

std::vector<PreparedScene> prepare_scenes(std::span<const Scene> scenes, const NoiseConfig& noise);

/// Solves a pose for each detection. With `Solver::kLmGtDims`, entry i of
/// `known_dims` (when present) replaces the predicted dims of detection i.
/// Failed solves yield predictions without a pose.
std::vector<Prediction> solve_detections(std::span<const Detection> dets,
                                         const CameraIntrinsics& camera, int scene_index,
                                         const DecodeConfig& decode, Solver solver,
                                         const PnPConfig& pnp,
                                         std::span<const std::optional<RelativeDims>> known_dims = {},
                                         int* solver_failures = nullptr);

/// Decodes, solves, and turns detections into predictions for one prepared scene.
std::vector<Prediction> predict_scene(const PreparedScene& prepared, int scene_index,
                                      const DecodeConfig& decode, Solver solver,
                                      const PnPConfig& pnp, int* solver_failures = nullptr);

RunReport run_prepared(std::span<const PreparedScene> prepared, const DecodeConfig& decode,
                       Solver solver, const EvalConfig& eval, const PnPConfig& pnp = {});

/// encode -> perturb -> decode -> correspondences -> solve -> scale by the known
/// height -> metrics. Solver failures are recorded as misses.
RunReport run_pipeline(std::span<const Scene> scenes, const NoiseConfig& noise,
                       const DecodeConfig& decode, Solver solver, const EvalConfig& eval,
                       const PnPConfig& pnp = {});

/// A set of runs over variants x profiles.
struct SweepReport {
  std::string title;
  std::vector<RunReport> runs;

  std::vector<std::string> variants() const;
  std::vector<std::string> profiles() const;
  /// Mean over profiles of the IoU AP of a variant (absent APs are skipped).
  double mean_ap_iou(std::string_view variant) const;
  const RunReport& run(std::string_view variant, std::string_view profile) const;
};

struct SweepConfig {
  std::vector<std::string> profiles;  // empty = all built-in profiles
  int scenes_per_profile = 100;
  std::uint64_t seed = 0;
  SceneSamplingConfig sampling;
  NoiseConfig noise;
  DecodeConfig decode;
  Solver solver = Solver::kLmEstimatedDims;
  EvalConfig eval;
  PnPConfig pnp;
  bool keep_records = true;
};

/// One run per decoding strategy.
SweepReport ablate_decode(const SweepConfig& cfg, std::span<const Strategy> strategies = kAllStrategies);
/// One run per solver.
SweepReport ablate_dims(const SweepConfig& cfg, std::span<const Solver> solvers = kAllSolvers);
/// One run per keypoint jitter level, other noise fields held at `cfg.noise`.
SweepReport noise_sweep(const SweepConfig& cfg, std::span<const double> jitter_px);

}  // namespace catpose
