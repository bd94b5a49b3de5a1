#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "catpose/convgru.hpp"
#include "catpose/decode.hpp"
#include "catpose/labelgen.hpp"
#include "catpose/scene.hpp"
#include "catpose/simharness.hpp"

namespace catpose {

using Json = nlohmann::ordered_json;

// Value conversions. Poses are {"rotation": [w, x, y, z], "translation": [x, y, z]};
// relative dims are [rx, rz]. Readers throw FormatError on malformed input.
Json to_json(const CameraIntrinsics& k);
Json to_json(const Pose& p);
Json to_json(const RelativeDims& d);
Json to_json(const SceneObject& o);
Json to_json(const Scene& s);
Json to_json(const DecodeConfig& c);
Json to_json(const NoiseConfig& c);
Json to_json(const EvalConfig& c);
Json to_json(const PnPConfig& c);
Json to_json(const EvalRecord& r);
Json to_json(const MetricSummary& m);
Json to_json(const Prediction& p);
Json to_json(const Detection& d);
Json to_json(const RunReport& r, bool include_records = true);
Json to_json(const SweepReport& r, bool include_records = true);

CameraIntrinsics camera_from_json(const Json& j);
Pose pose_from_json(const Json& j);
RelativeDims dims_from_json(const Json& j);
SceneObject scene_object_from_json(const Json& j);
Scene scene_from_json(const Json& j);
DecodeConfig decode_config_from_json(const Json& j);
NoiseConfig noise_config_from_json(const Json& j);
EvalConfig eval_config_from_json(const Json& j);
PnPConfig pnp_config_from_json(const Json& j);
EvalRecord eval_record_from_json(const Json& j);
Prediction prediction_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Scene files hold either one scene object or {"scenes": [...]}.
std::vector<Scene> read_scenes(const std::filesystem::path& path);
void write_scenes(const std::filesystem::path& path, const std::vector<Scene>& scenes);

/// One JSON object per line.
std::vector<Prediction> read_predictions_jsonl(const std::filesystem::path& path);
void write_predictions_jsonl(const std::filesystem::path& path,
                             const std::vector<Prediction>& preds,
                             const std::vector<Detection>* detections = nullptr);

/// Ground-truth lines: {"scene", "camera", "pose", "dims", "height_m", "symmetric"}.
/// Scenes are rebuilt in index order; missing indices become empty scenes with the
/// camera of the first line.
std::vector<Scene> read_ground_truth_jsonl(const std::filesystem::path& path);
void write_ground_truth_jsonl(const std::filesystem::path& path, const std::vector<Scene>& scenes);

/// Named float64 array in row-major order.
struct NamedArray {
  std::string name;
  std::vector<int> shape;
  std::vector<double> data;
};

/// Writes `<prefix>.bin` (little-endian float64, arrays back to back) and
/// `<prefix>.json` (format, dtype, byte order, and name/shape/offset per array).
/// `meta` is stored under "meta" in the manifest.
void write_tensor_bundle(const std::filesystem::path& prefix, const std::vector<NamedArray>& arrays,
                         const std::string& format, const Json& meta = Json::object());

struct TensorBundle {
  std::string format;
  Json meta;
  std::vector<NamedArray> arrays;

  const NamedArray& get(const std::string& name) const;
};

/// Reads a bundle given its manifest path (or the prefix without extension).
TensorBundle read_tensor_bundle(const std::filesystem::path& manifest_or_prefix);

struct MapsFile {
  std::vector<CameraIntrinsics> cameras;
  std::vector<OutputMaps> maps;
};

/// Output maps for a list of scenes; tensors are named "<scene>/<head>".
void write_maps(const std::filesystem::path& prefix, const MapsFile& file);
MapsFile read_maps(const std::filesystem::path& manifest_or_prefix);

void write_model(const std::filesystem::path& prefix, const ConvGRUModel& model);
ConvGRUModel read_model(const std::filesystem::path& manifest_or_prefix);

/// Aligned plain-text tables.
std::string format_run_table(const RunReport& r);
std::string format_sweep_table(const SweepReport& r);

}  // namespace catpose
