#include "catpose/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "catpose/errors.hpp"

namespace catpose {

namespace fs = std::filesystem;

namespace {

constexpr int kFormatVersion = 1;

template <typename T>
T field(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T field_or(const Json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return field<T>(j, key);
}

Json vec_json(const Vec2& v) { return Json::array({v.x(), v.y()}); }
Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

template <int N>
Eigen::Matrix<double, N, 1> vec_from(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != N) {
    throw FormatError(std::string(what) + ": expected an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    if (!j[i].is_number()) throw FormatError(std::string(what) + ": non-numeric entry");
    v[i] = j[i].get<double>();
  }
  return v;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json keypoints_json(const Keypoints2D& k) {
  Json pts = Json::array();
  Json valid = Json::array();
  Json conf = Json::array();
  for (int i = 0; i < kNumVertices; ++i) {
    pts.push_back(vec_json(k.points[i]));
    valid.push_back(k.valid[i]);
    conf.push_back(k.confidence[i]);
  }
  return {{"points", pts}, {"valid", valid}, {"confidence", conf}};
}

fs::path manifest_path(const fs::path& p) {
  if (p.extension() == ".json") return p;
  fs::path m = p;
  m += ".json";
  return m;
}

fs::path data_path_for(const fs::path& manifest) {
  fs::path d = manifest;
  d.replace_extension(".bin");
  return d;
}

void write_doubles(std::ofstream& out, const std::vector<double>& data) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  } else {
    for (double v : data) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      char bytes[8];
      for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
      out.write(bytes, 8);
    }
  }
}

void read_doubles(std::ifstream& in, std::vector<double>& data) {
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!in) throw FormatError("tensor data file is truncated");
  if constexpr (std::endian::native != std::endian::little) {
    for (double& v : data) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      std::uint64_t swapped = 0;
      for (int b = 0; b < 8; ++b) swapped |= ((bits >> (8 * b)) & 0xff) << (8 * (7 - b));
      v = std::bit_cast<double>(swapped);
    }
  }
}

std::size_t element_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int s : shape) {
    if (s < 0) throw FormatError("negative tensor dimension");
    n *= static_cast<std::size_t>(s);
  }
  return n;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "n/a"; }

class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
  void rule() { rules_.push_back(rows_.size()); }

  std::string str() const {
    std::vector<std::size_t> width;
    for (const auto& r : rows_) {
      if (width.size() < r.size()) width.resize(r.size(), 0);
      for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    }
    std::size_t total = 0;
    for (auto w : width) total += w + 2;
    std::ostringstream out;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (i == 1 || std::find(rules_.begin(), rules_.end(), i) != rules_.end()) {
        out << std::string(total > 2 ? total - 2 : total, '-') << '\n';
      }
      const auto& r = rows_[i];
      std::string line;
      for (std::size_t c = 0; c < r.size(); ++c) {
        std::string cell = r[c];
        const std::size_t pad = width[c] - cell.size();
        // Left-align the leading label columns, right-align numbers.
        if (c < 2) cell += std::string(pad, ' ');
        else cell = std::string(pad, ' ') + cell;
        line += cell;
        if (c + 1 < r.size()) line += "  ";
      }
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out << line << '\n';
    }
    return out.str();
  }

 private:
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> rules_;
};

std::vector<std::string> summary_header() {
  return {"variant", "profile", "AP@0.5 IoU", "mean IoU", "2D err", "az AP@15", "el AP@10",
          "dim err", "matched/gt", "fails"};
}

std::vector<std::string> summary_row(const std::string& variant, const std::string& profile,
                                     const MetricSummary& m) {
  return {variant,
          profile,
          fmt(m.ap_iou),
          fmt(m.mean_iou),
          fmt(m.mean_pixel_error),
          fmt(m.ap_azimuth),
          fmt(m.ap_elevation),
          fmt(m.mean_dim_error),
          std::to_string(m.num_matched) + "/" + std::to_string(m.num_gt),
          std::to_string(m.solver_failures)};
}

}  // namespace

Json to_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy},
          {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics camera_from_json(const Json& j) {
  CameraIntrinsics k;
  k.fx = field<double>(j, "fx");
  k.fy = field<double>(j, "fy");
  k.cx = field<double>(j, "cx");
  k.cy = field<double>(j, "cy");
  k.width = field<int>(j, "width");
  k.height = field<int>(j, "height");
  k.validate();
  return k;
}

Json to_json(const Pose& p) {
  const Quat& q = p.rotation();
  return {{"rotation", Json::array({q.w(), q.x(), q.y(), q.z()})},
          {"translation", vec_json(p.translation())}};
}

Pose pose_from_json(const Json& j) {
  if (!j.is_object()) throw FormatError("pose must be an object");
  const Eigen::Vector4d q = vec_from<4>(j.at("rotation"), "pose.rotation");
  const Vec3 t = vec_from<3>(j.at("translation"), "pose.translation");
  if (!(q.norm() > 0.0)) throw FormatError("pose.rotation has zero norm");
  return Pose(Quat(q[0], q[1], q[2], q[3]), t);
}

Json to_json(const RelativeDims& d) { return Json::array({d.rx, d.rz}); }

RelativeDims dims_from_json(const Json& j) {
  RelativeDims d;
  if (j.is_array() && j.size() == 3) {
    const Vec3 v = vec_from<3>(j, "dims");
    if (!(v.y() > 0.0)) throw FormatError("dims: y extent must be positive");
    d = {v.x() / v.y(), v.z() / v.y()};
  } else {
    const Vec2 v = vec_from<2>(j, "dims");
    d = {v.x(), v.y()};
  }
  try {
    d.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
  return d;
}

Json to_json(const SceneObject& o) {
  Json j = {{"pose", to_json(o.pose)},
            {"dims", to_json(o.dims)},
            {"height_m", o.height_m},
            {"symmetric", o.symmetric}};
  if (!o.category.empty()) j["category"] = o.category;
  return j;
}

SceneObject scene_object_from_json(const Json& j) {
  SceneObject o;
  o.pose = pose_from_json(j.at("pose"));
  o.dims = dims_from_json(j.at("dims"));
  o.height_m = field<double>(j, "height_m");
  if (!(o.height_m > 0.0)) throw FormatError("height_m must be positive");
  o.symmetric = field_or<bool>(j, "symmetric", false);
  o.category = field_or<std::string>(j, "category", "");
  return o;
}

Json to_json(const Scene& s) {
  Json objs = Json::array();
  for (const auto& o : s.objects) objs.push_back(to_json(o));
  return {{"camera", to_json(s.camera)}, {"objects", objs}};
}

Scene scene_from_json(const Json& j) {
  Scene s;
  try {
    s.camera = camera_from_json(j.at("camera"));
    for (const auto& o : j.at("objects")) s.objects.push_back(scene_object_from_json(o));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("scene: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("scene: ") + e.what());
  }
  return s;
}

Json to_json(const DecodeConfig& c) {
  return {{"strategy", std::string(strategy_name(c.strategy))},
          {"max_detections", c.max_detections},
          {"score_threshold", c.score_threshold},
          {"margin_frac", c.margin_frac},
          {"sample_count", c.sample_count},
          {"seed", c.seed},
          {"distance_frac", c.distance_frac},
          {"sampling_sigma_frac", c.sampling_sigma_frac}};
}

DecodeConfig decode_config_from_json(const Json& j) {
  DecodeConfig c;
  try {
    c.strategy = strategy_from_name(
        field_or<std::string>(j, "strategy", std::string(strategy_name(c.strategy))));
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
  c.max_detections = field_or(j, "max_detections", c.max_detections);
  c.score_threshold = field_or(j, "score_threshold", c.score_threshold);
  c.margin_frac = field_or(j, "margin_frac", c.margin_frac);
  c.sample_count = field_or(j, "sample_count", c.sample_count);
  c.seed = field_or(j, "seed", c.seed);
  c.distance_frac = field_or(j, "distance_frac", c.distance_frac);
  c.sampling_sigma_frac = field_or(j, "sampling_sigma_frac", c.sampling_sigma_frac);
  c.validate();
  return c;
}

Json to_json(const NoiseConfig& c) {
  return {{"keypoint_jitter_px", c.keypoint_jitter_px},
          {"heat_dropout", c.heat_dropout},
          {"dims_log_sigma", c.dims_log_sigma},
          {"center_jitter_px", c.center_jitter_px},
          {"seed", c.seed}};
}

NoiseConfig noise_config_from_json(const Json& j) {
  NoiseConfig c;
  c.keypoint_jitter_px = field_or(j, "keypoint_jitter_px", c.keypoint_jitter_px);
  c.heat_dropout = field_or(j, "heat_dropout", c.heat_dropout);
  c.dims_log_sigma = field_or(j, "dims_log_sigma", c.dims_log_sigma);
  c.center_jitter_px = field_or(j, "center_jitter_px", c.center_jitter_px);
  c.seed = field_or(j, "seed", c.seed);
  c.validate();
  return c;
}

Json to_json(const EvalConfig& c) {
  return {{"iou_threshold", c.iou_threshold},
          {"azimuth_threshold_deg", c.azimuth_threshold_deg},
          {"elevation_threshold_deg", c.elevation_threshold_deg},
          {"symmetric_rotations", c.symmetric_rotations},
          {"match_gate_frac", c.match_gate_frac}};
}

EvalConfig eval_config_from_json(const Json& j) {
  EvalConfig c;
  c.iou_threshold = field_or(j, "iou_threshold", c.iou_threshold);
  c.azimuth_threshold_deg = field_or(j, "azimuth_threshold_deg", c.azimuth_threshold_deg);
  c.elevation_threshold_deg = field_or(j, "elevation_threshold_deg", c.elevation_threshold_deg);
  c.symmetric_rotations = field_or(j, "symmetric_rotations", c.symmetric_rotations);
  c.match_gate_frac = field_or(j, "match_gate_frac", c.match_gate_frac);
  c.validate();
  return c;
}

Json to_json(const PnPConfig& c) {
  return {{"max_iters", c.max_iters},
          {"initial_damping", c.initial_damping},
          {"damping_up", c.damping_up},
          {"damping_down", c.damping_down},
          {"step_tolerance", c.step_tolerance},
          {"cost_tolerance", c.cost_tolerance},
          {"huber_px", optional_json(c.huber_px)},
          {"restart_rms_px", c.restart_rms_px}};
}

PnPConfig pnp_config_from_json(const Json& j) {
  PnPConfig c;
  c.max_iters = field_or(j, "max_iters", c.max_iters);
  c.initial_damping = field_or(j, "initial_damping", c.initial_damping);
  c.damping_up = field_or(j, "damping_up", c.damping_up);
  c.damping_down = field_or(j, "damping_down", c.damping_down);
  c.step_tolerance = field_or(j, "step_tolerance", c.step_tolerance);
  c.cost_tolerance = field_or(j, "cost_tolerance", c.cost_tolerance);
  if (j.is_object() && j.contains("huber_px") && !j.at("huber_px").is_null()) {
    c.huber_px = field<double>(j, "huber_px");
  }
  c.restart_rms_px = field_or(j, "restart_rms_px", c.restart_rms_px);
  c.validate();
  return c;
}

Json to_json(const EvalRecord& r) {
  return {{"scene", r.scene},
          {"gt_index", r.gt_index},
          {"score", r.score},
          {"has_prediction", r.has_prediction},
          {"has_gt", r.has_gt},
          {"matched", r.matched},
          {"symmetric", r.symmetric},
          {"iou3d", r.iou3d},
          {"pixel_error", r.pixel_error},
          {"pixel_valid", r.pixel_valid},
          {"azimuth_err", r.azimuth_err},
          {"elevation_err", r.elevation_err},
          {"dim_rel_err", r.dim_rel_err},
          {"rotation_err", r.rotation_err}};
}

EvalRecord eval_record_from_json(const Json& j) {
  EvalRecord r;
  r.scene = field<int>(j, "scene");
  r.gt_index = field<int>(j, "gt_index");
  r.score = field<double>(j, "score");
  r.has_prediction = field<bool>(j, "has_prediction");
  r.has_gt = field<bool>(j, "has_gt");
  r.matched = field<bool>(j, "matched");
  r.symmetric = field<bool>(j, "symmetric");
  r.iou3d = field<double>(j, "iou3d");
  r.pixel_error = field<double>(j, "pixel_error");
  r.pixel_valid = field_or<bool>(j, "pixel_valid", true);
  r.azimuth_err = field<double>(j, "azimuth_err");
  r.elevation_err = field<double>(j, "elevation_err");
  r.dim_rel_err = field<double>(j, "dim_rel_err");
  r.rotation_err = field<double>(j, "rotation_err");
  return r;
}

Json to_json(const MetricSummary& m) {
  return {{"ap_iou", optional_json(m.ap_iou)},
          {"ap_azimuth", optional_json(m.ap_azimuth)},
          {"ap_elevation", optional_json(m.ap_elevation)},
          {"mean_iou", m.mean_iou},
          {"mean_pixel_error", m.mean_pixel_error},
          {"mean_dim_error", m.mean_dim_error},
          {"median_rotation_error", m.median_rotation_error},
          {"num_gt", m.num_gt},
          {"num_predictions", m.num_predictions},
          {"num_matched", m.num_matched},
          {"solver_failures", m.solver_failures}};
}

Json to_json(const Prediction& p) {
  Json j = {{"scene", p.scene},
            {"score", p.score},
            {"center", vec_json(p.center)},
            {"pose", p.pose ? to_json(*p.pose) : Json(nullptr)},
            {"dims", to_json(p.dims)}};
  return j;
}

Prediction prediction_from_json(const Json& j) {
  Prediction p;
  try {
    p.scene = field<int>(j, "scene");
    p.score = field<double>(j, "score");
    p.center = vec_from<2>(j.at("center"), "center");
    if (j.contains("pose") && !j.at("pose").is_null()) p.pose = pose_from_json(j.at("pose"));
    p.dims = dims_from_json(j.at("dims"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("prediction: ") + e.what());
  }
  return p;
}

Json to_json(const Detection& d) {
  return {{"center", vec_json(d.center)},
          {"score", d.score},
          {"bbox", Json::array({d.bbox2d.u_min, d.bbox2d.v_min, d.bbox2d.u_max, d.bbox2d.v_max})},
          {"kps_disp", keypoints_json(d.kps_disp)},
          {"kps_heat", keypoints_json(d.kps_heat)},
          {"rel_dims", to_json(d.rel_dims)},
          {"pose", d.pose ? to_json(*d.pose) : Json(nullptr)}};
}

Json to_json(const RunReport& r, bool include_records) {
  Json j = {{"variant", r.variant},
            {"profile", r.profile},
            {"strategy", std::string(strategy_name(r.strategy))},
            {"solver", std::string(solver_name(r.solver))},
            {"seed", r.seed},
            {"num_scenes", r.num_scenes},
            {"data", "synthetic"},
            {"noise", to_json(r.noise)},
            {"decode", to_json(r.decode)},
            {"eval", to_json(r.eval)},
            {"pnp", to_json(r.pnp)},
            {"summary", to_json(r.summary)}};
  if (include_records) {
    Json recs = Json::array();
    for (const auto& rec : r.records) recs.push_back(to_json(rec));
    j["records"] = std::move(recs);
  }
  return j;
}

Json to_json(const SweepReport& r, bool include_records) {
  Json runs = Json::array();
  for (const auto& run : r.runs) runs.push_back(to_json(run, include_records));
  Json means = Json::object();
  for (const auto& v : r.variants()) {
    try {
      means[v] = r.mean_ap_iou(v);
    } catch (const InvalidArgument&) {
      means[v] = nullptr;
    }
  }
  return {{"title", r.title}, {"data", "synthetic"}, {"mean_ap_iou", means}, {"runs", runs}};
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

void write_json_file(const fs::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

std::vector<Scene> read_scenes(const fs::path& path) {
  const Json j = read_json_file(path);
  std::vector<Scene> out;
  if (j.is_object() && j.contains("scenes")) {
    for (const auto& s : j.at("scenes")) out.push_back(scene_from_json(s));
  } else {
    out.push_back(scene_from_json(j));
  }
  return out;
}

void write_scenes(const fs::path& path, const std::vector<Scene>& scenes) {
  Json arr = Json::array();
  for (const auto& s : scenes) arr.push_back(to_json(s));
  write_json_file(path, {{"format", "catpose-scenes"}, {"version", kFormatVersion}, {"scenes", arr}});
}

std::vector<Prediction> read_predictions_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<Prediction> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(prediction_from_json(Json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_predictions_jsonl(const fs::path& path, const std::vector<Prediction>& preds,
                             const std::vector<Detection>* detections) {
  if (detections != nullptr && detections->size() != preds.size()) {
    throw InvalidArgument("one detection per prediction expected");
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    Json j = to_json(preds[i]);
    if (detections != nullptr) {
      const Detection& d = (*detections)[i];
      j["bbox"] = Json::array({d.bbox2d.u_min, d.bbox2d.v_min, d.bbox2d.u_max, d.bbox2d.v_max});
      j["kps_disp"] = keypoints_json(d.kps_disp);
      j["kps_heat"] = keypoints_json(d.kps_heat);
      j["rel_dims"] = to_json(d.rel_dims);
    }
    out << j.dump() << '\n';
  }
  write_text_file(path, out.str());
}

std::vector<Scene> read_ground_truth_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::map<int, Scene> by_index;
  std::optional<CameraIntrinsics> first_camera;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json j = Json::parse(line);
      const int s = field<int>(j, "scene");
      if (s < 0) throw FormatError("negative scene index");
      const CameraIntrinsics cam = camera_from_json(j.at("camera"));
      if (!first_camera) first_camera = cam;
      auto [it, inserted] = by_index.try_emplace(s);
      if (inserted) it->second.camera = cam;
      it->second.objects.push_back(scene_object_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::vector<Scene> out;
  if (by_index.empty()) return out;
  out.resize(static_cast<std::size_t>(by_index.rbegin()->first) + 1);
  for (auto& s : out) s.camera = *first_camera;
  for (auto& [i, s] : by_index) out[i] = std::move(s);
  return out;
}

void write_ground_truth_jsonl(const fs::path& path, const std::vector<Scene>& scenes) {
  std::ostringstream out;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    for (const auto& o : scenes[s].objects) {
      Json j = {{"scene", s}, {"camera", to_json(scenes[s].camera)}};
      const Json obj = to_json(o);
      for (const auto& [k, v] : obj.items()) j[k] = v;
      out << j.dump() << '\n';
    }
  }
  write_text_file(path, out.str());
}

void write_tensor_bundle(const fs::path& prefix, const std::vector<NamedArray>& arrays,
                         const std::string& format, const Json& meta) {
  const fs::path manifest = manifest_path(prefix);
  const fs::path data = data_path_for(manifest);
  if (manifest.has_parent_path()) fs::create_directories(manifest.parent_path());
  std::ofstream out(data, std::ios::binary);
  if (!out) throw FormatError("cannot write " + data.string());
  Json tensors = Json::array();
  std::size_t offset = 0;
  for (const auto& a : arrays) {
    if (element_count(a.shape) != a.data.size()) {
      throw InvalidArgument("array '" + a.name + "' data does not match its shape");
    }
    tensors.push_back({{"name", a.name}, {"shape", a.shape}, {"offset", offset}});
    write_doubles(out, a.data);
    offset += a.data.size() * sizeof(double);
  }
  out.close();
  write_json_file(manifest, {{"format", format},
                             {"version", kFormatVersion},
                             {"dtype", "float64"},
                             {"byte_order", "little"},
                             {"layout", "row-major"},
                             {"data_file", data.filename().string()},
                             {"meta", meta},
                             {"tensors", tensors}});
}

const NamedArray& TensorBundle::get(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return a;
  }
  throw FormatError("tensor '" + name + "' missing from bundle");
}

TensorBundle read_tensor_bundle(const fs::path& manifest_or_prefix) {
  const fs::path manifest = manifest_path(manifest_or_prefix);
  const Json j = read_json_file(manifest);
  if (field<std::string>(j, "dtype") != "float64") throw FormatError("unsupported dtype");
  if (field_or<std::string>(j, "byte_order", "little") != "little") {
    throw FormatError("unsupported byte order");
  }
  TensorBundle b;
  b.format = field<std::string>(j, "format");
  b.meta = j.contains("meta") ? j.at("meta") : Json::object();
  const fs::path data = manifest.parent_path() / field<std::string>(j, "data_file");
  std::ifstream in(data, std::ios::binary);
  if (!in) throw FormatError("cannot open " + data.string());
  for (const auto& t : j.at("tensors")) {
    NamedArray a;
    a.name = field<std::string>(t, "name");
    a.shape = field<std::vector<int>>(t, "shape");
    a.data.resize(element_count(a.shape));
    in.seekg(static_cast<std::streamoff>(field<std::size_t>(t, "offset")));
    read_doubles(in, a.data);
    b.arrays.push_back(std::move(a));
  }
  return b;
}

void write_maps(const fs::path& prefix, const MapsFile& file) {
  if (file.cameras.size() != file.maps.size()) {
    throw InvalidArgument("one camera per map set expected");
  }
  std::vector<NamedArray> arrays;
  Json cams = Json::array();
  for (std::size_t s = 0; s < file.maps.size(); ++s) {
    cams.push_back(to_json(file.cameras[s]));
    for (Head h : kAllHeads) {
      const Tensor& t = file.maps[s][h];
      const auto d = t.data();
      arrays.push_back({std::to_string(s) + "/" + std::string(head_name(h)),
                        {t.channels(), t.height(), t.width()},
                        std::vector<double>(d.begin(), d.end())});
    }
  }
  write_tensor_bundle(prefix, arrays, "catpose-maps",
                      {{"output_stride", kOutputStride},
                       {"num_scenes", file.maps.size()},
                       {"cameras", cams}});
}

MapsFile read_maps(const fs::path& manifest_or_prefix) {
  const TensorBundle b = read_tensor_bundle(manifest_or_prefix);
  if (b.format != "catpose-maps") throw FormatError("not a maps bundle: " + b.format);
  MapsFile f;
  const auto n = field<std::size_t>(b.meta, "num_scenes");
  const Json& cams = b.meta.at("cameras");
  if (cams.size() != n) throw FormatError("camera count does not match scene count");
  for (std::size_t s = 0; s < n; ++s) {
    f.cameras.push_back(camera_from_json(cams[s]));
    OutputMaps m;
    for (Head h : kAllHeads) {
      const NamedArray& a = b.get(std::to_string(s) + "/" + std::string(head_name(h)));
      if (a.shape.size() != 3 || a.shape[0] != kHeadChannels[static_cast<int>(h)]) {
        throw FormatError("bad shape for head " + std::string(head_name(h)));
      }
      Tensor t(a.shape[0], a.shape[1], a.shape[2]);
      std::copy(a.data.begin(), a.data.end(), t.data().begin());
      m[h] = std::move(t);
    }
    for (Head h : kAllHeads) {
      if (m[h].height() != m.height() || m[h].width() != m.width()) {
        throw FormatError("heads of scene " + std::to_string(s) + " differ in spatial size");
      }
    }
    f.maps.push_back(std::move(m));
  }
  return f;
}

namespace {

void push_kernel(std::vector<NamedArray>& out, const std::string& name, const ConvKernel& k) {
  out.push_back({name + ".weight", {k.out_channels, k.in_channels, k.size, k.size}, k.weights});
  if (!k.bias.empty()) out.push_back({name + ".bias", {k.out_channels}, k.bias});
}

ConvKernel pull_kernel(const TensorBundle& b, const std::string& name) {
  const NamedArray& w = b.get(name + ".weight");
  if (w.shape.size() != 4 || w.shape[2] != w.shape[3]) {
    throw FormatError(name + ".weight must have shape [out, in, k, k]");
  }
  bool has_bias = false;
  for (const auto& a : b.arrays) has_bias = has_bias || a.name == name + ".bias";
  ConvKernel k(w.shape[0], w.shape[1], w.shape[2], has_bias);
  k.weights = w.data;
  if (has_bias) {
    const NamedArray& bias = b.get(name + ".bias");
    if (bias.shape.size() != 1 || bias.shape[0] != k.out_channels) {
      throw FormatError(name + ".bias has the wrong shape");
    }
    k.bias = bias.data;
  }
  return k;
}

}  // namespace

void write_model(const fs::path& prefix, const ConvGRUModel& model) {
  std::vector<NamedArray> arrays;
  push_kernel(arrays, "gru.x_update", model.gru.x_update);
  push_kernel(arrays, "gru.h_update", model.gru.h_update);
  push_kernel(arrays, "gru.x_reset", model.gru.x_reset);
  push_kernel(arrays, "gru.h_reset", model.gru.h_reset);
  push_kernel(arrays, "gru.x_candidate", model.gru.x_candidate);
  push_kernel(arrays, "gru.h_candidate", model.gru.h_candidate);
  Json groups = Json::object();
  for (Head h : kAllHeads) {
    const std::string base = "head." + std::string(head_name(h));
    const HeadWeights& hw = model.heads.heads[static_cast<int>(h)];
    push_kernel(arrays, base + ".hidden", hw.hidden);
    push_kernel(arrays, base + ".output", hw.output);
    groups[std::string(head_name(h))] = head_timestep(h);
  }
  write_tensor_bundle(prefix, arrays, "catpose-convgru", {{"head_timesteps", groups}});
}

ConvGRUModel read_model(const fs::path& manifest_or_prefix) {
  const TensorBundle b = read_tensor_bundle(manifest_or_prefix);
  if (b.format != "catpose-convgru") throw FormatError("not a convGRU weight bundle: " + b.format);
  ConvGRUModel m;
  m.gru.x_update = pull_kernel(b, "gru.x_update");
  m.gru.h_update = pull_kernel(b, "gru.h_update");
  m.gru.x_reset = pull_kernel(b, "gru.x_reset");
  m.gru.h_reset = pull_kernel(b, "gru.h_reset");
  m.gru.x_candidate = pull_kernel(b, "gru.x_candidate");
  m.gru.h_candidate = pull_kernel(b, "gru.h_candidate");
  for (Head h : kAllHeads) {
    const std::string base = "head." + std::string(head_name(h));
    HeadWeights& hw = m.heads.heads[static_cast<int>(h)];
    hw.hidden = pull_kernel(b, base + ".hidden");
    hw.output = pull_kernel(b, base + ".output");
    if (hw.output.out_channels != kHeadChannels[static_cast<int>(h)]) {
      throw FormatError(base + ": wrong output channel count");
    }
  }
  return m;
}

std::string format_run_table(const RunReport& r) {
  TextTable t(summary_header());
  t.add(summary_row(r.variant.empty() ? std::string(strategy_name(r.strategy)) + "/" +
                                            std::string(solver_name(r.solver))
                                      : r.variant,
                    r.profile.empty() ? "-" : r.profile, r.summary));
  return "synthetic data, " + std::to_string(r.num_scenes) + " scenes\n" + t.str();
}

std::string format_sweep_table(const SweepReport& r) {
  TextTable t(summary_header());
  const auto variants = r.variants();
  for (const auto& run : r.runs) t.add(summary_row(run.variant, run.profile, run.summary));
  t.rule();
  for (const auto& v : variants) {
    std::string mean = "n/a";
    try {
      mean = fmt(r.mean_ap_iou(v));
    } catch (const InvalidArgument&) {
    }
    t.add({v, "mean", mean});
  }
  return r.title + " (synthetic data)\n" + t.str();
}

}  // namespace catpose
