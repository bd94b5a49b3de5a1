#include "catpose/labelgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "catpose/errors.hpp"

namespace catpose {

namespace {

constexpr std::array<std::string_view, kNumHeads> kHeadNames = {
    "center_heatmap", "center_offset", "bbox_size", "kp_displacements",
    "kp_heatmaps",    "kp_offsets",    "rel_dims"};

int floor_cell(double v) {
  // Values far outside the map collapse to a sentinel that is never in bounds.
  if (!std::isfinite(v) || std::abs(v) > 1e8) return -1'000'000'000;
  return static_cast<int>(std::floor(v));
}

}  // namespace

std::string_view head_name(Head h) { return kHeadNames[static_cast<int>(h)]; }

Head head_from_name(std::string_view name) {
  for (int i = 0; i < kNumHeads; ++i) {
    if (kHeadNames[i] == name) return static_cast<Head>(i);
  }
  throw InvalidArgument("unknown output head: " + std::string(name));
}

bool is_heatmap_head(Head h) { return h == Head::kCenterHeatmap || h == Head::kKpHeatmaps; }

OutputMaps OutputMaps::zeros(int map_height, int map_width) {
  OutputMaps m;
  for (int i = 0; i < kNumHeads; ++i) m.heads[i] = Tensor(kHeadChannels[i], map_height, map_width);
  return m;
}

double gaussian_sigma(double bbox_w, double bbox_h) {
  if (!(bbox_w > 0.0) || !(bbox_h > 0.0)) throw InvalidArgument("box size must be positive");
  return std::max(std::hypot(bbox_w, bbox_h) / 18.0, 1.0);
}

void draw_gaussian(std::span<double> plane, int height, int width, const HeatPeak& peak) {
  if (!(peak.sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  const int pu = floor_cell(peak.u);
  const int pv = floor_cell(peak.v);
  const double limit = 9.0 * peak.sigma * peak.sigma;
  const int r = static_cast<int>(std::floor(3.0 * peak.sigma));
  const double denom = 2.0 * peak.sigma * peak.sigma;
  for (int dy = -r; dy <= r; ++dy) {
    const long long y = static_cast<long long>(pv) + dy;
    if (y < 0 || y >= height) continue;
    for (int dx = -r; dx <= r; ++dx) {
      const long long x = static_cast<long long>(pu) + dx;
      if (x < 0 || x >= width) continue;
      const double d2 = static_cast<double>(dx * dx + dy * dy);
      if (d2 > limit) continue;
      double& cell = plane[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)];
      cell = std::max(cell, std::exp(-d2 / denom));
    }
  }
}

Tensor render_heatmap(std::span<const HeatPeak> peaks, int map_height, int map_width) {
  Tensor t(1, map_height, map_width);
  for (const auto& p : peaks) draw_gaussian(t.channel(0), map_height, map_width, p);
  return t;
}

ObjectLabel make_object_label(const SceneObject& obj, const CameraIntrinsics& camera,
                              int object_index) {
  obj.dims.validate();
  if (!(obj.height_m > 0.0)) throw InvalidArgument("object height must be positive");
  const auto verts = box_vertices(obj.metric_extents());
  const auto kps = project(verts, obj.pose, camera);

  ObjectLabel label;
  label.object_index = object_index;
  label.bbox = bbox2d_from_points(kps);
  label.center = label.bbox.center();
  for (int k = 0; k < kNumVertices; ++k) {
    label.kp_disp[k] = kps[k];
    label.kp_heat[k] = kps[k];
    label.heat_present[k] = true;
  }
  label.dims = obj.dims;
  const double w = std::max(label.bbox.width() / kOutputStride, 1e-6);
  const double h = std::max(label.bbox.height() / kOutputStride, 1e-6);
  label.sigma = gaussian_sigma(w, h);
  return label;
}

RenderResult render_labels(std::span<const ObjectLabel> labels, int map_height, int map_width) {
  RenderResult out;
  out.maps = OutputMaps::zeros(map_height, map_width);
  out.masks.center = Tensor(1, map_height, map_width);
  out.masks.keypoint = Tensor(kNumVertices, map_height, map_width);

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return labels[a].bbox.area() < labels[b].bbox.area();
  });

  constexpr double R = kOutputStride;
  auto& hm = out.maps[Head::kCenterHeatmap];
  auto& off = out.maps[Head::kCenterOffset];
  auto& size = out.maps[Head::kBboxSize];
  auto& disp = out.maps[Head::kKpDisplacements];
  auto& khm = out.maps[Head::kKpHeatmaps];
  auto& koff = out.maps[Head::kKpOffsets];
  auto& dims = out.maps[Head::kRelDims];

  for (std::size_t idx : order) {
    const ObjectLabel& lab = labels[idx];
    const Vec2 c = lab.center / R;
    const int cu = floor_cell(c.x());
    const int cv = floor_cell(c.y());
    if (!hm.in_bounds(cv, cu)) {
      out.warnings.push_back("object " + std::to_string(lab.object_index) +
                             " skipped: center cell outside the output map");
      continue;
    }
    draw_gaussian(hm.channel(0), map_height, map_width, {c.x(), c.y(), lab.sigma});
    off(0, cv, cu) = c.x() - cu;
    off(1, cv, cu) = c.y() - cv;
    size(0, cv, cu) = lab.bbox.width() / R;
    size(1, cv, cu) = lab.bbox.height() / R;
    for (int k = 0; k < kNumVertices; ++k) {
      disp(2 * k, cv, cu) = lab.kp_disp[k].x() / R - c.x();
      disp(2 * k + 1, cv, cu) = lab.kp_disp[k].y() / R - c.y();
    }
    dims(0, cv, cu) = lab.dims.rx;
    dims(1, cv, cu) = lab.dims.rz;
    out.masks.center(0, cv, cu) = 1.0;
    ++out.masks.num_objects;

    for (int k = 0; k < kNumVertices; ++k) {
      if (!lab.heat_present[k]) continue;
      const Vec2 q = lab.kp_heat[k] / R;
      draw_gaussian(khm.channel(k), map_height, map_width, {q.x(), q.y(), lab.sigma});
      const int qu = floor_cell(q.x());
      const int qv = floor_cell(q.y());
      if (!koff.in_bounds(qv, qu)) continue;
      koff(2 * k, qv, qu) = q.x() - qu;
      koff(2 * k + 1, qv, qu) = q.y() - qv;
      out.masks.keypoint(k, qv, qu) = 1.0;
    }
  }
  out.masks.num_keypoints = kNumVertices * out.masks.num_objects;
  return out;
}

namespace {

int map_size(int image_size) { return image_size / kOutputStride; }

EncodedScene encode_from_labels(const Scene& scene, std::vector<ObjectLabel> labels) {
  EncodedScene enc;
  auto rendered = render_labels(labels, map_size(scene.camera.height), map_size(scene.camera.width));
  enc.maps = std::move(rendered.maps);
  enc.masks = std::move(rendered.masks);
  enc.warnings = std::move(rendered.warnings);
  for (const auto& lab : labels) {
    const SceneObject& obj = scene.objects[lab.object_index];
    Detection d;
    d.center = lab.center;
    d.score = 1.0;
    d.bbox2d = lab.bbox;
    d.kps_disp = Keypoints2D::all_valid(lab.kp_disp);
    d.kps_heat = Keypoints2D::all_valid(lab.kp_heat);
    d.rel_dims = lab.dims;
    d.pose = obj.relative_pose();
    enc.ground_truth.push_back(d);
  }
  enc.objects = std::move(labels);
  return enc;
}

}  // namespace

EncodedScene encode_scene(const Scene& scene) {
  scene.camera.validate();
  std::vector<ObjectLabel> labels;
  labels.reserve(scene.objects.size());
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    labels.push_back(make_object_label(scene.objects[i], scene.camera, static_cast<int>(i)));
  }
  return encode_from_labels(scene, std::move(labels));
}

std::vector<EncodedScene> encode_symmetric_variants(const Scene& scene, int count) {
  if (count < 1) throw InvalidArgument("variant count must be positive");
  scene.camera.validate();
  std::vector<ObjectLabel> base;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    base.push_back(make_object_label(scene.objects[i], scene.camera, static_cast<int>(i)));
  }
  std::vector<EncodedScene> variants;
  variants.reserve(count);
  for (int v = 0; v < count; ++v) {
    const double angle = 2.0 * std::numbers::pi * v / count;
    std::vector<ObjectLabel> labels = base;
    for (auto& lab : labels) {
      const SceneObject& obj = scene.objects[lab.object_index];
      if (!obj.symmetric || v == 0) continue;
      SceneObject rotated = obj;
      rotated.pose = Pose(obj.pose.rotation_matrix() * rotation_about_y(angle), obj.pose.translation());
      const ObjectLabel r = make_object_label(rotated, scene.camera, lab.object_index);
      lab.kp_disp = r.kp_disp;
      lab.kp_heat = r.kp_heat;
    }
    EncodedScene enc = encode_from_labels(scene, std::move(labels));
    for (std::size_t i = 0; i < enc.ground_truth.size(); ++i) {
      const SceneObject& obj = scene.objects[enc.objects[i].object_index];
      if (!obj.symmetric) continue;
      const Pose p = obj.relative_pose();
      enc.ground_truth[i].pose = Pose(p.rotation_matrix() * rotation_about_y(angle), p.translation());
    }
    variants.push_back(std::move(enc));
  }
  return variants;
}

}  // namespace catpose
