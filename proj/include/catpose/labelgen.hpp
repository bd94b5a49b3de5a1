#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catpose/detection.hpp"
#include "catpose/scene.hpp"
#include "catpose/tensor.hpp"

namespace catpose {

inline constexpr int kOutputStride = 4;
inline constexpr int kNumHeads = 7;
inline constexpr int kSymmetryVariants = 12;

enum class Head : int {
  kCenterHeatmap = 0,
  kCenterOffset,
  kBboxSize,
  kKpDisplacements,
  kKpHeatmaps,
  kKpOffsets,
  kRelDims,
};

inline constexpr std::array<Head, kNumHeads> kAllHeads = {
    Head::kCenterHeatmap, Head::kCenterOffset, Head::kBboxSize,  Head::kKpDisplacements,
    Head::kKpHeatmaps,    Head::kKpOffsets,    Head::kRelDims};

/// Channel count per head. The y entry of the relative dims is always 1 and is not stored.
inline constexpr std::array<int, kNumHeads> kHeadChannels = {1, 2, 2, 16, 8, 16, 2};

std::string_view head_name(Head h);
Head head_from_name(std::string_view name);
bool is_heatmap_head(Head h);

/// The seven dense outputs at quarter resolution.
struct OutputMaps {
  std::array<Tensor, kNumHeads> heads;

  static OutputMaps zeros(int map_height, int map_width);

  Tensor& operator[](Head h) { return heads[static_cast<int>(h)]; }
  const Tensor& operator[](Head h) const { return heads[static_cast<int>(h)]; }
  int height() const { return heads[0].height(); }
  int width() const { return heads[0].width(); }

  bool operator==(const OutputMaps&) const = default;
};

/// Ownership masks for the regression targets. `center` marks cells that carry an
/// object's center-indexed regressions; `keypoint` channel k marks the cell that
/// carries vertex k's sub-pixel offset.
struct LabelMasks {
  Tensor center;
  Tensor keypoint;
  int num_objects = 0;
  int num_keypoints = 0;
};

/// Continuous per-object label quantities, all in input pixels.
struct ObjectLabel {
  int object_index = 0;
  Vec2 center = Vec2::Zero();
  Rect bbox;
  std::array<Vec2, kNumVertices> kp_disp{};
  std::array<Vec2, kNumVertices> kp_heat{};
  std::array<bool, kNumVertices> heat_present{};
  RelativeDims dims;
  double sigma = 1.0;
};

struct EncodedScene {
  OutputMaps maps;
  LabelMasks masks;
  std::vector<ObjectLabel> objects;
  std::vector<Detection> ground_truth;
  std::vector<std::string> warnings;
};

/// Gaussian sigma (output-stride units) from a 2D box size: max(diag / 18, 1).
double gaussian_sigma(double bbox_w, double bbox_h);

struct HeatPeak {
  double u = 0.0;
  double v = 0.0;
  double sigma = 1.0;
};

/// Max-combines one Gaussian into a single-channel plane of size height x width.
/// The peak sits at cell (floor(u), floor(v)); support is truncated at 3 sigma.
void draw_gaussian(std::span<double> plane, int height, int width, const HeatPeak& peak);

Tensor render_heatmap(std::span<const HeatPeak> peaks, int map_height, int map_width);

/// Labels for one object: projects the metric cuboid and derives the 2D box.
ObjectLabel make_object_label(const SceneObject& obj, const CameraIntrinsics& camera,
                              int object_index);

struct RenderResult {
  OutputMaps maps;
  LabelMasks masks;
  std::vector<std::string> warnings;
};

/// Rasterizes object labels into output maps. When two objects share a center cell,
/// the one with the larger 2D box area owns the regression values.
RenderResult render_labels(std::span<const ObjectLabel> labels, int map_height, int map_width);

EncodedScene encode_scene(const Scene& scene);

/// Label variants for the symmetric loss. Variant k rotates the cuboid of every
/// symmetric object by 2*pi*k/count about its y axis; the keypoint maps change
/// while center, box size, and relative dims stay those of variant 0.
std::vector<EncodedScene> encode_symmetric_variants(const Scene& scene,
                                                    int count = kSymmetryVariants);

}  // namespace catpose
