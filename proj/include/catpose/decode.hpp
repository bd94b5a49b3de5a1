#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catpose/detection.hpp"
#include "catpose/labelgen.hpp"

namespace catpose {

enum class Strategy { kDisplacement, kHeatmap, kDistance, kSampling, kCombined };

inline constexpr std::array<Strategy, 5> kAllStrategies = {
    Strategy::kDisplacement, Strategy::kHeatmap, Strategy::kDistance, Strategy::kSampling,
    Strategy::kCombined};

std::string_view strategy_name(Strategy s);
Strategy strategy_from_name(std::string_view name);

struct DecodeConfig {
  Strategy strategy = Strategy::kCombined;
  int max_detections = 10;
  double score_threshold = 0.3;
  double margin_frac = 0.1;
  int sample_count = 20;
  std::uint64_t seed = 0;
  // Distance strategy: keep the heatmap point if within this fraction of the box diagonal.
  double distance_frac = 0.15;
  // Sampling strategy: mixture component sigma as a fraction of the box diagonal.
  double sampling_sigma_frac = 0.05;

  void validate() const;
};

struct Peak {
  int x = 0;
  int y = 0;
  double score = 0.0;
};

/// 3x3 max-pool peak extraction on channel `channel` of `heatmap`.
///
/// A cell is a peak when it equals the maximum of its 3x3 neighbourhood, no
/// earlier cell (row-major) in that neighbourhood has the same value, and its
/// value is at least `threshold`. Results are sorted by score, descending, then
/// row-major; at most `max_peaks` are returned.
std::vector<Peak> extract_peaks(const Tensor& heatmap, int max_peaks, double threshold,
                                int channel = 0);

std::vector<Detection> decode_objects(const OutputMaps& maps, const DecodeConfig& cfg,
                                      const CameraIntrinsics& camera);

struct Correspondence {
  int vertex = 0;
  Vec2 point = Vec2::Zero();
  double weight = 1.0;
};

/// 2D-3D correspondences for one detection under the configured strategy.
/// Throws InsufficientCorrespondences when fewer than four remain.
std::vector<Correspondence> build_correspondences(const Detection& det, const DecodeConfig& cfg);

/// Per-vertex weighted mean of the correspondence points. Vertices without any
/// correspondence are marked invalid.
Keypoints2D keypoints_from_correspondences(std::span<const Correspondence> corr);

}  // namespace catpose
