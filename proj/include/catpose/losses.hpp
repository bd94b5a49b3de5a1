#pragma once

#include <array>
#include <span>
#include <vector>

#include "catpose/labelgen.hpp"
#include "catpose/tensor.hpp"

namespace catpose {

struct FocalParams {
  double alpha = 2.0;
  double beta = 4.0;
};

inline constexpr double kFocalClamp = 1e-7;

/// Loss weights, one per output head (center heatmap, center offset, bbox size,
/// displacements, keypoint heatmaps, keypoint offsets, relative dims).
struct LossWeights {
  double center_heatmap = 1.0;
  double center_offset = 1.0;
  double bbox_size = 0.1;
  double kp_displacements = 1.0;
  double kp_heatmaps = 1.0;
  double kp_offsets = 1.0;
  double rel_dims = 1.0;

  double operator[](Head h) const;
  LossWeights scaled(double c) const;
};

struct LossValue {
  double value = 0.0;
  Tensor gradient;  // d value / d pred, same shape as the prediction
};

/// Penalty-reduced focal loss, normalized by `count` (0 -> loss 0).
///
/// Predictions are clamped to [1e-7, 1 - 1e-7]; the gradient is zero where the
/// clamp is active.
LossValue focal_loss(const Tensor& pred, const Tensor& gt, const FocalParams& params, double count);

/// Sum over owned cells and channels of |pred - gt|, divided by `count`.
/// The mask channel count must divide the prediction channel count; prediction
/// channel c is owned where mask channel c / (C / M) is nonzero.
LossValue masked_l1(const Tensor& pred, const Tensor& gt, const Tensor& mask, double count);

struct LabelSet {
  OutputMaps targets;
  LabelMasks masks;
};

LabelSet labels_from(const EncodedScene& enc);

struct LossBreakdown {
  std::array<double, kNumHeads> terms{};  // weighted
  double total = 0.0;
  OutputMaps gradient;
};

LossBreakdown total_loss(const OutputMaps& pred, const LabelSet& labels, const LossWeights& w,
                         const FocalParams& focal = {});

struct SymmetricLoss {
  double value = 0.0;
  int argmin = 0;
  LossBreakdown best;
};

/// Minimum of the asymmetric loss over the label variants.
SymmetricLoss symmetric_loss(const OutputMaps& pred, std::span<const LabelSet> variants,
                             const LossWeights& w, const FocalParams& focal = {});

}  // namespace catpose
