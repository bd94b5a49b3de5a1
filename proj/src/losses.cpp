#include "catpose/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "catpose/errors.hpp"

namespace catpose {

double LossWeights::operator[](Head h) const {
  switch (h) {
    case Head::kCenterHeatmap: return center_heatmap;
    case Head::kCenterOffset: return center_offset;
    case Head::kBboxSize: return bbox_size;
    case Head::kKpDisplacements: return kp_displacements;
    case Head::kKpHeatmaps: return kp_heatmaps;
    case Head::kKpOffsets: return kp_offsets;
    case Head::kRelDims: return rel_dims;
  }
  return 0.0;
}

LossWeights LossWeights::scaled(double c) const {
  return {center_heatmap * c, center_offset * c, bbox_size * c, kp_displacements * c,
          kp_heatmaps * c,    kp_offsets * c,    rel_dims * c};
}

LossValue focal_loss(const Tensor& pred, const Tensor& gt, const FocalParams& params, double count) {
  if (!pred.same_shape(gt)) throw InvalidArgument("focal loss: shape mismatch");
  LossValue out{0.0, Tensor(pred.channels(), pred.height(), pred.width())};
  if (count <= 0.0) return out;

  const double a = params.alpha;
  const double b = params.beta;
  const auto p = pred.data();
  const auto g = gt.data();
  auto grad = out.gradient.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double raw = p[i];
    const double y = std::clamp(raw, kFocalClamp, 1.0 - kFocalClamp);
    const bool clamped = y != raw;
    double term = 0.0;
    double dterm = 0.0;
    if (g[i] == 1.0) {
      const double one_m = 1.0 - y;
      term = std::pow(one_m, a) * std::log(y);
      dterm = -a * std::pow(one_m, a - 1.0) * std::log(y) + std::pow(one_m, a) / y;
    } else {
      const double neg_w = std::pow(1.0 - g[i], b);
      const double l1m = std::log(1.0 - y);
      term = neg_w * std::pow(y, a) * l1m;
      dterm = neg_w * (a * std::pow(y, a - 1.0) * l1m - std::pow(y, a) / (1.0 - y));
    }
    sum += term;
    grad[i] = clamped ? 0.0 : -dterm / count;
  }
  out.value = -sum / count;
  return out;
}

LossValue masked_l1(const Tensor& pred, const Tensor& gt, const Tensor& mask, double count) {
  if (!pred.same_shape(gt)) throw InvalidArgument("masked L1: shape mismatch");
  if (mask.height() != pred.height() || mask.width() != pred.width() || mask.channels() <= 0 ||
      pred.channels() % mask.channels() != 0) {
    throw InvalidArgument("masked L1: mask shape incompatible with prediction");
  }
  LossValue out{0.0, Tensor(pred.channels(), pred.height(), pred.width())};
  if (count <= 0.0) return out;
  const int group = pred.channels() / mask.channels();
  double sum = 0.0;
  for (int c = 0; c < pred.channels(); ++c) {
    const auto m = mask.channel(c / group);
    const auto p = pred.channel(c);
    const auto g = gt.channel(c);
    auto d = out.gradient.channel(c);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (m[i] == 0.0) continue;
      const double diff = p[i] - g[i];
      sum += std::abs(diff);
      d[i] = (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0)) / count;
    }
  }
  out.value = sum / count;
  return out;
}

LabelSet labels_from(const EncodedScene& enc) { return {enc.maps, enc.masks}; }

namespace {

double mask_sum(const Tensor& m) {
  const auto d = m.data();
  return std::accumulate(d.begin(), d.end(), 0.0);
}

}  // namespace

LossBreakdown total_loss(const OutputMaps& pred, const LabelSet& labels, const LossWeights& w,
                         const FocalParams& focal) {
  const OutputMaps& gt = labels.targets;
  const double n_center_cells = mask_sum(labels.masks.center);
  const double n_kp_cells = mask_sum(labels.masks.keypoint);

  LossBreakdown out;
  out.gradient = OutputMaps::zeros(pred.height(), pred.width());
  for (Head h : kAllHeads) {
    LossValue lv;
    switch (h) {
      case Head::kCenterHeatmap:
        lv = focal_loss(pred[h], gt[h], focal, labels.masks.num_objects);
        break;
      case Head::kKpHeatmaps:
        lv = focal_loss(pred[h], gt[h], focal, labels.masks.num_keypoints);
        break;
      case Head::kKpOffsets:
        lv = masked_l1(pred[h], gt[h], labels.masks.keypoint, n_kp_cells);
        break;
      default:
        lv = masked_l1(pred[h], gt[h], labels.masks.center, n_center_cells);
        break;
    }
    const double wt = w[h];
    const int i = static_cast<int>(h);
    out.terms[i] = wt * lv.value;
    auto g = out.gradient.heads[i].data();
    const auto lg = lv.gradient.data();
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = wt * lg[k];
  }
  out.total = std::accumulate(out.terms.begin(), out.terms.end(), 0.0);
  return out;
}

SymmetricLoss symmetric_loss(const OutputMaps& pred, std::span<const LabelSet> variants,
                             const LossWeights& w, const FocalParams& focal) {
  if (variants.empty()) throw InvalidArgument("symmetric loss needs at least one label variant");
  SymmetricLoss best;
  best.value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < variants.size(); ++i) {
    LossBreakdown lb = total_loss(pred, variants[i], w, focal);
    if (lb.total < best.value) {
      best.value = lb.total;
      best.argmin = static_cast<int>(i);
      best.best = std::move(lb);
    }
  }
  return best;
}

}  // namespace catpose
