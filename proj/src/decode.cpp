#include "catpose/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "catpose/errors.hpp"

namespace catpose {

namespace {

constexpr std::array<std::string_view, 5> kStrategyNames = {"displacement", "heatmap", "distance",
                                                            "sampling", "combined"};

constexpr int kMaxKeypointPeaks = 256;

}  // namespace

std::string_view strategy_name(Strategy s) { return kStrategyNames[static_cast<int>(s)]; }

Strategy strategy_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kStrategyNames.size(); ++i) {
    if (kStrategyNames[i] == name) return static_cast<Strategy>(i);
  }
  throw InvalidArgument("unknown decoding strategy: " + std::string(name));
}

void DecodeConfig::validate() const {
  if (max_detections < 1) throw InvalidArgument("max_detections must be >= 1");
  if (!(score_threshold > 0.0 && score_threshold < 1.0)) {
    throw InvalidArgument("score_threshold must lie in (0, 1)");
  }
  if (!(margin_frac >= 0.0)) throw InvalidArgument("margin_frac must be non-negative");
  if (sample_count < 1) throw InvalidArgument("sample_count must be >= 1");
  if (!(distance_frac >= 0.0) || !(sampling_sigma_frac >= 0.0)) {
    throw InvalidArgument("strategy fractions must be non-negative");
  }
}

std::vector<Peak> extract_peaks(const Tensor& heatmap, int max_peaks, double threshold,
                                int channel) {
  const int h = heatmap.height();
  const int w = heatmap.width();
  std::vector<Peak> peaks;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = heatmap(channel, y, x);
      if (!(v >= threshold)) continue;
      bool is_peak = true;
      for (int dy = -1; dy <= 1 && is_peak; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int ny = y + dy;
          const int nx = x + dx;
          if (!heatmap.in_bounds(ny, nx)) continue;
          const double n = heatmap(channel, ny, nx);
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (n > v || (n == v && earlier)) {
            is_peak = false;
            break;
          }
        }
      }
      if (is_peak) peaks.push_back({x, y, v});
    }
  }
  // Row-major collection order is the tie-break.
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.score > b.score; });
  if (static_cast<int>(peaks.size()) > max_peaks) peaks.resize(std::max(max_peaks, 0));
  return peaks;
}

std::vector<Detection> decode_objects(const OutputMaps& maps, const DecodeConfig& cfg,
                                      const CameraIntrinsics& camera) {
  cfg.validate();
  (void)camera;
  constexpr double R = kOutputStride;
  const Tensor& hm = maps[Head::kCenterHeatmap];
  const Tensor& off = maps[Head::kCenterOffset];
  const Tensor& size = maps[Head::kBboxSize];
  const Tensor& disp = maps[Head::kKpDisplacements];
  const Tensor& khm = maps[Head::kKpHeatmaps];
  const Tensor& koff = maps[Head::kKpOffsets];
  const Tensor& dims = maps[Head::kRelDims];

  struct KpCandidate {
    Vec2 point;
    double score;
  };
  std::array<std::vector<KpCandidate>, kNumVertices> candidates;
  for (int k = 0; k < kNumVertices; ++k) {
    for (const Peak& p : extract_peaks(khm, kMaxKeypointPeaks, cfg.score_threshold, k)) {
      const Vec2 q(p.x + koff(2 * k, p.y, p.x), p.y + koff(2 * k + 1, p.y, p.x));
      candidates[k].push_back({q * R, p.score});
    }
  }

  std::vector<Detection> out;
  for (const Peak& c : extract_peaks(hm, cfg.max_detections, cfg.score_threshold)) {
    Detection det;
    const Vec2 center_out(c.x + off(0, c.y, c.x), c.y + off(1, c.y, c.x));
    det.center = center_out * R;
    det.score = c.score;
    const Vec2 half = Vec2(size(0, c.y, c.x), size(1, c.y, c.x)).cwiseAbs() * R / 2.0;
    det.bbox2d = {det.center.x() - half.x(), det.center.y() - half.y(), det.center.x() + half.x(),
                  det.center.y() + half.y()};
    for (int k = 0; k < kNumVertices; ++k) {
      const Vec2 d(disp(2 * k, c.y, c.x), disp(2 * k + 1, c.y, c.x));
      det.kps_disp.points[k] = (center_out + d) * R;
      det.kps_disp.valid[k] = true;
      det.kps_disp.confidence[k] = 1.0;
    }
    const Rect search = det.bbox2d.expanded(cfg.margin_frac * det.bbox2d.diagonal());
    for (int k = 0; k < kNumVertices; ++k) {
      const KpCandidate* best = nullptr;
      double best_dist = std::numeric_limits<double>::infinity();
      for (const auto& cand : candidates[k]) {
        if (!search.contains(cand.point)) continue;
        const double dist = (cand.point - det.kps_disp.points[k]).norm();
        if (best == nullptr || cand.score > best->score ||
            (cand.score == best->score && dist < best_dist)) {
          best = &cand;
          best_dist = dist;
        }
      }
      if (best != nullptr) {
        det.kps_heat.points[k] = best->point;
        det.kps_heat.valid[k] = true;
        det.kps_heat.confidence[k] = best->score;
      }
    }
    det.rel_dims = {std::max(dims(0, c.y, c.x), 1e-3), std::max(dims(1, c.y, c.x), 1e-3)};
    out.push_back(det);
  }
  return out;
}

std::vector<Correspondence> build_correspondences(const Detection& det, const DecodeConfig& cfg) {
  std::vector<Correspondence> out;
  const double diag = det.bbox2d.diagonal();
  switch (cfg.strategy) {
    case Strategy::kDisplacement:
      for (int k = 0; k < kNumVertices; ++k) out.push_back({k, det.kps_disp.points[k], 1.0});
      break;
    case Strategy::kHeatmap:
      for (int k = 0; k < kNumVertices; ++k) {
        if (det.kps_heat.valid[k]) out.push_back({k, det.kps_heat.points[k], 1.0});
      }
      break;
    case Strategy::kDistance: {
      const double tau = cfg.distance_frac * diag;
      for (int k = 0; k < kNumVertices; ++k) {
        const Vec2& d = det.kps_disp.points[k];
        const bool use_heat =
            det.kps_heat.valid[k] && (det.kps_heat.points[k] - d).norm() <= tau;
        out.push_back({k, use_heat ? det.kps_heat.points[k] : d, 1.0});
      }
      break;
    }
    case Strategy::kSampling: {
      std::mt19937_64 rng(cfg.seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      std::bernoulli_distribution pick_heat(0.5);
      const double sigma = cfg.sampling_sigma_frac * diag;
      const double w = 1.0 / cfg.sample_count;
      for (int k = 0; k < kNumVertices; ++k) {
        for (int s = 0; s < cfg.sample_count; ++s) {
          const bool heat = det.kps_heat.valid[k] && pick_heat(rng);
          const Vec2& mean = heat ? det.kps_heat.points[k] : det.kps_disp.points[k];
          const double nx = normal(rng);
          const double ny = normal(rng);
          out.push_back({k, mean + sigma * Vec2(nx, ny), w});
        }
      }
      break;
    }
    case Strategy::kCombined:
      for (int k = 0; k < kNumVertices; ++k) out.push_back({k, det.kps_disp.points[k], 1.0});
      for (int k = 0; k < kNumVertices; ++k) {
        if (det.kps_heat.valid[k]) out.push_back({k, det.kps_heat.points[k], 1.0});
      }
      break;
  }
  int distinct = 0;
  std::array<bool, kNumVertices> seen{};
  for (const auto& c : out) {
    if (!seen[c.vertex]) {
      seen[c.vertex] = true;
      ++distinct;
    }
  }
  if (distinct < 4) {
    throw InsufficientCorrespondences("need at least 4 distinct vertices, got " +
                                      std::to_string(distinct));
  }
  return out;
}

Keypoints2D keypoints_from_correspondences(std::span<const Correspondence> corr) {
  std::array<Vec2, kNumVertices> sum{};
  std::array<double, kNumVertices> wsum{};
  for (auto& s : sum) s.setZero();
  for (const auto& c : corr) {
    sum[c.vertex] += c.weight * c.point;
    wsum[c.vertex] += c.weight;
  }
  Keypoints2D k;
  for (int i = 0; i < kNumVertices; ++i) {
    if (wsum[i] > 0.0) {
      k.points[i] = sum[i] / wsum[i];
      k.valid[i] = true;
      k.confidence[i] = 1.0;
    } else {
      k.points[i].setZero();
    }
  }
  return k;
}

}  // namespace catpose
