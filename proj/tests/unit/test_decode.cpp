#include <doctest.h>

#include <algorithm>
#include <set>

#include "catpose/decode.hpp"
#include "catpose/errors.hpp"
#include "catpose/labelgen.hpp"
#include "catpose/simharness.hpp"
#include "generators.hpp"

using namespace catpose;
using catpose::testing::Gen;

namespace {

// Per-cell neighbourhood scan, then a stable sort by score.
std::vector<Peak> brute_force_peaks(const Tensor& t, int k, double thr) {
  std::vector<Peak> out;
  for (int y = 0; y < t.height(); ++y) {
    for (int x = 0; x < t.width(); ++x) {
      const double v = t(0, y, x);
      if (v < thr) continue;
      double mx = -INFINITY;
      bool earlier_tie = false;
      for (int yy = std::max(0, y - 1); yy <= std::min(t.height() - 1, y + 1); ++yy) {
        for (int xx = std::max(0, x - 1); xx <= std::min(t.width() - 1, x + 1); ++xx) {
          mx = std::max(mx, t(0, yy, xx));
          const bool earlier = yy * t.width() + xx < y * t.width() + x;
          if (earlier && t(0, yy, xx) == v) earlier_tie = true;
        }
      }
      if (v == mx && !earlier_tie) out.push_back({x, y, v});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Peak& a, const Peak& b) { return a.score > b.score; });
  if (static_cast<int>(out.size()) > k) out.resize(k);
  return out;
}

bool same_peaks(const std::vector<Peak>& a, const std::vector<Peak>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].x != b[i].x || a[i].y != b[i].y || a[i].score != b[i].score) return false;
  }
  return true;
}

std::vector<Scene> scenes_for_all_profiles(int n, std::uint64_t seed) {
  std::vector<Scene> out;
  for (const auto& p : builtin_profiles()) {
    for (auto& s : sample_scenes(p, n, seed)) out.push_back(std::move(s));
  }
  return out;
}

// Detection matched to the ground-truth object with the nearest center.
const Detection& nearest(const std::vector<Detection>& dets, const Vec2& c) {
  return *std::min_element(dets.begin(), dets.end(), [&](const Detection& a, const Detection& b) {
    return (a.center - c).norm() < (b.center - c).norm();
  });
}

}  // namespace

TEST_SUITE("decode") {
  TEST_CASE("single gaussian gives a single peak") {
    const std::vector<HeatPeak> p{{13.4, 7.9, 1.7}};
    const auto peaks = extract_peaks(render_heatmap(p, 32, 32), 10, 0.3);
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0].x == 13);
    CHECK(peaks[0].y == 7);
    CHECK(peaks[0].score == 1.0);
  }

  TEST_CASE("uniform map ties break row-major") {
    const Tensor t(1, 6, 7, 0.5);
    const auto a = extract_peaks(t, 10, 0.3);
    REQUIRE(a.size() == 1);
    CHECK(a[0].x == 0);
    CHECK(a[0].y == 0);
    CHECK(same_peaks(a, extract_peaks(t, 10, 0.3)));
    CHECK(extract_peaks(t, 10, 0.6).empty());
  }

  TEST_CASE("peaks match the brute-force scan") {
    Gen g(41);
    for (int t = 0; t < 300; ++t) {
      const int h = g.integer(1, 20), w = g.integer(1, 20);
      Tensor m(1, h, w);
      const int levels = g.integer(2, 12);
      for (double& v : m.data()) v = g.integer(0, levels) / static_cast<double>(levels);
      const int k = g.integer(1, 15);
      const double thr = g.uniform(0.05, 0.9);
      CHECK(same_peaks(extract_peaks(m, k, thr), brute_force_peaks(m, k, thr)));
    }
  }

  TEST_CASE("noiseless decoding recovers centers and keypoints") {
    const DecodeConfig cfg;
    for (const auto& scene : scenes_for_all_profiles(10, 42)) {
      const EncodedScene enc = encode_scene(scene);
      const auto dets = decode_objects(enc.maps, cfg, scene.camera);
      REQUIRE(dets.size() == scene.objects.size());
      for (const auto& gt : enc.ground_truth) {
        const Detection& d = nearest(dets, gt.center);
        CHECK((d.center - gt.center).norm() < 0.5);
        CHECK(d.score >= cfg.score_threshold);
        CHECK(std::abs(d.rel_dims.rx - gt.rel_dims.rx) < 1e-12);
        CHECK(std::abs(d.rel_dims.rz - gt.rel_dims.rz) < 1e-12);
        for (int k = 0; k < kNumVertices; ++k) {
          CHECK(d.kps_disp.valid[k]);
          CHECK((d.kps_disp.points[k] - gt.kps_disp.points[k]).norm() < 0.5);
          CHECK(d.kps_heat.valid[k]);
          CHECK((d.kps_heat.points[k] - gt.kps_heat.points[k]).norm() < 0.5);
        }
      }
    }
  }

  TEST_CASE("zeroed keypoint heatmaps leave displacements intact") {
    const Scene scene = sample_scenes(profile_by_name("book"), 1, 43)[0];
    const EncodedScene enc = encode_scene(scene);
    OutputMaps maps = enc.maps;
    for (double& v : maps[Head::kKpHeatmaps].data()) v = 0.0;
    const auto full = decode_objects(enc.maps, {}, scene.camera);
    const auto ablated = decode_objects(maps, {}, scene.camera);
    REQUIRE(full.size() == ablated.size());
    for (std::size_t i = 0; i < full.size(); ++i) {
      CHECK(ablated[i].kps_heat.valid_count() == 0);
      for (int k = 0; k < kNumVertices; ++k) CHECK(ablated[i].kps_disp.points[k] == full[i].kps_disp.points[k]);
    }
  }

  TEST_CASE("two objects keep their own heat keypoints") {
    Scene scene;
    SceneObject a;
    a.pose = Pose(Quat(Eigen::AngleAxisd(0.4, Vec3::UnitY())), Vec3(-0.35, 0.0, 1.5));
    a.dims = {0.7, 0.3};
    a.height_m = 0.3;
    SceneObject b = a;
    b.pose = Pose(Quat(Eigen::AngleAxisd(-0.9, Vec3::UnitY())), Vec3(0.35, 0.05, 1.6));
    b.dims = {1.2, 0.5};
    scene.objects = {a, b};
    const EncodedScene enc = encode_scene(scene);
    const auto dets = decode_objects(enc.maps, {}, scene.camera);
    REQUIRE(dets.size() == 2);
    for (const auto& gt : enc.ground_truth) {
      const Detection& d = nearest(dets, gt.center);
      for (int k = 0; k < kNumVertices; ++k) {
        REQUIRE(d.kps_heat.valid[k]);
        CHECK((d.kps_heat.points[k] - gt.kps_heat.points[k]).norm() < 0.5);
      }
    }
  }

  TEST_CASE("correspondence counts per strategy") {
    const Scene scene = sample_scenes(profile_by_name("cereal_box"), 1, 44)[0];
    const auto dets = decode_objects(encode_scene(scene).maps, {}, scene.camera);
    REQUIRE(!dets.empty());
    const Detection& d = dets[0];
    DecodeConfig cfg;

    cfg.strategy = Strategy::kCombined;
    const auto combined = build_correspondences(d, cfg);
    CHECK(combined.size() == 16);
    std::array<int, kNumVertices> count{};
    for (const auto& c : combined) ++count[c.vertex];
    for (int n : count) CHECK(n == 2);

    cfg.strategy = Strategy::kDisplacement;
    const auto disp = build_correspondences(d, cfg);
    CHECK(disp.size() == 8);
    for (const auto& c : disp) {
      const bool found = std::any_of(combined.begin(), combined.end(), [&](const Correspondence& o) {
        return o.vertex == c.vertex && o.point == c.point;
      });
      CHECK(found);
    }

    cfg.strategy = Strategy::kDistance;
    CHECK(build_correspondences(d, cfg).size() == 8);

    cfg.strategy = Strategy::kSampling;
    const auto s1 = build_correspondences(d, cfg);
    const auto s2 = build_correspondences(d, cfg);
    CHECK(s1.size() == static_cast<std::size_t>(8 * cfg.sample_count));
    for (std::size_t i = 0; i < s1.size(); ++i) {
      CHECK(s1[i].point == s2[i].point);
      CHECK(s1[i].weight == doctest::Approx(1.0 / cfg.sample_count));
    }
    cfg.seed = 99;
    CHECK_FALSE(build_correspondences(d, cfg)[0].point == s1[0].point);

    Detection three = d;
    for (int k = 3; k < kNumVertices; ++k) three.kps_heat.valid[k] = false;
    cfg.strategy = Strategy::kHeatmap;
    CHECK_THROWS_AS(build_correspondences(three, cfg), InsufficientCorrespondences);
    three.kps_heat.valid[3] = true;
    CHECK(build_correspondences(three, cfg).size() == 4);
  }

  TEST_CASE("distance strategy falls back to displacement for far heat points") {
    Detection d;
    d.bbox2d = {0, 0, 100, 0};  // diag 100, tau 15
    for (int k = 0; k < kNumVertices; ++k) {
      d.kps_disp.points[k] = Vec2(10.0 * k, 0);
      d.kps_disp.valid[k] = true;
      d.kps_heat.points[k] = Vec2(10.0 * k, k % 2 ? 14.0 : 16.0);
      d.kps_heat.valid[k] = true;
    }
    d.kps_heat.valid[7] = false;
    DecodeConfig cfg;
    cfg.strategy = Strategy::kDistance;
    const auto c = build_correspondences(d, cfg);
    for (int k = 0; k < kNumVertices; ++k) {
      const bool heat = (k % 2 == 1) && k != 7;
      CHECK(c[k].point == (heat ? d.kps_heat.points[k] : d.kps_disp.points[k]));
    }
  }

  TEST_CASE("noiseless correspondences lie on the true projections") {
    for (const auto& scene : scenes_for_all_profiles(5, 45)) {
      const EncodedScene enc = encode_scene(scene);
      const auto dets = decode_objects(enc.maps, {}, scene.camera);
      for (const auto& gt : enc.ground_truth) {
        const Detection& d = nearest(dets, gt.center);
        for (Strategy s : {Strategy::kDisplacement, Strategy::kHeatmap, Strategy::kDistance, Strategy::kCombined}) {
          DecodeConfig cfg;
          cfg.strategy = s;
          for (const auto& c : build_correspondences(d, cfg)) {
            CHECK((c.point - gt.kps_disp.points[c.vertex]).norm() < 0.5);
          }
        }
        // Sampling scatters by design; its per-vertex sample mean converges instead.
        DecodeConfig cfg;
        cfg.strategy = Strategy::kSampling;
        cfg.sample_count = 4000;
        const Keypoints2D mean = keypoints_from_correspondences(build_correspondences(d, cfg));
        for (int k = 0; k < kNumVertices; ++k) CHECK((mean.points[k] - gt.kps_disp.points[k]).norm() < 0.5);
      }
    }
  }

  TEST_CASE("decoding is deterministic and margin-monotone") {
    Gen g(46);
    NoiseConfig noise = noise_preset("heavy");
    for (const auto& scene : scenes_for_all_profiles(3, 46)) {
      const EncodedScene enc = encode_scene(scene);
      noise.seed = g.integer(0, 1 << 30);
      const OutputMaps maps = perturb(enc, noise, 0);
      DecodeConfig cfg;
      cfg.strategy = Strategy::kSampling;
      const auto a = decode_objects(maps, cfg, scene.camera);
      const auto b = decode_objects(maps, cfg, scene.camera);
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].center == b[i].center);
        const auto ca = build_correspondences(a[i], cfg);
        const auto cb = build_correspondences(b[i], cfg);
        for (std::size_t j = 0; j < ca.size(); ++j) CHECK(ca[j].point == cb[j].point);
      }
      for (double m : {0.0, 0.05, 0.1, 0.2, 0.5, 1.0}) {
        DecodeConfig small, large;
        small.margin_frac = m;
        large.margin_frac = m + g.uniform(0.0, 0.5);
        const auto ds = decode_objects(maps, small, scene.camera);
        const auto dl = decode_objects(maps, large, scene.camera);
        REQUIRE(ds.size() == dl.size());
        for (std::size_t i = 0; i < ds.size(); ++i) {
          for (int k = 0; k < kNumVertices; ++k) {
            if (ds[i].kps_heat.valid[k]) CHECK(dl[i].kps_heat.valid[k]);
          }
        }
      }
    }
  }

  TEST_CASE("config validation and strategy names") {
    DecodeConfig c;
    CHECK_NOTHROW(c.validate());
    c.max_detections = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.score_threshold = 1.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.margin_frac = -0.1;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    for (Strategy s : kAllStrategies) CHECK(strategy_from_name(strategy_name(s)) == s);
    CHECK_THROWS_AS(strategy_from_name("best"), InvalidArgument);
  }
}
