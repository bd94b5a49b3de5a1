#include <doctest.h>

#include <cmath>

#include "catpose/errors.hpp"
#include "catpose/labelgen.hpp"
#include "catpose/simharness.hpp"
#include "generators.hpp"

using namespace catpose;
using catpose::testing::Gen;

namespace {

// Per-cell double loop over all peaks.
Tensor naive_heatmap(const std::vector<HeatPeak>& peaks, int h, int w) {
  Tensor t(1, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double best = 0.0;
      for (const auto& p : peaks) {
        const double dx = x - std::floor(p.u);
        const double dy = y - std::floor(p.v);
        const double d2 = dx * dx + dy * dy;
        if (d2 > 9.0 * p.sigma * p.sigma) continue;
        best = std::max(best, std::exp(-d2 / (2.0 * p.sigma * p.sigma)));
      }
      t(0, y, x) = best;
    }
  }
  return t;
}

ObjectLabel simple_label(const Vec2& center, double half_w, double half_h, int index = 0) {
  ObjectLabel lab;
  lab.object_index = index;
  lab.center = center;
  lab.bbox = {center.x() - half_w, center.y() - half_h, center.x() + half_w, center.y() + half_h};
  for (int k = 0; k < kNumVertices; ++k) {
    const double sx = (k & 1) ? 1.0 : -1.0;
    const double sy = (k & 2) ? 1.0 : -1.0;
    const double shrink = (k & 4) ? 1.0 : 0.7;
    lab.kp_disp[k] = center + Vec2(sx * half_w * shrink, sy * half_h * shrink);
    lab.kp_heat[k] = lab.kp_disp[k];
    lab.heat_present[k] = true;
  }
  lab.dims = {0.75, 0.25};
  lab.sigma = gaussian_sigma(2 * half_w / kOutputStride, 2 * half_h / kOutputStride);
  return lab;
}

std::vector<Scene> some_scenes(int per_profile, std::uint64_t seed) {
  std::vector<Scene> out;
  for (const auto& p : builtin_profiles()) {
    for (auto& s : sample_scenes(p, per_profile, seed)) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_SUITE("labelgen") {
  TEST_CASE("gaussian sigma") {
    const double side = 18.0 * std::sqrt(2.0) / 2.0;
    CHECK(gaussian_sigma(side, side) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gaussian_sigma(0.1, 0.1) == 1.0);
    CHECK(gaussian_sigma(36.0, 1e-6) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK_THROWS_AS(gaussian_sigma(36.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(gaussian_sigma(-1.0, 5.0), InvalidArgument);

    Gen g(21);
    for (int t = 0; t < 500; ++t) {
      const double w = g.uniform(0.01, 200), h = g.uniform(0.01, 200);
      const double dw = g.uniform(0, 10), dh = g.uniform(0, 10);
      CHECK(gaussian_sigma(w + dw, h) >= gaussian_sigma(w, h));
      CHECK(gaussian_sigma(w, h + dh) >= gaussian_sigma(w, h));
    }
  }

  TEST_CASE("heatmap values around a single peak") {
    const std::vector<HeatPeak> one{{10.0, 10.0, 1.0}};
    const Tensor t = render_heatmap(one, 32, 32);
    CHECK(t(0, 10, 10) == 1.0);
    CHECK(t(0, 10, 11) == doctest::Approx(std::exp(-0.5)));
    CHECK(t(0, 11, 10) == doctest::Approx(0.6065).epsilon(1e-4));
    CHECK(t(0, 10, 14) == 0.0);  // beyond 3 sigma

    const std::vector<HeatPeak> two{{10.0, 10.0, 1.0}, {10.0, 10.0, 1.0}};
    CHECK(render_heatmap(two, 32, 32) == t);

    const std::vector<HeatPeak> frac{{10.9, 10.2, 1.0}};
    CHECK(render_heatmap(frac, 32, 32) == t);
    CHECK_THROWS_AS(render_heatmap(std::vector<HeatPeak>{{1, 1, 0.0}}, 8, 8), InvalidArgument);
  }

  TEST_CASE("heatmap matches the naive rasterizer") {
    Gen g(22);
    for (int t = 0; t < 50; ++t) {
      const int h = g.integer(4, 40), w = g.integer(4, 40);
      std::vector<HeatPeak> peaks;
      const int n = g.integer(0, 6);
      for (int i = 0; i < n; ++i) {
        peaks.push_back({g.uniform(-8, w + 8), g.uniform(-8, h + 8), g.uniform(0.3, 4.0)});
      }
      const Tensor fast = render_heatmap(peaks, h, w);
      CHECK(fast == naive_heatmap(peaks, h, w));
      for (double v : fast.data()) CHECK((v >= 0.0 && v <= 1.0));
    }
  }

  TEST_CASE("center cell and offset") {
    for (const auto& [u, off] : {std::pair{100.0, 0.0}, std::pair{101.0, 0.25}}) {
      const auto r = render_labels(std::vector{simple_label({u, 60.0}, 20, 12)}, 128, 128);
      CHECK(r.maps[Head::kCenterHeatmap](0, 15, 25) == 1.0);
      CHECK(r.maps[Head::kCenterOffset](0, 15, 25) == doctest::Approx(off));
      CHECK(r.maps[Head::kCenterOffset](1, 15, 25) == doctest::Approx(0.0));
      CHECK(r.masks.center(0, 15, 25) == 1.0);
      CHECK(r.maps[Head::kBboxSize](0, 15, 25) == doctest::Approx(10.0));
      CHECK(r.maps[Head::kBboxSize](1, 15, 25) == doctest::Approx(6.0));
      CHECK(r.maps[Head::kRelDims](0, 15, 25) == 0.75);
      CHECK(r.maps[Head::kRelDims](1, 15, 25) == 0.25);
      CHECK(r.warnings.empty());
    }
  }

  TEST_CASE("objects whose center leaves the map are skipped with a warning") {
    const auto r = render_labels(std::vector{simple_label({-10.0, 60.0}, 20, 12, 3)}, 128, 128);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("object 3") != std::string::npos);
    CHECK(r.masks.num_objects == 0);
    for (double v : r.maps[Head::kCenterHeatmap].data()) CHECK(v == 0.0);
  }

  TEST_CASE("center collisions go to the larger box") {
    const ObjectLabel small = simple_label({101.0, 61.0}, 10, 10, 0);
    ObjectLabel big = simple_label({102.0, 62.0}, 30, 25, 1);
    big.dims = {2.0, 3.0};
    for (const auto& labels : {std::vector{small, big}, std::vector{big, small}}) {
      const auto r = render_labels(labels, 128, 128);
      CHECK(r.maps[Head::kRelDims](0, 15, 25) == 2.0);
      CHECK(r.maps[Head::kBboxSize](0, 15, 25) == doctest::Approx(15.0));
    }
  }

  TEST_CASE("encoded scenes satisfy the map invariants") {
    const auto scenes = some_scenes(5, 23);
    for (const auto& scene : scenes) {
      const EncodedScene enc = encode_scene(scene);
      const int mh = scene.camera.height / kOutputStride, mw = scene.camera.width / kOutputStride;
      for (Head h : kAllHeads) {
        CHECK(enc.maps[h].height() == mh);
        CHECK(enc.maps[h].width() == mw);
        CHECK(enc.maps[h].channels() == kHeadChannels[static_cast<int>(h)]);
        if (is_heatmap_head(h)) {
          for (double v : enc.maps[h].data()) CHECK((v >= 0.0 && v <= 1.0));
        }
      }
      CHECK(enc.warnings.empty());
      REQUIRE(enc.objects.size() == scene.objects.size());
      for (std::size_t i = 0; i < enc.objects.size(); ++i) {
        const ObjectLabel& lab = enc.objects[i];
        const SceneObject& obj = scene.objects[i];
        const auto kps = project(box_vertices(obj.metric_extents()), obj.pose, scene.camera);
        const Rect box = bbox2d_from_keypoints(Keypoints2D::all_valid(kps));
        const int cu = static_cast<int>(std::floor(lab.center.x() / kOutputStride));
        const int cv = static_cast<int>(std::floor(lab.center.y() / kOutputStride));
        CHECK(enc.maps[Head::kBboxSize](0, cv, cu) == doctest::Approx(box.width() / kOutputStride));
        CHECK(enc.maps[Head::kBboxSize](1, cv, cu) == doctest::Approx(box.height() / kOutputStride));
        CHECK(enc.maps[Head::kCenterHeatmap](0, cv, cu) == 1.0);
        const double ox = enc.maps[Head::kCenterOffset](0, cv, cu);
        CHECK((ox >= 0.0 && ox < 1.0));
        for (int k = 0; k < kNumVertices; ++k) {
          const Vec2 p = (Vec2(cu, cv) + Vec2(ox, enc.maps[Head::kCenterOffset](1, cv, cu)) +
                          Vec2(enc.maps[Head::kKpDisplacements](2 * k, cv, cu),
                               enc.maps[Head::kKpDisplacements](2 * k + 1, cv, cu))) *
                         kOutputStride;
          CHECK((p - kps[k]).norm() < 1e-9);
        }
      }
    }
  }

  TEST_CASE("encoding is deterministic") {
    const auto scenes = some_scenes(2, 24);
    for (const auto& s : scenes) CHECK(encode_scene(s).maps == encode_scene(s).maps);
  }

  TEST_CASE("symmetric variants share center, box size and dims") {
    auto scenes = sample_scenes(profile_by_name("cup"), 4, 25);
    for (const auto& scene : scenes) {
      const auto variants = encode_symmetric_variants(scene);
      REQUIRE(variants.size() == static_cast<std::size_t>(kSymmetryVariants));
      CHECK(variants[0].maps == encode_scene(scene).maps);
      for (const auto& v : variants) {
        CHECK(v.maps[Head::kCenterHeatmap] == variants[0].maps[Head::kCenterHeatmap]);
        CHECK(v.maps[Head::kCenterOffset] == variants[0].maps[Head::kCenterOffset]);
        CHECK(v.maps[Head::kBboxSize] == variants[0].maps[Head::kBboxSize]);
        CHECK(v.maps[Head::kRelDims] == variants[0].maps[Head::kRelDims]);
        CHECK(v.masks.center == variants[0].masks.center);
      }
      CHECK_FALSE(variants[1].maps[Head::kKpDisplacements] == variants[0].maps[Head::kKpDisplacements]);
    }
    CHECK_THROWS_AS(encode_symmetric_variants(scenes[0], 0), InvalidArgument);
  }

  TEST_CASE("head names round trip") {
    for (Head h : kAllHeads) CHECK(head_from_name(head_name(h)) == h);
    CHECK_THROWS_AS(head_from_name("nope"), InvalidArgument);
  }
}
