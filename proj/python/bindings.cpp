#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "catpose/convgru.hpp"
#include "catpose/decode.hpp"
#include "catpose/errors.hpp"
#include "catpose/geometry.hpp"
#include "catpose/io.hpp"
#include "catpose/labelgen.hpp"
#include "catpose/losses.hpp"
#include "catpose/metrics.hpp"
#include "catpose/pnp.hpp"
#include "catpose/simharness.hpp"

namespace py = pybind11;
using namespace catpose;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array tensor_to_array(const Tensor& t) {
  Array a({t.channels(), t.height(), t.width()});
  std::copy(t.data().begin(), t.data().end(), a.mutable_data());
  return a;
}

Tensor array_to_tensor(const Array& a) {
  if (a.ndim() == 2) {
    Tensor t(1, static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), t.data().begin());
    return t;
  }
  if (a.ndim() != 3) throw InvalidArgument("expected a (C, H, W) or (H, W) array");
  Tensor t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
           static_cast<int>(a.shape(2)));
  std::copy(a.data(), a.data() + a.size(), t.data().begin());
  return t;
}

py::dict maps_to_dict(const OutputMaps& m) {
  py::dict d;
  for (Head h : kAllHeads) d[py::str(std::string(head_name(h)))] = tensor_to_array(m[h]);
  return d;
}

OutputMaps dict_to_maps(const py::dict& d) {
  OutputMaps m;
  for (Head h : kAllHeads) {
    const std::string name(head_name(h));
    if (!d.contains(name)) throw InvalidArgument("missing head '" + name + "'");
    m[h] = array_to_tensor(d[py::str(name)].cast<Array>());
    if (m[h].channels() != kHeadChannels[static_cast<int>(h)]) {
      throw InvalidArgument("head '" + name + "' has the wrong channel count");
    }
  }
  return m;
}

template <int N>
std::vector<Eigen::Matrix<double, N, 1>> rows_of(const Array& a, const char* what) {
  if (a.ndim() != 2 || a.shape(1) != N) {
    throw InvalidArgument(std::string(what) + ": expected an (n, " + std::to_string(N) + ") array");
  }
  std::vector<Eigen::Matrix<double, N, 1>> out(a.shape(0));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    for (int c = 0; c < N; ++c) out[i][c] = a.at(i, c);
  }
  return out;
}

template <typename V>
Array rows_to_array(const V& rows, int n) {
  Array a({static_cast<py::ssize_t>(rows.size()), static_cast<py::ssize_t>(n)});
  auto m = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int c = 0; c < n; ++c) m(i, c) = rows[i][c];
  }
  return a;
}

std::string dump(const Json& j) { return j.dump(); }
Json parse(const std::string& s) { return Json::parse(s); }

std::vector<Correspondence> make_correspondences(const std::vector<int>& vertices,
                                                 const Array& points,
                                                 const std::optional<std::vector<double>>& weights) {
  const auto pts = rows_of<2>(points, "points");
  if (pts.size() != vertices.size()) throw InvalidArgument("one vertex index per point expected");
  if (weights && weights->size() != pts.size()) throw InvalidArgument("one weight per point expected");
  std::vector<Correspondence> corr;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    corr.push_back({vertices[i], pts[i], weights ? (*weights)[i] : 1.0});
  }
  return corr;
}

py::dict pnp_result_dict(const PnPResult& r) {
  py::dict d;
  d["pose"] = r.pose;
  d["rms_px"] = r.rms_px;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Category-level 6-DoF pose pipeline: labels, losses, decoding, PnP, metrics";

  auto base = py::register_exception<Error>(m, "CatposeError");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<BehindCamera>(m, "BehindCamera", base.ptr());
  py::register_exception<EmptyDetection>(m, "EmptyDetection", base.ptr());
  py::register_exception<InsufficientCorrespondences>(m, "InsufficientCorrespondences", base.ptr());
  py::register_exception<NumericalFailure>(m, "NumericalFailure", base.ptr());
  py::register_exception<GenerationError>(m, "GenerationError", base.ptr());
  py::register_exception<UndefinedViewpoint>(m, "UndefinedViewpoint", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init([](double fx, double fy, double cx, double cy, int width, int height) {
             CameraIntrinsics k{fx, fy, cx, cy, width, height};
             k.validate();
             return k;
           }),
           py::arg("fx") = 500.0, py::arg("fy") = 500.0, py::arg("cx") = 256.0,
           py::arg("cy") = 256.0, py::arg("width") = 512, py::arg("height") = 512)
      .def_readwrite("fx", &CameraIntrinsics::fx)
      .def_readwrite("fy", &CameraIntrinsics::fy)
      .def_readwrite("cx", &CameraIntrinsics::cx)
      .def_readwrite("cy", &CameraIntrinsics::cy)
      .def_readwrite("width", &CameraIntrinsics::width)
      .def_readwrite("height", &CameraIntrinsics::height)
      .def("diagonal", &CameraIntrinsics::diagonal)
      .def("project", [](const CameraIntrinsics& k, const Vec3& p) { return k.project(p); })
      .def("__repr__", [](const CameraIntrinsics& k) { return "CameraIntrinsics(" + dump(to_json(k)) + ")"; });

  py::class_<Pose>(m, "Pose")
      .def(py::init<>())
      .def(py::init([](const Eigen::Vector4d& wxyz, const Vec3& t) {
             if (!(wxyz.norm() > 0.0)) throw InvalidArgument("quaternion has zero norm");
             return Pose(Quat(wxyz[0], wxyz[1], wxyz[2], wxyz[3]), t);
           }),
           py::arg("rotation_wxyz"), py::arg("translation"))
      .def_static("from_matrix", [](const Mat3& r, const Vec3& t) { return Pose(r, t); },
                  py::arg("rotation"), py::arg("translation"))
      .def_property_readonly("rotation_wxyz",
                             [](const Pose& p) {
                               const Quat& q = p.rotation();
                               return Eigen::Vector4d(q.w(), q.x(), q.y(), q.z());
                             })
      .def_property_readonly("translation", [](const Pose& p) { return p.translation(); })
      .def("rotation_matrix", &Pose::rotation_matrix)
      .def("matrix", &Pose::matrix)
      .def("apply", &Pose::apply)
      .def("inverse", [](const Pose& p) { return pose_invert(p); })
      .def("compose", [](const Pose& a, const Pose& b) { return pose_compose(a, b); })
      .def("__repr__", [](const Pose& p) { return "Pose(" + dump(to_json(p)) + ")"; });

  py::class_<RelativeDims>(m, "RelativeDims")
      .def(py::init([](double rx, double rz) {
             RelativeDims d{rx, rz};
             d.validate();
             return d;
           }),
           py::arg("rx") = 1.0, py::arg("rz") = 1.0)
      .def_readwrite("rx", &RelativeDims::rx)
      .def_readwrite("rz", &RelativeDims::rz)
      .def("extents", &RelativeDims::extents)
      .def("__repr__", [](const RelativeDims& d) {
        return "RelativeDims(rx=" + std::to_string(d.rx) + ", rz=" + std::to_string(d.rz) + ")";
      });

  // geometry
  m.def("cuboid_vertices", [](const RelativeDims& d) { return rows_to_array(cuboid_vertices(d), 3); },
        py::arg("dims"), "Eight vertices of the unit-height cuboid as an (8, 3) array.");
  m.def("box_vertices", [](const Vec3& e) { return rows_to_array(box_vertices(e), 3); },
        py::arg("extents"));
  m.def("project",
        [](const Array& pts, const Pose& pose, const CameraIntrinsics& k) {
          const auto p = rows_of<3>(pts, "points");
          return rows_to_array(project(p, pose, k), 2);
        },
        py::arg("points"), py::arg("pose"), py::arg("camera"));
  m.def("bbox2d",
        [](const Array& pts) {
          const auto p = rows_of<2>(pts, "points");
          const Rect r = bbox2d_from_points(p);
          return py::make_tuple(r.u_min, r.v_min, r.u_max, r.v_max);
        },
        py::arg("points"), "Tight (u_min, v_min, u_max, v_max) around 2D points.");
  m.def("rotation_error", &rotation_error, py::arg("a"), py::arg("b"));
  m.def("rotation_about_y", &rotation_about_y, py::arg("angle"));

  // labels
  m.def("gaussian_sigma", &gaussian_sigma, py::arg("bbox_w"), py::arg("bbox_h"));
  m.def("render_heatmap",
        [](const std::vector<std::tuple<double, double, double>>& peaks, int h, int w) {
          std::vector<HeatPeak> p;
          for (const auto& [u, v, s] : peaks) p.push_back({u, v, s});
          const Tensor t = render_heatmap(p, h, w);
          Array a({h, w});
          std::copy(t.data().begin(), t.data().end(), a.mutable_data());
          return a;
        },
        py::arg("peaks"), py::arg("height"), py::arg("width"));
  m.def("encode_scene_json",
        [](const std::string& scene) {
          const EncodedScene e = encode_scene(scene_from_json(parse(scene)));
          py::dict out;
          out["maps"] = maps_to_dict(e.maps);
          out["center_mask"] = tensor_to_array(e.masks.center);
          out["keypoint_mask"] = tensor_to_array(e.masks.keypoint);
          out["warnings"] = e.warnings;
          return out;
        },
        py::arg("scene_json"));

  // losses
  m.def("focal_loss",
        [](const Array& pred, const Array& gt, double count, double alpha, double beta) {
          const LossValue v =
              focal_loss(array_to_tensor(pred), array_to_tensor(gt), {alpha, beta}, count);
          Array g(pred.request().shape);
          std::copy(v.gradient.data().begin(), v.gradient.data().end(), g.mutable_data());
          return py::make_tuple(v.value, g);
        },
        py::arg("pred"), py::arg("gt"), py::arg("count"), py::arg("alpha") = 2.0,
        py::arg("beta") = 4.0, "Penalty-reduced focal loss and its gradient.");
  m.def("masked_l1",
        [](const Array& pred, const Array& gt, const Array& mask, double count) {
          const LossValue v =
              masked_l1(array_to_tensor(pred), array_to_tensor(gt), array_to_tensor(mask), count);
          Array g(pred.request().shape);
          std::copy(v.gradient.data().begin(), v.gradient.data().end(), g.mutable_data());
          return py::make_tuple(v.value, g);
        },
        py::arg("pred"), py::arg("gt"), py::arg("mask"), py::arg("count"));

  // decoding
  m.def("extract_peaks",
        [](const Array& hm, int k, double threshold) {
          std::vector<std::tuple<int, int, double>> out;
          for (const Peak& p : extract_peaks(array_to_tensor(hm), k, threshold)) {
            out.emplace_back(p.x, p.y, p.score);
          }
          return out;
        },
        py::arg("heatmap"), py::arg("max_peaks") = 10, py::arg("threshold") = 0.3,
        "Peaks as (x, y, score), best first.");
  m.def("decode_json",
        [](const py::dict& maps, const std::string& cfg, const CameraIntrinsics& k) {
          const DecodeConfig c = decode_config_from_json(parse(cfg));
          Json arr = Json::array();
          for (const auto& d : decode_objects(dict_to_maps(maps), c, k)) arr.push_back(to_json(d));
          return dump(arr);
        },
        py::arg("maps"), py::arg("config_json") = "{}", py::arg("camera") = CameraIntrinsics{});

  // pose
  m.def("solve_pnp_lm",
        [](const std::vector<int>& vertices, const Array& points, const RelativeDims& dims,
           const CameraIntrinsics& k, const std::optional<std::vector<double>>& weights) {
          const auto corr = make_correspondences(vertices, points, weights);
          return pnp_result_dict(solve_pnp_lm(corr, dims, k));
        },
        py::arg("vertices"), py::arg("points"), py::arg("dims"), py::arg("camera"),
        py::arg("weights") = py::none(),
        "Levenberg-Marquardt PnP on the unit-height cuboid with the given relative dims.");
  m.def("solve_keypoint_lifting",
        [](const Array& points, const CameraIntrinsics& k) {
          const auto pts = rows_of<2>(points, "points");
          if (pts.size() != kNumVertices) throw InvalidArgument("expected 8 keypoints");
          const LiftingResult r = solve_keypoint_lifting(Keypoints2D::all_valid(pts), k);
          py::dict d = pnp_result_dict(r.result);
          d["implied_dims"] = r.implied_dims;
          return d;
        },
        py::arg("points"), py::arg("camera"));

  // metrics
  m.def("iou3d",
        [](const Pose& pa, const Vec3& ea, const Pose& pb, const Vec3& eb) {
          return iou3d({pa, ea}, {pb, eb});
        },
        py::arg("pose_a"), py::arg("extents_a"), py::arg("pose_b"), py::arg("extents_b"));
  m.def("viewpoint_errors",
        [](const Pose& pred, const Pose& gt) {
          const ViewpointError e = viewpoint_errors(pred, gt);
          return py::make_tuple(e.azimuth_deg, e.elevation_deg);
        },
        py::arg("pred"), py::arg("gt"), "(azimuth_err, elevation_err) in degrees.");
  m.def("mean_relative_dim_error", [](const std::vector<RelativeDims>& p,
                                      const std::vector<RelativeDims>& g) {
    return mean_relative_dim_error(p, g);
  });

  // convGRU
  py::class_<ConvGRUModel>(m, "ConvGRUModel")
      .def_static("random",
                  [](int input_channels, int hidden_channels, int head_channels, std::uint64_t seed) {
                    return random_model({input_channels, hidden_channels, head_channels, 3}, seed);
                  },
                  py::arg("input_channels") = 64, py::arg("hidden_channels") = 64,
                  py::arg("head_channels") = 256, py::arg("seed") = 0)
      .def_static("load", [](const std::string& path) { return read_model(path); })
      .def("save", [](const ConvGRUModel& mdl, const std::string& prefix) { write_model(prefix, mdl); })
      .def("run", [](const ConvGRUModel& mdl, const Array& feature) {
        return maps_to_dict(run_sequential_heads(array_to_tensor(feature), mdl));
      });

  // harness
  m.def("profile_names", [] {
    std::vector<std::string> names;
    for (const auto& p : builtin_profiles()) names.push_back(p.name);
    return names;
  });
  m.def("noise_preset_json", [](const std::string& name) { return dump(to_json(noise_preset(name))); });
  m.def("sample_scenes_json",
        [](const std::string& profile, int count, std::uint64_t seed) {
          Json arr = Json::array();
          for (const auto& s : sample_scenes(profile_by_name(profile), count, seed)) {
            arr.push_back(to_json(s));
          }
          return dump(arr);
        },
        py::arg("profile"), py::arg("count"), py::arg("seed") = 0);
  m.def("run_pipeline_json",
        [](const std::string& scenes, const std::string& noise, const std::string& decode,
           const std::string& solver, bool records) {
          std::vector<Scene> sc;
          for (const auto& s : parse(scenes)) sc.push_back(scene_from_json(s));
          const RunReport r =
              run_pipeline(sc, noise_config_from_json(parse(noise)),
                           decode_config_from_json(parse(decode)), solver_from_name(solver), {});
          return dump(to_json(r, records));
        },
        py::arg("scenes_json"), py::arg("noise_json") = "{}", py::arg("decode_json") = "{}",
        py::arg("solver") = "lm_estimated_dims", py::arg("records") = true);
}
