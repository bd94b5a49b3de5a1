#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "catpose/decode.hpp"
#include "catpose/errors.hpp"
#include "catpose/io.hpp"
#include "catpose/labelgen.hpp"
#include "catpose/simharness.hpp"

namespace fs = std::filesystem;
using namespace catpose;

namespace {

struct CameraFlags {
  CameraIntrinsics camera;

  void add(CLI::App* app) {
    app->add_option("--fx", camera.fx, "focal length x (px)")->capture_default_str();
    app->add_option("--fy", camera.fy, "focal length y (px)")->capture_default_str();
    app->add_option("--cx", camera.cx, "principal point x (px)")->capture_default_str();
    app->add_option("--cy", camera.cy, "principal point y (px)")->capture_default_str();
    app->add_option("--width", camera.width, "image width (px)")->capture_default_str();
    app->add_option("--height", camera.height, "image height (px)")->capture_default_str();
  }
};

struct SamplingFlags {
  SceneSamplingConfig cfg;
  CameraFlags camera;

  void add(CLI::App* app) {
    camera.add(app);
    app->add_option("--min-objects", cfg.min_objects)->capture_default_str();
    app->add_option("--max-objects", cfg.max_objects)->capture_default_str();
    app->add_option("--margin-px", cfg.margin_px, "image margin for 2D boxes")
        ->capture_default_str();
    app->add_option("--gap-frac", cfg.gap_frac, "box separation / larger box diagonal")
        ->capture_default_str();
    app->add_option("--max-attempts", cfg.max_attempts, "rejection attempts per scene")
        ->capture_default_str();
  }
  SceneSamplingConfig get() const {
    SceneSamplingConfig c = cfg;
    c.camera = camera.camera;
    return c;
  }
};

struct NoiseFlags {
  std::string preset = "none";
  std::optional<double> jitter, dropout, dims_sigma, center_jitter;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* app) {
    app->add_option("--noise", preset, "noise preset")
        ->check(CLI::IsMember(noise_preset_names()))
        ->capture_default_str();
    app->add_option("--keypoint-jitter-px", jitter, "override: keypoint jitter sigma (px)");
    app->add_option("--heat-dropout", dropout, "override: heat peak dropout probability");
    app->add_option("--dims-log-sigma", dims_sigma, "override: log-normal dims noise sigma");
    app->add_option("--center-jitter-px", center_jitter, "override: center jitter sigma (px)");
    app->add_option("--noise-seed", seed, "noise seed (defaults to --seed)");
  }
  NoiseConfig get(std::uint64_t fallback_seed) const {
    NoiseConfig n = noise_preset(preset);
    if (jitter) n.keypoint_jitter_px = *jitter;
    if (dropout) n.heat_dropout = *dropout;
    if (dims_sigma) n.dims_log_sigma = *dims_sigma;
    if (center_jitter) n.center_jitter_px = *center_jitter;
    n.seed = seed.value_or(fallback_seed);
    n.validate();
    return n;
  }
};

struct DecodeFlags {
  std::string config_path;
  std::optional<std::string> strategy;
  std::optional<int> max_detections, sample_count;
  std::optional<double> score_threshold, margin_frac, distance_frac, sampling_sigma_frac;
  std::optional<std::uint64_t> seed;
  std::string save_config;

  void add(CLI::App* app, bool with_strategy = true) {
    app->add_option("--decode-config", config_path, "DecodeConfig JSON file");
    if (with_strategy) {
      std::vector<std::string> names;
      for (Strategy s : kAllStrategies) names.emplace_back(strategy_name(s));
      app->add_option("--strategy", strategy, "keypoint decoding strategy")
          ->check(CLI::IsMember(names));
    }
    app->add_option("--max-detections", max_detections, "K (default 10)");
    app->add_option("--score-threshold", score_threshold, "peak threshold (default 0.3)");
    app->add_option("--margin-frac", margin_frac, "heat keypoint box margin (default 0.1)");
    app->add_option("--sample-count", sample_count, "sampling strategy N (default 20)");
    app->add_option("--distance-frac", distance_frac, "distance strategy tau (default 0.15)");
    app->add_option("--sampling-sigma-frac", sampling_sigma_frac,
                    "sampling mixture sigma (default 0.05)");
    app->add_option("--decode-seed", seed, "sampling seed (defaults to --seed)");
    app->add_option("--save-decode-config", save_config, "write the effective DecodeConfig");
  }
  DecodeConfig get(std::uint64_t fallback_seed) const {
    DecodeConfig c;
    if (!config_path.empty()) c = decode_config_from_json(read_json_file(config_path));
    else c.seed = fallback_seed;
    if (strategy) c.strategy = strategy_from_name(*strategy);
    if (max_detections) c.max_detections = *max_detections;
    if (sample_count) c.sample_count = *sample_count;
    if (score_threshold) c.score_threshold = *score_threshold;
    if (margin_frac) c.margin_frac = *margin_frac;
    if (distance_frac) c.distance_frac = *distance_frac;
    if (sampling_sigma_frac) c.sampling_sigma_frac = *sampling_sigma_frac;
    if (seed) c.seed = *seed;
    c.validate();
    if (!save_config.empty()) write_json_file(save_config, to_json(c));
    return c;
  }
};

struct PnPFlags {
  PnPConfig cfg;
  std::optional<double> huber;

  void add(CLI::App* app) {
    app->add_option("--pnp-max-iters", cfg.max_iters)->capture_default_str();
    app->add_option("--pnp-initial-damping", cfg.initial_damping)->capture_default_str();
    app->add_option("--pnp-damping-up", cfg.damping_up)->capture_default_str();
    app->add_option("--pnp-damping-down", cfg.damping_down)->capture_default_str();
    app->add_option("--pnp-step-tolerance", cfg.step_tolerance)->capture_default_str();
    app->add_option("--pnp-cost-tolerance", cfg.cost_tolerance)->capture_default_str();
    app->add_option("--pnp-huber-px", huber, "Huber threshold (px); off by default");
    app->add_option("--pnp-restart-rms-px", cfg.restart_rms_px)->capture_default_str();
  }
  PnPConfig get() const {
    PnPConfig c = cfg;
    if (huber) c.huber_px = *huber;
    c.validate();
    return c;
  }
};

struct EvalFlags {
  EvalConfig cfg;

  void add(CLI::App* app) {
    app->add_option("--iou-threshold", cfg.iou_threshold)->capture_default_str();
    app->add_option("--azimuth-threshold-deg", cfg.azimuth_threshold_deg)->capture_default_str();
    app->add_option("--elevation-threshold-deg", cfg.elevation_threshold_deg)
        ->capture_default_str();
    app->add_option("--symmetric-rotations", cfg.symmetric_rotations)->capture_default_str();
    app->add_option("--match-gate-frac", cfg.match_gate_frac)->capture_default_str();
  }
  EvalConfig get() const {
    cfg.validate();
    return cfg;
  }
};

std::vector<std::string> solver_names() {
  std::vector<std::string> names;
  for (Solver s : kAllSolvers) names.emplace_back(solver_name(s));
  return names;
}

void emit_report(const std::string& table, const Json& json, const std::string& out_prefix) {
  std::cout << table;
  if (out_prefix.empty()) return;
  write_json_file(out_prefix + ".json", json);
  write_text_file(out_prefix + ".txt", table);
  std::cout << "wrote " << out_prefix << ".json and " << out_prefix << ".txt\n";
}

struct SweepFlags {
  std::vector<std::string> profiles;
  int scenes_per_profile = 100;
  std::string solver = "lm_estimated_dims";
  std::string out;
  bool records = false;
  SamplingFlags sampling;
  NoiseFlags noise;
  DecodeFlags decode;
  PnPFlags pnp;
  EvalFlags eval;

  void add(CLI::App* app, bool with_strategy, bool with_solver) {
    std::vector<std::string> names;
    for (const auto& p : builtin_profiles()) names.push_back(p.name);
    app->add_option("--profiles", profiles, "category profiles (default: all)")
        ->check(CLI::IsMember(names));
    app->add_option("--scenes-per-profile", scenes_per_profile)->capture_default_str();
    if (with_solver) {
      app->add_option("--solver", solver, "pose solver")
          ->check(CLI::IsMember(solver_names()))
          ->capture_default_str();
    }
    app->add_option("--out", out, "report prefix (.json and .txt)");
    app->add_flag("--records", records, "include per-instance records in the JSON report");
    sampling.add(app);
    noise.add(app);
    decode.add(app, with_strategy);
    pnp.add(app);
    eval.add(app);
  }
  SweepConfig get(std::uint64_t seed) const {
    SweepConfig c;
    c.profiles = profiles;
    c.scenes_per_profile = scenes_per_profile;
    c.seed = seed;
    c.sampling = sampling.get();
    c.noise = noise.get(seed);
    c.decode = decode.get(seed);
    c.solver = solver_from_name(solver);
    c.eval = eval.get();
    c.pnp = pnp.get();
    c.keep_records = records;
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Category-level 6-DoF pose pipeline on synthetic oracle maps"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "sample synthetic scenes to a scene JSON file");
  std::uint64_t sim_seed = 0;
  std::string sim_profile = "cereal_box";
  int sim_count = 10;
  std::string sim_out;
  std::string sim_gt;
  SamplingFlags sim_sampling;
  {
    std::vector<std::string> names;
    for (const auto& p : builtin_profiles()) names.push_back(p.name);
    sim->add_option("--profile", sim_profile)->check(CLI::IsMember(names))->capture_default_str();
  }
  sim->add_option("--count", sim_count, "number of scenes")->capture_default_str();
  sim->add_option("--seed", sim_seed)->capture_default_str();
  sim->add_option("--out", sim_out, "scene JSON output")->required();
  sim->add_option("--gt-jsonl", sim_gt, "also write ground truth as JSON lines");
  sim_sampling.add(sim);

  // encode
  auto* enc = app.add_subcommand("encode", "encode scenes into (optionally corrupted) output maps");
  std::uint64_t enc_seed = 0;
  std::string enc_scenes;
  std::string enc_out;
  NoiseFlags enc_noise;
  enc->add_option("--scenes", enc_scenes, "scene JSON file")->required()->check(CLI::ExistingFile);
  enc->add_option("--out", enc_out, "maps prefix (.bin + .json)")->required();
  enc->add_option("--seed", enc_seed)->capture_default_str();
  enc_noise.add(enc);

  // decode
  auto* dec = app.add_subcommand("decode", "decode maps into detections with solved poses");
  std::uint64_t dec_seed = 0;
  std::string dec_maps;
  std::string dec_out;
  std::string dec_solver = "lm_estimated_dims";
  DecodeFlags dec_flags;
  PnPFlags dec_pnp;
  dec->add_option("--maps", dec_maps, "maps manifest (.json) or prefix")->required();
  dec->add_option("--out", dec_out, "predictions JSON lines output")->required();
  dec->add_option("--seed", dec_seed)->capture_default_str();
  dec->add_option("--solver", dec_solver, "lifting or lm_estimated_dims")
      ->check(CLI::IsMember({"lifting", "lm_estimated_dims"}))
      ->capture_default_str();
  dec_flags.add(dec);
  dec_pnp.add(dec);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "score predictions against ground truth");
  std::uint64_t ev_seed = 0;
  std::string ev_pred;
  std::string ev_gt;
  std::string ev_out;
  bool ev_records = false;
  EvalFlags ev_flags;
  ev->add_option("--pred", ev_pred, "predictions JSON lines")->required()->check(CLI::ExistingFile);
  ev->add_option("--gt", ev_gt, "ground truth: JSON lines or scene JSON")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--out", ev_out, "report prefix (.json and .txt)");
  ev->add_option("--seed", ev_seed, "echoed into the report")->capture_default_str();
  ev->add_flag("--records", ev_records, "include per-instance records in the JSON report");
  ev_flags.add(ev);

  // sweeps
  auto* abd = app.add_subcommand("ablate-decode", "compare keypoint decoding strategies");
  std::uint64_t abd_seed = 0;
  SweepFlags abd_flags;
  abd->add_option("--seed", abd_seed)->capture_default_str();
  abd_flags.add(abd, false, true);

  auto* abm = app.add_subcommand("ablate-dims", "compare cuboid dimension strategies");
  std::uint64_t abm_seed = 0;
  SweepFlags abm_flags;
  abm->add_option("--seed", abm_seed)->capture_default_str();
  abm_flags.add(abm, true, false);

  auto* nsw = app.add_subcommand("noise-sweep", "sweep keypoint jitter");
  std::uint64_t nsw_seed = 0;
  SweepFlags nsw_flags;
  std::vector<double> nsw_grid = {0.0, 0.5, 1.0, 2.0, 4.0};
  nsw->add_option("--seed", nsw_seed)->capture_default_str();
  nsw->add_option("--jitter", nsw_grid, "keypoint jitter levels (px)")->capture_default_str();
  nsw_flags.add(nsw, true, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const auto scenes =
          sample_scenes(profile_by_name(sim_profile), sim_count, sim_seed, sim_sampling.get());
      write_scenes(sim_out, scenes);
      if (!sim_gt.empty()) write_ground_truth_jsonl(sim_gt, scenes);
      std::size_t objects = 0;
      for (const auto& s : scenes) objects += s.objects.size();
      std::cout << "wrote " << scenes.size() << " scenes (" << objects << " objects) to " << sim_out
                << "\n";
    } else if (enc->parsed()) {
      const auto scenes = read_scenes(enc_scenes);
      const NoiseConfig noise = enc_noise.get(enc_seed);
      MapsFile file;
      std::size_t warnings = 0;
      for (std::size_t i = 0; i < scenes.size(); ++i) {
        const EncodedScene e = encode_scene(scenes[i]);
        for (const auto& w : e.warnings) std::cerr << "scene " << i << ": " << w << "\n";
        warnings += e.warnings.size();
        file.cameras.push_back(scenes[i].camera);
        file.maps.push_back(perturb(e, noise, i));
      }
      write_maps(enc_out, file);
      std::cout << "encoded " << scenes.size() << " scenes to " << enc_out << ".bin/.json ("
                << warnings << " warnings)\n";
    } else if (dec->parsed()) {
      const MapsFile file = read_maps(dec_maps);
      const DecodeConfig cfg = dec_flags.get(dec_seed);
      const PnPConfig pnp = dec_pnp.get();
      const Solver solver = solver_from_name(dec_solver);
      std::vector<Prediction> preds;
      std::vector<Detection> dets;
      int failures = 0;
      for (std::size_t s = 0; s < file.maps.size(); ++s) {
        const auto d = decode_objects(file.maps[s], cfg, file.cameras[s]);
        const auto p = solve_detections(d, file.cameras[s], static_cast<int>(s), cfg, solver, pnp,
                                        {}, &failures);
        for (std::size_t i = 0; i < d.size(); ++i) {
          Detection det = d[i];
          det.pose = p[i].pose;
          dets.push_back(det);
          preds.push_back(p[i]);
        }
      }
      write_predictions_jsonl(dec_out, preds, &dets);
      std::cout << "wrote " << preds.size() << " detections (" << failures
                << " solver failures) to " << dec_out << "\n";
    } else if (ev->parsed()) {
      const auto preds = read_predictions_jsonl(ev_pred);
      const std::vector<Scene> gts = fs::path(ev_gt).extension() == ".jsonl"
                                         ? read_ground_truth_jsonl(ev_gt)
                                         : read_scenes(ev_gt);
      const EvalConfig cfg = ev_flags.get();
      RunReport rep;
      rep.variant = "evaluate";
      rep.eval = cfg;
      rep.seed = ev_seed;
      rep.num_scenes = static_cast<int>(gts.size());
      rep.records = evaluate_predictions(preds, gts, cfg);
      int failures = 0;
      for (const auto& p : preds) failures += p.pose ? 0 : 1;
      rep.summary = summarize(rep.records, cfg, failures);
      emit_report(format_run_table(rep), to_json(rep, ev_records), ev_out);
    } else if (abd->parsed()) {
      const SweepReport rep = ablate_decode(abd_flags.get(abd_seed));
      emit_report(format_sweep_table(rep), to_json(rep, abd_flags.records), abd_flags.out);
    } else if (abm->parsed()) {
      const SweepReport rep = ablate_dims(abm_flags.get(abm_seed));
      emit_report(format_sweep_table(rep), to_json(rep, abm_flags.records), abm_flags.out);
    } else if (nsw->parsed()) {
      const SweepReport rep = noise_sweep(nsw_flags.get(nsw_seed), nsw_grid);
      emit_report(format_sweep_table(rep), to_json(rep, nsw_flags.records), nsw_flags.out);
    }
  } catch (const catpose::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
