// sports: command-line front end for the synthetic generator, odometry,
// fusion, tracking, rendering and evaluation stages.

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sports/config.hpp"
#include "sports/io.hpp"
#include "sports/metrics.hpp"
#include "sports/runner.hpp"
#include "sports/sequence.hpp"
#include "sports/synth.hpp"

namespace {

using namespace sports;

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  std::optional<int> threads;
};

void add_common(CLI::App* app, Common& c, bool out_required) {
  app->add_option("--seed", c.seed, "Random seed (overrides the config file)");
  app->add_option("--config", c.config, "key=value run configuration file")->check(CLI::ExistingFile);
  auto* out = app->add_option("--out", c.out, "Output directory");
  if (out_required) out->required();
  app->add_option("--threads", c.threads, "Worker threads (default: $SPORTS_THREADS or 1)");
}

RunConfig make_config(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

void print_report(const MetricReport& report, const Common& c, const std::string& stem) {
  std::cout << report.text();
  if (!c.out.empty()) write_report(report, c.out, stem);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Panoptic odometry, rendering and evaluation toolkit", "sports"};
  app.require_subcommand(1);

  // synth
  Common synth_c;
  SynthConfig synth_cfg;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic sequence");
  add_common(synth, synth_c, true);
  synth->add_option("--frames", synth_cfg.frames, "Frame count")->capture_default_str();
  synth->add_option("--width", synth_cfg.width, "Image width")->capture_default_str();
  synth->add_option("--height", synth_cfg.height, "Image height")->capture_default_str();
  synth->add_option("--focal", synth_cfg.focal, "Focal length in pixels (0 = auto)");
  synth->add_option("--split", synth_cfg.split, "Split label written to the manifest");
  bool synth_static = false;
  synth->add_flag("--static", synth_static, "Freeze the moving objects");

  // odometry
  Common odo_c;
  std::string odo_seq, odo_initial;
  auto* odo = app.add_subcommand("odometry", "Panoptic-weighted dense bundle adjustment");
  add_common(odo, odo_c, true);
  odo->add_option("sequence", odo_seq, "Sequence directory or manifest")->required();
  odo->add_option("--initial", odo_initial, "Initial TUM trajectory (default: identity poses)");

  // fuse
  Common fuse_c;
  std::string fuse_seq, fuse_params;
  auto* fuse = app.add_subcommand("fuse", "Warp and attention-fuse consecutive frames");
  add_common(fuse, fuse_c, true);
  fuse->add_option("sequence", fuse_seq, "Sequence directory or manifest")->required();
  fuse->add_option("--params", fuse_params, "AGFW parameter file (default: seeded gate)");

  // track
  Common track_c;
  std::string track_seq;
  auto* track = app.add_subcommand("track", "Post-match panoptic identities across frames");
  add_common(track, track_c, true);
  track->add_option("sequence", track_seq, "Sequence directory or manifest")->required();

  // render
  Common render_c;
  std::string render_seq, render_traj;
  std::size_t render_hard = 1;
  auto* render = app.add_subcommand("render", "Accumulate, rasterise and composite the point cloud");
  add_common(render, render_c, true);
  render->add_option("sequence", render_seq, "Sequence directory or manifest")->required();
  render->add_option("--trajectory", render_traj, "TUM trajectory (default: sequence ground truth)");
  render->add_option("--hard", render_hard, "Number of hard samples to select")->capture_default_str();

  // eval
  Common eval_c;
  auto* eval = app.add_subcommand("eval", "Evaluation metrics");
  add_common(eval, eval_c, false);
  eval->require_subcommand(1);
  eval->fallthrough();
  std::string a_path, b_path;
  std::vector<int> vpq_k;
  auto* e_vpq = eval->add_subcommand("vpq", "Video panoptic quality");
  e_vpq->add_option("pred", a_path, "Predicted .pmap directory or sequence")->required();
  e_vpq->add_option("gt", b_path, "Ground-truth .pmap directory or sequence")->required();
  e_vpq->add_option("--k", vpq_k, "Temporal window size(s)")->required();
  bool no_scale = false;
  auto* e_ate = eval->add_subcommand("ate", "Absolute trajectory error (RMSE)");
  e_ate->add_option("est", a_path, "Estimated TUM trajectory")->required();
  e_ate->add_option("gt", b_path, "Ground-truth TUM trajectory")->required();
  e_ate->add_flag("--no-scale", no_scale, "Rigid instead of similarity alignment");
  auto* e_psnr = eval->add_subcommand("psnr", "Peak signal-to-noise ratio");
  e_psnr->add_option("a", a_path, "PPM image")->required();
  e_psnr->add_option("b", b_path, "PPM image")->required();
  auto* e_ssim = eval->add_subcommand("ssim", "Structural similarity");
  e_ssim->add_option("a", a_path, "PPM image")->required();
  e_ssim->add_option("b", b_path, "PPM image")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (synth->parsed()) {
      RunConfig cfg = make_config(synth_c);
      synth_cfg.seed = cfg.seed;
      synth_cfg.moving_objects = !synth_static;
      const SynthScene scene = synth_generate(synth_cfg);
      save_sequence(scene.sequence, synth_c.out);
    } else if (odo->parsed()) {
      const RunConfig cfg = make_config(odo_c);
      const Sequence seq = load_sequence(odo_seq);
      std::optional<Trajectory> initial;
      if (!odo_initial.empty()) initial = load_tum(odo_initial);
      const OdometryOutput out = run_odometry_stage(seq, cfg, resolve_threads(odo_c.threads), initial);
      write_odometry_outputs(out, seq, cfg, odo_c.out);
    } else if (fuse->parsed()) {
      const RunConfig cfg = make_config(fuse_c);
      const Sequence seq = load_sequence(fuse_seq);
      AttentionGate gate = default_gate(seq, cfg);
      if (!fuse_params.empty()) {
        const FusionModel model = load_agfw(fuse_params);
        if (model.branches.empty()) throw std::invalid_argument(fuse_params + ": no fusion branches");
        gate = model.branches.front();
      }
      write_fusion_outputs(run_fusion_stage(seq, cfg, gate), fuse_c.out);
    } else if (track->parsed()) {
      const RunConfig cfg = make_config(track_c);
      write_tracking_outputs(run_tracking_stage(load_sequence(track_seq), cfg), track_c.out);
    } else if (render->parsed()) {
      const RunConfig cfg = make_config(render_c);
      const Sequence seq = load_sequence(render_seq);
      Trajectory traj;
      if (!render_traj.empty()) {
        traj = load_tum(render_traj);
      } else if (seq.groundtruth) {
        traj = *seq.groundtruth;
      } else {
        throw std::invalid_argument("render: no --trajectory given and the sequence has no ground truth");
      }
      write_render_outputs(run_render_stage(seq, traj, cfg, render_hard), render_c.out);
    } else if (eval->parsed()) {
      make_config(eval_c);
      if (e_vpq->parsed()) {
        MetricReport report = vpq_report(load_panoptic_series(a_path), load_panoptic_series(b_path), vpq_k);
        if (vpq_k.size() == 1) report.lines.pop_back();
        print_report(report, eval_c, "vpq_report");
      } else if (e_ate->parsed()) {
        const double v = ate_rmse(load_tum(a_path), load_tum(b_path), !no_scale);
        print_report({{{"ate", 0, v, std::nan(""), std::nan("")}}}, eval_c, "ate_report");
      } else if (e_psnr->parsed()) {
        const double v = psnr(load_ppm(a_path), load_ppm(b_path));
        print_report({{{"psnr", 0, v, std::nan(""), std::nan("")}}}, eval_c, "psnr_report");
      } else if (e_ssim->parsed()) {
        const double v = ssim(load_ppm(a_path), load_ppm(b_path));
        print_report({{{"ssim", 0, v, std::nan(""), std::nan("")}}}, eval_c, "ssim_report");
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
