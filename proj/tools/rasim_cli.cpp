#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rasim/errors.hpp"
#include "rasim/io.hpp"
#include "rasim/metrics.hpp"
#include "rasim/parallel.hpp"
#include "rasim/refine.hpp"
#include "rasim/scenegen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int thread_count_from_env() {
  const char* env = std::getenv("RASIM_THREADS");
  if (!env) return 0;
  try {
    return std::max(0, std::stoi(env));
  } catch (const std::exception&) {
    return 0;
  }
}

std::string frame_file(int index, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "frame_%06d_%s", index, suffix);
  return buf;
}

void write_rendered_image(const rasim::RenderedImage& img, const fs::path& path) {
  std::visit([&](const auto& i) { rasim::write_image_png(i, path); }, img);
}

std::optional<rasim::RenderMode> parse_mode_flag(const std::string& mode) {
  if (mode == "auto") return std::nullopt;
  if (mode == "ir") return rasim::RenderMode::IR;
  if (mode == "rgb") return rasim::RenderMode::RGB;
  throw rasim::ValidationError("--mode must be auto, ir, or rgb, got \"" +
                               mode + "\"");
}

std::pair<int, int> parse_resize(const std::string& spec) {
  const size_t x = spec.find('x');
  if (x == std::string::npos) {
    throw rasim::ValidationError("--resize expects HxW, e.g. 144x256");
  }
  try {
    const int h = std::stoi(spec.substr(0, x));
    const int w = std::stoi(spec.substr(x + 1));
    if (h <= 0 || w <= 0) throw std::invalid_argument("non-positive");
    return {h, w};
  } catch (const std::exception&) {
    throw rasim::ValidationError("--resize expects HxW, e.g. 144x256");
  }
}

rasim::DepthMap load_depth_auto(const fs::path& path) {
  if (path.extension() == ".pfm") return rasim::read_pfm_depth(path);
  return rasim::read_depth_png16(path);
}

struct RenderArgs {
  std::string scene, rig, out, sequence;
  int frames = 1;
  uint64_t seed = 0;
  std::string mode = "auto";
  double threshold = 2.0;
  double png_units = rasim::kDefaultDepthPngUnitsPerMeter;
  int threads = -1;
};

struct MatchArgs {
  std::string left, right, rig, config, out;
  int threads = -1;
};

struct SimulateArgs {
  std::string scene, sequence, rig, config, out;
  uint64_t seed = 0;
  double threshold = 2.0;
  double png_units = rasim::kDefaultDepthPngUnitsPerMeter;
  int threads = -1;
};

struct EvalArgs {
  std::string pred, gt, out, resize;
  std::string delta = "strict";
};

struct PoseEvalArgs {
  std::string samples, out;
};

int resolve_threads(int flag_value) {
  return flag_value >= 0 ? flag_value : thread_count_from_env();
}

int run_render(const RenderArgs& a) {
  const rasim::SensorSpec sensor = rasim::load_rig(a.rig);
  const rasim::SceneSpec scene = rasim::load_scene_spec(a.scene);
  rasim::SequenceSpec seq;
  seq.frame_count = a.frames;
  if (!a.sequence.empty()) seq = rasim::load_sequence_spec(a.sequence);

  rasim::RenderOptions opts;
  opts.mode_threshold_m = a.threshold;
  opts.mode_override = parse_mode_flag(a.mode);
  opts.seed = a.seed;
  opts.threads = resolve_threads(a.threads);

  fs::create_directories(a.out);
  rasim::write_text_file(fs::path(a.out) / "scene.json",
                         rasim::read_text_file(a.scene));
  if (!a.sequence.empty()) {
    rasim::write_text_file(fs::path(a.out) / "sequence.json",
                           rasim::read_text_file(a.sequence));
  }

  rasim::DatasetManifest manifest;
  manifest.sensor = sensor;
  manifest.scene_spec = "scene.json";
  manifest.sequence_spec = a.sequence.empty() ? "" : "sequence.json";
  manifest.mode_threshold_m = a.threshold;
  manifest.seed = a.seed;

  for (int t = 0; t < seq.frame_count; ++t) {
    const rasim::SceneSpec scene_t = rasim::scene_at_frame(scene, seq, t);
    const rasim::StereoFrame frame = rasim::render_stereo_frame(
        scene_t, sensor.rig, seq.camera_at(t), sensor.projector, opts, t);

    rasim::FrameEntry entry;
    entry.frame_index = t;
    entry.mode = frame.mode;
    entry.left = frame_file(t, "left.png");
    entry.right = frame_file(t, "right.png");
    entry.gt_depth = frame_file(t, "gt_depth.pfm");
    write_rendered_image(frame.left, fs::path(a.out) / entry.left);
    write_rendered_image(frame.right, fs::path(a.out) / entry.right);
    rasim::write_pfm(frame.gt_depth, fs::path(a.out) / entry.gt_depth);
    rasim::write_depth_png16(frame.gt_depth,
                             fs::path(a.out) / frame_file(t, "gt_depth.png"),
                             a.png_units);
    manifest.frames.push_back(std::move(entry));
  }
  rasim::write_manifest(manifest, fs::path(a.out) / "manifest.json");
  std::cout << "rendered " << seq.frame_count << " frame(s) to " << a.out
            << "\n";
  return 0;
}

int run_match(const MatchArgs& a) {
  const rasim::SensorSpec sensor = rasim::load_rig(a.rig);
  rasim::MatchConfig cfg;
  if (!a.config.empty()) cfg = rasim::load_match_config(a.config);
  const int threads = resolve_threads(a.threads);

  const rasim::ImageGray left =
      rasim::image_for_matching(rasim::read_image_png(a.left));
  const rasim::ImageGray right =
      rasim::image_for_matching(rasim::read_image_png(a.right));

  const rasim::MatchResult res =
      rasim::match_stereo(left, right, sensor.rig, cfg, threads);

  fs::create_directories(a.out);
  rasim::write_pfm(res.disparity, fs::path(a.out) / "disparity.pfm");
  rasim::write_pfm(res.depth, fs::path(a.out) / "depth.pfm");
  rasim::write_depth_png16(res.depth, fs::path(a.out) / "depth.png");

  json stats;
  stats["valid_pixel_ratio"] =
      static_cast<double>(res.disparity.valid_count()) /
      (static_cast<double>(res.disparity.width) * res.disparity.height);
  stats["runtime_ms"] = res.times.total_ms;
  stats["threads"] = rasim::resolve_thread_count(threads);
  stats["stages_ms"] = {{"census", res.times.census_ms},
                        {"cost_volume", res.times.cost_volume_ms},
                        {"aggregate", res.times.aggregate_ms},
                        {"wta", res.times.wta_ms},
                        {"refine", res.times.refine_ms},
                        {"depth", res.times.depth_ms}};
  rasim::write_text_file(fs::path(a.out) / "stats.json", stats.dump(2) + "\n");
  std::cout << stats.dump(2) << "\n";
  return 0;
}

int run_simulate(const SimulateArgs& a) {
  const rasim::SensorSpec sensor = rasim::load_rig(a.rig);
  const rasim::SceneSpec scene = rasim::load_scene_spec(a.scene);
  const rasim::SequenceSpec seq = rasim::load_sequence_spec(a.sequence);
  rasim::MatchConfig cfg;
  if (!a.config.empty()) cfg = rasim::load_match_config(a.config);

  rasim::RenderOptions opts;
  opts.mode_threshold_m = a.threshold;
  opts.seed = a.seed;
  opts.threads = resolve_threads(a.threads);

  fs::create_directories(a.out);
  rasim::write_text_file(fs::path(a.out) / "scene.json",
                         rasim::read_text_file(a.scene));
  rasim::write_text_file(fs::path(a.out) / "sequence.json",
                         rasim::read_text_file(a.sequence));
  if (!a.config.empty()) {
    rasim::write_text_file(fs::path(a.out) / "match_config.json",
                           rasim::read_text_file(a.config));
  }

  rasim::DatasetManifest manifest;
  manifest.sensor = sensor;
  manifest.scene_spec = "scene.json";
  manifest.sequence_spec = "sequence.json";
  manifest.mode_threshold_m = a.threshold;
  manifest.seed = a.seed;

  for (int t = 0; t < seq.frame_count; ++t) {
    const rasim::SceneSpec scene_t = rasim::scene_at_frame(scene, seq, t);
    const rasim::StereoFrame frame = rasim::render_stereo_frame(
        scene_t, sensor.rig, seq.camera_at(t), sensor.projector, opts, t);
    const rasim::MatchResult res = rasim::match_stereo(
        rasim::image_for_matching(frame.left),
        rasim::image_for_matching(frame.right), sensor.rig, cfg, opts.threads);

    rasim::FrameEntry entry;
    entry.frame_index = t;
    entry.mode = frame.mode;
    entry.left = frame_file(t, "left.png");
    entry.right = frame_file(t, "right.png");
    entry.gt_depth = frame_file(t, "gt_depth.pfm");
    entry.sim_depth = frame_file(t, "sim_depth.pfm");
    entry.disparity = frame_file(t, "disparity.pfm");
    write_rendered_image(frame.left, fs::path(a.out) / entry.left);
    write_rendered_image(frame.right, fs::path(a.out) / entry.right);
    rasim::write_pfm(frame.gt_depth, fs::path(a.out) / entry.gt_depth);
    rasim::write_depth_png16(frame.gt_depth,
                             fs::path(a.out) / frame_file(t, "gt_depth.png"),
                             a.png_units);
    rasim::write_pfm(res.disparity, fs::path(a.out) / entry.disparity);
    rasim::write_pfm(res.depth, fs::path(a.out) / entry.sim_depth);
    rasim::write_depth_png16(res.depth,
                             fs::path(a.out) / frame_file(t, "sim_depth.png"),
                             a.png_units);
    manifest.frames.push_back(std::move(entry));
  }
  rasim::write_manifest(manifest, fs::path(a.out) / "manifest.json");
  std::cout << "simulated " << seq.frame_count << " frame(s) to " << a.out
            << "\n";
  return 0;
}

std::vector<fs::path> depth_files_from(const std::string& arg, bool want_sim) {
  std::vector<fs::path> out;
  if (fs::is_directory(arg)) {
    const fs::path dir(arg);
    const rasim::DatasetManifest m = rasim::read_manifest(dir / "manifest.json");
    for (const auto& f : m.frames) {
      const std::string rel = want_sim && !f.sim_depth.empty() ? f.sim_depth
                                                               : f.gt_depth;
      if (want_sim && f.sim_depth.empty()) {
        throw rasim::ValidationError(
            "dataset " + arg + " has no simulated depth for frame " +
            std::to_string(f.frame_index) + "; run the simulate command");
      }
      out.push_back(dir / rel);
    }
  } else {
    out.emplace_back(arg);
  }
  return out;
}

int run_eval(const EvalArgs& a) {
  const auto convention = [&] {
    if (a.delta == "strict") return rasim::DeltaConvention::StrictLess;
    if (a.delta == "inclusive") return rasim::DeltaConvention::LessEqual;
    throw rasim::ValidationError(
        "--delta-convention must be strict or inclusive");
  }();
  std::optional<std::pair<int, int>> resize;
  if (!a.resize.empty()) resize = parse_resize(a.resize);

  const auto pred_files = depth_files_from(a.pred, /*want_sim=*/true);
  const auto gt_files = depth_files_from(a.gt, /*want_sim=*/false);
  if (pred_files.size() != gt_files.size()) {
    throw rasim::ValidationError(
        "eval: prediction and ground-truth counts differ (" +
        std::to_string(pred_files.size()) + " vs " +
        std::to_string(gt_files.size()) + ")");
  }

  rasim::DepthMetricsReport avg;
  long total_pixels = 0;
  for (size_t i = 0; i < pred_files.size(); ++i) {
    const rasim::DepthMap pred = load_depth_auto(pred_files[i]);
    const rasim::DepthMap gt = load_depth_auto(gt_files[i]);
    const auto r = rasim::depth_metrics(pred, gt, resize, convention);
    avg.rmse += r.rmse;
    avg.rel += r.rel;
    avg.mae += r.mae;
    avg.delta_105 += r.delta_105;
    avg.delta_110 += r.delta_110;
    avg.delta_125 += r.delta_125;
    total_pixels += r.n_evaluated;
  }
  const double n = static_cast<double>(pred_files.size());
  avg.rmse /= n;
  avg.rel /= n;
  avg.mae /= n;
  avg.delta_105 /= n;
  avg.delta_110 /= n;
  avg.delta_125 /= n;
  avg.n_evaluated = total_pixels;

  json j = json::parse(rasim::depth_metrics_to_json(avg));
  j["n_images"] = pred_files.size();
  rasim::write_text_file(a.out, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_pose_eval(const PoseEvalArgs& a) {
  const auto samples = rasim::load_pose_samples(a.samples);
  const auto mixed = rasim::pose_accuracy(samples, /*use_adds_for_symmetric=*/true);
  auto all_sym = samples;
  for (auto& s : all_sym) s.gt.symmetric = true;
  const auto adds = rasim::pose_accuracy(all_sym, true);

  const std::string report = rasim::pose_report_to_json(
      mixed.add_01d, mixed.auc, adds.auc, static_cast<long>(samples.size()));
  rasim::write_text_file(a.out, report);
  std::cout << report;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Range-aware stereo depth sensor simulation"};
  app.require_subcommand(1);

  RenderArgs render_args;
  auto* render = app.add_subcommand(
      "render", "Render stereo frames and ground-truth depth");
  render->add_option("--scene", render_args.scene, "Scene spec JSON")->required();
  render->add_option("--rig", render_args.rig, "Rig JSON")->required();
  render->add_option("--out", render_args.out, "Output directory")->required();
  render->add_option("--frames", render_args.frames, "Frame count (static scene)");
  render->add_option("--sequence", render_args.sequence, "Sequence spec JSON");
  render->add_option("--seed", render_args.seed, "Render seed");
  render->add_option("--mode", render_args.mode, "auto|ir|rgb");
  render->add_option("--threshold", render_args.threshold,
                     "IR/RGB range threshold, meters");
  render->add_option("--depth-png-scale", render_args.png_units,
                     "Depth PNG16 units per meter");
  render->add_option("--threads", render_args.threads,
                     "Worker threads (0 = all cores)");

  MatchArgs match_args;
  auto* match = app.add_subcommand("match", "Stereo-match a rectified pair");
  match->add_option("--left", match_args.left, "Left image PNG")->required();
  match->add_option("--right", match_args.right, "Right image PNG")->required();
  match->add_option("--rig", match_args.rig, "Rig JSON")->required();
  match->add_option("--config", match_args.config, "Match config JSON");
  match->add_option("--out", match_args.out, "Output directory")->required();
  match->add_option("--threads", match_args.threads,
                    "Worker threads (0 = all cores)");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand(
      "simulate", "Render and match a full sequence into a dataset");
  simulate->add_option("--scene", sim_args.scene, "Scene spec JSON")->required();
  simulate->add_option("--sequence", sim_args.sequence, "Sequence spec JSON")
      ->required();
  simulate->add_option("--rig", sim_args.rig, "Rig JSON")->required();
  simulate->add_option("--config", sim_args.config, "Match config JSON");
  simulate->add_option("--out", sim_args.out, "Output directory")->required();
  simulate->add_option("--seed", sim_args.seed, "Render seed");
  simulate->add_option("--threshold", sim_args.threshold,
                       "IR/RGB range threshold, meters");
  simulate->add_option("--depth-png-scale", sim_args.png_units,
                       "Depth PNG16 units per meter");
  simulate->add_option("--threads", sim_args.threads,
                       "Worker threads (0 = all cores)");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Depth metrics against ground truth");
  eval->add_option("--pred", eval_args.pred, "Predicted depth file or dataset dir")
      ->required();
  eval->add_option("--gt", eval_args.gt, "Ground-truth depth file or dataset dir")
      ->required();
  eval->add_option("--out", eval_args.out, "Report JSON path")->required();
  eval->add_option("--resize", eval_args.resize, "Evaluate at HxW, e.g. 144x256");
  eval->add_option("--delta-convention", eval_args.delta, "strict|inclusive");

  PoseEvalArgs pose_args;
  auto* pose_eval =
      app.add_subcommand("pose-eval", "6DoF pose metrics from a samples file");
  pose_eval->add_option("--samples", pose_args.samples, "Pose samples JSON")
      ->required();
  pose_eval->add_option("--out", pose_args.out, "Report JSON path")->required();

  try {
    app.parse(argc, argv);
    if (render->parsed()) return run_render(render_args);
    if (match->parsed()) return run_match(match_args);
    if (simulate->parsed()) return run_simulate(sim_args);
    if (eval->parsed()) return run_eval(eval_args);
    if (pose_eval->parsed()) return run_pose_eval(pose_args);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const rasim::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rasim::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
