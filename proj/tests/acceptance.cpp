// Acceptance suite: runs every release criterion end to end and prints one
// PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "json.hpp"
#include "rasim/core.hpp"
#include "rasim/errors.hpp"
#include "rasim/io.hpp"
#include "rasim/metrics.hpp"
#include "rasim/refine.hpp"
#include "rasim/scenegen.hpp"
#include "rasim/sgm.hpp"

namespace fs = std::filesystem;
using namespace rasim;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Texture noise_tex(float lo, float hi, double scale, uint64_t seed) {
  Texture t;
  t.kind = Texture::Kind::Noise;
  t.color_a = {lo, lo, lo};
  t.color_b = {hi, hi, hi};
  t.scale = scale;
  t.seed = seed;
  return t;
}

SceneSpec plane_scene(double z, const Texture& tex) {
  SceneSpec scene;
  scene.objects.push_back(
      Primitive::make_plane(Vec3(0, 0, z), Vec3(0, 0, -1), std::nullopt, tex));
  return scene;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// ---- criterion 1: stereo oracle accuracy on a fronto-parallel plane ----

MatchResult match_reference_plane(double tilt_deg, int threads,
                                  StereoFrame* frame_out = nullptr) {
  const StereoRig rig = StereoRig::make(0.055, 600.0, 640, 480);
  SceneSpec scene;
  const double t = tilt_deg * M_PI / 180.0;
  scene.objects.push_back(Primitive::make_plane(
      Vec3(0, 0, 1.0), Vec3(0, -std::sin(t), -std::cos(t)), std::nullopt,
      noise_tex(0.15f, 0.85f, 0.012, 21)));
  IrProjectorSpec proj;
  RenderOptions opts;
  opts.threads = threads;
  const StereoFrame frame = render_stereo_frame(scene, rig, Pose{}, proj, opts);
  MatchConfig cfg;
  cfg.d_max = 64;
  MatchResult res = match_stereo(image_for_matching(frame.left),
                                 image_for_matching(frame.right), rig, cfg,
                                 threads);
  if (frame_out) *frame_out = frame;
  return res;
}

Outcome criterion_1() {
  const MatchResult res = match_reference_plane(0.0, 0);
  long within = 0, total = 0;
  std::vector<float> abs_err;
  for (int y = 0; y < res.disparity.height; ++y) {
    for (int x = 0; x < res.disparity.width; ++x) {
      if (!res.disparity.valid(x, y)) continue;
      const float err = std::abs(res.disparity.value(x, y) - 33.0f);
      abs_err.push_back(err);
      within += err <= 0.5f;
      ++total;
    }
  }
  if (total == 0) return {false, "no surviving pixels"};
  const double frac = static_cast<double>(within) / total;
  const size_t mid = abs_err.size() / 2;
  std::nth_element(abs_err.begin(), abs_err.begin() + mid, abs_err.end());
  const double median = abs_err[mid];
  const bool pass = frac >= 0.95 && median <= 0.25;
  return {pass, fmt("%.2f%% of %ld survivors within 0.5 px of 33.0 "
                    "(need >=95%%), median |err| %.3f px (need <=0.25)",
                    100.0 * frac, total, median)};
}

// ---- criterion 2: slanted-plane subpixel accuracy ----

Outcome criterion_2() {
  const StereoRig rig = StereoRig::make(0.055, 600.0, 640, 480);
  StereoFrame frame;
  const MatchResult res = match_reference_plane(30.0, 0, &frame);
  const DisparityMap gt = depth_to_disparity(frame.gt_depth, rig);

  double sum = 0.0;
  long n = 0;
  for (int y = 0; y < rig.height; ++y) {
    for (int x = 0; x < rig.width; ++x) {
      if (!res.disparity.valid(x, y) || !gt.valid(x, y)) continue;
      sum += std::abs(res.disparity.value(x, y) - gt.value(x, y));
      ++n;
    }
  }
  if (n == 0) return {false, "no surviving pixels"};
  const double mean = sum / n;
  return {mean <= 0.3,
          fmt("mean |disparity err| %.3f px over %ld survivors (need <=0.3)",
              mean, n)};
}

// ---- criterion 3: single-path DP equals exhaustive enumeration ----

Outcome criterion_3() {
  std::mt19937 rng(303);
  std::uniform_int_distribution<int> cost(0, 25);
  const int w = 6, d_max = 4, dc = d_max + 1;
  const int p1 = 3, p2 = 11;
  for (int inst = 0; inst < 50; ++inst) {
    CostVolume vol;
    vol.width = w;
    vol.height = 1;
    vol.d_max = d_max;
    vol.costs.resize(static_cast<size_t>(w) * dc);
    for (auto& c : vol.costs) c = static_cast<uint16_t>(cost(rng));

    // Exhaustive prefix minimum energies, no dynamic programming.
    std::vector<std::vector<long>> best(
        w, std::vector<long>(dc, std::numeric_limits<long>::max()));
    std::vector<int> seq(w);
    long total_seqs = 1;
    for (int i = 0; i < w; ++i) total_seqs *= dc;
    for (long code = 0; code < total_seqs; ++code) {
      long rest = code;
      for (int x = 0; x < w; ++x) {
        seq[x] = static_cast<int>(rest % dc);
        rest /= dc;
      }
      long energy = 0;
      for (int x = 0; x < w; ++x) {
        energy += vol.at(x, 0, seq[x]);
        if (x > 0) {
          const int jump = std::abs(seq[x] - seq[x - 1]);
          energy += jump == 0 ? 0 : (jump == 1 ? p1 : p2);
        }
        best[x][seq[x]] = std::min(best[x][seq[x]], energy);
      }
    }

    std::vector<uint16_t> path;
    aggregate_path(vol, p1, p2, 1, 0, path);
    for (int x = 0; x < w; ++x) {
      long prev_best = 0;
      if (x > 0) {
        prev_best = *std::min_element(best[x - 1].begin(), best[x - 1].end());
      }
      for (int d = 0; d < dc; ++d) {
        if (static_cast<long>(path[vol.index(x, 0, d)]) !=
            best[x][d] - prev_best) {
          return {false,
                  fmt("instance %d mismatch at (x=%d, d=%d)", inst, x, d)};
        }
      }
    }
  }
  return {true, "50 random 1x6 instances, d_max=4: exact energy match"};
}

// ---- criterion 4: range-aware degradation at 3.5 m ----

Outcome criterion_4() {
  const StereoRig rig = StereoRig::make(0.055, 600.0, 320, 240);
  // Dim, sparse projector: dots register within a meter or two but fall
  // below the 8-bit capture floor at 3.5 m (inverse-square falloff).
  IrProjectorSpec proj;
  proj.dot_density = 600.0;
  proj.intensity = 0.02;
  MatchConfig cfg;
  cfg.d_max = 32;

  double worst_ratio = 0.0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    // Low-texture scene with dim IR: the 2% albedo contrast spans six 8-bit
    // codes under full RGB ambient but collapses inside a single code at
    // ir_intensity_scale 0.05, so far-range IR has only the sparse dots.
    SceneSpec scene = plane_scene(3.5, noise_tex(0.49f, 0.51f, 0.012, 77));
    scene.illumination.ambient = 1.0;
    scene.illumination.ir_intensity_scale = 0.05;
    scene.illumination.ir_ambient = 0.05;

    const DepthMap gt = render_gt_depth(scene, rig, Pose{});
    if (select_render_mode(gt, 2.0) != RenderMode::RGB) {
      return {false, "mode switch failed to pick RGB at 3.5 m"};
    }

    RenderOptions opts;
    opts.seed = seed;
    auto ratio_for = [&](RenderMode mode) {
      RenderOptions o = opts;
      o.mode_override = mode;
      const StereoFrame f = render_stereo_frame(scene, rig, Pose{}, proj, o);
      const MatchResult r =
          match_stereo(image_for_matching(f.left), image_for_matching(f.right),
                       rig, cfg, 0);
      return static_cast<double>(r.disparity.valid_count()) /
             (static_cast<double>(rig.width) * rig.height);
    };
    const double ir = ratio_for(RenderMode::IR);
    const double rgb = ratio_for(RenderMode::RGB);
    if (!(ir < rgb)) {
      return {false, fmt("seed %llu: IR ratio %.3f not strictly below RGB %.3f",
                         (unsigned long long)seed, ir, rgb)};
    }
    if (!(ir <= 0.9 * rgb)) {
      return {false, fmt("seed %llu: IR ratio %.3f above 0.9 x RGB %.3f",
                         (unsigned long long)seed, ir, rgb)};
    }
    worst_ratio = std::max(worst_ratio, ir / rgb);
  }
  return {true, fmt("10 seeds: worst IR/RGB valid-ratio %.3f (need <=0.9), "
                    "mode switch picks RGB",
                    worst_ratio)};
}

// ---- criterion 5: metric identities, 1000 randomized cases each ----

Outcome criterion_5() {
  std::mt19937 rng(505);
  std::uniform_real_distribution<float> depth(0.3f, 5.0f);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto random_depth_map = [&](int w, int h, double hole_prob) {
    DepthMap z(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (unit(rng) >= hole_prob) z.set(x, y, depth(rng));
      }
    }
    return z;
  };
  auto random_rotation = [&]() {
    Vec3 axis(unit(rng) - 0.5, unit(rng) - 0.5, unit(rng) - 0.5);
    while (axis.norm() < 1e-3) {
      axis = Vec3(unit(rng) - 0.5, unit(rng) - 0.5, unit(rng) - 0.5);
    }
    return Eigen::AngleAxisd(unit(rng) * M_PI, axis.normalized())
        .toRotationMatrix();
  };

  for (int i = 0; i < 1000; ++i) {
    const DepthMap pred = random_depth_map(6, 5, 0.1);
    const DepthMap gt = random_depth_map(6, 5, 0.1);
    DepthMetricsReport r;
    try {
      r = depth_metrics(pred, gt);
    } catch (const ValidationError&) {
      continue;  // no overlap in this draw
    }
    if (r.delta_105 > r.delta_110 || r.delta_110 > r.delta_125) {
      return {false, fmt("case %d: delta monotonicity violated", i)};
    }
    if (r.rmse < r.mae - 1e-12) {
      return {false, fmt("case %d: RMSE < MAE", i)};
    }
  }

  for (int i = 0; i < 1000; ++i) {
    PoseSample s;
    s.diameter = 0.2;
    const int n = 3 + static_cast<int>(unit(rng) * 12);
    for (int k = 0; k < n; ++k) {
      s.model_points.emplace_back(unit(rng) * 0.1, unit(rng) * 0.1,
                                  unit(rng) * 0.1);
    }
    s.rotation = random_rotation();
    s.translation = Vec3(unit(rng), unit(rng), 1.0);
    const PoseEstimate est{random_rotation(), Vec3(unit(rng), unit(rng), 1.0)};
    if (adds_error(s, est) > add_error(s, est) + 1e-12) {
      return {false, fmt("case %d: ADD-S exceeded ADD", i)};
    }
  }

  for (int i = 0; i < 1000; ++i) {
    const DepthMap sim = random_depth_map(4, 4, 0.2);
    const DepthMap coarse = random_depth_map(4, 4, 0.2);
    const ImageGray zeros(4, 4, 0.0f);
    const ImageGray ones(4, 4, 1.0f);
    const DepthMap a = confidence_fusion(sim, coarse, zeros);
    const DepthMap b = confidence_fusion(sim, coarse, ones);
    if (a.mask != sim.mask || b.mask != coarse.mask) {
      return {false, fmt("case %d: fusion endpoint mask mismatch", i)};
    }
    for (size_t k = 0; k < a.values.size(); ++k) {
      if (sim.mask[k] && a.values[k] != sim.values[k]) {
        return {false, fmt("case %d: fusion endpoint 0 not exact", i)};
      }
      if (coarse.mask[k] && b.values[k] != coarse.values[k]) {
        return {false, fmt("case %d: fusion endpoint 1 not exact", i)};
      }
    }
  }
  return {true,
          "delta monotonicity, RMSE>=MAE, ADD-S<=ADD, fusion endpoints: "
          "1000 cases each, zero violations"};
}

// ---- criterion 6: pose-metric closed forms ----

Outcome criterion_6() {
  std::mt19937 rng(606);
  std::uniform_real_distribution<double> u(-0.5, 0.5);

  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    PoseSample s;
    s.diameter = 0.3;
    for (int k = 0; k < 8; ++k) {
      s.model_points.emplace_back(u(rng), u(rng), u(rng));
    }
    const Vec3 axis = Vec3(u(rng), u(rng), u(rng) + 1.0).normalized();
    s.rotation = Eigen::AngleAxisd(u(rng), axis).toRotationMatrix();
    s.translation = Vec3(u(rng), u(rng), 1.0 + u(rng));
    const Vec3 delta(u(rng) * 0.1, u(rng) * 0.1, u(rng) * 0.1);
    const PoseEstimate est{s.rotation, s.translation + delta};
    worst = std::max(worst, std::abs(add_error(s, est) - delta.norm()));
  }
  if (worst > 1e-12) {
    return {false,
            fmt("translation ADD deviates by %.3e (need <=1e-12)", worst)};
  }

  PoseSample base;
  base.diameter = 0.3;
  base.model_points = {Vec3(0.1, 0, 0), Vec3(0, 0.1, 0), Vec3(0, 0, 0.1)};
  base.translation = Vec3(0, 0, 1);
  std::vector<PoseEvalCase> mid(
      9, {base, {base.rotation, base.translation + Vec3(0.05, 0, 0)}});
  const auto step = pose_accuracy(mid, true);
  if (std::abs(step.auc - 0.5) > 0.01) {
    return {false, fmt("step AUC %.4f not within 0.5 +/- 0.01", step.auc)};
  }
  return {true,
          fmt("translation ADD exact to %.1e; step AUC %.4f", worst, step.auc)};
}

// ---- criterion 7: file round-trip laws ----

Outcome criterion_7() {
  std::mt19937 rng(707);
  std::uniform_real_distribution<float> depth(0.05f, 6.0f);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 24);

  const fs::path dir =
      fs::temp_directory_path() / ("rasim_accept7_" + std::to_string(getpid()));
  fs::create_directories(dir);

  for (int i = 0; i < 200; ++i) {
    const int w = dim(rng), h = dim(rng);
    DepthMap z(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (unit(rng) >= 0.2) z.set(x, y, depth(rng));
      }
    }
    const fs::path pfm = dir / "rt.pfm";
    write_pfm(z, pfm);
    const DepthMap back = read_pfm_depth(pfm);
    if (back.mask != z.mask ||
        std::memcmp(back.values.data(), z.values.data(),
                    z.values.size() * sizeof(float)) != 0) {
      return {false, fmt("PFM round trip %d not bit-exact", i)};
    }

    const fs::path png = dir / "rt.png";
    write_depth_png16(z, png);
    const DepthMap back16 = read_depth_png16(png);
    if (back16.mask != z.mask) {
      return {false, fmt("PNG16 round trip %d mask mismatch", i)};
    }
    for (size_t k = 0; k < z.values.size(); ++k) {
      if (!z.mask[k]) continue;
      if (std::abs(back16.values[k] - z.values[k]) > 0.00005f + 1e-7f) {
        return {false, fmt("PNG16 round trip %d exceeds 0.05 mm", i)};
      }
    }
  }
  return {true, "200 random maps: PFM bit-exact, PNG16 within 0.05 mm"};
}

// ---- criterion 8: CLI determinism across runs and thread counts ----

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(RASIM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

bool dirs_identical(const fs::path& a, const fs::path& b, std::string* why) {
  std::vector<fs::path> rel;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), a));
  }
  size_t count_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    count_b += e.is_regular_file();
  }
  if (count_b != rel.size()) {
    *why = "file counts differ";
    return false;
  }
  for (const auto& r : rel) {
    std::ifstream fa(a / r, std::ios::binary), fb(b / r, std::ios::binary);
    std::string ca((std::istreambuf_iterator<char>(fa)),
                   std::istreambuf_iterator<char>());
    std::string cb((std::istreambuf_iterator<char>(fb)),
                   std::istreambuf_iterator<char>());
    if (!fb || ca != cb) {
      *why = "mismatch at " + r.string();
      return false;
    }
  }
  return true;
}

Outcome criterion_8() {
  const fs::path dir =
      fs::temp_directory_path() / ("rasim_accept8_" + std::to_string(getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream rig(dir / "rig.json");
    rig << R"({"baseline_m":0.03,"focal_px":400.0,"image_size":[96,72],
               "projector":{"dot_density":30000,"seed":1,"intensity":1.0}})";
    std::ofstream scene(dir / "scene.json");
    scene << R"({"objects":[{"type":"plane","point":[0,0,1],
                 "texture":{"type":"noise","seed":4,"scale":0.012,
                 "color_a":[0.2,0.2,0.2],"color_b":[0.8,0.8,0.8]}}]})";
    std::ofstream seq(dir / "sequence.json");
    seq << R"({"frame_count":2,"keyframes":[
          {"frame":0,"camera":{"position":[0,0,0]}},
          {"frame":1,"camera":{"position":[0.02,0,-0.1]}}]})";
    std::ofstream cfg(dir / "config.json");
    cfg << R"({"d_max":16})";
  }
  const std::string base =
      "simulate --scene " + (dir / "scene.json").string() + " --sequence " +
      (dir / "sequence.json").string() + " --rig " +
      (dir / "rig.json").string() + " --config " +
      (dir / "config.json").string() + " --seed 7 --out ";
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"r1", " --threads 1"},
      {"r2", " --threads 1"},
      {"r3", " --threads 8"},
      {"r4", " --threads 8"},
  };
  for (const auto& [name, threads] : runs) {
    if (run_cli(base + (dir / name).string() + threads) != 0) {
      return {false, "simulate run " + name + " failed"};
    }
  }
  std::string why;
  for (const char* other : {"r2", "r3", "r4"}) {
    if (!dirs_identical(dir / "r1", dir / other, &why)) {
      return {false,
              "dataset dirs differ (" + std::string(other) + "): " + why};
    }
  }
  return {true,
          "simulate --seed 7, threads 1 and 8, two runs each: byte-identical "
          "dataset directories"};
}

// ---- criterion 9: performance envelope + stage timings in stats ----

Outcome criterion_9() {
  const MatchResult res = match_reference_plane(0.0, 1);
  const double match_ms = res.times.total_ms;

  const fs::path dir =
      fs::temp_directory_path() / ("rasim_accept9_" + std::to_string(getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream rig(dir / "rig.json");
    rig << R"({"baseline_m":0.03,"focal_px":400.0,"image_size":[96,72]})";
    std::ofstream scene(dir / "scene.json");
    scene << R"({"objects":[{"type":"plane","point":[0,0,1],
                 "texture":{"type":"noise","seed":4,"scale":0.012,
                 "color_a":[0.2,0.2,0.2],"color_b":[0.8,0.8,0.8]}}]})";
  }
  if (run_cli("render --scene " + (dir / "scene.json").string() + " --rig " +
              (dir / "rig.json").string() + " --out " +
              (dir / "out").string()) != 0) {
    return {false, "render for stats check failed"};
  }
  if (run_cli("match --left " + (dir / "out/frame_000000_left.png").string() +
              " --right " + (dir / "out/frame_000000_right.png").string() +
              " --rig " + (dir / "rig.json").string() + " --out " +
              (dir / "matched").string()) != 0) {
    return {false, "match for stats check failed"};
  }
  const auto stats =
      nlohmann::json::parse(read_text_file(dir / "matched" / "stats.json"));
  for (const char* key :
       {"census", "cost_volume", "aggregate", "wta", "refine", "depth"}) {
    if (!stats.contains("stages_ms") || !stats["stages_ms"].contains(key)) {
      return {false, std::string("stats.json missing stage timing: ") + key};
    }
  }
  const bool pass = match_ms < 2000.0;
  return {pass, fmt("640x480, d_max=64, 8 paths, 1 thread: match %.0f ms "
                    "(need <2000); stage timings present in stats JSON",
                    match_ms)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>>
      criteria = {
          {"stereo oracle accuracy (plane at 1 m)", criterion_1},
          {"slanted-plane subpixel accuracy", criterion_2},
          {"single-path SGM equals exhaustive DP", criterion_3},
          {"range-aware IR degradation at 3.5 m", criterion_4},
          {"metric identities (1000 cases each)", criterion_5},
          {"pose-metric closed forms", criterion_6},
          {"PFM / PNG16 round-trip laws", criterion_7},
          {"simulate determinism across threads", criterion_8},
          {"performance envelope + stage timings", criterion_9},
      };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %zu %s  %s: %s\n", i + 1, out.pass ? "PASS" : "FAIL",
                criteria[i].first.c_str(), out.detail.c_str());
    std::fflush(stdout);
    failures += !out.pass;
  }
  if (failures > 0) {
    std::printf("%d of %zu acceptance criteria FAILED\n", failures,
                criteria.size());
    return 1;
  }
  std::printf("all %zu acceptance criteria passed\n", criteria.size());
  return 0;
}
