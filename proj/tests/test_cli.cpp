#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "rasim/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* cli_path() { return RASIM_CLI_PATH; }

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(cli_path()) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path temp_dir() {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() /
                       ("rasim_cli_test_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

const char* kRigJson = R"({
  "baseline_m": 0.03, "focal_px": 400.0, "image_size": [96, 72],
  "projector": {"dot_density": 30000, "seed": 1, "intensity": 1.0}
})";

const char* kSceneJson = R"({
  "objects": [
    {"type": "plane", "point": [0, 0, 1], "normal": [0, 0, -1],
     "texture": {"type": "noise", "seed": 4, "scale": 0.012,
                 "color_a": [0.2, 0.2, 0.2], "color_b": [0.85, 0.85, 0.85]}}
  ]
})";

const char* kSequenceJson = R"({
  "frame_count": 2,
  "keyframes": [
    {"frame": 0, "camera": {"position": [0, 0, 0]}},
    {"frame": 1, "camera": {"position": [0.01, 0, -0.05]}}
  ]
})";

const char* kConfigJson = R"({"d_max": 16})";

// Byte-level directory comparison, keyed by relative path.
bool dirs_identical(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> rel_a, rel_b;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a));
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b));
  }
  std::sort(rel_a.begin(), rel_a.end());
  std::sort(rel_b.begin(), rel_b.end());
  if (rel_a != rel_b) return false;
  for (const auto& rel : rel_a) {
    std::ifstream fa(a / rel, std::ios::binary), fb(b / rel, std::ios::binary);
    std::string ca((std::istreambuf_iterator<char>(fa)),
                   std::istreambuf_iterator<char>());
    std::string cb((std::istreambuf_iterator<char>(fb)),
                   std::istreambuf_iterator<char>());
    if (ca != cb) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("render writes images, depths, and a manifest") {
  const fs::path dir = temp_dir();
  write_file(dir / "rig.json", kRigJson);
  write_file(dir / "scene.json", kSceneJson);
  const fs::path out = dir / "out";
  REQUIRE(run_cli("render --scene " + (dir / "scene.json").string() +
                  " --rig " + (dir / "rig.json").string() + " --out " +
                  out.string() + " --threads 2") == 0);

  CHECK(fs::exists(out / "frame_000000_left.png"));
  CHECK(fs::exists(out / "frame_000000_right.png"));
  CHECK(fs::exists(out / "frame_000000_gt_depth.pfm"));
  CHECK(fs::exists(out / "frame_000000_gt_depth.png"));
  CHECK(fs::exists(out / "manifest.json"));

  const auto manifest = rasim::read_manifest(out / "manifest.json");
  REQUIRE(manifest.frames.size() == 1);
  CHECK(manifest.frames[0].mode == rasim::RenderMode::IR);
}

TEST_CASE("render is byte-identical for a repeated seed") {
  const fs::path dir = temp_dir();
  write_file(dir / "rig.json", kRigJson);
  write_file(dir / "scene.json", kSceneJson);
  const std::string base = "render --scene " + (dir / "scene.json").string() +
                           " --rig " + (dir / "rig.json").string() +
                           " --seed 5 --out ";
  REQUIRE(run_cli(base + (dir / "a").string()) == 0);
  REQUIRE(run_cli(base + (dir / "b").string()) == 0);
  CHECK(dirs_identical(dir / "a", dir / "b"));
}

TEST_CASE("missing input files exit with the I/O code") {
  const fs::path dir = temp_dir();
  write_file(dir / "rig.json", kRigJson);
  CHECK(run_cli("render --scene " + (dir / "nope.json").string() + " --rig " +
                (dir / "rig.json").string() + " --out " +
                (dir / "out").string()) == 2);
}

TEST_CASE("schema violations exit with the validation code") {
  const fs::path dir = temp_dir();
  write_file(dir / "rig.json", kRigJson);
  write_file(dir / "scene.json", R"({"objects": [{"type": "warp-core"}]})");
  CHECK(run_cli("render --scene " + (dir / "scene.json").string() +
                " --rig " + (dir / "rig.json").string() + " --out " +
                (dir / "out").string()) == 1);
  CHECK(run_cli("frobnicate") == 1);
}

TEST_CASE("match produces disparity, depth, and stage-timed stats") {
  const fs::path dir = temp_dir();
  write_file(dir / "rig.json", kRigJson);
  write_file(dir / "scene.json", kSceneJson);
  write_file(dir / "config.json", kConfigJson);
  const fs::path rendered = dir / "rendered";
  REQUIRE(run_cli("render --scene " + (dir / "scene.json").string() +
                  " --rig " + (dir / "rig.json").string() + " --out " +
                  rendered.string()) == 0);

  const fs::path out = dir / "matched";
  REQUIRE(run_cli("match --left " +
                  (rendered / "frame_000000_left.png").string() + " --right " +
                  (rendered / "frame_000000_right.png").string() + " --rig " +
                  (dir / "rig.json").string() + " --config " +
                  (dir / "config.json").string() + " --out " + out.string()) ==
          0);

  CHECK(fs::exists(out / "disparity.pfm"));
  CHECK(fs::exists(out / "depth.pfm"));
  CHECK(fs::exists(out / "depth.png"));
  REQUIRE(fs::exists(out / "stats.json"));

  const json stats = json::parse(rasim::read_text_file(out / "stats.json"));
  CHECK(stats.contains("valid_pixel_ratio"));
  CHECK(stats.contains("runtime_ms"));
  REQUIRE(stats.contains("stages_ms"));
  for (const char* stage :
       {"census", "cost_volume", "aggregate", "wta", "refine", "depth"}) {
    CHECK(stats["stages_ms"].contains(stage));
  }
  CHECK(stats["valid_pixel_ratio"].get<double>() > 0.5);

  // The matched disparity agrees with the analytic plane disparity.
  const auto disp = rasim::read_pfm_disparity(out / "disparity.pfm");
  long good = 0, total = 0;
  for (int y = 0; y < disp.height; ++y) {
    for (int x = 0; x < disp.width; ++x) {
      if (!disp.valid(x, y)) continue;
      ++total;
      if (std::abs(disp.value(x, y) - 12.0f) <= 0.5f) ++good;
    }
  }
  REQUIRE(total > 0);
  CHECK(static_cast<double>(good) / total >= 0.95);
}

TEST_CASE("simulate + eval round trip through a dataset directory") {
  const fs::path dir = temp_dir();
  write_file(dir / "rig.json", kRigJson);
  write_file(dir / "scene.json", kSceneJson);
  write_file(dir / "sequence.json", kSequenceJson);
  write_file(dir / "config.json", kConfigJson);
  const fs::path out = dir / "dataset";
  REQUIRE(run_cli("simulate --scene " + (dir / "scene.json").string() +
                  " --sequence " + (dir / "sequence.json").string() +
                  " --rig " + (dir / "rig.json").string() + " --config " +
                  (dir / "config.json").string() + " --out " + out.string() +
                  " --seed 3") == 0);

  const auto manifest = rasim::read_manifest(out / "manifest.json");
  REQUIRE(manifest.frames.size() == 2);
  for (const auto& f : manifest.frames) {
    CHECK(!f.sim_depth.empty());
    CHECK(!f.disparity.empty());
    CHECK(f.mode == rasim::RenderMode::IR);
  }

  const fs::path report = dir / "report.json";
  REQUIRE(run_cli("eval --pred " + out.string() + " --gt " + out.string() +
                  " --out " + report.string()) == 0);
  const json j = json::parse(rasim::read_text_file(report));
  CHECK(j["n_images"] == 2);
  CHECK(j["rmse"].get<double>() >= 0.0);
  CHECK(j["rmse"].get<double>() < 0.05);
  CHECK(j["delta_105"].get<double>() > 0.9);
  CHECK(std::isfinite(j["rel"].get<double>()));

  // Resized protocol evaluation also works on the same dataset.
  REQUIRE(run_cli("eval --pred " + out.string() + " --gt " + out.string() +
                  " --resize 36x48 --out " + report.string()) == 0);
  const json jr = json::parse(rasim::read_text_file(report));
  CHECK(jr["n_evaluated"].get<long>() <= 2 * 36 * 48);
}

TEST_CASE("pose-eval writes the pose report") {
  const fs::path dir = temp_dir();
  write_file(dir / "poses.json", R"({"samples":[
    {"rotation":[[1,0,0],[0,1,0],[0,0,1]],"translation":[0,0,1],
     "rotation_est":[[1,0,0],[0,1,0],[0,0,1]],"translation_est":[0.05,0,1],
     "model_points":[[0.1,0,0],[0,0.1,0],[0,0,0.1],[-0.1,0,0]],
     "diameter":0.2,"symmetric":false},
    {"rotation":[[1,0,0],[0,1,0],[0,0,1]],"translation":[0,0,1],
     "rotation_est":[[1,0,0],[0,1,0],[0,0,1]],"translation_est":[0,0,1],
     "model_points":[[0.1,0,0],[0,0.1,0]],
     "diameter":0.2,"symmetric":true}
  ]})");
  const fs::path report = dir / "pose_report.json";
  REQUIRE(run_cli("pose-eval --samples " + (dir / "poses.json").string() +
                  " --out " + report.string()) == 0);
  const json j = json::parse(rasim::read_text_file(report));
  CHECK(j["n_samples"] == 2);
  // One sample at 5 cm error (above 0.1 * 0.2 m), one perfect.
  CHECK(j["add_01d"].get<double>() == doctest::Approx(0.5));
  CHECK(j["auc_add"].get<double>() > 0.7);
  CHECK(j["auc_adds"].get<double>() > 0.7);
}

TEST_CASE("simulate honors RASIM_THREADS and stays deterministic") {
  const fs::path dir = temp_dir();
  write_file(dir / "rig.json", kRigJson);
  write_file(dir / "scene.json", kSceneJson);
  write_file(dir / "sequence.json", R"({"frame_count":1})");
  const std::string base = "simulate --scene " + (dir / "scene.json").string() +
                           " --sequence " + (dir / "sequence.json").string() +
                           " --rig " + (dir / "rig.json").string() +
                           " --seed 9 --out ";
  const std::string env_cmd =
      "RASIM_THREADS=1 " + std::string(cli_path()) + " " + base +
      (dir / "a").string() + " >/dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(env_cmd.c_str())) == 0);
  REQUIRE(run_cli(base + (dir / "b").string() + " --threads 2") == 0);
  CHECK(dirs_identical(dir / "a", dir / "b"));
}

TEST_SUITE_END();
