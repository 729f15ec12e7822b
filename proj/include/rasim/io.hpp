#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rasim/core.hpp"
#include "rasim/metrics.hpp"
#include "rasim/refine.hpp"
#include "rasim/scenegen.hpp"

namespace rasim {

// ---- PFM: grayscale portable float map, 32-bit, scale sign = endianness ----

void write_pfm(const FloatMap& map, const std::filesystem::path& path);
DisparityMap read_pfm_disparity(const std::filesystem::path& path);
DepthMap read_pfm_depth(const std::filesystem::path& path);

// ---- 16-bit grayscale PNG depth; 0 encodes invalid ----

inline constexpr double kDefaultDepthPngUnitsPerMeter = 10000.0;  // 0.1 mm

void write_depth_png16(const DepthMap& z, const std::filesystem::path& path,
                       double units_per_meter = kDefaultDepthPngUnitsPerMeter);
DepthMap read_depth_png16(const std::filesystem::path& path,
                          double units_per_meter = kDefaultDepthPngUnitsPerMeter);

// ---- 8-bit PNG images ----

void write_image_png(const ImageGray& img, const std::filesystem::path& path);
void write_image_png(const ImageRGB& img, const std::filesystem::path& path);
std::variant<ImageGray, ImageRGB> read_image_png(
    const std::filesystem::path& path);

// ---- JSON configuration (strict: unknown keys are rejected) ----

struct SensorSpec {
  StereoRig rig;
  std::optional<IrProjectorSpec> projector;
};

SceneSpec parse_scene_spec(const std::string& json_text);
MatchConfig parse_match_config(const std::string& json_text);
SensorSpec parse_rig(const std::string& json_text);
SequenceSpec parse_sequence_spec(const std::string& json_text);
std::vector<PoseEvalCase> parse_pose_samples(const std::string& json_text);

SceneSpec load_scene_spec(const std::filesystem::path& path);
MatchConfig load_match_config(const std::filesystem::path& path);
SensorSpec load_rig(const std::filesystem::path& path);
SequenceSpec load_sequence_spec(const std::filesystem::path& path);
std::vector<PoseEvalCase> load_pose_samples(const std::filesystem::path& path);

std::string rig_to_json(const SensorSpec& sensor);

// ---- Dataset manifest ----

struct FrameEntry {
  int frame_index = 0;
  RenderMode mode = RenderMode::IR;
  std::string left;
  std::string right;
  std::string gt_depth;
  std::string sim_depth;   // empty when the frame was only rendered
  std::string disparity;   // empty when the frame was only rendered
};

struct DatasetManifest {
  std::string version = "1";
  SensorSpec sensor;
  std::string scene_spec;     // paths relative to the manifest
  std::string sequence_spec;  // empty when absent
  double mode_threshold_m = 2.0;
  uint64_t seed = 0;
  std::vector<FrameEntry> frames;
};

// Writes the manifest; every referenced file must already exist next to it.
void write_manifest(const DatasetManifest& manifest,
                    const std::filesystem::path& path);
// Reads and verifies that every referenced file exists.
DatasetManifest read_manifest(const std::filesystem::path& path);

// ---- Report serialization (fixed field names) ----

std::string depth_metrics_to_json(const DepthMetricsReport& report);
std::string pose_report_to_json(double add_01d, double auc_add,
                                double auc_adds, long n_samples);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     const std::string& content);

}  // namespace rasim
