#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "rasim/core.hpp"
#include "rasim/geometry.hpp"
#include "rasim/refine.hpp"

namespace rasim {

enum class RenderMode { IR, RGB };
enum class Eye { Left, Right };

struct Color {
  float r = 0.0f;
  float g = 0.0f;
  float b = 0.0f;
};

struct Texture {
  enum class Kind { Flat, Checker, Noise };
  Kind kind = Kind::Flat;
  Color color_a{0.8f, 0.8f, 0.8f};
  Color color_b{0.2f, 0.2f, 0.2f};
  double scale = 0.02;  // meters per cell, checker/noise only
  uint64_t seed = 0;    // noise only

  void validate() const;
};

// Analytic primitive: a (possibly bounded) plane or a sphere. Planes carry a
// deterministic in-plane basis so textures stay attached under rigid motion.
struct Primitive {
  enum class Kind { Plane, Sphere };
  Kind kind = Kind::Plane;

  // plane
  Vec3 point = Vec3(0, 0, 1);
  Vec3 normal = Vec3(0, 0, -1);
  Vec3 basis_u = Vec3(1, 0, 0);
  Vec3 basis_v = Vec3(0, 1, 0);
  bool bounded = false;
  double half_u = 0.0;  // meters
  double half_v = 0.0;

  // sphere
  Vec3 center = Vec3(0, 0, 1);
  double radius = 0.1;
  Mat3 tex_frame = Mat3::Identity();

  Texture texture;

  static Primitive make_plane(const Vec3& point, const Vec3& normal,
                              std::optional<std::pair<double, double>> extent,
                              const Texture& tex);
  static Primitive make_sphere(const Vec3& center, double radius,
                               const Texture& tex);
  Primitive transformed(const Pose& pose) const;
  void validate() const;
};

struct Illumination {
  double ambient = 1.0;            // RGB mode; headlight weight is 1-ambient
  double ir_ambient = 0.05;        // weak additive light in IR mode
  double ir_intensity_scale = 0.3;  // IR reflectance scale

  void validate() const;
};

struct SceneSpec {
  std::vector<Primitive> objects;
  std::optional<Primitive> background;  // unbounded plane behind everything
  Illumination illumination;

  void validate() const;
  // Per-primitive and illumination checks only; render operations accept
  // empty scenes (rays simply miss).
  void validate_contents() const;
};

struct IrProjectorSpec {
  double dot_density = 30000.0;  // dots per steradian of projector frustum
  uint64_t seed = 1;
  double intensity = 1.0;  // per-dot peak at 1 m; falls off as 1/distance^2

  void validate() const;
};

// Scripted rigid motion: keyframed poses, lerp positions / slerp rotations.
struct Keyframe {
  int frame = 0;
  Pose camera;
  std::vector<Pose> objects;  // by scene-object index; missing => identity
};

struct SequenceSpec {
  int frame_count = 1;
  std::vector<Keyframe> keyframes;  // sorted by frame on validate()

  void validate() const;
  Pose camera_at(int frame) const;
  Pose object_at(size_t object_index, int frame) const;
};

using RenderedImage = std::variant<ImageGray, ImageRGB>;

struct StereoFrame {
  RenderedImage left;
  RenderedImage right;
  DepthMap gt_depth;  // left camera
  RenderMode mode = RenderMode::IR;
  int frame_index = 0;
};

struct SimulatedFrame {
  StereoFrame frame;
  DisparityMap sim_disparity;
  DepthMap sim_depth;
};

struct RenderOptions {
  double mode_threshold_m = 2.0;
  std::optional<RenderMode> mode_override;
  uint64_t seed = 0;  // mixed into texture and projector seeds
  int threads = 0;
};

// Pose of one eye given the left-camera pose: the right camera sits
// baseline_m along the camera-local +x axis.
Pose eye_pose(const StereoRig& rig, const Pose& left_pose, Eye eye);

ImageRGB render_view_rgb(const SceneSpec& scene, const StereoRig& rig,
                         const Pose& left_pose, Eye eye, uint64_t seed = 0,
                         int threads = 0);

ImageGray render_view_ir(const SceneSpec& scene, const StereoRig& rig,
                         const Pose& left_pose, Eye eye,
                         const std::optional<IrProjectorSpec>& projector,
                         uint64_t seed = 0, int threads = 0);

RenderedImage render_view(const SceneSpec& scene, const StereoRig& rig,
                          const Pose& left_pose, Eye eye, RenderMode mode,
                          const std::optional<IrProjectorSpec>& projector,
                          uint64_t seed = 0, int threads = 0);

// Optical-axis depth (camera z) of the nearest hit; misses stay invalid.
DepthMap render_gt_depth(const SceneSpec& scene, const StereoRig& rig,
                         const Pose& camera, int threads = 0);

// Additive dot layer as seen by one eye. The projector sits at the rig's
// optical-center midpoint; both eyes see the same world-space dots. Values
// are raw pre-clamp contributions and may exceed 1 where dots overlap.
ImageGray project_ir_pattern(const SceneSpec& scene, const StereoRig& rig,
                             const Pose& left_pose, Eye eye,
                             const IrProjectorSpec& projector,
                             uint64_t seed = 0);

// IR below threshold_m on the median valid ground-truth depth, RGB at or
// beyond it.
RenderMode select_render_mode(const DepthMap& gt_depth, double threshold_m);

StereoFrame render_stereo_frame(const SceneSpec& scene, const StereoRig& rig,
                                const Pose& left_pose,
                                const std::optional<IrProjectorSpec>& projector,
                                const RenderOptions& opts = {},
                                int frame_index = 0);

// Scene with the sequence's object transforms applied for frame t.
SceneSpec scene_at_frame(const SceneSpec& scene, const SequenceSpec& seq,
                         int frame);

std::vector<SimulatedFrame> simulate_sequence(
    const SceneSpec& scene, const SequenceSpec& seq, const StereoRig& rig,
    const std::optional<IrProjectorSpec>& projector, const MatchConfig& cfg,
    const RenderOptions& opts = {});

// Matching input from a rendered frame image: IR frames pass through, RGB
// frames go through the fixed luminance blend.
ImageGray image_for_matching(const RenderedImage& img);

}  // namespace rasim
