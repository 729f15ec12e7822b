#include "rasim/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>

#include "rasim/errors.hpp"
#include "rasim/parallel.hpp"

namespace rasim {

namespace {

constexpr double kRayTmin = 1e-9;
constexpr double kDotSigmaPx = 0.5;    // Gaussian splat radius ~1 px
constexpr int kDotWindowPx = 2;        // splat support half-width
constexpr double kVisibilityTolM = 1e-3;

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

uint64_t combine_seed(uint64_t a, uint64_t b) { return mix64(a ^ mix64(b)); }

double unit_double(uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Per-cell hash noise in [0,1); pure function of (seed, cell).
double cell_noise(uint64_t seed, int64_t cx, int64_t cy) {
  uint64_t h = mix64(mix64(seed ^ static_cast<uint64_t>(cx)) ^
                     static_cast<uint64_t>(cy));
  return unit_double(h);
}

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ValidationError(std::string(name) + " must be in [0,1], got " +
                          std::to_string(v));
  }
}

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  const Primitive* prim = nullptr;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
};

bool intersect_plane(const Primitive& p, const Vec3& origin, const Vec3& dir,
                     double& t_out) {
  const double denom = dir.dot(p.normal);
  if (std::abs(denom) < 1e-12) return false;
  const double t = (p.point - origin).dot(p.normal) / denom;
  if (t <= kRayTmin) return false;
  if (p.bounded) {
    const Vec3 rel = origin + t * dir - p.point;
    if (std::abs(rel.dot(p.basis_u)) > p.half_u) return false;
    if (std::abs(rel.dot(p.basis_v)) > p.half_v) return false;
  }
  t_out = t;
  return true;
}

bool intersect_sphere(const Primitive& s, const Vec3& origin, const Vec3& dir,
                      double& t_out) {
  const Vec3 oc = origin - s.center;
  const double a = dir.squaredNorm();
  const double b = 2.0 * oc.dot(dir);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return false;
  const double sq = std::sqrt(disc);
  double t = (-b - sq) / (2.0 * a);
  if (t <= kRayTmin) t = (-b + sq) / (2.0 * a);
  if (t <= kRayTmin) return false;
  t_out = t;
  return true;
}

std::optional<Hit> cast_ray(const SceneSpec& scene, const Vec3& origin,
                            const Vec3& dir) {
  Hit best;
  auto consider = [&](const Primitive& p) {
    double t = 0.0;
    const bool ok = p.kind == Primitive::Kind::Plane
                        ? intersect_plane(p, origin, dir, t)
                        : intersect_sphere(p, origin, dir, t);
    if (ok && t < best.t) {
      best.t = t;
      best.prim = &p;
    }
  };
  for (const auto& obj : scene.objects) consider(obj);
  if (scene.background) consider(*scene.background);
  if (best.prim == nullptr) return std::nullopt;
  best.point = origin + best.t * dir;
  best.normal = best.prim->kind == Primitive::Kind::Plane
                    ? best.prim->normal
                    : ((best.point - best.prim->center) / best.prim->radius);
  return best;
}

Color albedo_at(const Primitive& p, const Vec3& point, uint64_t seed_offset) {
  if (p.texture.kind == Texture::Kind::Flat) return p.texture.color_a;

  double u = 0.0, v = 0.0;
  if (p.kind == Primitive::Kind::Plane) {
    const Vec3 rel = point - p.point;
    u = rel.dot(p.basis_u);
    v = rel.dot(p.basis_v);
  } else {
    const Vec3 local = p.tex_frame.transpose() * (point - p.center);
    const double theta = std::atan2(local.y(), local.x());
    const double phi =
        std::acos(std::clamp(local.z() / p.radius, -1.0, 1.0));
    u = theta * p.radius;
    v = phi * p.radius;
  }
  const int64_t cu = static_cast<int64_t>(std::floor(u / p.texture.scale));
  const int64_t cv = static_cast<int64_t>(std::floor(v / p.texture.scale));

  if (p.texture.kind == Texture::Kind::Checker) {
    return ((cu + cv) & 1) == 0 ? p.texture.color_a : p.texture.color_b;
  }
  const double h =
      cell_noise(combine_seed(p.texture.seed, seed_offset), cu, cv);
  const float hf = static_cast<float>(h);
  return Color{p.texture.color_a.r + (p.texture.color_b.r - p.texture.color_a.r) * hf,
               p.texture.color_a.g + (p.texture.color_b.g - p.texture.color_a.g) * hf,
               p.texture.color_a.b + (p.texture.color_b.b - p.texture.color_a.b) * hf};
}

float luminance(const Color& c) {
  return 0.299f * c.r + 0.587f * c.g + 0.114f * c.b;
}

float clamp01(double v) {
  return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

float quantize8(float v) {
  return std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f;
}

void quantize8(ImageGray& img) {
  for (float& v : img.data) v = quantize8(v);
}

void quantize8(ImageRGB& img) {
  for (float& v : img.data) v = quantize8(v);
}

struct DotSample {
  Vec3 point;   // world-space first hit of the dot ray
  double amp;   // intensity attenuated by inverse-square distance
};

// Frustum solid angle of the rig's pinhole, steradians.
double frustum_solid_angle(const StereoRig& rig) {
  const double ax = std::atan2(rig.width * 0.5, rig.focal_px);
  const double ay = std::atan2(rig.height * 0.5, rig.focal_px);
  return 4.0 * std::asin(std::sin(ax) * std::sin(ay));
}

Vec3 projector_position(const StereoRig& rig, const Pose& left_pose) {
  return left_pose.apply(Vec3(rig.baseline_m * 0.5, 0.0, 0.0));
}

std::vector<DotSample> generate_dots(const SceneSpec& scene,
                                     const StereoRig& rig,
                                     const Pose& left_pose,
                                     const IrProjectorSpec& projector,
                                     uint64_t seed_offset) {
  const Vec3 origin = projector_position(rig, left_pose);
  const long n = std::lround(projector.dot_density * frustum_solid_angle(rig));

  std::mt19937_64 rng(combine_seed(projector.seed, seed_offset));
  std::vector<DotSample> dots;
  dots.reserve(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double px = unit_double(rng()) * rig.width;
    const double py = unit_double(rng()) * rig.height;
    const Vec3 dir_cam((px - rig.ppx) / rig.focal_px,
                       (py - rig.ppy) / rig.focal_px, 1.0);
    const auto hit = cast_ray(scene, origin, left_pose.rotate(dir_cam));
    if (!hit) continue;
    const double dist2 = (hit->point - origin).squaredNorm();
    if (dist2 <= 0.0) continue;
    dots.push_back({hit->point, projector.intensity / dist2});
  }
  return dots;
}

// Splats are accumulated serially so the additive layer is bit-identical
// regardless of thread count.
void splat_dots(const std::vector<DotSample>& dots, const SceneSpec& scene,
                const StereoRig& rig, const Pose& camera, ImageGray& layer) {
  const Mat3 r_t = camera.rotation.transpose();
  for (const auto& dot : dots) {
    const Vec3 to_dot = dot.point - camera.position;
    const Vec3 cam_pt = r_t * to_dot;
    if (cam_pt.z() <= 1e-9) continue;
    const double px = rig.focal_px * cam_pt.x() / cam_pt.z() + rig.ppx;
    const double py = rig.focal_px * cam_pt.y() / cam_pt.z() + rig.ppy;
    if (px < -kDotWindowPx - 1 || px > rig.width + kDotWindowPx ||
        py < -kDotWindowPx - 1 || py > rig.height + kDotWindowPx) {
      continue;
    }
    // Occlusion: the dot contributes only where this camera actually sees
    // its surface point.
    const auto vis = cast_ray(scene, camera.position, to_dot);
    if (!vis || std::abs(vis->t - 1.0) * to_dot.norm() > kVisibilityTolM) {
      continue;
    }
    const int x0 = std::max(0, static_cast<int>(std::ceil(px - kDotWindowPx)));
    const int x1 =
        std::min(rig.width - 1, static_cast<int>(std::floor(px + kDotWindowPx)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(py - kDotWindowPx)));
    const int y1 = std::min(rig.height - 1,
                            static_cast<int>(std::floor(py + kDotWindowPx)));
    const double inv_two_sigma2 = 1.0 / (2.0 * kDotSigmaPx * kDotSigmaPx);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - px;
        const double dy = y - py;
        layer.at(x, y) += static_cast<float>(
            dot.amp * std::exp(-(dx * dx + dy * dy) * inv_two_sigma2));
      }
    }
  }
}

}  // namespace

void Texture::validate() const {
  for (float v : {color_a.r, color_a.g, color_a.b, color_b.r, color_b.g,
                  color_b.b}) {
    check_unit(v, "Texture color");
  }
  if (kind != Kind::Flat && !(scale > 0.0)) {
    throw ValidationError("Texture: scale must be > 0, got " +
                          std::to_string(scale));
  }
}

Primitive Primitive::make_plane(const Vec3& point, const Vec3& normal,
                                std::optional<std::pair<double, double>> extent,
                                const Texture& tex) {
  Primitive p;
  p.kind = Kind::Plane;
  p.point = point;
  const double n = normal.norm();
  if (!(n > 0.0)) {
    throw ValidationError("Primitive: plane normal must be nonzero");
  }
  p.normal = normal / n;
  const Vec3 helper =
      std::abs(p.normal.dot(Vec3(0, 1, 0))) < 0.9 ? Vec3(0, 1, 0) : Vec3(1, 0, 0);
  p.basis_u = p.normal.cross(helper).normalized();
  p.basis_v = p.normal.cross(p.basis_u);
  if (extent) {
    p.bounded = true;
    p.half_u = extent->first;
    p.half_v = extent->second;
  }
  p.texture = tex;
  p.validate();
  return p;
}

Primitive Primitive::make_sphere(const Vec3& center, double radius,
                                 const Texture& tex) {
  Primitive p;
  p.kind = Kind::Sphere;
  p.center = center;
  p.radius = radius;
  p.texture = tex;
  p.validate();
  return p;
}

Primitive Primitive::transformed(const Pose& pose) const {
  Primitive out = *this;
  if (kind == Kind::Plane) {
    out.point = pose.apply(point);
    out.normal = pose.rotate(normal);
    out.basis_u = pose.rotate(basis_u);
    out.basis_v = pose.rotate(basis_v);
  } else {
    out.center = pose.apply(center);
    out.tex_frame = pose.rotation * tex_frame;
  }
  return out;
}

void Primitive::validate() const {
  texture.validate();
  if (kind == Kind::Plane) {
    if (std::abs(normal.norm() - 1.0) > 1e-9) {
      throw ValidationError("Primitive: plane normal must be unit length");
    }
    if (bounded && (!(half_u > 0.0) || !(half_v > 0.0))) {
      throw ValidationError("Primitive: plane extent must be > 0");
    }
  } else {
    if (!(radius > 0.0)) {
      throw ValidationError("Primitive: sphere radius must be > 0, got " +
                            std::to_string(radius));
    }
  }
}

void Illumination::validate() const {
  check_unit(ambient, "Illumination.ambient");
  check_unit(ir_ambient, "Illumination.ir_ambient");
  check_unit(ir_intensity_scale, "Illumination.ir_intensity_scale");
}

void SceneSpec::validate_contents() const {
  for (const auto& obj : objects) obj.validate();
  if (background) {
    background->validate();
    if (background->kind != Primitive::Kind::Plane) {
      throw ValidationError("SceneSpec: background must be a plane");
    }
  }
  illumination.validate();
}

void SceneSpec::validate() const {
  if (objects.empty() && !background) {
    throw ValidationError("SceneSpec: need at least one object or background");
  }
  validate_contents();
}

void IrProjectorSpec::validate() const {
  if (!(dot_density > 0.0)) {
    throw ValidationError("IrProjectorSpec: dot_density must be > 0");
  }
  check_unit(intensity, "IrProjectorSpec.intensity");
}

void SequenceSpec::validate() const {
  if (frame_count < 1) {
    throw ValidationError("SequenceSpec: frame_count must be >= 1, got " +
                          std::to_string(frame_count));
  }
  for (size_t i = 1; i < keyframes.size(); ++i) {
    if (keyframes[i].frame <= keyframes[i - 1].frame) {
      throw ValidationError(
          "SequenceSpec: keyframes must be sorted by strictly increasing "
          "frame");
    }
  }
  for (const auto& kf : keyframes) {
    const Mat3& r = kf.camera.rotation;
    if ((r * r.transpose() - Mat3::Identity()).norm() > 1e-6 ||
        std::abs(r.determinant() - 1.0) > 1e-6) {
      throw ValidationError("SequenceSpec: camera rotation is not a proper "
                            "rotation at frame " +
                            std::to_string(kf.frame));
    }
  }
}

namespace {

Pose interpolate_keyframes(const std::vector<Keyframe>& keyframes, int frame,
                           const std::function<Pose(const Keyframe&)>& get) {
  if (keyframes.empty()) return Pose{};
  if (frame <= keyframes.front().frame) return get(keyframes.front());
  if (frame >= keyframes.back().frame) return get(keyframes.back());
  size_t hi = 1;
  while (keyframes[hi].frame < frame) ++hi;
  const Keyframe& a = keyframes[hi - 1];
  const Keyframe& b = keyframes[hi];
  const double t = static_cast<double>(frame - a.frame) /
                   static_cast<double>(b.frame - a.frame);
  return interpolate(get(a), get(b), t);
}

}  // namespace

Pose SequenceSpec::camera_at(int frame) const {
  return interpolate_keyframes(keyframes, frame,
                               [](const Keyframe& k) { return k.camera; });
}

Pose SequenceSpec::object_at(size_t object_index, int frame) const {
  return interpolate_keyframes(keyframes, frame, [&](const Keyframe& k) {
    return object_index < k.objects.size() ? k.objects[object_index] : Pose{};
  });
}

Pose eye_pose(const StereoRig& rig, const Pose& left_pose, Eye eye) {
  if (eye == Eye::Left) return left_pose;
  Pose right = left_pose;
  right.position = left_pose.apply(Vec3(rig.baseline_m, 0.0, 0.0));
  return right;
}

ImageRGB render_view_rgb(const SceneSpec& scene, const StereoRig& rig,
                         const Pose& left_pose, Eye eye, uint64_t seed,
                         int threads) {
  scene.validate_contents();
  rig.validate();
  const Pose cam = eye_pose(rig, left_pose, eye);
  const double ambient = scene.illumination.ambient;
  ImageRGB img(rig.width, rig.height);

  parallel_for(0, rig.height, threads, [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
      for (int x = 0; x < rig.width; ++x) {
        const Vec3 dir_cam((x - rig.ppx) / rig.focal_px,
                           (y - rig.ppy) / rig.focal_px, 1.0);
        const Vec3 dir = cam.rotate(dir_cam);
        const auto hit = cast_ray(scene, cam.position, dir);
        if (!hit) continue;
        const Color alb = albedo_at(*hit->prim, hit->point, seed);
        // Headlight diffuse term fills whatever the ambient leaves.
        const Vec3 view = -dir.normalized();
        Vec3 n = hit->normal;
        if (n.dot(view) < 0.0) n = -n;
        const double shade = ambient + (1.0 - ambient) * std::max(0.0, n.dot(view));
        img.at(x, y, 0) = clamp01(alb.r * shade);
        img.at(x, y, 1) = clamp01(alb.g * shade);
        img.at(x, y, 2) = clamp01(alb.b * shade);
      }
    }
  });
  return img;
}

ImageGray render_view_ir(const SceneSpec& scene, const StereoRig& rig,
                         const Pose& left_pose, Eye eye,
                         const std::optional<IrProjectorSpec>& projector,
                         uint64_t seed, int threads) {
  scene.validate_contents();
  rig.validate();
  ImageGray layer(rig.width, rig.height);
  if (projector) {
    layer = project_ir_pattern(scene, rig, left_pose, eye, *projector, seed);
  }

  const Pose cam = eye_pose(rig, left_pose, eye);
  const double scale = scene.illumination.ir_intensity_scale;
  const double floor = scene.illumination.ir_ambient;
  ImageGray img(rig.width, rig.height);

  parallel_for(0, rig.height, threads, [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
      for (int x = 0; x < rig.width; ++x) {
        const Vec3 dir_cam((x - rig.ppx) / rig.focal_px,
                           (y - rig.ppy) / rig.focal_px, 1.0);
        const auto hit = cast_ray(scene, cam.position, cam.rotate(dir_cam));
        double base = 0.0;
        if (hit) {
          base = luminance(albedo_at(*hit->prim, hit->point, seed)) * scale +
                 floor;
        }
        img.at(x, y) = clamp01(base + layer.at(x, y));
      }
    }
  });
  return img;
}

RenderedImage render_view(const SceneSpec& scene, const StereoRig& rig,
                          const Pose& left_pose, Eye eye, RenderMode mode,
                          const std::optional<IrProjectorSpec>& projector,
                          uint64_t seed, int threads) {
  if (mode == RenderMode::RGB) {
    return render_view_rgb(scene, rig, left_pose, eye, seed, threads);
  }
  return render_view_ir(scene, rig, left_pose, eye, projector, seed, threads);
}

DepthMap render_gt_depth(const SceneSpec& scene, const StereoRig& rig,
                         const Pose& camera, int threads) {
  scene.validate_contents();
  rig.validate();
  DepthMap depth(rig.width, rig.height);
  parallel_for(0, rig.height, threads, [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
      for (int x = 0; x < rig.width; ++x) {
        const Vec3 dir_cam((x - rig.ppx) / rig.focal_px,
                           (y - rig.ppy) / rig.focal_px, 1.0);
        const auto hit = cast_ray(scene, camera.position, camera.rotate(dir_cam));
        // dir_cam.z == 1, so the ray parameter is the optical-axis depth.
        if (hit) depth.set(x, y, static_cast<float>(hit->t));
      }
    }
  });
  return depth;
}

ImageGray project_ir_pattern(const SceneSpec& scene, const StereoRig& rig,
                             const Pose& left_pose, Eye eye,
                             const IrProjectorSpec& projector, uint64_t seed) {
  scene.validate_contents();
  rig.validate();
  projector.validate();
  const auto dots = generate_dots(scene, rig, left_pose, projector, seed);
  ImageGray layer(rig.width, rig.height);
  splat_dots(dots, scene, rig, eye_pose(rig, left_pose, eye), layer);
  return layer;
}

RenderMode select_render_mode(const DepthMap& gt_depth, double threshold_m) {
  std::vector<float> depths;
  depths.reserve(gt_depth.values.size());
  for (size_t i = 0; i < gt_depth.values.size(); ++i) {
    if (gt_depth.mask[i]) depths.push_back(gt_depth.values[i]);
  }
  if (depths.empty()) {
    throw ValidationError("select_render_mode: depth map has no valid pixels");
  }
  const size_t mid = (depths.size() - 1) / 2;
  std::nth_element(depths.begin(), depths.begin() + mid, depths.end());
  return depths[mid] < threshold_m ? RenderMode::IR : RenderMode::RGB;
}

StereoFrame render_stereo_frame(const SceneSpec& scene, const StereoRig& rig,
                                const Pose& left_pose,
                                const std::optional<IrProjectorSpec>& projector,
                                const RenderOptions& opts, int frame_index) {
  StereoFrame frame;
  frame.frame_index = frame_index;
  frame.gt_depth = render_gt_depth(scene, rig, left_pose, opts.threads);
  frame.mode = opts.mode_override
                   ? *opts.mode_override
                   : select_render_mode(frame.gt_depth, opts.mode_threshold_m);

  frame.left = render_view(scene, rig, left_pose, Eye::Left, frame.mode,
                           projector, opts.seed, opts.threads);
  frame.right = render_view(scene, rig, left_pose, Eye::Right, frame.mode,
                            projector, opts.seed, opts.threads);
  // 8-bit capture: matches what the PNG files persist, so in-memory and
  // file-based pipelines agree bit-exactly.
  std::visit([](auto& img) { quantize8(img); }, frame.left);
  std::visit([](auto& img) { quantize8(img); }, frame.right);
  return frame;
}

SceneSpec scene_at_frame(const SceneSpec& scene, const SequenceSpec& seq,
                         int frame) {
  SceneSpec out = scene;
  for (size_t i = 0; i < out.objects.size(); ++i) {
    out.objects[i] = scene.objects[i].transformed(seq.object_at(i, frame));
  }
  return out;
}

std::vector<SimulatedFrame> simulate_sequence(
    const SceneSpec& scene, const SequenceSpec& seq, const StereoRig& rig,
    const std::optional<IrProjectorSpec>& projector, const MatchConfig& cfg,
    const RenderOptions& opts) {
  scene.validate();
  seq.validate();
  std::vector<SimulatedFrame> frames;
  frames.reserve(static_cast<size_t>(seq.frame_count));
  for (int t = 0; t < seq.frame_count; ++t) {
    const SceneSpec scene_t = scene_at_frame(scene, seq, t);
    const Pose cam = seq.camera_at(t);
    SimulatedFrame sim;
    sim.frame = render_stereo_frame(scene_t, rig, cam, projector, opts, t);
    auto res = match_stereo(image_for_matching(sim.frame.left),
                            image_for_matching(sim.frame.right), rig, cfg,
                            opts.threads);
    sim.sim_disparity = std::move(res.disparity);
    sim.sim_depth = std::move(res.depth);
    frames.push_back(std::move(sim));
  }
  return frames;
}

ImageGray image_for_matching(const RenderedImage& img) {
  if (std::holds_alternative<ImageGray>(img)) {
    return std::get<ImageGray>(img);
  }
  return to_grayscale(std::get<ImageRGB>(img));
}

}  // namespace rasim
