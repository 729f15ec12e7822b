#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "rasim/core.hpp"
#include "rasim/geometry.hpp"

namespace rasim {

struct DepthMetricsReport {
  double rmse = 0.0;  // meters
  double rel = 0.0;   // |pred-gt|/gt
  double mae = 0.0;   // meters
  double delta_105 = 0.0;
  double delta_110 = 0.0;
  double delta_125 = 0.0;
  long n_evaluated = 0;
};

// Inlier test for the delta ratios. StrictLess counts a pixel when
// max(pred/gt, gt/pred) < delta; LessEqual uses <=.
enum class DeltaConvention { StrictLess, LessEqual };

// Evaluates over pixels valid in both maps, optionally after a
// nearest-neighbor resize of both maps to (height, width).
DepthMetricsReport depth_metrics(
    const DepthMap& pred, const DepthMap& gt,
    std::optional<std::pair<int, int>> resize_to = std::nullopt,
    DeltaConvention convention = DeltaConvention::StrictLess);

// Nearest-neighbor resample, pixel-center mapping. Exposed for the
// evaluation protocol's fixed 144x256 input size.
DepthMap resize_nearest(const DepthMap& z, int out_h, int out_w);

struct NormalMap {
  int width = 0;
  int height = 0;
  std::vector<float> nx, ny, nz;
  std::vector<uint8_t> mask;

  NormalMap() = default;
  NormalMap(int w, int h)
      : width(w),
        height(h),
        nx(static_cast<size_t>(w) * h, kInvalidValue),
        ny(static_cast<size_t>(w) * h, kInvalidValue),
        nz(static_cast<size_t>(w) * h, kInvalidValue),
        mask(static_cast<size_t>(w) * h, 0) {}
  size_t index(int x, int y) const {
    return static_cast<size_t>(y) * width + x;
  }
  bool valid(int x, int y) const { return mask[index(x, y)] != 0; }
};

// Unit normals from back-projected central-difference tangents, oriented
// toward the camera.
NormalMap normals_from_depth(const DepthMap& z, const StereoRig& rig);

struct GradientMap {
  int width = 0;
  int height = 0;
  std::vector<float> gx, gy;  // meters per pixel
  std::vector<uint8_t> mask;

  GradientMap() = default;
  GradientMap(int w, int h)
      : width(w),
        height(h),
        gx(static_cast<size_t>(w) * h, kInvalidValue),
        gy(static_cast<size_t>(w) * h, kInvalidValue),
        mask(static_cast<size_t>(w) * h, 0) {}
  size_t index(int x, int y) const {
    return static_cast<size_t>(y) * width + x;
  }
  bool valid(int x, int y) const { return mask[index(x, y)] != 0; }
};

// Central differences of depth; border and invalid-neighbor pixels invalid.
GradientMap gradient_from_depth(const DepthMap& z);

// Per-pixel blend (1-c)*z_sim + c*z_coarse. A pixel is valid iff every
// operand the blend actually references is valid: c == 0 needs only z_sim,
// c == 1 only z_coarse, anything between needs both.
DepthMap confidence_fusion(const DepthMap& z_sim, const DepthMap& z_coarse,
                           const ImageGray& confidence);

struct LossWeights {
  double w_c = 1.0;  // coarse branch weight
  double w_n = 1.0;  // normal term weight
  double w_g = 1.0;  // gradient term weight

  void validate() const;
};

struct LossBreakdown {
  double total = 0.0;
  double fine_depth = 0.0;
  double fine_normal = 0.0;
  double fine_gradient = 0.0;
  double coarse_depth = 0.0;
  double coarse_normal = 0.0;
  double coarse_gradient = 0.0;
};

// L1 supervision of depth, surface normal, and gradient for the coarse and
// fine predictions: total = fine + w_c * coarse, each branch
// depth + w_n * normal + w_g * gradient.
LossBreakdown restoration_loss(const DepthMap& pred_coarse,
                               const DepthMap& pred_fine, const DepthMap& gt,
                               const StereoRig& rig, const LossWeights& weights);

struct PoseSample {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  std::vector<Vec3> model_points;
  double diameter = 0.0;  // meters
  bool symmetric = false;

  void validate() const;
};

struct PoseEstimate {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  void validate() const;
};

// Mean distance between corresponding transformed model points.
double add_error(const PoseSample& pose_gt, const PoseEstimate& pose_est);

// Mean nearest-neighbor distance into the estimated point set (symmetric
// objects); brute-force O(N^2).
double adds_error(const PoseSample& pose_gt, const PoseEstimate& pose_est);

struct PoseEvalCase {
  PoseSample gt;
  PoseEstimate est;
};

struct PoseAccuracyReport {
  double add_01d = 0.0;  // fraction below 10% of object diameter
  double auc = 0.0;      // accuracy-vs-threshold area over [0, 0.10] m
};

// use_adds_for_symmetric switches symmetric samples to the nearest-point
// error; when false every sample uses add_error. AUC integrates the
// accuracy curve with the trapezoid rule at 1 mm steps.
PoseAccuracyReport pose_accuracy(const std::vector<PoseEvalCase>& samples,
                                 bool use_adds_for_symmetric);

}  // namespace rasim
