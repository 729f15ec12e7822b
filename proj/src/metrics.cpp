#include "rasim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rasim/errors.hpp"

namespace rasim {

namespace {

void require_same_shape(int wa, int ha, int wb, int hb, const char* what) {
  if (wa != wb || ha != hb) {
    throw ValidationError(std::string(what) + ": dimension mismatch, " +
                          std::to_string(wa) + "x" + std::to_string(ha) +
                          " vs " + std::to_string(wb) + "x" +
                          std::to_string(hb));
  }
}

}  // namespace

DepthMap resize_nearest(const DepthMap& z, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) {
    throw ValidationError("resize_nearest: target size must be positive");
  }
  DepthMap out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    const int sy = std::min(
        z.height - 1,
        static_cast<int>((y + 0.5) * z.height / out_h));
    for (int x = 0; x < out_w; ++x) {
      const int sx = std::min(
          z.width - 1,
          static_cast<int>((x + 0.5) * z.width / out_w));
      if (z.valid(sx, sy)) out.set(x, y, z.value(sx, sy));
    }
  }
  return out;
}

DepthMetricsReport depth_metrics(const DepthMap& pred, const DepthMap& gt,
                                 std::optional<std::pair<int, int>> resize_to,
                                 DeltaConvention convention) {
  DepthMap p = pred;
  DepthMap g = gt;
  if (resize_to) {
    p = resize_nearest(pred, resize_to->first, resize_to->second);
    g = resize_nearest(gt, resize_to->first, resize_to->second);
  }
  require_same_shape(p.width, p.height, g.width, g.height, "depth_metrics");

  double sq_sum = 0.0, abs_sum = 0.0, rel_sum = 0.0;
  long n = 0, in_105 = 0, in_110 = 0, in_125 = 0;
  const size_t total = p.values.size();
  for (size_t i = 0; i < total; ++i) {
    if (!p.mask[i] || !g.mask[i]) continue;
    const double dp = p.values[i];
    const double dg = g.values[i];
    const double diff = dp - dg;
    sq_sum += diff * diff;
    abs_sum += std::abs(diff);
    rel_sum += std::abs(diff) / dg;
    const double ratio = std::max(dp / dg, dg / dp);
    const auto inlier = [&](double delta) {
      return convention == DeltaConvention::StrictLess ? ratio < delta
                                                       : ratio <= delta;
    };
    in_105 += inlier(1.05);
    in_110 += inlier(1.10);
    in_125 += inlier(1.25);
    ++n;
  }
  if (n == 0) {
    throw ValidationError("depth_metrics: no pixels valid in both maps");
  }

  DepthMetricsReport r;
  r.rmse = std::sqrt(sq_sum / n);
  r.mae = abs_sum / n;
  r.rel = rel_sum / n;
  r.delta_105 = static_cast<double>(in_105) / n;
  r.delta_110 = static_cast<double>(in_110) / n;
  r.delta_125 = static_cast<double>(in_125) / n;
  r.n_evaluated = n;
  return r;
}

NormalMap normals_from_depth(const DepthMap& z, const StereoRig& rig) {
  rig.validate();
  require_same_shape(z.width, z.height, rig.width, rig.height,
                     "normals_from_depth");
  NormalMap out(z.width, z.height);

  auto backproject = [&](int x, int y) {
    const double d = z.value(x, y);
    return Vec3((x - rig.ppx) / rig.focal_px * d,
                (y - rig.ppy) / rig.focal_px * d, d);
  };

  for (int y = 1; y < z.height - 1; ++y) {
    for (int x = 1; x < z.width - 1; ++x) {
      if (!z.valid(x, y) || !z.valid(x - 1, y) || !z.valid(x + 1, y) ||
          !z.valid(x, y - 1) || !z.valid(x, y + 1)) {
        continue;
      }
      const Vec3 tx = (backproject(x + 1, y) - backproject(x - 1, y)) * 0.5;
      const Vec3 ty = (backproject(x, y + 1) - backproject(x, y - 1)) * 0.5;
      Vec3 n = ty.cross(tx);
      const double len = n.norm();
      if (!(len > 0.0)) continue;
      n /= len;
      // Orient toward the camera; flips exactly when the depth sign flips.
      if (n.dot(backproject(x, y)) > 0.0) n = -n;
      const size_t i = out.index(x, y);
      out.nx[i] = static_cast<float>(n.x());
      out.ny[i] = static_cast<float>(n.y());
      out.nz[i] = static_cast<float>(n.z());
      out.mask[i] = 1;
    }
  }
  return out;
}

GradientMap gradient_from_depth(const DepthMap& z) {
  GradientMap out(z.width, z.height);
  for (int y = 1; y < z.height - 1; ++y) {
    for (int x = 1; x < z.width - 1; ++x) {
      if (!z.valid(x, y) || !z.valid(x - 1, y) || !z.valid(x + 1, y) ||
          !z.valid(x, y - 1) || !z.valid(x, y + 1)) {
        continue;
      }
      const size_t i = out.index(x, y);
      out.gx[i] = (z.value(x + 1, y) - z.value(x - 1, y)) * 0.5f;
      out.gy[i] = (z.value(x, y + 1) - z.value(x, y - 1)) * 0.5f;
      out.mask[i] = 1;
    }
  }
  return out;
}

DepthMap confidence_fusion(const DepthMap& z_sim, const DepthMap& z_coarse,
                           const ImageGray& confidence) {
  require_same_shape(z_sim.width, z_sim.height, z_coarse.width, z_coarse.height,
                     "confidence_fusion");
  require_same_shape(z_sim.width, z_sim.height, confidence.width,
                     confidence.height, "confidence_fusion");

  DepthMap out(z_sim.width, z_sim.height);
  const size_t total = out.values.size();
  for (size_t i = 0; i < total; ++i) {
    const float c = confidence.data[i];
    if (!(c >= 0.0f && c <= 1.0f)) {
      throw ValidationError("confidence_fusion: confidence " +
                            std::to_string(c) + " outside [0,1] at pixel " +
                            std::to_string(i));
    }
    if (c == 0.0f) {
      if (z_sim.mask[i]) {
        out.values[i] = z_sim.values[i];
        out.mask[i] = 1;
      }
    } else if (c == 1.0f) {
      if (z_coarse.mask[i]) {
        out.values[i] = z_coarse.values[i];
        out.mask[i] = 1;
      }
    } else if (z_sim.mask[i] && z_coarse.mask[i]) {
      out.values[i] = (1.0f - c) * z_sim.values[i] + c * z_coarse.values[i];
      out.mask[i] = 1;
    }
  }
  return out;
}

void LossWeights::validate() const {
  if (w_c < 0.0 || w_n < 0.0 || w_g < 0.0) {
    throw ValidationError("LossWeights: weights must be >= 0");
  }
}

namespace {

double depth_l1(const DepthMap& pred, const DepthMap& gt, const char* what) {
  double sum = 0.0;
  long n = 0;
  for (size_t i = 0; i < pred.values.size(); ++i) {
    if (!pred.mask[i] || !gt.mask[i]) continue;
    sum += std::abs(static_cast<double>(pred.values[i]) - gt.values[i]);
    ++n;
  }
  if (n == 0) {
    throw ValidationError(std::string("restoration_loss: ") + what +
                          " shares no valid pixels with the ground truth");
  }
  return sum / n;
}

double normal_l1(const NormalMap& pred, const NormalMap& gt) {
  double sum = 0.0;
  long n = 0;
  for (size_t i = 0; i < pred.mask.size(); ++i) {
    if (!pred.mask[i] || !gt.mask[i]) continue;
    sum += std::abs(static_cast<double>(pred.nx[i]) - gt.nx[i]) +
           std::abs(static_cast<double>(pred.ny[i]) - gt.ny[i]) +
           std::abs(static_cast<double>(pred.nz[i]) - gt.nz[i]);
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

double gradient_l1(const GradientMap& pred, const GradientMap& gt) {
  double sum = 0.0;
  long n = 0;
  for (size_t i = 0; i < pred.mask.size(); ++i) {
    if (!pred.mask[i] || !gt.mask[i]) continue;
    sum += std::abs(static_cast<double>(pred.gx[i]) - gt.gx[i]) +
           std::abs(static_cast<double>(pred.gy[i]) - gt.gy[i]);
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

}  // namespace

LossBreakdown restoration_loss(const DepthMap& pred_coarse,
                               const DepthMap& pred_fine, const DepthMap& gt,
                               const StereoRig& rig,
                               const LossWeights& weights) {
  weights.validate();
  require_same_shape(pred_coarse.width, pred_coarse.height, gt.width, gt.height,
                     "restoration_loss");
  require_same_shape(pred_fine.width, pred_fine.height, gt.width, gt.height,
                     "restoration_loss");

  const NormalMap n_gt = normals_from_depth(gt, rig);
  const GradientMap g_gt = gradient_from_depth(gt);

  LossBreakdown out;
  out.fine_depth = depth_l1(pred_fine, gt, "fine prediction");
  out.fine_normal = normal_l1(normals_from_depth(pred_fine, rig), n_gt);
  out.fine_gradient = gradient_l1(gradient_from_depth(pred_fine), g_gt);
  out.coarse_depth = depth_l1(pred_coarse, gt, "coarse prediction");
  out.coarse_normal = normal_l1(normals_from_depth(pred_coarse, rig), n_gt);
  out.coarse_gradient = gradient_l1(gradient_from_depth(pred_coarse), g_gt);

  const double fine =
      out.fine_depth + weights.w_n * out.fine_normal + weights.w_g * out.fine_gradient;
  const double coarse = out.coarse_depth + weights.w_n * out.coarse_normal +
                        weights.w_g * out.coarse_gradient;
  out.total = fine + weights.w_c * coarse;
  return out;
}

void PoseSample::validate() const {
  if ((rotation * rotation.transpose() - Mat3::Identity()).norm() > 1e-6 ||
      std::abs(rotation.determinant() - 1.0) > 1e-6) {
    throw ValidationError("PoseSample: rotation is not a proper rotation");
  }
  if (model_points.empty()) {
    throw ValidationError("PoseSample: model_points must be non-empty");
  }
  if (!(diameter > 0.0)) {
    throw ValidationError("PoseSample: diameter must be > 0, got " +
                          std::to_string(diameter));
  }
}

void PoseEstimate::validate() const {
  if ((rotation * rotation.transpose() - Mat3::Identity()).norm() > 1e-6 ||
      std::abs(rotation.determinant() - 1.0) > 1e-6) {
    throw ValidationError("PoseEstimate: rotation is not a proper rotation");
  }
}

double add_error(const PoseSample& pose_gt, const PoseEstimate& pose_est) {
  pose_gt.validate();
  pose_est.validate();
  double sum = 0.0;
  for (const Vec3& x : pose_gt.model_points) {
    const Vec3 a = pose_gt.rotation * x + pose_gt.translation;
    const Vec3 b = pose_est.rotation * x + pose_est.translation;
    sum += (a - b).norm();
  }
  return sum / static_cast<double>(pose_gt.model_points.size());
}

double adds_error(const PoseSample& pose_gt, const PoseEstimate& pose_est) {
  pose_gt.validate();
  pose_est.validate();
  const size_t n = pose_gt.model_points.size();
  std::vector<Vec3> est_pts(n);
  for (size_t j = 0; j < n; ++j) {
    est_pts[j] = pose_est.rotation * pose_gt.model_points[j] + pose_est.translation;
  }
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const Vec3 a = pose_gt.rotation * pose_gt.model_points[i] + pose_gt.translation;
    double best = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < n; ++j) {
      best = std::min(best, (a - est_pts[j]).squaredNorm());
    }
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(n);
}

PoseAccuracyReport pose_accuracy(const std::vector<PoseEvalCase>& samples,
                                 bool use_adds_for_symmetric) {
  if (samples.empty()) {
    throw ValidationError("pose_accuracy: sample list is empty");
  }
  std::vector<double> errors;
  errors.reserve(samples.size());
  long below_01d = 0;
  for (const auto& s : samples) {
    const double e = (use_adds_for_symmetric && s.gt.symmetric)
                         ? adds_error(s.gt, s.est)
                         : add_error(s.gt, s.est);
    errors.push_back(e);
    if (e < 0.1 * s.gt.diameter) ++below_01d;
  }

  // Accuracy curve over thresholds 0..0.10 m in 1 mm steps, trapezoid rule.
  constexpr int kSteps = 100;
  constexpr double kStepM = 0.001;
  auto accuracy_at = [&](double tau) {
    long ok = 0;
    for (double e : errors) ok += e <= tau;
    return static_cast<double>(ok) / static_cast<double>(errors.size());
  };
  double integral = 0.0;
  double prev = accuracy_at(0.0);
  for (int k = 1; k <= kSteps; ++k) {
    const double cur = accuracy_at(k * kStepM);
    integral += 0.5 * (prev + cur) * kStepM;
    prev = cur;
  }

  PoseAccuracyReport out;
  out.add_01d = static_cast<double>(below_01d) / samples.size();
  out.auc = integral / (kSteps * kStepM);
  return out;
}

}  // namespace rasim
