#include "rasim/core.hpp"

#include <cmath>
#include <string>

#include "rasim/errors.hpp"

namespace rasim {

namespace {

std::string shape_str(int w, int h) {
  return std::to_string(w) + "x" + std::to_string(h);
}

void require_same_shape(int wa, int ha, int wb, int hb, const char* what) {
  if (wa != wb || ha != hb) {
    throw ValidationError(std::string(what) + ": dimension mismatch, " +
                          shape_str(wa, ha) + " vs " + shape_str(wb, hb));
  }
}

}  // namespace

StereoRig StereoRig::make(double baseline_m, double focal_px, int width,
                          int height) {
  return make(baseline_m, focal_px, width, height, (width - 1) * 0.5,
              (height - 1) * 0.5);
}

StereoRig StereoRig::make(double baseline_m, double focal_px, int width,
                          int height, double ppx, double ppy) {
  StereoRig rig;
  rig.baseline_m = baseline_m;
  rig.focal_px = focal_px;
  rig.width = width;
  rig.height = height;
  rig.ppx = ppx;
  rig.ppy = ppy;
  rig.validate();
  return rig;
}

void StereoRig::validate() const {
  if (!(baseline_m > 0.0)) {
    throw ValidationError("StereoRig: baseline_m must be > 0, got " +
                          std::to_string(baseline_m));
  }
  if (!(focal_px > 0.0)) {
    throw ValidationError("StereoRig: focal_px must be > 0, got " +
                          std::to_string(focal_px));
  }
  if (width <= 0 || height <= 0) {
    throw ValidationError("StereoRig: image_size must be positive, got " +
                          shape_str(width, height));
  }
  if (ppx < 0.0 || ppx > width - 1 || ppy < 0.0 || ppy > height - 1) {
    throw ValidationError("StereoRig: principal point (" +
                          std::to_string(ppx) + ", " + std::to_string(ppy) +
                          ") outside image bounds " + shape_str(width, height));
  }
}

DepthMap disparity_to_depth(const DisparityMap& d, const StereoRig& rig,
                            const DepthConversionParams& params) {
  rig.validate();
  if (!(params.epsilon > 0.0)) {
    throw ValidationError("DepthConversionParams: epsilon must be > 0");
  }
  require_same_shape(d.width, d.height, rig.width, rig.height,
                     "disparity_to_depth");

  DepthMap z(d.width, d.height);
  const double bf = rig.baseline_m * rig.focal_px;
  const size_t n = d.values.size();
  for (size_t i = 0; i < n; ++i) {
    if (!d.mask[i]) continue;
    const double disp = d.values[i];
    if (disp < 0.0 || !std::isfinite(disp)) {
      throw ValidationError(
          "disparity_to_depth: valid pixel carries disparity " +
          std::to_string(disp));
    }
    const double depth = bf / (disp + params.epsilon);
    if (depth > params.max_range_m) continue;  // stays invalid
    z.values[i] = static_cast<float>(depth);
    z.mask[i] = 1;
  }
  return z;
}

DisparityMap depth_to_disparity(const DepthMap& z, const StereoRig& rig) {
  rig.validate();
  require_same_shape(z.width, z.height, rig.width, rig.height,
                     "depth_to_disparity");

  DisparityMap d(z.width, z.height);
  const double bf = rig.baseline_m * rig.focal_px;
  const size_t n = z.values.size();
  for (size_t i = 0; i < n; ++i) {
    if (!z.mask[i]) continue;
    const double depth = z.values[i];
    if (!(depth > 0.0) || !std::isfinite(depth)) {
      throw ValidationError("depth_to_disparity: valid pixel carries depth " +
                            std::to_string(depth));
    }
    d.values[i] = static_cast<float>(bf / depth);
    d.mask[i] = 1;
  }
  return d;
}

ImageGray to_grayscale(const ImageRGB& img) {
  ImageGray out(img.width, img.height);
  const size_t n = out.data.size();
  for (size_t i = 0; i < n; ++i) {
    const float* px = &img.data[i * 3];
    out.data[i] = 0.299f * px[0] + 0.587f * px[1] + 0.114f * px[2];
  }
  return out;
}

}  // namespace rasim
