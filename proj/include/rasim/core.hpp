#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace rasim {

// Invalid map pixels carry a quiet NaN alongside mask=false. The mask is
// authoritative; the NaN guarantees stray arithmetic on an invalid value
// can never look like a valid number.
inline const float kInvalidValue = std::numeric_limits<float>::quiet_NaN();

struct ImageGray {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // row-major, origin top-left, values in [0,1]

  ImageGray() = default;
  ImageGray(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  float at(int x, int y) const {
    return data[static_cast<size_t>(y) * width + x];
  }
};

struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // row-major triplets, values in [0,1]

  ImageRGB() = default;
  ImageRGB(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<size_t>(w) * h * 3, fill) {}

  float& at(int x, int y, int c) {
    return data[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  float at(int x, int y, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
};

// Scalar grid with a per-pixel validity mask. DisparityMap and DepthMap are
// distinct types over this layout so the two units cannot be mixed up.
struct FloatMap {
  int width = 0;
  int height = 0;
  std::vector<float> values;
  std::vector<uint8_t> mask;

  FloatMap() = default;
  FloatMap(int w, int h)
      : width(w),
        height(h),
        values(static_cast<size_t>(w) * h, kInvalidValue),
        mask(static_cast<size_t>(w) * h, 0) {}

  size_t index(int x, int y) const {
    return static_cast<size_t>(y) * width + x;
  }
  bool valid(int x, int y) const { return mask[index(x, y)] != 0; }
  float value(int x, int y) const { return values[index(x, y)]; }
  void set(int x, int y, float v) {
    const size_t i = index(x, y);
    values[i] = v;
    mask[i] = 1;
  }
  void invalidate(int x, int y) {
    const size_t i = index(x, y);
    values[i] = kInvalidValue;
    mask[i] = 0;
  }
  size_t valid_count() const {
    size_t n = 0;
    for (uint8_t m : mask) n += m != 0;
    return n;
  }
};

struct DisparityMap : FloatMap {
  using FloatMap::FloatMap;
};

struct DepthMap : FloatMap {
  using FloatMap::FloatMap;
};

struct StereoRig {
  double baseline_m = 0.055;
  double focal_px = 600.0;
  double ppx = 0.0;  // principal point, pixels
  double ppy = 0.0;
  int width = 0;
  int height = 0;

  static StereoRig make(double baseline_m, double focal_px, int width,
                        int height);
  static StereoRig make(double baseline_m, double focal_px, int width,
                        int height, double ppx, double ppy);
  void validate() const;
};

struct DepthConversionParams {
  double epsilon = 1e-6;     // divide-by-zero guard on disparity
  double max_range_m = 20.0;  // depths beyond this are marked invalid
};

// depth = baseline * focal / (disparity + epsilon), per valid pixel.
DepthMap disparity_to_depth(const DisparityMap& d, const StereoRig& rig,
                            const DepthConversionParams& params = {});

// Exact inverse (no epsilon); the ground-truth oracle for the matcher.
DisparityMap depth_to_disparity(const DepthMap& z, const StereoRig& rig);

// Fixed 0.299/0.587/0.114 luminance blend.
ImageGray to_grayscale(const ImageRGB& img);

}  // namespace rasim
