#include "rasim/refine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "rasim/errors.hpp"

namespace rasim {

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

void RefineParams::validate() const {
  if (!(lr_threshold >= 0.0)) {
    throw ValidationError("RefineParams: lr_threshold must be >= 0");
  }
  if (median_window < 1 || median_window % 2 == 0) {
    throw ValidationError("RefineParams: median_window must be odd >= 1, got " +
                          std::to_string(median_window));
  }
  if (speckle_max_size < 0) {
    throw ValidationError("RefineParams: speckle_max_size must be >= 0");
  }
  if (!(speckle_diff >= 0.0)) {
    throw ValidationError("RefineParams: speckle_diff must be >= 0");
  }
}

void MatchConfig::validate() const {
  if (census_win_w < 3 || census_win_h < 3 || census_win_w % 2 == 0 ||
      census_win_h % 2 == 0) {
    throw ValidationError("MatchConfig: census window must be odd and >= 3");
  }
  if (d_max < 1) {
    throw ValidationError("MatchConfig: d_max must be >= 1");
  }
  sgm.validate();
  refine.validate();
  if (!(depth.epsilon > 0.0)) {
    throw ValidationError("MatchConfig: depth.epsilon must be > 0");
  }
  if (!(depth.max_range_m > 0.0)) {
    throw ValidationError("MatchConfig: depth.max_range_m must be > 0");
  }
}

DisparityMap lr_consistency(const DisparityMap& left,
                            const DisparityMap& right, double threshold) {
  if (left.width != right.width || left.height != right.height) {
    throw ValidationError("lr_consistency: dimension mismatch, " +
                          std::to_string(left.width) + "x" +
                          std::to_string(left.height) + " vs " +
                          std::to_string(right.width) + "x" +
                          std::to_string(right.height));
  }
  DisparityMap out(left.width, left.height);
  for (int y = 0; y < left.height; ++y) {
    for (int x = 0; x < left.width; ++x) {
      if (!left.valid(x, y)) continue;
      const float dl = left.value(x, y);
      const int xr = x - static_cast<int>(std::lround(dl));
      if (xr < 0 || xr >= right.width) continue;
      if (!right.valid(xr, y)) continue;
      if (std::abs(dl - right.value(xr, y)) <= threshold) {
        out.set(x, y, dl);
      }
    }
  }
  return out;
}

DisparityMap median_filter(const DisparityMap& d, int window) {
  if (window < 1 || window % 2 == 0) {
    throw ValidationError("median_filter: window must be odd >= 1, got " +
                          std::to_string(window));
  }
  DisparityMap out(d.width, d.height);
  const int half = window / 2;
  std::vector<float> vals;
  vals.reserve(static_cast<size_t>(window) * window);
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      if (!d.valid(x, y)) continue;
      vals.clear();
      for (int dy = -half; dy <= half; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= d.height) continue;
        for (int dx = -half; dx <= half; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= d.width) continue;
          if (d.valid(xx, yy)) vals.push_back(d.value(xx, yy));
        }
      }
      // vals is never empty: the center pixel is valid.
      const size_t mid = (vals.size() - 1) / 2;  // lower middle on even counts
      std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
      out.set(x, y, vals[mid]);
    }
  }
  return out;
}

DisparityMap speckle_filter(const DisparityMap& d, int max_size, double diff) {
  DisparityMap out = d;
  const int w = d.width;
  const int h = d.height;
  std::vector<int32_t> label(static_cast<size_t>(w) * h, -1);
  std::vector<size_t> stack;
  std::vector<size_t> component;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t seed = d.index(x, y);
      if (!d.mask[seed] || label[seed] >= 0) continue;
      component.clear();
      stack.assign(1, seed);
      label[seed] = 1;
      while (!stack.empty()) {
        const size_t i = stack.back();
        stack.pop_back();
        component.push_back(i);
        const int cx = static_cast<int>(i % w);
        const int cy = static_cast<int>(i / w);
        const float v = d.values[i];
        const int nx[4] = {cx - 1, cx + 1, cx, cx};
        const int ny[4] = {cy, cy, cy - 1, cy + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
          const size_t j = d.index(nx[k], ny[k]);
          if (!d.mask[j] || label[j] >= 0) continue;
          if (std::abs(d.values[j] - v) <= diff) {
            label[j] = 1;
            stack.push_back(j);
          }
        }
      }
      if (component.size() <= static_cast<size_t>(max_size)) {
        for (size_t i : component) {
          out.values[i] = kInvalidValue;
          out.mask[i] = 0;
        }
      }
    }
  }
  return out;
}

MatchResult match_stereo(const ImageGray& left, const ImageGray& right,
                         const StereoRig& rig, const MatchConfig& cfg,
                         int threads) {
  cfg.validate();
  rig.validate();
  if (left.width != right.width || left.height != right.height) {
    throw ValidationError("match_stereo: image dimension mismatch, " +
                          std::to_string(left.width) + "x" +
                          std::to_string(left.height) + " vs " +
                          std::to_string(right.width) + "x" +
                          std::to_string(right.height));
  }
  if (left.width != rig.width || left.height != rig.height) {
    throw ValidationError("match_stereo: images " +
                          std::to_string(left.width) + "x" +
                          std::to_string(left.height) +
                          " do not match rig image size " +
                          std::to_string(rig.width) + "x" +
                          std::to_string(rig.height));
  }

  MatchResult res;
  const auto t_start = std::chrono::steady_clock::now();

  auto t0 = std::chrono::steady_clock::now();
  const auto cens_l =
      census_transform(left, cfg.census_win_w, cfg.census_win_h, threads);
  const auto cens_r =
      census_transform(right, cfg.census_win_w, cfg.census_win_h, threads);
  res.times.census_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  const auto vol = build_cost_volume(cens_l, cens_r, cfg.d_max, threads);
  res.times.cost_volume_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  const auto agg = aggregate(vol, cfg.sgm, threads);
  res.times.aggregate_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  DisparityMap disp = wta_disparity(agg, cfg.sgm);
  disp = subpixel_refine(agg, disp);
  const DisparityMap right_disp = right_disparity_from_volume(agg);
  res.times.wta_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  if (cfg.refine.median_before_consistency) {
    disp = median_filter(disp, cfg.refine.median_window);
    disp = lr_consistency(disp, right_disp, cfg.refine.lr_threshold);
  } else {
    disp = lr_consistency(disp, right_disp, cfg.refine.lr_threshold);
    disp = median_filter(disp, cfg.refine.median_window);
  }
  disp = speckle_filter(disp, cfg.refine.speckle_max_size,
                        cfg.refine.speckle_diff);
  res.times.refine_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  res.depth = disparity_to_depth(disp, rig, cfg.depth);
  res.times.depth_ms = ms_since(t0);

  res.disparity = std::move(disp);
  res.times.total_ms = ms_since(t_start);
  return res;
}

}  // namespace rasim
