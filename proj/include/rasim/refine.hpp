#pragma once

#include "rasim/census.hpp"
#include "rasim/core.hpp"
#include "rasim/sgm.hpp"

namespace rasim {

struct RefineParams {
  double lr_threshold = 1.0;  // pixels
  int median_window = 3;      // odd
  int speckle_max_size = 100;  // pixels^2, blobs this size or smaller die
  double speckle_diff = 1.0;   // pixels, neighbor similarity for blobs
  // Ablation switch: run the median before the consistency check instead of
  // after it.
  bool median_before_consistency = false;

  void validate() const;
};

struct MatchConfig {
  int census_win_w = 9;
  int census_win_h = 7;
  SgmParams sgm;
  RefineParams refine;
  DepthConversionParams depth;
  int d_max = 64;

  void validate() const;
};

// Wall-clock per pipeline stage, milliseconds.
struct StageTimes {
  double census_ms = 0.0;
  double cost_volume_ms = 0.0;
  double aggregate_ms = 0.0;
  double wta_ms = 0.0;
  double refine_ms = 0.0;
  double depth_ms = 0.0;
  double total_ms = 0.0;
};

struct MatchResult {
  DisparityMap disparity;
  DepthMap depth;
  StageTimes times;
};

// Keeps pixel (x,y) iff the right-view disparity at x - round(d_L) agrees
// within threshold; occlusions and mismatches die here.
DisparityMap lr_consistency(const DisparityMap& left,
                            const DisparityMap& right, double threshold);

// Median over the valid values in each window. Cleans, never inpaints:
// invalid pixels stay invalid. Even-sized samples take the lower middle.
DisparityMap median_filter(const DisparityMap& d, int window);

// Removes connected blobs (4-connectivity, neighbors linked when |Δd| <=
// diff) of area <= max_size.
DisparityMap speckle_filter(const DisparityMap& d, int max_size, double diff);

// census -> cost volume -> aggregate -> wta -> subpixel -> consistency ->
// median -> speckle -> depth.
MatchResult match_stereo(const ImageGray& left, const ImageGray& right,
                         const StereoRig& rig, const MatchConfig& cfg,
                         int threads = 0);

}  // namespace rasim
