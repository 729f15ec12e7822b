#pragma once

#include <cstdint>
#include <vector>

#include "rasim/core.hpp"

namespace rasim {

// Sentinel cost for (x, y, d) entries with no usable comparison: the match
// column is out of range or either descriptor is undefined. Large enough to
// lose every argmin against a real Hamming distance, small enough that
// per-path aggregation sums stay far from overflow.
inline constexpr uint16_t kMaxCost = 1024;

// One center-symmetric descriptor per pixel. Bit k compares the k-th window
// position (row-major over the first half of the window) against its mirror
// through the center: 1 iff intensity(p) < intensity(mirror), ties 0.
struct CensusDescriptorMap {
  int width = 0;
  int height = 0;
  int win_w = 0;
  int win_h = 0;
  std::vector<uint64_t> descriptors;
  std::vector<uint8_t> defined;  // 0 for border pixels (window off-image)

  int bit_width() const { return (win_w * win_h - 1) / 2; }
  size_t index(int x, int y) const {
    return static_cast<size_t>(y) * width + x;
  }
};

// Matching costs over (x, y, d), d innermost so the aggregation loop over
// disparities is contiguous.
struct CostVolume {
  int width = 0;
  int height = 0;
  int d_max = 0;
  std::vector<uint16_t> costs;

  int d_count() const { return d_max + 1; }
  size_t index(int x, int y, int d) const {
    return (static_cast<size_t>(y) * width + x) * (d_max + 1) + d;
  }
  uint16_t at(int x, int y, int d) const { return costs[index(x, y, d)]; }
};

CensusDescriptorMap census_transform(const ImageGray& img, int win_w,
                                     int win_h, int threads = 0);

// cost(x,y,d) = Hamming(descL(x,y), descR(x-d,y)); undefined entries kMaxCost.
CostVolume build_cost_volume(const CensusDescriptorMap& left,
                             const CensusDescriptorMap& right, int d_max,
                             int threads = 0);

}  // namespace rasim
