#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rasim/census.hpp"
#include "rasim/core.hpp"

namespace rasim {

struct SgmParams {
  int p1 = 8;                      // penalty for |Δd| = 1 along a path
  int p2 = 96;                     // penalty for larger jumps
  int paths = 8;                   // 4 or 8 scanline directions
  double uniqueness_ratio = 0.15;  // WTA ambiguity rejection, in [0, 1)

  void validate() const;
};

// Sum of the per-direction DP volumes; same (x, y, d) layout as CostVolume.
struct AggregatedVolume {
  int width = 0;
  int height = 0;
  int d_max = 0;
  std::vector<uint32_t> costs;

  int d_count() const { return d_max + 1; }
  size_t index(int x, int y, int d) const {
    return (static_cast<size_t>(y) * width + x) * (d_max + 1) + d;
  }
  uint32_t at(int x, int y, int d) const { return costs[index(x, y, d)]; }
};

// The (dx, dy) steps used for a given path count.
std::vector<std::pair<int, int>> sgm_path_directions(int paths);

// One-direction DP over every scanline in direction (dx, dy):
//   L(p,d) = C(p,d) + min(L(q,d), L(q,d±1)+P1, min_k L(q,k)+P2) - min_k L(q,k)
// with q = p - (dx,dy). The trailing subtraction keeps every entry bounded by
// C(p,d) + P2. `out` is resized to the cost-volume layout.
void aggregate_path(const CostVolume& costs, int p1, int p2, int dx, int dy,
                    std::vector<uint16_t>& out, int threads = 0);

AggregatedVolume aggregate(const CostVolume& costs, const SgmParams& params,
                           int threads = 0);

// Per-pixel argmin over d (lowest index on ties). A pixel survives only if
// the best cost outside {d*-1, d*, d*+1} is strictly worse than
// (1 + uniqueness_ratio) times the best cost; all-tie pixels are rejected.
DisparityMap wta_disparity(const AggregatedVolume& agg, const SgmParams& params);

// Parabola fit through the aggregated costs at d*-1, d*, d*+1. Degenerate
// (flat or inverted) fits and boundary disparities are left unchanged.
DisparityMap subpixel_refine(const AggregatedVolume& agg,
                             const DisparityMap& d);

// Right-view disparity by re-indexing the left-anchored volume:
// d_R(x,y) = argmin_d agg(x+d, y, d), lowest d on ties.
DisparityMap right_disparity_from_volume(const AggregatedVolume& agg);

}  // namespace rasim
