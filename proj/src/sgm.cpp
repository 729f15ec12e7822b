#include "rasim/sgm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#ifdef __SSE4_1__
#include <smmintrin.h>
#endif

#include "rasim/errors.hpp"
#include "rasim/parallel.hpp"

namespace rasim {

namespace {

// Per-path accumulators are uint16_t; each entry is bounded by
// C(p,d) + P2 <= kMaxCost + P2, so cap P2 where that still fits.
constexpr int kMaxPenalty = 60000 - kMaxCost;

struct LineStart {
  int x;
  int y;
};

// Starting pixels of every scanline running in direction (dx, dy).
std::vector<LineStart> line_starts(int width, int height, int dx, int dy) {
  std::vector<LineStart> starts;
  if (dx != 0) {
    const int x = dx > 0 ? 0 : width - 1;
    for (int y = 0; y < height; ++y) starts.push_back({x, y});
  }
  if (dy != 0) {
    const int y = dy > 0 ? 0 : height - 1;
    const int x0 = dx > 0 ? 1 : 0;
    const int x1 = dx < 0 ? width - 1 : width;
    for (int x = x0; x < x1; ++x) starts.push_back({x, y});
  }
  return starts;
}

// DP update for one pixel: cur[d] = c[d] + min(prev[d], prev[d-1]+P1,
// prev[d+1]+P1, prev_min+P2) - prev_min. prev is padded with 0xFFFF at [-1]
// and [dc]; every real entry is bounded by kMaxCost + P2 <= 60000 (enforced
// by SgmParams::validate), so saturating u16 arithmetic never changes a
// minimum. Returns the new row minimum.
uint32_t dp_update_row(const uint16_t* c, const uint16_t* prev, uint16_t* cur,
                       int dc, uint32_t prev_min, uint32_t p1, uint32_t p2) {
  const uint32_t cap32 = std::min<uint32_t>(prev_min + p2, 0xFFFF);
  uint32_t mn = 0xFFFFFFFF;
  int d = 0;
#ifdef __SSE4_1__
  if (dc >= 8) {
    const __m128i vp1 = _mm_set1_epi16(static_cast<short>(p1));
    const __m128i vcap = _mm_set1_epi16(static_cast<short>(cap32));
    const __m128i vmin = _mm_set1_epi16(static_cast<short>(prev_min));
    __m128i vmn = _mm_set1_epi16(static_cast<short>(0xFFFF));
    for (; d + 8 <= dc; d += 8) {
      const __m128i keep = _mm_min_epu16(
          _mm_loadu_si128(reinterpret_cast<const __m128i*>(prev + d)), vcap);
      const __m128i side = _mm_min_epu16(
          _mm_loadu_si128(reinterpret_cast<const __m128i*>(prev + d - 1)),
          _mm_loadu_si128(reinterpret_cast<const __m128i*>(prev + d + 1)));
      const __m128i jump = _mm_adds_epu16(side, vp1);
      const __m128i best = _mm_min_epu16(keep, jump);
      const __m128i v = _mm_sub_epi16(
          _mm_add_epi16(
              _mm_loadu_si128(reinterpret_cast<const __m128i*>(c + d)), best),
          vmin);
      _mm_storeu_si128(reinterpret_cast<__m128i*>(cur + d), v);
      vmn = _mm_min_epu16(vmn, v);
    }
    mn = static_cast<uint32_t>(_mm_extract_epi16(_mm_minpos_epu16(vmn), 0));
  }
#endif
  for (; d < dc; ++d) {
    const uint32_t keep = std::min<uint32_t>(prev[d], cap32);
    const uint32_t jump =
        std::min<uint32_t>(prev[d - 1], prev[d + 1]) + p1;
    const uint32_t v = c[d] + std::min(keep, jump) - prev_min;
    cur[d] = static_cast<uint16_t>(v);
    mn = std::min(mn, v);
  }
  return mn;
}

// One-direction DP over all scanlines. Emit(base, values, count) receives
// each pixel's freshly computed L row exactly once; line-local double
// buffering keeps the working set in cache.
template <typename Emit>
void run_direction(const CostVolume& costs, int p1, int p2, int dx, int dy,
                   int threads, const Emit& emit) {
  const int dc = costs.d_count();
  const int w = costs.width;
  const int h = costs.height;
  const auto starts = line_starts(w, h, dx, dy);
  const uint32_t P1 = static_cast<uint32_t>(p1);
  const uint32_t P2 = static_cast<uint32_t>(p2);

  parallel_for(
      0, static_cast<int>(starts.size()), threads, [&](int s0, int s1) {
        // Padded on both sides so prev[d-1] / prev[d+1] need no branches,
        // plus SIMD overrun slack.
        std::vector<uint16_t> buf_a(dc + 10, 0xFFFF), buf_b(dc + 10, 0xFFFF);
        for (int s = s0; s < s1; ++s) {
          uint16_t* prev = buf_a.data() + 1;
          uint16_t* cur = buf_b.data() + 1;
          int x = starts[s].x;
          int y = starts[s].y;
          bool first = true;
          uint32_t prev_min = 0;
          while (x >= 0 && x < w && y >= 0 && y < h) {
            const size_t base = (static_cast<size_t>(y) * w + x) * dc;
            const uint16_t* c = &costs.costs[base];
            if (first) {
              uint32_t mn = 0xFFFFFFFF;
              for (int d = 0; d < dc; ++d) {
                cur[d] = c[d];
                mn = std::min<uint32_t>(mn, c[d]);
              }
              prev_min = mn;
              first = false;
            } else {
              prev_min = dp_update_row(c, prev, cur, dc, prev_min, P1, P2);
            }
            emit(base, cur, dc);
            std::swap(prev, cur);
            x += dx;
            y += dy;
          }
        }
      });
}

}  // namespace

void SgmParams::validate() const {
  if (p1 < 0 || p2 < p1) {
    throw ValidationError("SgmParams: need 0 <= p1 <= p2, got p1=" +
                          std::to_string(p1) + " p2=" + std::to_string(p2));
  }
  if (p2 > kMaxPenalty) {
    throw ValidationError("SgmParams: p2 must be <= " +
                          std::to_string(kMaxPenalty));
  }
  if (paths != 4 && paths != 8) {
    throw ValidationError("SgmParams: paths must be 4 or 8, got " +
                          std::to_string(paths));
  }
  if (!(uniqueness_ratio >= 0.0) || !(uniqueness_ratio < 1.0)) {
    throw ValidationError("SgmParams: uniqueness_ratio must be in [0, 1)");
  }
}

std::vector<std::pair<int, int>> sgm_path_directions(int paths) {
  std::vector<std::pair<int, int>> dirs = {
      {1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  if (paths == 8) {
    dirs.insert(dirs.end(), {{1, 1}, {-1, -1}, {1, -1}, {-1, 1}});
  }
  return dirs;
}

void aggregate_path(const CostVolume& costs, int p1, int p2, int dx, int dy,
                    std::vector<uint16_t>& out, int threads) {
  out.resize(costs.costs.size());
  uint16_t* dst = out.data();
  run_direction(costs, p1, p2, dx, dy, threads,
                [dst](size_t base, const uint16_t* v, int n) {
                  std::copy(v, v + n, dst + base);
                });
}

AggregatedVolume aggregate(const CostVolume& costs, const SgmParams& params,
                           int threads) {
  params.validate();
  if (costs.d_max < 0 || costs.width <= 0 || costs.height <= 0) {
    throw ValidationError("aggregate: malformed cost volume");
  }
  const int dc = costs.d_count();

  // kMaxCost entries carry no matching evidence, so they must not bias the
  // path recurrence (a border wall would otherwise leak a spurious
  // preference into its whole scanline). Run the DP on a volume where each
  // such entry is flattened to the pixel's best defined cost, then restore
  // the sentinel magnitude in the sum so undefined entries still lose every
  // argmin.
  CostVolume work = costs;
  parallel_for(0, costs.height, threads, [&](int y0, int y1) {
    const size_t lo = static_cast<size_t>(y0) * costs.width;
    const size_t hi = static_cast<size_t>(y1) * costs.width;
    for (size_t px = lo; px < hi; ++px) {
      uint16_t* c = &work.costs[px * dc];
      uint16_t mn = kMaxCost;
      for (int d = 0; d < dc; ++d) {
        if (c[d] != kMaxCost) mn = std::min(mn, c[d]);
      }
      if (mn == kMaxCost) mn = 0;  // fully undefined pixel
      for (int d = 0; d < dc; ++d) {
        if (c[d] == kMaxCost) c[d] = mn;
      }
    }
  });

  AggregatedVolume agg;
  agg.width = costs.width;
  agg.height = costs.height;
  agg.d_max = costs.d_max;
  agg.costs.assign(costs.costs.size(), 0);
  uint32_t* sum = agg.costs.data();

  for (auto [dx, dy] : sgm_path_directions(params.paths)) {
    run_direction(work, params.p1, params.p2, dx, dy, threads,
                  [sum](size_t base, const uint16_t* v, int n) {
                    for (int d = 0; d < n; ++d) sum[base + d] += v[d];
                  });
  }

  const uint32_t sentinel =
      static_cast<uint32_t>(params.paths) * static_cast<uint32_t>(kMaxCost);
  parallel_for(0, costs.height, threads, [&](int y0, int y1) {
    const size_t lo = static_cast<size_t>(y0) * costs.width * dc;
    const size_t hi = static_cast<size_t>(y1) * costs.width * dc;
    for (size_t i = lo; i < hi; ++i) {
      if (costs.costs[i] == kMaxCost) sum[i] = sentinel;
    }
  });
  return agg;
}

DisparityMap wta_disparity(const AggregatedVolume& agg,
                           const SgmParams& params) {
  params.validate();
  DisparityMap disp(agg.width, agg.height);
  const int dc = agg.d_count();
  const double factor = 1.0 + params.uniqueness_ratio;

  for (int y = 0; y < agg.height; ++y) {
    for (int x = 0; x < agg.width; ++x) {
      const uint32_t* c = &agg.costs[agg.index(x, y, 0)];
      int best_d = 0;
      uint32_t best = c[0];
      for (int d = 1; d < dc; ++d) {
        if (c[d] < best) {
          best = c[d];
          best_d = d;
        }
      }
      uint32_t best_outside = std::numeric_limits<uint32_t>::max();
      bool has_outside = false;
      for (int d = 0; d < dc; ++d) {
        if (std::abs(d - best_d) <= 1) continue;
        has_outside = true;
        best_outside = std::min(best_outside, c[d]);
      }
      if (has_outside &&
          !(static_cast<double>(best_outside) > factor * best)) {
        continue;  // ambiguous, including all-tie plateaus
      }
      disp.set(x, y, static_cast<float>(best_d));
    }
  }
  return disp;
}

DisparityMap subpixel_refine(const AggregatedVolume& agg,
                             const DisparityMap& d) {
  if (d.width != agg.width || d.height != agg.height) {
    throw ValidationError("subpixel_refine: disparity/volume shape mismatch");
  }
  DisparityMap out = d;
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      if (!d.valid(x, y)) continue;
      const int di = static_cast<int>(std::lround(d.value(x, y)));
      if (di <= 0 || di >= agg.d_max) continue;
      const double cm = agg.at(x, y, di - 1);
      const double c0 = agg.at(x, y, di);
      const double cp = agg.at(x, y, di + 1);
      const double denom = cm - 2.0 * c0 + cp;
      if (denom <= 0.0) continue;
      double offset = (cm - cp) / (2.0 * denom);
      offset = std::clamp(offset, -0.5 + 1e-6, 0.5 - 1e-6);
      out.set(x, y, static_cast<float>(di + offset));
    }
  }
  return out;
}

DisparityMap right_disparity_from_volume(const AggregatedVolume& agg) {
  DisparityMap disp(agg.width, agg.height);
  for (int y = 0; y < agg.height; ++y) {
    for (int x = 0; x < agg.width; ++x) {
      int best_d = -1;
      uint32_t best = std::numeric_limits<uint32_t>::max();
      const int d_hi = std::min(agg.d_max, agg.width - 1 - x);
      for (int d = 0; d <= d_hi; ++d) {
        const uint32_t v = agg.at(x + d, y, d);
        if (v < best) {
          best = v;
          best_d = d;
        }
      }
      if (best_d >= 0) disp.set(x, y, static_cast<float>(best_d));
    }
  }
  return disp;
}

}  // namespace rasim
