#include "rasim/census.hpp"

#include <bit>
#include <string>

#include "rasim/errors.hpp"
#include "rasim/parallel.hpp"

namespace rasim {

CensusDescriptorMap census_transform(const ImageGray& img, int win_w,
                                     int win_h, int threads) {
  if (win_w < 3 || win_h < 3 || win_w % 2 == 0 || win_h % 2 == 0) {
    throw ValidationError("census_transform: window must be odd and >= 3, got " +
                          std::to_string(win_w) + "x" + std::to_string(win_h));
  }
  if (win_w > img.width || win_h > img.height) {
    throw ValidationError("census_transform: window " + std::to_string(win_w) +
                          "x" + std::to_string(win_h) +
                          " larger than image " + std::to_string(img.width) +
                          "x" + std::to_string(img.height));
  }
  const int half_pairs = (win_w * win_h - 1) / 2;
  if (half_pairs > 64) {
    throw ValidationError("census_transform: window yields " +
                          std::to_string(half_pairs) +
                          " comparison bits, max is 64");
  }

  CensusDescriptorMap out;
  out.width = img.width;
  out.height = img.height;
  out.win_w = win_w;
  out.win_h = win_h;
  out.descriptors.assign(static_cast<size_t>(img.width) * img.height, 0);
  out.defined.assign(out.descriptors.size(), 0);

  const int hw = win_w / 2;
  const int hh = win_h / 2;

  // First half of the window in row-major order; each position pairs with
  // its point reflection through the center. Offsets are relative to the
  // row-major pixel index.
  std::vector<int> fwd(half_pairs), bwd(half_pairs);
  for (int k = 0; k < half_pairs; ++k) {
    const int dy = k / win_w - hh;
    const int dx = k % win_w - hw;
    fwd[k] = dy * img.width + dx;
    bwd[k] = -fwd[k];
  }

  parallel_for(hh, img.height - hh, threads, [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
      for (int x = hw; x < img.width - hw; ++x) {
        const size_t i = out.index(x, y);
        const float* center = &img.data[i];
        uint64_t desc = 0;
        for (int k = 0; k < half_pairs; ++k) {
          if (center[fwd[k]] < center[bwd[k]]) desc |= (uint64_t{1} << k);
        }
        out.descriptors[i] = desc;
        out.defined[i] = 1;
      }
    }
  });
  return out;
}

CostVolume build_cost_volume(const CensusDescriptorMap& left,
                             const CensusDescriptorMap& right, int d_max,
                             int threads) {
  if (left.width != right.width || left.height != right.height) {
    throw ValidationError(
        "build_cost_volume: dimension mismatch, " +
        std::to_string(left.width) + "x" + std::to_string(left.height) +
        " vs " + std::to_string(right.width) + "x" +
        std::to_string(right.height));
  }
  if (left.win_w != right.win_w || left.win_h != right.win_h) {
    throw ValidationError("build_cost_volume: census window mismatch, " +
                          std::to_string(left.win_w) + "x" +
                          std::to_string(left.win_h) + " vs " +
                          std::to_string(right.win_w) + "x" +
                          std::to_string(right.win_h));
  }
  if (d_max < 0) {
    throw ValidationError("build_cost_volume: d_max must be >= 0");
  }

  CostVolume vol;
  vol.width = left.width;
  vol.height = left.height;
  vol.d_max = d_max;
  vol.costs.assign(static_cast<size_t>(left.width) * left.height * (d_max + 1),
                   kMaxCost);

  const int dc = d_max + 1;
  parallel_for(0, left.height, threads, [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
      const size_t row = static_cast<size_t>(y) * left.width;
      for (int x = 0; x < left.width; ++x) {
        if (!left.defined[row + x]) continue;
        const uint64_t dl = left.descriptors[row + x];
        uint16_t* cost = &vol.costs[(row + x) * dc];
        const int d_hi = std::min(d_max, x);
        for (int d = 0; d <= d_hi; ++d) {
          if (!right.defined[row + x - d]) continue;
          cost[d] = static_cast<uint16_t>(
              std::popcount(dl ^ right.descriptors[row + x - d]));
        }
      }
    }
  });
  return vol;
}

}  // namespace rasim
