#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "soloseg/synthetic.hpp"

namespace soloseg {

struct BenchRow {
  std::string method;
  int n = 0;
  double median_ms = 0.0;
};

// Times the four suppression kernels on one shared corpus of n synthetic
// masks, sorted by descending score, with the IoU matrix precomputed
// outside the measured region. Reports the median of `repeats` runs after
// one warmup. Rows come back in the order hard, soft, fast, matrix.
std::vector<BenchRow> bench_nms(std::uint64_t seed, int n, int mask_height, int mask_width,
                                int repeats, OverlapProfile profile = OverlapProfile::Moderate);

}  // namespace soloseg
