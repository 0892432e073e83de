#pragma once

#include <vector>

#include "soloseg/mask.hpp"
#include "soloseg/synthetic.hpp"

namespace testutil {

using soloseg::BinaryMask;
using soloseg::Grid;
using soloseg::Instance;
using soloseg::InstanceSet;
using soloseg::Rng;
using soloseg::SoftMask;

inline BinaryMask random_mask(Rng& rng, int height, int width, double density = 0.3) {
  BinaryMask mask(height, width);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      if (rng.uniform() < density) mask.set(r, c);
  return mask;
}

// Axis-aligned rectangle over half-open pixel ranges.
inline BinaryMask rect_mask(int height, int width, int r0, int c0, int r1, int c1) {
  BinaryMask mask(height, width);
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) mask.set(r, c);
  return mask;
}

// Horizontal strip [c0, c1) on a single row, handy for exact-IoU fixtures.
inline BinaryMask strip_mask(int width, int c0, int c1) {
  return rect_mask(1, width, 0, c0, 1, c1);
}

inline SoftMask random_soft(Rng& rng, int height, int width, double lo = 0.0, double hi = 1.0) {
  Grid values(height, width);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) values(r, c) = rng.uniform(lo, hi);
  return SoftMask::from_values(values);
}

inline InstanceSet random_instance_set(Rng& rng, int n, int height, int width, int n_classes) {
  InstanceSet set;
  set.height = height;
  set.width = width;
  set.instances.reserve(n);
  for (int k = 0; k < n; ++k) {
    Instance inst;
    inst.score = rng.uniform(0.01, 1.0);
    inst.class_id = rng.uniform_int(0, n_classes - 1);
    const double density = rng.uniform(0.05, 0.6);
    inst.mask = random_mask(rng, height, width, density);
    set.instances.push_back(std::move(inst));
  }
  return set;
}

}  // namespace testutil
