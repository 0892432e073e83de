#pragma once

#include <utility>
#include <vector>

#include "soloseg/head.hpp"
#include "soloseg/mask.hpp"

namespace soloseg {

// Half-open scale interval [low, high).
struct ScaleRange {
  double low = 0.0;
  double high = 0.0;

  bool contains(double scale) const { return scale >= low && scale < high; }
};

struct GridLevel {
  int grid_size = 0;
  int stride = 0;        // mask target downsampling factor
  ScaleRange scale_range;
};

struct GridSpec {
  std::vector<GridLevel> levels;

  // Five-level setup: grids 40/36/24/16/12, strides 8/8/16/32/32, scale
  // ranges (0,96) [48,192) [96,384) [192,768) [384,inf).
  static GridSpec coco_default();
  // Same but with denser grids 80/64/32/24/12.
  static GridSpec coco_denser();
  // coco_default with strides and scale ranges multiplied by
  // min(height, width) / 800, for images far from the 800px regime.
  static GridSpec scaled_default(int image_height, int image_width);
};

struct GroundTruth {
  BinaryMask mask;
  int class_id = 0;
};

struct PositiveSample {
  GridCell cell;
  int gt_index = 0;         // index into the input ground-truth list
  int category_target = 0;
  BinaryMask mask_target;   // max-pool downsampled by the level stride
};

struct AssignmentResult {
  std::vector<PositiveSample> positives;  // ordered by (level, i, j)
};

// Mean of set-pixel centers, as (x, y) = (col + 0.5, row + 0.5) averages.
std::pair<double, double> mass_center(const BinaryMask& mask);

// ceil(H/stride) x ceil(W/stride) max-pool (logical OR over each block).
BinaryMask downsample_max(const BinaryMask& mask, int stride);

// A cell (i, j) at a level is positive for an instance when the instance's
// scale sqrt(w*h) lies in the level's range and the cell's image region
// [j*W/S,(j+1)*W/S) x [i*H/S,(i+1)*H/S) overlaps the shrunk center box
// (mass center, extents epsilon*w x epsilon*h) with positive area. When two
// instances claim the same cell the smaller (by pixel area) one wins.
AssignmentResult assign_labels(const std::vector<GroundTruth>& gts, const GridSpec& spec,
                               double epsilon = 0.2);

}  // namespace soloseg
