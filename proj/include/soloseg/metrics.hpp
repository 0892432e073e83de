#pragma once

#include <optional>
#include <vector>

#include "soloseg/mask.hpp"

namespace soloseg {

enum class ErrorKind {
  Mse,  // mean squared difference over all pixels
  Sad,  // sum of absolute differences, unnormalized
};

struct MatteSet {
  int height = 0;
  int width = 0;
  std::vector<SoftMask> mattes;
  std::optional<std::vector<int>> class_ids;
};

double matte_pair_error(const SoftMask& a, const SoftMask& b, ErrorKind kind);

// Symmetric instance-level matting error: every ground-truth matte pays its
// error to the closest prediction (averaged over ground truths), and every
// prediction pays its error to the closest ground truth (averaged over
// predictions); the two averages are added. An instance with no candidate
// to match (empty other side, or no same-class candidate under
// strict_class) pays its error against an all-zero matte. Two empty sets
// score 0. strict_class requires class_ids on both sets.
double sofi_error(const MatteSet& predictions, const MatteSet& ground_truths, ErrorKind kind,
                  bool strict_class = false);

// Whole-frame matting error, optionally restricted to a pixel region. MSE
// is normalized by the region size, SAD is not. A region, when given, must
// be non-empty.
double matting_error(const SoftMask& prediction, const SoftMask& ground_truth,
                     const BinaryMask* region, ErrorKind kind);

std::vector<double> coco_iou_thresholds();  // 0.50, 0.55, ..., 0.95

enum class MatchKind {
  Mask,  // pixelwise mask IoU
  Box,   // IoU of the masks' tight bounding boxes
};

struct ApConfig {
  std::vector<double> iou_thresholds = coco_iou_thresholds();  // strictly increasing
  int recall_points = 101;
  MatchKind match_kind = MatchKind::Mask;
};

struct ApResult {
  std::vector<double> per_threshold;
  double mean_ap = 0.0;
};

// COCO-style mask AP. Predictions are matched greedily in descending score
// order (ties by image then position) to the best not-yet-matched same-class
// ground truth with IoU >= threshold. Per class, AP is the mean of the
// precision envelope sampled at recall_points evenly spaced recall values;
// the result averages over classes that have at least one ground truth.
ApResult average_precision(const std::vector<InstanceSet>& predictions,
                           const std::vector<InstanceSet>& ground_truths,
                           const ApConfig& config = ApConfig{});

}  // namespace soloseg
