#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "soloseg/types.hpp"

namespace soloseg {

// Binary instance mask stored as packed 64-bit words, one run of words per
// row so bit tests stay cheap and intersections reduce to popcounts.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }
  std::int64_t size() const { return static_cast<std::int64_t>(height_) * width_; }

  bool test(int row, int col) const;
  void set(int row, int col, bool value = true);

  std::int64_t area() const;
  bool any() const { return area() > 0; }

  const std::vector<std::uint64_t>& words() const { return words_; }
  int words_per_row() const { return words_per_row_; }

  bool operator==(const BinaryMask& other) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int words_per_row_ = 0;
  std::vector<std::uint64_t> words_;
};

// Soft mask with values in [0, 1].
class SoftMask {
 public:
  SoftMask() = default;

  static SoftMask from_logits(const Grid& logits);
  // Clamps out-of-range inputs into [0, 1].
  static SoftMask from_values(Grid values);
  static SoftMask constant(int height, int width, double value);

  int height() const { return static_cast<int>(values_.rows()); }
  int width() const { return static_cast<int>(values_.cols()); }
  const Grid& values() const { return values_; }
  double operator()(int row, int col) const { return values_(row, col); }

 private:
  explicit SoftMask(Grid values) : values_(std::move(values)) {}
  Grid values_;
};

// Half-open pixel bounds [min, max); the all-zero box is the empty value.
struct BBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  bool empty() const { return x_max <= x_min || y_max <= y_min; }
  int width() const { return empty() ? 0 : x_max - x_min; }
  int height() const { return empty() ? 0 : y_max - y_min; }

  bool operator==(const BBox& other) const = default;
};

// Column-major run-length encoding. counts alternates background/foreground
// runs and starts with a (possibly zero) background run.
struct RleMask {
  int height = 0;
  int width = 0;
  std::vector<std::int64_t> counts;

  bool operator==(const RleMask& other) const = default;
};

struct Instance {
  double score = 0.0;
  int class_id = 0;
  BinaryMask mask;
  // Present while an instance still carries its pre-binarization response.
  std::optional<SoftMask> soft;
};

struct InstanceSet {
  int height = 0;
  int width = 0;
  std::vector<Instance> instances;
};

std::int64_t intersection_area(const BinaryMask& a, const BinaryMask& b);

// IoU of two same-sized masks; two empty masks have IoU 0.
double iou(const BinaryMask& a, const BinaryMask& b);

// Symmetric N x N matrix of pairwise IoUs, unit diagonal for non-empty masks.
Eigen::MatrixXd iou_matrix(const std::vector<BinaryMask>& masks);

// Strict upper triangle of iou_matrix for score-descending inputs; the rest
// of the matrix is zero. This is the layout the NMS kernels consume.
Eigen::MatrixXd iou_matrix_upper(const std::vector<BinaryMask>& masks);

// Mean soft value over pixels strictly above threshold; 0 if none qualify.
double maskness(const SoftMask& mask, double threshold = 0.5);

BinaryMask binarize(const SoftMask& mask, double threshold = 0.5);

BinaryMask mask_from_grid(const Grid& values, double threshold = 0.5);

BBox mask_to_bbox(const BinaryMask& mask);

RleMask rle_encode(const BinaryMask& mask);
BinaryMask rle_decode(const RleMask& rle);

}  // namespace soloseg
