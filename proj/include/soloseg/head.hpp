#pragma once

#include <vector>

#include "soloseg/mask.hpp"
#include "soloseg/tensor.hpp"

namespace soloseg {

// Position in an S x S prediction grid. k is the flattened channel index.
struct GridCell {
  int level = 0;
  int i = 0;  // row
  int j = 0;  // column
  int k = 0;  // i * grid_size + j

  static GridCell make(int level, int i, int j, int grid_size);

  bool operator==(const GridCell& other) const = default;
};

// Per-cell convolution weights predicted by a dynamic head: one weight row
// of length kernel_size^2 * in_channels per grid cell, laid out as
// (ky * kernel_size + kx) * in_channels + e.
class KernelBank {
 public:
  KernelBank() = default;
  KernelBank(int grid_size, int kernel_size, int in_channels);  // zero weights

  int grid_size() const { return grid_size_; }
  int kernel_size() const { return kernel_size_; }
  int in_channels() const { return in_channels_; }
  int weights_per_cell() const { return kernel_size_ * kernel_size_ * in_channels_; }

  Eigen::VectorXd cell_weights(int i, int j) const;
  void set_cell_weights(int i, int j, const Eigen::VectorXd& weights);

  const RowMajorMatrix& weights() const { return weights_; }
  RowMajorMatrix& weights() { return weights_; }

 private:
  int grid_size_ = 0;
  int kernel_size_ = 0;
  int in_channels_ = 0;
  RowMajorMatrix weights_;  // (grid_size^2) x weights_per_cell
};

// Convolves the mask features with the cell's predicted kernel (1x1, or 3x3
// with zero padding). Returns raw logits.
Grid dynamic_conv_logits(const KernelBank& bank, const GridCell& cell, const Tensor3& features);

// sigmoid(dynamic_conv_logits)
SoftMask dynamic_conv(const KernelBank& bank, const GridCell& cell, const Tensor3& features);

// Mask for cell (i, j) is channel i*S+j of the S^2-channel logit tensor.
SoftMask assemble_vanilla(const Tensor3& mask_logits, const GridCell& cell);

// Mask is the elementwise product sigmoid(x_j) * sigmoid(y_i) of the
// column-indexed and row-indexed logit channels.
SoftMask assemble_decoupled(const Tensor3& x_logits, const Tensor3& y_logits,
                            const GridCell& cell);

// Product of the sigmoided responses of several dynamic groups. A single
// group reproduces dynamic_conv exactly.
SoftMask assemble_decoupled_dynamic(const std::vector<KernelBank>& groups,
                                    const GridCell& cell, const Tensor3& features);

// How to pool an H x W feature map onto the S x S category grid.
enum class AlignMode {
  Interpolate,   // align-corners bilinear resize
  AdaptivePool,  // per-cell max over rows [floor(iH/S), ceil((i+1)H/S))
  RegionGrid,    // mean of a 3x3 bilinear sample lattice inside each cell
};

Tensor3 align_category_features(const Tensor3& features, int grid_size, AlignMode mode);

// Border-clamped bilinear lookup at continuous grid coordinates, where
// (0, 0) is the center of the top-left element.
double bilinear_at(const Grid& values, double y, double x);

}  // namespace soloseg
