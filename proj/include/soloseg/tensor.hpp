#pragma once

#include <vector>

#include "soloseg/types.hpp"

namespace soloseg {

// Dense H x W x C tensor of doubles. Backed by an (H*W) x C row-major
// matrix, so flat memory order is channel-fastest, then column, then row.
// That is also the payload order of the binary interchange format.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int height, int width, int channels);  // zero-filled

  static Tensor3 from_flat(int height, int width, int channels,
                           const std::vector<double>& values);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return static_cast<int>(data_.cols()); }

  double at(int row, int col, int channel) const {
    return data_(static_cast<Eigen::Index>(row) * width_ + col, channel);
  }
  double& at(int row, int col, int channel) {
    return data_(static_cast<Eigen::Index>(row) * width_ + col, channel);
  }

  Grid channel(int channel) const;
  void set_channel(int channel, const Grid& values);

  const RowMajorMatrix& data() const { return data_; }
  RowMajorMatrix& data() { return data_; }

 private:
  int height_ = 0;
  int width_ = 0;
  RowMajorMatrix data_;  // (height*width) x channels
};

// Appends two channels holding pixel coordinates normalized to [-1, 1]:
// first the x (column) channel, then the y (row) channel. An extent of 1
// maps to coordinate 0.
Tensor3 with_coord_channels(const Tensor3& input);
Tensor3 coord_channels(int height, int width);

// Align-corners bilinear interpolation: source coordinate of output index i
// is i * (in-1) / (out-1); a single-element extent samples index 0.
Grid resize_bilinear(const Grid& input, int out_height, int out_width);
Tensor3 upsample_bilinear(const Tensor3& input, int out_height, int out_width);

}  // namespace soloseg
