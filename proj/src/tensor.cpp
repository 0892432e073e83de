#include "soloseg/tensor.hpp"

#include <stdexcept>
#include <string>

namespace soloseg {

Tensor3::Tensor3(int height, int width, int channels) : height_(height), width_(width) {
  if (height < 0 || width < 0 || channels < 0) {
    throw std::invalid_argument("Tensor3: negative extent");
  }
  data_ = RowMajorMatrix::Zero(static_cast<Eigen::Index>(height) * width, channels);
}

Tensor3 Tensor3::from_flat(int height, int width, int channels,
                           const std::vector<double>& values) {
  Tensor3 out(height, width, channels);
  const std::size_t expected =
      static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * channels;
  if (values.size() != expected) {
    throw std::invalid_argument("Tensor3::from_flat: got " + std::to_string(values.size()) +
                                " values, expected " + std::to_string(expected));
  }
  std::copy(values.begin(), values.end(), out.data_.data());
  return out;
}

Grid Tensor3::channel(int channel) const {
  if (channel < 0 || channel >= channels()) {
    throw std::out_of_range("Tensor3::channel: index out of range");
  }
  Grid out(height_, width_);
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      out(r, c) = at(r, c, channel);
    }
  }
  return out;
}

void Tensor3::set_channel(int channel, const Grid& values) {
  if (channel < 0 || channel >= channels()) {
    throw std::out_of_range("Tensor3::set_channel: index out of range");
  }
  if (values.rows() != height_ || values.cols() != width_) {
    throw std::invalid_argument("Tensor3::set_channel: shape mismatch");
  }
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      at(r, c, channel) = values(r, c);
    }
  }
}

namespace {

double normalized_coord(int index, int extent) {
  if (extent <= 1) {
    return 0.0;
  }
  return -1.0 + 2.0 * static_cast<double>(index) / static_cast<double>(extent - 1);
}

}  // namespace

Tensor3 coord_channels(int height, int width) {
  Tensor3 out(height, width, 2);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      out.at(r, c, 0) = normalized_coord(c, width);
      out.at(r, c, 1) = normalized_coord(r, height);
    }
  }
  return out;
}

Tensor3 with_coord_channels(const Tensor3& input) {
  Tensor3 out(input.height(), input.width(), input.channels() + 2);
  out.data().leftCols(input.channels()) = input.data();
  const Tensor3 coords = coord_channels(input.height(), input.width());
  out.data().rightCols(2) = coords.data();
  return out;
}

namespace {

struct Axis {
  int lo;
  int hi;
  double frac;
};

Axis axis_sample(int out_index, int out_extent, int in_extent) {
  if (in_extent == 1 || out_extent == 1) {
    return Axis{0, 0, 0.0};
  }
  const double pos = static_cast<double>(out_index) * (in_extent - 1) / (out_extent - 1);
  int lo = static_cast<int>(pos);
  if (lo >= in_extent - 1) {
    lo = in_extent - 2;
  }
  return Axis{lo, lo + 1, pos - lo};
}

}  // namespace

Grid resize_bilinear(const Grid& input, int out_height, int out_width) {
  if (input.rows() < 1 || input.cols() < 1) {
    throw std::invalid_argument("resize_bilinear: empty input");
  }
  if (out_height < 1 || out_width < 1) {
    throw std::invalid_argument("resize_bilinear: output extent must be positive");
  }
  const int in_h = static_cast<int>(input.rows());
  const int in_w = static_cast<int>(input.cols());
  Grid out(out_height, out_width);
  for (int r = 0; r < out_height; ++r) {
    const Axis ay = axis_sample(r, out_height, in_h);
    for (int c = 0; c < out_width; ++c) {
      const Axis ax = axis_sample(c, out_width, in_w);
      const double top = input(ay.lo, ax.lo) * (1.0 - ax.frac) + input(ay.lo, ax.hi) * ax.frac;
      const double bot = input(ay.hi, ax.lo) * (1.0 - ax.frac) + input(ay.hi, ax.hi) * ax.frac;
      out(r, c) = top * (1.0 - ay.frac) + bot * ay.frac;
    }
  }
  return out;
}

Tensor3 upsample_bilinear(const Tensor3& input, int out_height, int out_width) {
  Tensor3 out(out_height, out_width, input.channels());
  for (int ch = 0; ch < input.channels(); ++ch) {
    out.set_channel(ch, resize_bilinear(input.channel(ch), out_height, out_width));
  }
  return out;
}

}  // namespace soloseg
