#include "soloseg/mask.hpp"

#include <bit>
#include <stdexcept>
#include <string>

namespace soloseg {

namespace {

void check_same_shape(const BinaryMask& a, const BinaryMask& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw std::invalid_argument(std::string(what) + ": mask shapes differ (" +
                                std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                                " vs " + std::to_string(b.height()) + "x" +
                                std::to_string(b.width()) + ")");
  }
}

}  // namespace

BinaryMask::BinaryMask(int height, int width) : height_(height), width_(width) {
  if (height < 0 || width < 0) {
    throw std::invalid_argument("BinaryMask: negative extent");
  }
  words_per_row_ = (width + 63) / 64;
  words_.assign(static_cast<std::size_t>(height) * words_per_row_, 0);
}

bool BinaryMask::test(int row, int col) const {
  if (row < 0 || row >= height_ || col < 0 || col >= width_) {
    throw std::out_of_range("BinaryMask::test: index out of range");
  }
  const std::uint64_t word = words_[static_cast<std::size_t>(row) * words_per_row_ + col / 64];
  return (word >> (col % 64)) & 1u;
}

void BinaryMask::set(int row, int col, bool value) {
  if (row < 0 || row >= height_ || col < 0 || col >= width_) {
    throw std::out_of_range("BinaryMask::set: index out of range");
  }
  std::uint64_t& word = words_[static_cast<std::size_t>(row) * words_per_row_ + col / 64];
  const std::uint64_t bit = std::uint64_t{1} << (col % 64);
  if (value) {
    word |= bit;
  } else {
    word &= ~bit;
  }
}

std::int64_t BinaryMask::area() const {
  std::int64_t total = 0;
  for (const std::uint64_t w : words_) {
    total += std::popcount(w);
  }
  return total;
}

SoftMask SoftMask::from_logits(const Grid& logits) {
  return SoftMask(Grid(1.0 / (1.0 + (-logits).exp())));
}

SoftMask SoftMask::from_values(Grid values) {
  return SoftMask(Grid(values.min(1.0).max(0.0)));
}

SoftMask SoftMask::constant(int height, int width, double value) {
  return from_values(Grid::Constant(height, width, value));
}

std::int64_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
  check_same_shape(a, b, "intersection_area");
  const auto& wa = a.words();
  const auto& wb = b.words();
  std::int64_t total = 0;
  for (std::size_t i = 0; i < wa.size(); ++i) {
    total += std::popcount(wa[i] & wb[i]);
  }
  return total;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  const std::int64_t inter = intersection_area(a, b);
  const std::int64_t uni = a.area() + b.area() - inter;
  if (uni == 0) {
    return 0.0;
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

Eigen::MatrixXd iou_matrix(const std::vector<BinaryMask>& masks) {
  const int n = static_cast<int>(masks.size());
  if (n == 0) {
    throw std::invalid_argument("iou_matrix: empty mask list");
  }
  for (int i = 1; i < n; ++i) {
    check_same_shape(masks[0], masks[i], "iou_matrix");
  }
  std::vector<std::int64_t> areas(n);
  for (int i = 0; i < n; ++i) {
    areas[i] = masks[i].area();
  }
  Eigen::MatrixXd out(n, n);
  for (int i = 0; i < n; ++i) {
    out(i, i) = areas[i] > 0 ? 1.0 : 0.0;
    for (int j = i + 1; j < n; ++j) {
      const std::int64_t inter = intersection_area(masks[i], masks[j]);
      const std::int64_t uni = areas[i] + areas[j] - inter;
      const double v = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

Eigen::MatrixXd iou_matrix_upper(const std::vector<BinaryMask>& masks) {
  const int n = static_cast<int>(masks.size());
  if (n == 0) {
    throw std::invalid_argument("iou_matrix_upper: empty mask list");
  }
  for (int i = 1; i < n; ++i) {
    check_same_shape(masks[0], masks[i], "iou_matrix_upper");
  }
  std::vector<std::int64_t> areas(n);
  for (int i = 0; i < n; ++i) {
    areas[i] = masks[i].area();
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const std::int64_t inter = intersection_area(masks[i], masks[j]);
      const std::int64_t uni = areas[i] + areas[j] - inter;
      out(i, j) = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
  }
  return out;
}

double maskness(const SoftMask& mask, double threshold) {
  const Grid& v = mask.values();
  double sum = 0.0;
  std::int64_t count = 0;
  for (int r = 0; r < v.rows(); ++r) {
    for (int c = 0; c < v.cols(); ++c) {
      if (v(r, c) > threshold) {
        sum += v(r, c);
        ++count;
      }
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

BinaryMask binarize(const SoftMask& mask, double threshold) {
  return mask_from_grid(mask.values(), threshold);
}

BinaryMask mask_from_grid(const Grid& values, double threshold) {
  BinaryMask out(static_cast<int>(values.rows()), static_cast<int>(values.cols()));
  for (int r = 0; r < values.rows(); ++r) {
    for (int c = 0; c < values.cols(); ++c) {
      if (values(r, c) > threshold) {
        out.set(r, c);
      }
    }
  }
  return out;
}

BBox mask_to_bbox(const BinaryMask& mask) {
  int x_lo = mask.width();
  int x_hi = -1;
  int y_lo = mask.height();
  int y_hi = -1;
  const int wpr = mask.words_per_row();
  const auto& words = mask.words();
  for (int r = 0; r < mask.height(); ++r) {
    int row_min = -1;
    int row_max = -1;
    for (int w = 0; w < wpr; ++w) {
      const std::uint64_t word = words[static_cast<std::size_t>(r) * wpr + w];
      if (word == 0) {
        continue;
      }
      const int lo = w * 64 + std::countr_zero(word);
      const int hi = w * 64 + 63 - std::countl_zero(word);
      if (row_min < 0) {
        row_min = lo;
      }
      row_max = hi;
    }
    if (row_min < 0) {
      continue;
    }
    y_lo = std::min(y_lo, r);
    y_hi = r;
    x_lo = std::min(x_lo, row_min);
    x_hi = std::max(x_hi, row_max);
  }
  if (y_hi < 0) {
    return BBox{};
  }
  return BBox{x_lo, y_lo, x_hi + 1, y_hi + 1};
}

RleMask rle_encode(const BinaryMask& mask) {
  RleMask out;
  out.height = mask.height();
  out.width = mask.width();
  if (mask.size() == 0) {
    return out;
  }
  bool current = false;
  std::int64_t run = 0;
  for (int c = 0; c < mask.width(); ++c) {
    for (int r = 0; r < mask.height(); ++r) {
      const bool bit = mask.test(r, c);
      if (bit == current) {
        ++run;
      } else {
        out.counts.push_back(run);
        current = bit;
        run = 1;
      }
    }
  }
  out.counts.push_back(run);
  return out;
}

BinaryMask rle_decode(const RleMask& rle) {
  if (rle.height < 0 || rle.width < 0) {
    throw std::invalid_argument("rle_decode: negative extent");
  }
  BinaryMask out(rle.height, rle.width);
  std::int64_t pos = 0;
  bool current = false;
  for (const std::int64_t run : rle.counts) {
    if (run < 0) {
      throw std::invalid_argument("rle_decode: negative run length");
    }
    for (std::int64_t k = 0; k < run; ++k) {
      if (pos >= out.size()) {
        throw std::invalid_argument("rle_decode: counts exceed height*width");
      }
      if (current) {
        out.set(static_cast<int>(pos % rle.height), static_cast<int>(pos / rle.height));
      }
      ++pos;
    }
    current = !current;
  }
  if (pos != out.size()) {
    throw std::invalid_argument("rle_decode: counts sum to " + std::to_string(pos) +
                                ", expected " + std::to_string(out.size()));
  }
  return out;
}

}  // namespace soloseg
