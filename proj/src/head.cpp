#include "soloseg/head.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace soloseg {

namespace {

Grid sigmoid(const Grid& logits) {
  return 1.0 / (1.0 + (-logits).exp());
}

void check_cell(const GridCell& cell, int grid_size, const char* what) {
  if (cell.i < 0 || cell.i >= grid_size || cell.j < 0 || cell.j >= grid_size) {
    throw std::out_of_range(std::string(what) + ": cell (" + std::to_string(cell.i) + ", " +
                            std::to_string(cell.j) + ") outside " + std::to_string(grid_size) +
                            "x" + std::to_string(grid_size) + " grid");
  }
  if (cell.k != cell.i * grid_size + cell.j) {
    throw std::invalid_argument(std::string(what) + ": cell.k inconsistent with (i, j)");
  }
}

}  // namespace

GridCell GridCell::make(int level, int i, int j, int grid_size) {
  if (i < 0 || i >= grid_size || j < 0 || j >= grid_size) {
    throw std::out_of_range("GridCell::make: indices outside grid");
  }
  return GridCell{level, i, j, i * grid_size + j};
}

KernelBank::KernelBank(int grid_size, int kernel_size, int in_channels)
    : grid_size_(grid_size), kernel_size_(kernel_size), in_channels_(in_channels) {
  if (grid_size < 1 || in_channels < 1) {
    throw std::invalid_argument("KernelBank: extents must be positive");
  }
  if (kernel_size != 1 && kernel_size != 3) {
    throw std::invalid_argument("KernelBank: kernel_size must be 1 or 3");
  }
  weights_ = RowMajorMatrix::Zero(static_cast<Eigen::Index>(grid_size) * grid_size,
                                  weights_per_cell());
}

Eigen::VectorXd KernelBank::cell_weights(int i, int j) const {
  if (i < 0 || i >= grid_size_ || j < 0 || j >= grid_size_) {
    throw std::out_of_range("KernelBank::cell_weights: cell outside grid");
  }
  return weights_.row(static_cast<Eigen::Index>(i) * grid_size_ + j);
}

void KernelBank::set_cell_weights(int i, int j, const Eigen::VectorXd& weights) {
  if (i < 0 || i >= grid_size_ || j < 0 || j >= grid_size_) {
    throw std::out_of_range("KernelBank::set_cell_weights: cell outside grid");
  }
  if (weights.size() != weights_per_cell()) {
    throw std::invalid_argument("KernelBank::set_cell_weights: expected " +
                                std::to_string(weights_per_cell()) + " weights, got " +
                                std::to_string(weights.size()));
  }
  weights_.row(static_cast<Eigen::Index>(i) * grid_size_ + j) = weights;
}

Grid dynamic_conv_logits(const KernelBank& bank, const GridCell& cell, const Tensor3& features) {
  check_cell(cell, bank.grid_size(), "dynamic_conv_logits");
  if (features.channels() != bank.in_channels()) {
    throw std::invalid_argument("dynamic_conv_logits: feature channels (" +
                                std::to_string(features.channels()) + ") != kernel channels (" +
                                std::to_string(bank.in_channels()) + ")");
  }
  const int h = features.height();
  const int w = features.width();
  const int e = bank.in_channels();
  const int ks = bank.kernel_size();
  const Eigen::VectorXd weights = bank.cell_weights(cell.i, cell.j);

  Grid out(h, w);
  if (ks == 1) {
    const Eigen::VectorXd flat = features.data() * weights;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        out(r, c) = flat[static_cast<Eigen::Index>(r) * w + c];
      }
    }
    return out;
  }

  const int pad = ks / 2;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int ky = 0; ky < ks; ++ky) {
        const int rr = r + ky - pad;
        if (rr < 0 || rr >= h) {
          continue;  // zero padding
        }
        for (int kx = 0; kx < ks; ++kx) {
          const int cc = c + kx - pad;
          if (cc < 0 || cc >= w) {
            continue;
          }
          acc += features.data()
                     .row(static_cast<Eigen::Index>(rr) * w + cc)
                     .dot(weights.segment((ky * ks + kx) * e, e));
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

SoftMask dynamic_conv(const KernelBank& bank, const GridCell& cell, const Tensor3& features) {
  return SoftMask::from_logits(dynamic_conv_logits(bank, cell, features));
}

SoftMask assemble_vanilla(const Tensor3& mask_logits, const GridCell& cell) {
  const int channels = mask_logits.channels();
  const int s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(channels))));
  if (s * s != channels) {
    throw std::invalid_argument("assemble_vanilla: channel count " + std::to_string(channels) +
                                " is not a square");
  }
  check_cell(cell, s, "assemble_vanilla");
  return SoftMask::from_logits(mask_logits.channel(cell.k));
}

SoftMask assemble_decoupled(const Tensor3& x_logits, const Tensor3& y_logits,
                            const GridCell& cell) {
  if (x_logits.channels() != y_logits.channels()) {
    throw std::invalid_argument("assemble_decoupled: x and y channel counts differ");
  }
  if (x_logits.height() != y_logits.height() || x_logits.width() != y_logits.width()) {
    throw std::invalid_argument("assemble_decoupled: x and y spatial shapes differ");
  }
  check_cell(cell, x_logits.channels(), "assemble_decoupled");
  const Grid px = sigmoid(x_logits.channel(cell.j));
  const Grid py = sigmoid(y_logits.channel(cell.i));
  return SoftMask::from_values(px * py);
}

SoftMask assemble_decoupled_dynamic(const std::vector<KernelBank>& groups,
                                    const GridCell& cell, const Tensor3& features) {
  if (groups.empty()) {
    throw std::invalid_argument("assemble_decoupled_dynamic: no kernel groups");
  }
  for (std::size_t a = 1; a < groups.size(); ++a) {
    if (groups[a].grid_size() != groups[0].grid_size() ||
        groups[a].kernel_size() != groups[0].kernel_size() ||
        groups[a].in_channels() != groups[0].in_channels()) {
      throw std::invalid_argument("assemble_decoupled_dynamic: group shapes inconsistent");
    }
  }
  Grid product = sigmoid(dynamic_conv_logits(groups[0], cell, features));
  for (std::size_t a = 1; a < groups.size(); ++a) {
    product *= sigmoid(dynamic_conv_logits(groups[a], cell, features));
  }
  return SoftMask::from_values(std::move(product));
}

double bilinear_at(const Grid& values, double y, double x) {
  const int h = static_cast<int>(values.rows());
  const int w = static_cast<int>(values.cols());
  y = std::min(std::max(y, 0.0), static_cast<double>(h - 1));
  x = std::min(std::max(x, 0.0), static_cast<double>(w - 1));
  int y0 = static_cast<int>(y);
  int x0 = static_cast<int>(x);
  if (y0 >= h - 1) {
    y0 = h > 1 ? h - 2 : 0;
  }
  if (x0 >= w - 1) {
    x0 = w > 1 ? w - 2 : 0;
  }
  const int y1 = std::min(y0 + 1, h - 1);
  const int x1 = std::min(x0 + 1, w - 1);
  const double fy = y - y0;
  const double fx = x - x0;
  const double top = values(y0, x0) * (1.0 - fx) + values(y0, x1) * fx;
  const double bot = values(y1, x0) * (1.0 - fx) + values(y1, x1) * fx;
  return top * (1.0 - fy) + bot * fy;
}

namespace {

Grid align_channel(const Grid& ch, int grid_size, AlignMode mode) {
  const int h = static_cast<int>(ch.rows());
  const int w = static_cast<int>(ch.cols());
  const int s = grid_size;
  if (mode == AlignMode::Interpolate) {
    return resize_bilinear(ch, s, s);
  }
  Grid out(s, s);
  if (mode == AlignMode::AdaptivePool) {
    for (int i = 0; i < s; ++i) {
      const int r0 = (i * h) / s;
      const int r1 = ((i + 1) * h + s - 1) / s;
      for (int j = 0; j < s; ++j) {
        const int c0 = (j * w) / s;
        const int c1 = ((j + 1) * w + s - 1) / s;
        out(i, j) = ch.block(r0, c0, r1 - r0, c1 - c0).maxCoeff();
      }
    }
    return out;
  }
  // RegionGrid: each cell covers [j*w/s, (j+1)*w/s) x [i*h/s, (i+1)*h/s) in
  // continuous pixel coordinates; average a 3x3 lattice of bilinear samples
  // taken at the centers of the cell's 3x3 sub-regions. Pixel (r, c) has its
  // center at continuous coordinate (r + 0.5, c + 0.5).
  constexpr int kLattice = 3;
  const double cell_h = static_cast<double>(h) / s;
  const double cell_w = static_cast<double>(w) / s;
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      double acc = 0.0;
      for (int py = 0; py < kLattice; ++py) {
        const double sy = (i + (py + 0.5) / kLattice) * cell_h - 0.5;
        for (int px = 0; px < kLattice; ++px) {
          const double sx = (j + (px + 0.5) / kLattice) * cell_w - 0.5;
          acc += bilinear_at(ch, sy, sx);
        }
      }
      out(i, j) = acc / (kLattice * kLattice);
    }
  }
  return out;
}

}  // namespace

Tensor3 align_category_features(const Tensor3& features, int grid_size, AlignMode mode) {
  if (grid_size < 1 || grid_size > std::min(features.height(), features.width())) {
    throw std::invalid_argument(
        "align_category_features: grid_size must be in [1, min(H, W)]");
  }
  Tensor3 out(grid_size, grid_size, features.channels());
  for (int ch = 0; ch < features.channels(); ++ch) {
    out.set_channel(ch, align_channel(features.channel(ch), grid_size, mode));
  }
  return out;
}

}  // namespace soloseg
