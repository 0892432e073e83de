#include "soloseg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace soloseg {

BinaryMask rasterize(const ShapeSpec& shape, int height, int width) {
  BinaryMask out(height, width);
  for (int r = 0; r < height; ++r) {
    const double py = r + 0.5;
    for (int c = 0; c < width; ++c) {
      const double px = c + 0.5;
      bool inside = false;
      if (shape.kind == ShapeSpec::Kind::Rect) {
        inside = std::abs(px - shape.cx) <= shape.half_w && std::abs(py - shape.cy) <= shape.half_h;
      } else {
        const double dx = (px - shape.cx) / shape.half_w;
        const double dy = (py - shape.cy) / shape.half_h;
        inside = dx * dx + dy * dy <= 1.0;
      }
      if (inside) {
        out.set(r, c);
      }
    }
  }
  return out;
}

namespace {

ShapeSpec::Kind random_kind(Rng& rng) {
  return rng.uniform_int(0, 1) == 0 ? ShapeSpec::Kind::Rect : ShapeSpec::Kind::Disk;
}

// Fisher-Yates with our own engine so slot choice is reproducible.
std::vector<int> shuffled_indices(Rng& rng, int n) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) {
    idx[i] = i;
  }
  for (int i = n - 1; i > 0; --i) {
    std::swap(idx[i], idx[rng.uniform_int(0, i)]);
  }
  return idx;
}

}  // namespace

SyntheticScene generate_scene(std::uint64_t seed, int height, int width, int n_shapes,
                              OverlapProfile profile, int n_classes) {
  if (height < 8 || width < 8) {
    throw std::invalid_argument("generate_scene: image must be at least 8x8");
  }
  if (n_shapes < 0 || n_classes < 1) {
    throw std::invalid_argument("generate_scene: bad shape or class count");
  }
  Rng rng(seed);
  SyntheticScene scene;
  scene.height = height;
  scene.width = width;
  scene.ground_truth.height = height;
  scene.ground_truth.width = width;

  // Slot layout used by the Disjoint profile: each shape lives strictly
  // inside its own slot of a k x k grid.
  const int k = n_shapes > 0
                    ? static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_shapes))))
                    : 1;
  std::vector<int> slots;
  if (profile == OverlapProfile::Disjoint && n_shapes > 0) {
    slots = shuffled_indices(rng, k * k);
  }

  for (int e = 0; e < n_shapes; ++e) {
    ShapeSpec shape;
    shape.kind = random_kind(rng);
    shape.class_id = rng.uniform_int(0, n_classes - 1);

    if (profile == OverlapProfile::Disjoint) {
      const double slot_w = static_cast<double>(width) / k;
      const double slot_h = static_cast<double>(height) / k;
      const int slot = slots[e];
      const double x0 = (slot % k) * slot_w;
      const double y0 = (slot / k) * slot_h;
      const double max_half_w = slot_w / 2.0 - 1.0;
      const double max_half_h = slot_h / 2.0 - 1.0;
      if (max_half_w < 0.6 || max_half_h < 0.6) {
        shape.half_w = 0.6;
        shape.half_h = 0.6;
        shape.cx = std::floor(x0 + slot_w / 2.0) + 0.5;
        shape.cy = std::floor(y0 + slot_h / 2.0) + 0.5;
      } else {
        shape.half_w = rng.uniform(0.6, max_half_w);
        shape.half_h = rng.uniform(0.6, max_half_h);
        shape.cx = x0 + rng.uniform(shape.half_w + 1.0, slot_w - shape.half_w - 1.0);
        shape.cy = y0 + rng.uniform(shape.half_h + 1.0, slot_h - shape.half_h - 1.0);
        // Snap so the center pixel is always covered.
        shape.cx = std::floor(shape.cx) + 0.5;
        shape.cy = std::floor(shape.cy) + 0.5;
      }
    } else if (profile == OverlapProfile::Moderate) {
      shape.half_w = rng.uniform(3.0, 8.0);
      shape.half_h = rng.uniform(3.0, 8.0);
      shape.cx = std::floor(rng.uniform(4.0, width - 4.0)) + 0.5;
      shape.cy = std::floor(rng.uniform(4.0, height - 4.0)) + 0.5;
    } else {
      shape.half_w = rng.uniform(6.0, 14.0);
      shape.half_h = rng.uniform(6.0, 14.0);
      shape.cx = std::floor(rng.uniform(0.35 * width, 0.65 * width)) + 0.5;
      shape.cy = std::floor(rng.uniform(0.35 * height, 0.65 * height)) + 0.5;
    }

    scene.shapes.push_back(shape);
    Instance inst;
    inst.score = 1.0;
    inst.class_id = shape.class_id;
    inst.mask = rasterize(shape, height, width);
    scene.ground_truth.instances.push_back(std::move(inst));
  }
  return scene;
}

int assignment_scene_extent() { return 64; }

GridSpec assignment_grid_spec() {
  GridSpec spec;
  spec.levels = {
      {16, 4, {0.0, 40.0}},
      {8, 8, {24.0, std::numeric_limits<double>::infinity()}},
  };
  return spec;
}

std::vector<GroundTruth> generate_assignment_scene(std::uint64_t seed, int n_shapes) {
  // 4x4 slots of 16px on a 64px image. Centers are jittered only +-0.5px
  // around each slot center, so mass centers of any two shapes differ by
  // >= 14px along some axis. With epsilon 0.2 and half extents <= 12 the
  // center regions have half extent <= 2.5px, and the coarsest cell of
  // assignment_grid_spec() spans 8px; two regions could contest a cell only
  // if centers were within 8 + 2.5 + 2.5 = 13px on both axes. They never
  // are, so every ground truth keeps all of its positive cells.
  if (n_shapes < 1 || n_shapes > 16) {
    throw std::invalid_argument("generate_assignment_scene: n_shapes must be in [1,16]");
  }
  const int extent = assignment_scene_extent();
  Rng rng(seed);
  const std::vector<int> slots = shuffled_indices(rng, 16);
  std::vector<GroundTruth> gts;
  for (int e = 0; e < n_shapes; ++e) {
    const int slot = slots[e];
    const double cx = (slot % 4) * 16.0 + rng.uniform(7.5, 8.5);
    const double cy = (slot / 4) * 16.0 + rng.uniform(7.5, 8.5);
    const double margin_x = std::min(cx, extent - cx) - 1.5;
    const double margin_y = std::min(cy, extent - cy) - 1.5;
    ShapeSpec shape;
    shape.kind = random_kind(rng);
    shape.class_id = rng.uniform_int(0, 2);
    shape.cx = cx;
    shape.cy = cy;
    shape.half_w = rng.uniform(4.0, std::min(12.0, margin_x));
    shape.half_h = rng.uniform(4.0, std::min(12.0, margin_y));
    GroundTruth gt;
    gt.class_id = shape.class_id;
    gt.mask = rasterize(shape, extent, extent);
    gts.push_back(std::move(gt));
  }
  return gts;
}

DemoSetup build_demo(std::uint64_t seed, int n_shapes, int height, int width) {
  if (n_shapes < 1 || n_shapes > 16) {
    throw std::invalid_argument("build_demo: n_shapes must be in [1,16]");
  }
  if (height < 32 || width < 32) {
    throw std::invalid_argument("build_demo: image must be at least 32x32");
  }
  constexpr int kGrid = 8;
  constexpr int kClasses = 3;
  constexpr double kLogit = 12.0;

  DemoSetup demo;
  demo.grid_size = kGrid;
  demo.n_classes = kClasses;
  demo.scene.height = height;
  demo.scene.width = width;
  demo.scene.ground_truth.height = height;
  demo.scene.ground_truth.width = width;

  Rng rng(seed);
  const std::vector<int> slots = shuffled_indices(rng, 16);
  for (int e = 0; e < n_shapes; ++e) {
    const int slot = slots[e];
    ShapeSpec shape;
    shape.kind = random_kind(rng);
    shape.class_id = rng.uniform_int(0, kClasses - 1);
    shape.cx = (slot % 4) * (width / 4.0) + rng.uniform(0.46, 0.54) * (width / 4.0);
    shape.cy = (slot / 4) * (height / 4.0) + rng.uniform(0.46, 0.54) * (height / 4.0);
    shape.half_w = rng.uniform(3.0, width / 16.0);
    shape.half_h = rng.uniform(3.0, height / 16.0);
    demo.scene.shapes.push_back(shape);
    Instance inst;
    inst.score = 1.0;
    inst.class_id = shape.class_id;
    inst.mask = rasterize(shape, height, width);
    demo.scene.ground_truth.instances.push_back(std::move(inst));
  }

  // One +-kLogit feature channel per shape; sigmoid then 0.5-binarization
  // reproduces each mask exactly.
  demo.mask_feature = Tensor3(height, width, n_shapes);
  for (int e = 0; e < n_shapes; ++e) {
    const BinaryMask& m = demo.scene.ground_truth.instances[e].mask;
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        demo.mask_feature.at(r, c, e) = m.test(r, c) ? kLogit : -kLogit;
      }
    }
  }

  KernelBank bank(kGrid, 1, n_shapes);
  Tensor3 scores(kGrid, kGrid, kClasses);
  std::vector<std::vector<char>> taken(kGrid, std::vector<char>(kGrid, 0));

  struct Placement {
    int i, j, e;
  };
  std::vector<Placement> primaries;
  for (int e = 0; e < n_shapes; ++e) {
    const ShapeSpec& shape = demo.scene.shapes[e];
    const int i = std::min(kGrid - 1, static_cast<int>(shape.cy * kGrid / height));
    const int j = std::min(kGrid - 1, static_cast<int>(shape.cx * kGrid / width));
    if (taken[i][j]) {
      throw std::logic_error("build_demo: two shapes landed on one grid cell");
    }
    taken[i][j] = 1;
    primaries.push_back({i, j, e});
  }
  for (const Placement& p : primaries) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n_shapes);
    w[p.e] = 1.0;
    bank.set_cell_weights(p.i, p.j, w);
    const int cls = demo.scene.shapes[p.e].class_id;
    scores.at(p.i, p.j, cls) = 0.9 - 0.01 * p.e;
    // A lower-scored duplicate activation on a free neighboring cell; Matrix
    // NMS decays it below the primary but above the final threshold.
    const int di[] = {0, 0, 1, -1};
    const int dj[] = {1, -1, 0, 0};
    for (int t = 0; t < 4; ++t) {
      const int ni = p.i + di[t];
      const int nj = p.j + dj[t];
      if (ni < 0 || ni >= kGrid || nj < 0 || nj >= kGrid || taken[ni][nj]) {
        continue;
      }
      taken[ni][nj] = 1;
      bank.set_cell_weights(ni, nj, w);
      scores.at(ni, nj, cls) = 0.5 - 0.01 * p.e;
      break;
    }
  }

  demo.kernels.push_back(std::move(bank));
  demo.category_scores.push_back(std::move(scores));
  return demo;
}

}  // namespace soloseg
