#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "soloseg/assign.hpp"
#include "soloseg/head.hpp"
#include "soloseg/mask.hpp"
#include "soloseg/tensor.hpp"

namespace soloseg {

// Deterministic uniform helpers over a fixed-width engine. The raw 64-bit
// stream is mapped to doubles by hand so values are identical across
// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // [lo, hi] inclusive
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

enum class OverlapProfile { Disjoint, Moderate, Heavy };

struct ShapeSpec {
  enum class Kind { Rect, Disk };
  Kind kind = Kind::Rect;
  int class_id = 0;
  double cx = 0.0;      // center, pixel coordinates
  double cy = 0.0;
  double half_w = 0.0;  // Disk uses these as ellipse semi-axes
  double half_h = 0.0;
};

struct SyntheticScene {
  int height = 0;
  int width = 0;
  std::vector<ShapeSpec> shapes;
  InstanceSet ground_truth;  // one instance per non-empty shape, score 1
};

BinaryMask rasterize(const ShapeSpec& shape, int height, int width);

// Deterministic scene. Disjoint places shapes in separate slots of a layout
// grid (pairwise IoU 0); Moderate scatters mid-sized shapes uniformly;
// Heavy crowds them around the image center.
SyntheticScene generate_scene(std::uint64_t seed, int height, int width, int n_shapes,
                              OverlapProfile profile, int n_classes = 3);

// Scenes for label-assignment tests: shape centers are kept far enough
// apart that no two center regions can ever claim the same grid cell of
// assignment_grid_spec(), so every ground truth keeps at least one positive.
std::vector<GroundTruth> generate_assignment_scene(std::uint64_t seed, int n_shapes);
GridSpec assignment_grid_spec();
int assignment_scene_extent();

// Everything run_inference needs for a self-consistent scene: mask features
// with one +-12 logit channel per shape, selector kernels at each shape's
// center cell, and category scores with a lower-scored duplicate activation
// next to each primary cell.
struct DemoSetup {
  SyntheticScene scene;
  std::vector<Tensor3> category_scores;  // one level, grid_size x grid_size x n_classes
  std::vector<KernelBank> kernels;
  Tensor3 mask_feature;
  int grid_size = 0;
  int n_classes = 0;
};

DemoSetup build_demo(std::uint64_t seed, int n_shapes, int height = 64, int width = 64);

}  // namespace soloseg
