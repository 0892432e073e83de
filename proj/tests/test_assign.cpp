#include <doctest.h>

#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "helpers.hpp"
#include "soloseg/assign.hpp"
#include "soloseg/synthetic.hpp"

using namespace soloseg;
using testutil::random_mask;
using testutil::rect_mask;

namespace {

// Positivity predicate straight from the definition: the cell's image region
// must overlap the shrunk center box with positive area on both axes.
bool cell_is_positive(const BinaryMask& mask, double epsilon, int grid_size, int i, int j) {
  const BBox box = mask_to_bbox(mask);
  const auto [cx, cy] = mass_center(mask);
  const double half_w = 0.5 * epsilon * box.width();
  const double half_h = 0.5 * epsilon * box.height();
  const double cell_y0 = static_cast<double>(i) * mask.height() / grid_size;
  const double cell_y1 = static_cast<double>(i + 1) * mask.height() / grid_size;
  const double cell_x0 = static_cast<double>(j) * mask.width() / grid_size;
  const double cell_x1 = static_cast<double>(j + 1) * mask.width() / grid_size;
  const double oy = std::min(cell_y1, cy + half_h) - std::max(cell_y0, cy - half_h);
  const double ox = std::min(cell_x1, cx + half_w) - std::max(cell_x0, cx - half_w);
  return oy > 0.0 && ox > 0.0;
}

double gt_scale(const BinaryMask& mask) {
  const BBox box = mask_to_bbox(mask);
  return std::sqrt(static_cast<double>(box.width()) * static_cast<double>(box.height()));
}

}  // namespace

TEST_CASE("mass_center averages set-pixel centers") {
  BinaryMask single(8, 8);
  single.set(3, 5);
  const auto [cx, cy] = mass_center(single);
  CHECK(cx == 5.5);
  CHECK(cy == 3.5);

  const auto [bx, by] = mass_center(rect_mask(8, 8, 2, 4, 4, 6));
  CHECK(bx == 5.0);
  CHECK(by == 3.0);

  CHECK_THROWS_AS(mass_center(BinaryMask(4, 4)), std::invalid_argument);
}

TEST_CASE("downsample_max ORs each stride block") {
  BinaryMask m(5, 5);
  m.set(4, 4);
  m.set(1, 2);
  const BinaryMask down = downsample_max(m, 2);
  REQUIRE(down.height() == 3);  // ceil(5/2)
  REQUIRE(down.width() == 3);
  CHECK(down.test(2, 2));
  CHECK(down.test(0, 1));
  CHECK(down.area() == 2);

  CHECK_THROWS_AS(downsample_max(m, 0), std::invalid_argument);

  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const int h = rng.uniform_int(1, 20);
    const int w = rng.uniform_int(1, 20);
    const int stride = rng.uniform_int(1, 5);
    const BinaryMask mask = random_mask(rng, h, w, 0.2);
    const BinaryMask out = downsample_max(mask, stride);
    REQUIRE(out.height() == (h + stride - 1) / stride);
    REQUIRE(out.width() == (w + stride - 1) / stride);
    for (int r = 0; r < out.height(); ++r)
      for (int c = 0; c < out.width(); ++c) {
        bool any = false;
        for (int rr = r * stride; rr < std::min(h, (r + 1) * stride); ++rr)
          for (int cc = c * stride; cc < std::min(w, (c + 1) * stride); ++cc)
            any = any || mask.test(rr, cc);
        CHECK(out.test(r, c) == any);
      }
  }
}

TEST_CASE("grid spec presets") {
  const GridSpec def = GridSpec::coco_default();
  REQUIRE(def.levels.size() == 5);
  const int grids[] = {40, 36, 24, 16, 12};
  const int strides[] = {8, 8, 16, 32, 32};
  const double lows[] = {0, 48, 96, 192, 384};
  const double highs[] = {96, 192, 384, 768, 0};
  for (int l = 0; l < 5; ++l) {
    CHECK(def.levels[l].grid_size == grids[l]);
    CHECK(def.levels[l].stride == strides[l]);
    CHECK(def.levels[l].scale_range.low == lows[l]);
    if (l < 4) {
      CHECK(def.levels[l].scale_range.high == highs[l]);
    } else {
      CHECK(std::isinf(def.levels[l].scale_range.high));
    }
  }

  const GridSpec denser = GridSpec::coco_denser();
  const int dense_grids[] = {80, 64, 32, 24, 12};
  for (int l = 0; l < 5; ++l) {
    CHECK(denser.levels[l].grid_size == dense_grids[l]);
    CHECK(denser.levels[l].stride == def.levels[l].stride);
  }

  // At the 800px reference the scaled preset is the default itself.
  const GridSpec unit = GridSpec::scaled_default(800, 800);
  for (int l = 0; l < 5; ++l) {
    CHECK(unit.levels[l].stride == def.levels[l].stride);
    CHECK(unit.levels[l].scale_range.low == def.levels[l].scale_range.low);
  }

  const GridSpec half = GridSpec::scaled_default(400, 2000);  // min side rules
  const int half_strides[] = {4, 4, 8, 16, 16};
  for (int l = 0; l < 5; ++l) {
    CHECK(half.levels[l].stride == half_strides[l]);
    CHECK(half.levels[l].scale_range.low == def.levels[l].scale_range.low * 0.5);
    if (l < 4) CHECK(half.levels[l].scale_range.high == def.levels[l].scale_range.high * 0.5);
  }
  CHECK(std::isinf(half.levels[4].scale_range.high));

  // Strides never collapse below one pixel.
  for (const GridLevel& level : GridSpec::scaled_default(8, 8).levels) CHECK(level.stride == 1);

  CHECK_THROWS_AS(GridSpec::scaled_default(0, 10), std::invalid_argument);

  CHECK(ScaleRange{10.0, 20.0}.contains(10.0));
  CHECK_FALSE(ScaleRange{10.0, 20.0}.contains(20.0));
}

TEST_CASE("centered square claims the four central cells") {
  // 16x16 square centered on a 64x64 image, one 4x4 level.
  const GroundTruth gt{rect_mask(64, 64, 24, 24, 40, 40), 7};
  GridSpec spec;
  spec.levels = {{4, 8, {0.0, 100.0}}};
  const AssignmentResult result = assign_labels({gt}, spec, 0.2);

  REQUIRE(result.positives.size() == 4);
  int expected_idx = 0;
  for (int i = 1; i <= 2; ++i)
    for (int j = 1; j <= 2; ++j) {
      const PositiveSample& sample = result.positives[expected_idx++];
      CHECK(sample.cell == GridCell::make(0, i, j, 4));
      CHECK(sample.gt_index == 0);
      CHECK(sample.category_target == 7);
      REQUIRE(sample.mask_target.height() == 8);
      REQUIRE(sample.mask_target.width() == 8);
      CHECK(sample.mask_target == rect_mask(8, 8, 3, 3, 5, 5));
    }
}

TEST_CASE("assignment matches the per-cell scan oracle") {
  Rng rng(71);
  GridSpec spec;
  spec.levels = {{8, 8, {0.0, 1e9}}};
  for (int trial = 0; trial < 12; ++trial) {
    // One random non-empty blob per trial; a single instance avoids claim
    // contests so the oracle is a pure per-cell predicate.
    const int r0 = rng.uniform_int(0, 40);
    const int c0 = rng.uniform_int(0, 40);
    const int h = rng.uniform_int(2, 23);
    const int w = rng.uniform_int(2, 23);
    const GroundTruth gt{rect_mask(64, 64, r0, c0, r0 + h, c0 + w), 1};
    const double epsilon = rng.uniform(0.05, 1.0);

    const AssignmentResult result = assign_labels({gt}, spec, epsilon);
    std::map<std::pair<int, int>, bool> got;
    for (const PositiveSample& sample : result.positives)
      got[{sample.cell.i, sample.cell.j}] = true;

    int expected = 0;
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) {
        const bool positive = cell_is_positive(gt.mask, epsilon, 8, i, j);
        expected += positive;
        CHECK(got.count({i, j}) == static_cast<std::size_t>(positive));
      }
    CHECK(result.positives.size() == static_cast<std::size_t>(expected));
    CHECK(expected >= 1);  // the center box always has positive area
  }
}

TEST_CASE("scale ranges are half-open and can overlap") {
  SUBCASE("a scale exactly at a boundary routes to the inclusive side") {
    const GroundTruth gt{rect_mask(64, 64, 10, 10, 50, 50), 0};  // scale 40
    REQUIRE(gt_scale(gt.mask) == 40.0);
    GridSpec spec;
    spec.levels = {{4, 8, {0.0, 40.0}}, {4, 8, {40.0, 1e9}}};
    const AssignmentResult result = assign_labels({gt}, spec);
    REQUIRE_FALSE(result.positives.empty());
    for (const PositiveSample& sample : result.positives) CHECK(sample.cell.level == 1);
  }
  SUBCASE("overlapping ranges assign on every matching level") {
    const GroundTruth gt{rect_mask(64, 64, 26, 26, 38, 38), 0};  // scale 12
    GridSpec spec;
    spec.levels = {{8, 8, {0.0, 20.0}}, {4, 16, {10.0, 1e9}}};
    const AssignmentResult result = assign_labels({gt}, spec);
    bool level0 = false, level1 = false;
    for (const PositiveSample& sample : result.positives) {
      level0 = level0 || sample.cell.level == 0;
      level1 = level1 || sample.cell.level == 1;
      CHECK(sample.mask_target.height() == (sample.cell.level == 0 ? 8 : 4));
    }
    CHECK(level0);
    CHECK(level1);
  }
  SUBCASE("out-of-range instances produce nothing") {
    const GroundTruth gt{rect_mask(64, 64, 26, 26, 38, 38), 0};  // scale 12
    GridSpec spec;
    spec.levels = {{8, 8, {20.0, 1e9}}};
    CHECK(assign_labels({gt}, spec).positives.empty());
  }
}

TEST_CASE("contested cells go to the smaller instance") {
  // Both center boxes touch cell (3, 3) of an 8x8 grid on 64x64; only the
  // big instance reaches the neighboring cells.
  const GroundTruth big{rect_mask(64, 64, 8, 8, 44, 44), 1};     // 36x36
  const GroundTruth small{rect_mask(64, 64, 24, 24, 31, 31), 2};  // 7x7
  GridSpec spec;
  spec.levels = {{8, 8, {0.0, 1e9}}};
  const AssignmentResult result = assign_labels({big, small}, spec, 0.2);

  REQUIRE(result.positives.size() == 4);
  std::map<std::pair<int, int>, int> owner;
  for (const PositiveSample& sample : result.positives)
    owner[{sample.cell.i, sample.cell.j}] = sample.gt_index;
  CHECK(owner.at({2, 2}) == 0);
  CHECK(owner.at({2, 3}) == 0);
  CHECK(owner.at({3, 2}) == 0);
  CHECK(owner.at({3, 3}) == 1);

  for (const PositiveSample& sample : result.positives) {
    const GroundTruth& gt = sample.gt_index == 0 ? big : small;
    CHECK(sample.category_target == gt.class_id);
    CHECK(sample.mask_target == downsample_max(gt.mask, 8));
  }

  // Swapping input order changes indices but not ownership.
  const AssignmentResult swapped = assign_labels({small, big}, spec, 0.2);
  REQUIRE(swapped.positives.size() == 4);
  for (const PositiveSample& sample : swapped.positives) {
    const int expected = sample.cell.i == 3 && sample.cell.j == 3 ? 0 : 1;
    CHECK(sample.gt_index == expected);
  }
}

TEST_CASE("epsilon one spans the whole box, a point mask stays local") {
  GridSpec spec;
  spec.levels = {{4, 16, {0.0, 1e9}}};
  const GroundTruth full{rect_mask(64, 64, 0, 0, 64, 64), 0};
  const AssignmentResult everything = assign_labels({full}, spec, 1.0);
  CHECK(everything.positives.size() == 16);
  for (const PositiveSample& sample : everything.positives)
    CHECK(sample.mask_target == rect_mask(4, 4, 0, 0, 4, 4));

  BinaryMask point(64, 64);
  point.set(33, 17);
  GridSpec fine;
  fine.levels = {{8, 8, {0.0, 1e9}}};
  const AssignmentResult single = assign_labels({GroundTruth{point, 3}}, fine, 0.2);
  REQUIRE(single.positives.size() == 1);
  CHECK(single.positives[0].cell == GridCell::make(0, 4, 2, 8));
  CHECK(single.positives[0].mask_target.test(4, 2));
  CHECK(single.positives[0].mask_target.area() == 1);
}

TEST_CASE("positives come back ordered and unique by (level, i, j)") {
  Rng rng(83);
  std::vector<GroundTruth> gts;
  for (int k = 0; k < 4; ++k) {
    const int r0 = rng.uniform_int(0, 30);
    const int c0 = rng.uniform_int(0, 30);
    gts.push_back({rect_mask(64, 64, r0, c0, r0 + rng.uniform_int(4, 30),
                             c0 + rng.uniform_int(4, 30)),
                   k});
  }
  GridSpec spec;
  spec.levels = {{16, 4, {0.0, 24.0}}, {8, 8, {12.0, 1e9}}};
  const AssignmentResult result = assign_labels(gts, spec, 0.3);
  std::tuple<int, int, int> last{-1, -1, -1};
  for (const PositiveSample& sample : result.positives) {
    const std::tuple<int, int, int> key{sample.cell.level, sample.cell.i, sample.cell.j};
    CHECK(key > last);
    last = key;
    CHECK(sample.cell.k == sample.cell.i * spec.levels[sample.cell.level].grid_size +
                               sample.cell.j);
  }
}

TEST_CASE("generated assignment scenes give every instance a positive") {
  for (const std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const std::vector<GroundTruth> gts = generate_assignment_scene(seed, 1 + seed % 16);
    REQUIRE_FALSE(gts.empty());
    const int extent = assignment_scene_extent();
    for (const GroundTruth& gt : gts) {
      REQUIRE(gt.mask.height() == extent);
      REQUIRE(gt.mask.width() == extent);
      REQUIRE(gt.mask.any());
    }
    const GridSpec spec = assignment_grid_spec();
    const AssignmentResult result = assign_labels(gts, spec, 0.2);

    std::vector<int> hits(gts.size(), 0);
    for (const PositiveSample& sample : result.positives) {
      ++hits[sample.gt_index];
      CHECK(cell_is_positive(gts[sample.gt_index].mask, 0.2,
                             spec.levels[sample.cell.level].grid_size, sample.cell.i,
                             sample.cell.j));
    }
    for (std::size_t g = 0; g < gts.size(); ++g) {
      bool in_range = false;
      for (const GridLevel& level : spec.levels)
        in_range = in_range || level.scale_range.contains(gt_scale(gts[g].mask));
      if (in_range) CHECK(hits[g] >= 1);
    }
  }
}

TEST_CASE("assignment input validation") {
  const GroundTruth gt{rect_mask(16, 16, 4, 4, 12, 12), 0};
  GridSpec spec;
  spec.levels = {{4, 4, {0.0, 1e9}}};

  CHECK(assign_labels({}, spec).positives.empty());
  CHECK_THROWS_AS(assign_labels({gt}, spec, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(assign_labels({gt}, spec, 1.5), std::invalid_argument);

  GridSpec bad;
  bad.levels = {{0, 4, {0.0, 1.0}}};
  CHECK_THROWS_AS(assign_labels({gt}, bad), std::invalid_argument);

  CHECK_THROWS_AS(assign_labels({GroundTruth{BinaryMask(16, 16), 0}}, spec),
                  std::invalid_argument);
  CHECK_THROWS_AS(assign_labels({gt, GroundTruth{rect_mask(8, 8, 0, 0, 4, 4), 0}}, spec),
                  std::invalid_argument);
}
