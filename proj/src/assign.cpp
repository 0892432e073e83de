#include "soloseg/assign.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>

namespace soloseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

GridSpec GridSpec::coco_default() {
  GridSpec spec;
  spec.levels = {
      {40, 8, {0.0, 96.0}},    {36, 8, {48.0, 192.0}},   {24, 16, {96.0, 384.0}},
      {16, 32, {192.0, 768.0}}, {12, 32, {384.0, kInf}},
  };
  return spec;
}

GridSpec GridSpec::coco_denser() {
  GridSpec spec = coco_default();
  const int grids[] = {80, 64, 32, 24, 12};
  for (std::size_t l = 0; l < spec.levels.size(); ++l) {
    spec.levels[l].grid_size = grids[l];
  }
  return spec;
}

GridSpec GridSpec::scaled_default(int image_height, int image_width) {
  if (image_height < 1 || image_width < 1) {
    throw std::invalid_argument("GridSpec::scaled_default: extents must be positive");
  }
  GridSpec spec = coco_default();
  const double f = static_cast<double>(std::min(image_height, image_width)) / 800.0;
  for (GridLevel& level : spec.levels) {
    level.stride = std::max(1, static_cast<int>(std::lround(level.stride * f)));
    level.scale_range.low *= f;
    if (std::isfinite(level.scale_range.high)) {
      level.scale_range.high *= f;
    }
  }
  return spec;
}

std::pair<double, double> mass_center(const BinaryMask& mask) {
  double sum_x = 0.0;
  double sum_y = 0.0;
  std::int64_t count = 0;
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (mask.test(r, c)) {
        sum_x += c + 0.5;
        sum_y += r + 0.5;
        ++count;
      }
    }
  }
  if (count == 0) {
    throw std::invalid_argument("mass_center: empty mask");
  }
  return {sum_x / static_cast<double>(count), sum_y / static_cast<double>(count)};
}

BinaryMask downsample_max(const BinaryMask& mask, int stride) {
  if (stride < 1) {
    throw std::invalid_argument("downsample_max: stride must be positive");
  }
  const int out_h = (mask.height() + stride - 1) / stride;
  const int out_w = (mask.width() + stride - 1) / stride;
  BinaryMask out(out_h, out_w);
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (mask.test(r, c)) {
        out.set(r / stride, c / stride);
      }
    }
  }
  return out;
}

AssignmentResult assign_labels(const std::vector<GroundTruth>& gts, const GridSpec& spec,
                               double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("assign_labels: epsilon must be in (0,1]");
  }
  for (const GridLevel& gl : spec.levels) {
    if (gl.grid_size < 1 || gl.stride < 1) {
      throw std::invalid_argument("assign_labels: grid_size and stride must be positive");
    }
  }
  AssignmentResult result;
  if (gts.empty()) {
    return result;
  }
  const int image_h = gts[0].mask.height();
  const int image_w = gts[0].mask.width();
  for (const GroundTruth& gt : gts) {
    if (gt.mask.height() != image_h || gt.mask.width() != image_w) {
      throw std::invalid_argument("assign_labels: ground-truth mask shapes differ");
    }
  }

  // Process largest first so that, where claims collide, the smallest
  // instance ends up owning the cell.
  std::vector<int> order(gts.size());
  for (std::size_t i = 0; i < gts.size(); ++i) {
    order[i] = static_cast<int>(i);
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const std::int64_t aa = gts[a].mask.area();
    const std::int64_t ab = gts[b].mask.area();
    if (aa != ab) {
      return aa > ab;
    }
    return a < b;
  });

  std::map<std::tuple<int, int, int>, PositiveSample> claims;
  for (const int gt_index : order) {
    const GroundTruth& gt = gts[gt_index];
    if (!gt.mask.any()) {
      throw std::invalid_argument("assign_labels: ground-truth mask " +
                                  std::to_string(gt_index) + " is empty");
    }
    const BBox box = mask_to_bbox(gt.mask);
    const double scale =
        std::sqrt(static_cast<double>(box.width()) * static_cast<double>(box.height()));
    const auto [cx, cy] = mass_center(gt.mask);
    const double half_w = 0.5 * epsilon * box.width();
    const double half_h = 0.5 * epsilon * box.height();

    for (int level = 0; level < static_cast<int>(spec.levels.size()); ++level) {
      const GridLevel& gl = spec.levels[level];
      if (!gl.scale_range.contains(scale)) {
        continue;
      }
      const int s = gl.grid_size;
      const BinaryMask target = downsample_max(gt.mask, gl.stride);
      for (int i = 0; i < s; ++i) {
        const double cell_y0 = static_cast<double>(i) * image_h / s;
        const double cell_y1 = static_cast<double>(i + 1) * image_h / s;
        const double oy = std::min(cell_y1, cy + half_h) - std::max(cell_y0, cy - half_h);
        if (oy <= 0.0) {
          continue;
        }
        for (int j = 0; j < s; ++j) {
          const double cell_x0 = static_cast<double>(j) * image_w / s;
          const double cell_x1 = static_cast<double>(j + 1) * image_w / s;
          const double ox = std::min(cell_x1, cx + half_w) - std::max(cell_x0, cx - half_w);
          if (ox <= 0.0) {
            continue;
          }
          PositiveSample sample;
          sample.cell = GridCell::make(level, i, j, s);
          sample.gt_index = gt_index;
          sample.category_target = gt.class_id;
          sample.mask_target = target;
          claims.insert_or_assign({level, i, j}, std::move(sample));
        }
      }
    }
  }

  result.positives.reserve(claims.size());
  for (auto& [key, sample] : claims) {
    result.positives.push_back(std::move(sample));
  }
  return result;
}

}  // namespace soloseg
