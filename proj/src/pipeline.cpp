#include "soloseg/pipeline.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>

namespace soloseg {

namespace {

void validate_config(const PipelineConfig& config) {
  const auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_unit(config.score_threshold) || !in_unit(config.mask_threshold) ||
      !in_unit(config.final_score_threshold)) {
    throw std::invalid_argument("run_inference: thresholds must be in (0,1)");
  }
  if (config.top_k < 1 || config.max_detections < 1) {
    throw std::invalid_argument("run_inference: top_k and max_detections must be >= 1");
  }
}

struct Candidate {
  int level = 0;
  int i = 0;
  int j = 0;
  int class_id = 0;
  double score = 0.0;
};

InstanceSet apply_nms(const InstanceSet& set, const NmsChoice& nms) {
  switch (nms.method) {
    case NmsChoice::Method::Hard:
      return hard_nms(set, nms.iou_threshold);
    case NmsChoice::Method::Soft:
      return soft_nms(set, nms.decay, nms.score_floor);
    case NmsChoice::Method::Fast:
      return fast_nms(set, nms.iou_threshold);
    case NmsChoice::Method::Matrix:
      return matrix_nms(set, nms.decay);
  }
  throw std::logic_error("run_inference: unknown NMS method");
}

}  // namespace

InstanceSet run_inference(const std::vector<Tensor3>& category_scores,
                          const std::vector<KernelBank>& kernels, const Tensor3& mask_feature,
                          const PipelineConfig& config, int out_height, int out_width) {
  validate_config(config);
  if (out_height < 1 || out_width < 1) {
    throw std::invalid_argument("run_inference: output extents must be positive");
  }
  if (category_scores.size() != kernels.size()) {
    throw std::invalid_argument("run_inference: category_scores and kernels level counts differ");
  }
  for (std::size_t l = 0; l < category_scores.size(); ++l) {
    const Tensor3& t = category_scores[l];
    const int s = kernels[l].grid_size();
    if (t.height() != s || t.width() != s) {
      throw std::invalid_argument("run_inference: level " + std::to_string(l) +
                                  " grid extents differ from its kernel bank");
    }
    if (kernels[l].in_channels() != mask_feature.channels()) {
      throw std::invalid_argument("run_inference: level " + std::to_string(l) +
                                  " kernel channels differ from mask feature");
    }
  }

  std::vector<Candidate> candidates;
  for (std::size_t l = 0; l < category_scores.size(); ++l) {
    const Tensor3& t = category_scores[l];
    for (int i = 0; i < t.height(); ++i) {
      for (int j = 0; j < t.width(); ++j) {
        for (int c = 0; c < t.channels(); ++c) {
          const double v = t.at(i, j, c);
          if (v > config.score_threshold) {
            candidates.push_back(Candidate{static_cast<int>(l), i, j, c, v});
          }
        }
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) {
      return a.score > b.score;
    }
    return std::tie(a.level, a.i, a.j, a.class_id) < std::tie(b.level, b.i, b.j, b.class_id);
  });
  if (static_cast<int>(candidates.size()) > config.top_k) {
    candidates.resize(config.top_k);
  }

  // One mask per distinct cell; candidates of several classes share it.
  struct CellMask {
    SoftMask soft;
    BinaryMask binary;
    double maskness_value = 0.0;
    bool empty = false;
  };
  std::map<std::tuple<int, int, int>, CellMask> cell_masks;
  InstanceSet working;
  working.height = mask_feature.height();
  working.width = mask_feature.width();
  for (const Candidate& cand : candidates) {
    const auto key = std::make_tuple(cand.level, cand.i, cand.j);
    auto it = cell_masks.find(key);
    if (it == cell_masks.end()) {
      CellMask cm;
      const GridCell cell = GridCell::make(cand.level, cand.i, cand.j,
                                           kernels[cand.level].grid_size());
      cm.soft = dynamic_conv(kernels[cand.level], cell, mask_feature);
      cm.binary = binarize(cm.soft, config.mask_threshold);
      cm.empty = !cm.binary.any();
      if (!cm.empty) {
        cm.maskness_value = maskness(cm.soft, config.mask_threshold);
      }
      it = cell_masks.emplace(key, std::move(cm)).first;
    }
    if (it->second.empty) {
      continue;
    }
    Instance inst;
    inst.score = cand.score * it->second.maskness_value;
    inst.class_id = cand.class_id;
    inst.mask = it->second.binary;
    inst.soft = it->second.soft;
    working.instances.push_back(std::move(inst));
  }

  InstanceSet suppressed = apply_nms(working, config.nms);

  // Final thresholding and cap, ordered by the post-NMS scores.
  std::vector<int> order;
  for (int k = 0; k < static_cast<int>(suppressed.instances.size()); ++k) {
    if (suppressed.instances[k].score >= config.final_score_threshold) {
      order.push_back(k);
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return suppressed.instances[a].score > suppressed.instances[b].score;
  });
  if (static_cast<int>(order.size()) > config.max_detections) {
    order.resize(config.max_detections);
  }

  InstanceSet out;
  out.height = out_height;
  out.width = out_width;
  for (const int k : order) {
    const Instance& src = suppressed.instances[k];
    Instance inst;
    inst.score = src.score;
    inst.class_id = src.class_id;
    const Grid up = resize_bilinear(src.soft->values(), out_height, out_width);
    inst.mask = mask_from_grid(up, config.mask_threshold);
    inst.soft = SoftMask::from_values(up);
    out.instances.push_back(std::move(inst));
  }
  return out;
}

}  // namespace soloseg
