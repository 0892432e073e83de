#pragma once

#include <vector>

#include "soloseg/head.hpp"
#include "soloseg/mask.hpp"
#include "soloseg/nms.hpp"
#include "soloseg/tensor.hpp"

namespace soloseg {

struct NmsChoice {
  enum class Method { Hard, Soft, Fast, Matrix };

  Method method = Method::Matrix;
  DecayKind decay = DecayKind::gaussian();  // Soft and Matrix
  double iou_threshold = 0.5;               // Hard and Fast
  double score_floor = 0.001;               // Soft
};

struct PipelineConfig {
  double score_threshold = 0.1;   // category score gate
  double mask_threshold = 0.5;    // binarization and maskness threshold
  int top_k = 500;                // candidates kept before mask assembly
  NmsChoice nms;
  double final_score_threshold = 0.05;
  int max_detections = 100;
};

// Inference over supplied per-level grid scores (probabilities in [0,1],
// S x S x C) and per-level dynamic kernels sharing one mask feature map:
// gate by score_threshold, keep top_k, assemble each candidate's mask via
// dynamic convolution, binarize at mask_threshold, drop empty masks,
// multiply scores by maskness, run the configured NMS, apply the final
// threshold and max_detections cap, then bilinearly upsample the surviving
// soft masks to out_height x out_width and binarize again.
InstanceSet run_inference(const std::vector<Tensor3>& category_scores,
                          const std::vector<KernelBank>& kernels, const Tensor3& mask_feature,
                          const PipelineConfig& config, int out_height, int out_width);

}  // namespace soloseg
