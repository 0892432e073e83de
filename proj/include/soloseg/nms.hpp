#pragma once

#include <vector>

#include "soloseg/mask.hpp"

namespace soloseg {

// Score penalty f(iou) used by the decaying suppressors.
struct DecayKind {
  enum class Fn { Linear, Gaussian };

  Fn fn = Fn::Gaussian;
  double sigma = 0.5;

  static DecayKind linear() { return DecayKind{Fn::Linear, 0.0}; }
  static DecayKind gaussian(double sigma = 0.5);

  double penalty(double iou_value) const;
};

// Intermediate Matrix NMS state for one class group.
struct ScoredDecay {
  int class_id = 0;
  std::vector<int> sorted_indices;  // into the input set, scores non-increasing
  Eigen::MatrixXd ious;             // strict upper triangle
  Eigen::VectorXd ious_cmax;        // column max over rows above the diagonal
  Eigen::VectorXd decay;            // in (0, 1], decay[0] == 1
};

// One ScoredDecay per class present in the input, ordered by class_id.
std::vector<ScoredDecay> matrix_nms_states(const InstanceSet& input, DecayKind decay);

// All four suppressors partition by class, sort each class group by
// descending score (ties broken by original position), run on the group,
// then merge. Output instances are ordered by descending pre-NMS score,
// ties by original position; callers re-sort by final score if they need to.

// Greedy: keep a prediction iff its IoU with every higher-scored kept
// prediction of the same class is <= iou_threshold. Scores unchanged.
InstanceSet hard_nms(const InstanceSet& input, double iou_threshold);

// Sequentially pop the highest-scoring remaining prediction, multiply every
// remaining same-class score by f(iou with popped), discard anything that
// falls below score_floor.
InstanceSet soft_nms(const InstanceSet& input, DecayKind decay, double score_floor = 0.001);

// One-shot variant of hard NMS: suppress iff max IoU with ANY higher-scored
// prediction (kept or not) exceeds iou_threshold. Over-suppresses chains.
InstanceSet fast_nms(const InstanceSet& input, double iou_threshold);

// Matrix NMS: nothing is removed, every score is multiplied by
//   decay_j = min_{s_i > s_j} f(iou_ij) / f(max_{s_k > s_i} iou_ki)
// computed in one shot from the pairwise IoU matrix. Callers threshold the
// rescored set afterwards.
InstanceSet matrix_nms(const InstanceSet& input, DecayKind decay);

// Literal evaluation of the decay definition with scalar loops, kept as an
// independent reference for testing. Same output contract as matrix_nms.
InstanceSet matrix_nms_oracle(const InstanceSet& input, DecayKind decay);

// Kernels over a precomputed strict-upper-triangular IoU matrix whose rows
// and columns follow descending score order. These are what the benchmark
// times, so IoU computation stays out of the measured region.

std::vector<int> hard_nms_keep(const Eigen::MatrixXd& iou_upper, double iou_threshold);

std::vector<int> fast_nms_keep(const Eigen::MatrixXd& iou_upper, double iou_threshold);

// Returns (index, final score) pairs in pop order.
std::vector<std::pair<int, double>> soft_nms_rescore(const Eigen::MatrixXd& iou_upper,
                                                     const Eigen::VectorXd& scores,
                                                     DecayKind decay, double score_floor);

// Per-prediction decay factors, decay[0] == 1 and every entry in (0, 1].
Eigen::VectorXd matrix_nms_decay(const Eigen::MatrixXd& iou_upper, DecayKind decay);

}  // namespace soloseg
