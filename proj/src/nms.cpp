#include "soloseg/nms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace soloseg {

namespace {

struct ClassGroup {
  int class_id = 0;
  std::vector<int> order;  // original indices, descending score, stable
};

void validate_input(const InstanceSet& input, const char* what) {
  for (const Instance& inst : input.instances) {
    if (!std::isfinite(inst.score)) {
      throw std::invalid_argument(std::string(what) + ": non-finite score");
    }
    if (inst.mask.height() != input.height || inst.mask.width() != input.width) {
      throw std::invalid_argument(std::string(what) + ": instance mask shape differs from set shape");
    }
  }
}

void validate_iou_threshold(double iou_threshold, const char* what) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw std::invalid_argument(std::string(what) + ": iou_threshold must be in (0,1)");
  }
}

std::vector<ClassGroup> class_groups(const InstanceSet& input) {
  std::map<int, std::vector<int>> by_class;
  for (int i = 0; i < static_cast<int>(input.instances.size()); ++i) {
    by_class[input.instances[i].class_id].push_back(i);
  }
  std::vector<ClassGroup> groups;
  groups.reserve(by_class.size());
  for (auto& [cls, order] : by_class) {
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double sa = input.instances[a].score;
      const double sb = input.instances[b].score;
      if (sa != sb) {
        return sa > sb;
      }
      return a < b;
    });
    groups.push_back(ClassGroup{cls, std::move(order)});
  }
  return groups;
}

Eigen::MatrixXd group_iou_upper(const InstanceSet& input, const ClassGroup& group) {
  std::vector<BinaryMask> masks;
  masks.reserve(group.order.size());
  for (const int idx : group.order) {
    masks.push_back(input.instances[idx].mask);
  }
  return iou_matrix_upper(masks);
}

// Rebuilds the output set ordered by descending pre-NMS score, ties broken
// by original position; `rescored` holds (original index, final score).
InstanceSet merge_groups(const InstanceSet& input,
                         std::vector<std::pair<int, double>> rescored) {
  std::sort(rescored.begin(), rescored.end(), [&](const auto& a, const auto& b) {
    const double sa = input.instances[a.first].score;
    const double sb = input.instances[b.first].score;
    if (sa != sb) {
      return sa > sb;
    }
    return a.first < b.first;
  });
  InstanceSet out;
  out.height = input.height;
  out.width = input.width;
  out.instances.reserve(rescored.size());
  for (const auto& [idx, score] : rescored) {
    Instance inst = input.instances[idx];
    inst.score = score;
    out.instances.push_back(std::move(inst));
  }
  return out;
}

}  // namespace

DecayKind DecayKind::gaussian(double sigma) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("DecayKind::gaussian: sigma must be positive");
  }
  return DecayKind{Fn::Gaussian, sigma};
}

double DecayKind::penalty(double iou_value) const {
  if (fn == Fn::Linear) {
    return 1.0 - iou_value;
  }
  return std::exp(-iou_value * iou_value / sigma);
}

std::vector<int> hard_nms_keep(const Eigen::MatrixXd& iou_upper, double iou_threshold) {
  const int n = static_cast<int>(iou_upper.rows());
  std::vector<int> kept;
  for (int j = 0; j < n; ++j) {
    bool keep = true;
    for (const int i : kept) {
      if (iou_upper(i, j) > iou_threshold) {
        keep = false;
        break;
      }
    }
    if (keep) {
      kept.push_back(j);
    }
  }
  return kept;
}

std::vector<int> fast_nms_keep(const Eigen::MatrixXd& iou_upper, double iou_threshold) {
  const int n = static_cast<int>(iou_upper.rows());
  std::vector<int> kept;
  for (int j = 0; j < n; ++j) {
    const double cmax = j > 0 ? iou_upper.col(j).head(j).maxCoeff() : 0.0;
    if (cmax <= iou_threshold) {
      kept.push_back(j);
    }
  }
  return kept;
}

std::vector<std::pair<int, double>> soft_nms_rescore(const Eigen::MatrixXd& iou_upper,
                                                     const Eigen::VectorXd& scores,
                                                     DecayKind decay, double score_floor) {
  const int n = static_cast<int>(scores.size());
  Eigen::VectorXd current = scores;
  std::vector<char> active(n, 1);
  std::vector<std::pair<int, double>> out;
  out.reserve(n);
  for (int step = 0; step < n; ++step) {
    int pop = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (active[j] && current[j] > best) {
        best = current[j];
        pop = j;
      }
    }
    if (pop < 0) {
      break;
    }
    out.emplace_back(pop, current[pop]);
    active[pop] = 0;
    for (int j = 0; j < n; ++j) {
      if (!active[j]) {
        continue;
      }
      const double v = pop < j ? iou_upper(pop, j) : iou_upper(j, pop);
      current[j] *= decay.penalty(v);
      if (current[j] < score_floor) {
        active[j] = 0;
      }
    }
  }
  return out;
}

Eigen::VectorXd matrix_nms_decay(const Eigen::MatrixXd& iou_upper, DecayKind decay) {
  if (iou_upper.rows() != iou_upper.cols()) {
    throw std::invalid_argument("matrix_nms_decay: IoU matrix must be square");
  }
  const int n = static_cast<int>(iou_upper.rows());
  Eigen::VectorXd out = Eigen::VectorXd::Ones(n);
  if (n == 0) {
    return out;
  }
  Eigen::ArrayXd cmax(n);
  cmax[0] = 0.0;
  for (int j = 1; j < n; ++j) {
    cmax[j] = iou_upper.col(j).head(j).maxCoeff();
  }
  if (decay.fn == DecayKind::Fn::Gaussian) {
    // min_i f(iou_ij)/f(cmax_i) = exp(min_i (cmax_i^2 - iou_ij^2) / sigma),
    // so one exp per column suffices.
    const Eigen::ArrayXd cmax2 = cmax.square();
    for (int j = 1; j < n; ++j) {
      const double m =
          (cmax2.head(j) - iou_upper.col(j).head(j).array().square()).minCoeff();
      out[j] = std::exp(m / decay.sigma);
    }
  } else {
    for (int j = 1; j < n; ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < j; ++i) {
        const double denom = 1.0 - cmax[i];
        if (denom == 0.0) {
          // Row i is itself an exact duplicate of something stronger; it
          // contributes no suppression evidence.
          continue;
        }
        best = std::min(best, (1.0 - iou_upper(i, j)) / denom);
      }
      out[j] = std::isfinite(best) ? best : 1.0;
    }
  }
  return out;
}

std::vector<ScoredDecay> matrix_nms_states(const InstanceSet& input, DecayKind decay) {
  validate_input(input, "matrix_nms_states");
  std::vector<ScoredDecay> states;
  for (ClassGroup& group : class_groups(input)) {
    ScoredDecay state;
    state.class_id = group.class_id;
    state.ious = group_iou_upper(input, group);
    state.decay = matrix_nms_decay(state.ious, decay);
    const int n = static_cast<int>(group.order.size());
    state.ious_cmax = Eigen::VectorXd::Zero(n);
    for (int j = 1; j < n; ++j) {
      state.ious_cmax[j] = state.ious.col(j).head(j).maxCoeff();
    }
    state.sorted_indices = std::move(group.order);
    states.push_back(std::move(state));
  }
  return states;
}

InstanceSet hard_nms(const InstanceSet& input, double iou_threshold) {
  validate_input(input, "hard_nms");
  validate_iou_threshold(iou_threshold, "hard_nms");
  std::vector<std::pair<int, double>> rescored;
  for (const ClassGroup& group : class_groups(input)) {
    const Eigen::MatrixXd iou_upper = group_iou_upper(input, group);
    for (const int local : hard_nms_keep(iou_upper, iou_threshold)) {
      const int orig = group.order[local];
      rescored.emplace_back(orig, input.instances[orig].score);
    }
  }
  return merge_groups(input, std::move(rescored));
}

InstanceSet fast_nms(const InstanceSet& input, double iou_threshold) {
  validate_input(input, "fast_nms");
  validate_iou_threshold(iou_threshold, "fast_nms");
  std::vector<std::pair<int, double>> rescored;
  for (const ClassGroup& group : class_groups(input)) {
    const Eigen::MatrixXd iou_upper = group_iou_upper(input, group);
    for (const int local : fast_nms_keep(iou_upper, iou_threshold)) {
      const int orig = group.order[local];
      rescored.emplace_back(orig, input.instances[orig].score);
    }
  }
  return merge_groups(input, std::move(rescored));
}

InstanceSet soft_nms(const InstanceSet& input, DecayKind decay, double score_floor) {
  validate_input(input, "soft_nms");
  if (!(score_floor >= 0.0 && score_floor < 1.0)) {
    throw std::invalid_argument("soft_nms: score_floor must be in [0,1)");
  }
  std::vector<std::pair<int, double>> rescored;
  for (const ClassGroup& group : class_groups(input)) {
    const Eigen::MatrixXd iou_upper = group_iou_upper(input, group);
    Eigen::VectorXd scores(group.order.size());
    for (std::size_t k = 0; k < group.order.size(); ++k) {
      scores[static_cast<int>(k)] = input.instances[group.order[k]].score;
    }
    for (const auto& [local, score] : soft_nms_rescore(iou_upper, scores, decay, score_floor)) {
      rescored.emplace_back(group.order[local], score);
    }
  }
  return merge_groups(input, std::move(rescored));
}

InstanceSet matrix_nms(const InstanceSet& input, DecayKind decay) {
  std::vector<std::pair<int, double>> rescored;
  for (const ScoredDecay& state : matrix_nms_states(input, decay)) {
    for (std::size_t k = 0; k < state.sorted_indices.size(); ++k) {
      const int orig = state.sorted_indices[k];
      rescored.emplace_back(orig, input.instances[orig].score * state.decay[static_cast<int>(k)]);
    }
  }
  return merge_groups(input, std::move(rescored));
}

InstanceSet matrix_nms_oracle(const InstanceSet& input, DecayKind decay) {
  validate_input(input, "matrix_nms_oracle");
  std::vector<std::pair<int, double>> rescored;
  for (const ClassGroup& group : class_groups(input)) {
    const int n = static_cast<int>(group.order.size());
    std::vector<BinaryMask> masks;
    masks.reserve(n);
    for (const int idx : group.order) {
      masks.push_back(input.instances[idx].mask);
    }
    const Eigen::MatrixXd ious = iou_matrix(masks);
    // f(iou_{.,i}): the penalty the strongest overlapping higher-scored
    // prediction already applied to i.
    std::vector<double> f_dot(n, 1.0);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < i; ++k) {
        f_dot[i] = std::min(f_dot[i], decay.penalty(ious(k, i)));
      }
    }
    for (int j = 0; j < n; ++j) {
      double d = std::numeric_limits<double>::infinity();
      for (int i = 0; i < j; ++i) {
        if (f_dot[i] == 0.0) {
          continue;
        }
        d = std::min(d, decay.penalty(ious(i, j)) / f_dot[i]);
      }
      if (!std::isfinite(d)) {
        d = 1.0;
      }
      const int orig = group.order[j];
      rescored.emplace_back(orig, input.instances[orig].score * d);
    }
  }
  return merge_groups(input, std::move(rescored));
}

}  // namespace soloseg
