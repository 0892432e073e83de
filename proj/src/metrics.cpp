#include "soloseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace soloseg {

namespace {

void check_matte_set(const MatteSet& set, const char* what) {
  for (const SoftMask& m : set.mattes) {
    if (m.height() != set.height || m.width() != set.width) {
      throw std::invalid_argument(std::string(what) + ": matte shape differs from set shape");
    }
  }
  if (set.class_ids && set.class_ids->size() != set.mattes.size()) {
    throw std::invalid_argument(std::string(what) + ": class_ids length differs from mattes");
  }
}

double error_against_zero(const SoftMask& m, ErrorKind kind) {
  double sum = 0.0;
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      const double v = m(r, c);
      sum += kind == ErrorKind::Mse ? v * v : std::abs(v);
    }
  }
  if (kind == ErrorKind::Mse) {
    const double n = static_cast<double>(m.height()) * m.width();
    return n == 0.0 ? 0.0 : sum / n;
  }
  return sum;
}

}  // namespace

double matte_pair_error(const SoftMask& a, const SoftMask& b, ErrorKind kind) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw std::invalid_argument("matte_pair_error: shapes differ");
  }
  double sum = 0.0;
  for (int r = 0; r < a.height(); ++r) {
    for (int c = 0; c < a.width(); ++c) {
      const double d = a(r, c) - b(r, c);
      sum += kind == ErrorKind::Mse ? d * d : std::abs(d);
    }
  }
  if (kind == ErrorKind::Mse) {
    const double n = static_cast<double>(a.height()) * a.width();
    return n == 0.0 ? 0.0 : sum / n;
  }
  return sum;
}

double sofi_error(const MatteSet& predictions, const MatteSet& ground_truths, ErrorKind kind,
                  bool strict_class) {
  check_matte_set(predictions, "sofi_error");
  check_matte_set(ground_truths, "sofi_error");
  if (strict_class && (!predictions.class_ids || !ground_truths.class_ids)) {
    throw std::invalid_argument("sofi_error: strict_class requires class_ids on both sets");
  }
  const std::size_t np = predictions.mattes.size();
  const std::size_t ng = ground_truths.mattes.size();
  if (np == 0 && ng == 0) {
    return 0.0;
  }
  if (np > 0 && ng > 0 && (predictions.height != ground_truths.height ||
                           predictions.width != ground_truths.width)) {
    throw std::invalid_argument("sofi_error: prediction and ground-truth shapes differ");
  }

  const auto candidate_ok = [&](std::size_t g, std::size_t p) {
    if (!strict_class) {
      return true;
    }
    return (*ground_truths.class_ids)[g] == (*predictions.class_ids)[p];
  };

  double gt_term = 0.0;
  if (ng > 0) {
    for (std::size_t g = 0; g < ng; ++g) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t p = 0; p < np; ++p) {
        if (candidate_ok(g, p)) {
          best = std::min(best, matte_pair_error(ground_truths.mattes[g],
                                                 predictions.mattes[p], kind));
        }
      }
      if (!std::isfinite(best)) {
        best = error_against_zero(ground_truths.mattes[g], kind);
      }
      gt_term += best;
    }
    gt_term /= static_cast<double>(ng);
  }

  double pred_term = 0.0;
  if (np > 0) {
    for (std::size_t p = 0; p < np; ++p) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t g = 0; g < ng; ++g) {
        if (candidate_ok(g, p)) {
          best = std::min(best, matte_pair_error(ground_truths.mattes[g],
                                                 predictions.mattes[p], kind));
        }
      }
      if (!std::isfinite(best)) {
        best = error_against_zero(predictions.mattes[p], kind);
      }
      pred_term += best;
    }
    pred_term /= static_cast<double>(np);
  }

  return gt_term + pred_term;
}

double matting_error(const SoftMask& prediction, const SoftMask& ground_truth,
                     const BinaryMask* region, ErrorKind kind) {
  if (prediction.height() != ground_truth.height() ||
      prediction.width() != ground_truth.width()) {
    throw std::invalid_argument("matting_error: shapes differ");
  }
  if (region != nullptr &&
      (region->height() != prediction.height() || region->width() != prediction.width())) {
    throw std::invalid_argument("matting_error: region shape differs");
  }
  if (region != nullptr && !region->any()) {
    throw std::invalid_argument("matting_error: region is empty");
  }
  double sum = 0.0;
  std::int64_t count = 0;
  for (int r = 0; r < prediction.height(); ++r) {
    for (int c = 0; c < prediction.width(); ++c) {
      if (region != nullptr && !region->test(r, c)) {
        continue;
      }
      const double d = prediction(r, c) - ground_truth(r, c);
      sum += kind == ErrorKind::Mse ? d * d : std::abs(d);
      ++count;
    }
  }
  if (kind == ErrorKind::Mse) {
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
  }
  return sum;
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> out;
  out.reserve(10);
  for (int k = 0; k < 10; ++k) {
    out.push_back(0.5 + 0.05 * k);
  }
  return out;
}

namespace {

struct PredRef {
  double score = 0.0;
  int image = 0;
  int index = 0;  // position within the image's instance list
};

double box_iou(const BBox& a, const BBox& b) {
  const double ix = std::max(0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double iy = std::max(0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = ix * iy;
  const double uni = static_cast<double>(a.width()) * a.height() +
                     static_cast<double>(b.width()) * b.height() - inter;
  return uni <= 0.0 ? 0.0 : inter / uni;
}

double match_iou(const Instance& pred, const Instance& gt, MatchKind kind) {
  if (kind == MatchKind::Box) {
    return box_iou(mask_to_bbox(pred.mask), mask_to_bbox(gt.mask));
  }
  return iou(pred.mask, gt.mask);
}

// AP for one class at one IoU threshold.
double class_ap(const std::vector<InstanceSet>& predictions,
                const std::vector<InstanceSet>& ground_truths, int cls, double threshold,
                int recall_points, MatchKind match_kind) {
  std::int64_t n_gt = 0;
  for (const InstanceSet& set : ground_truths) {
    for (const Instance& inst : set.instances) {
      if (inst.class_id == cls) {
        ++n_gt;
      }
    }
  }
  if (n_gt == 0) {
    return 0.0;
  }

  std::vector<PredRef> refs;
  for (int img = 0; img < static_cast<int>(predictions.size()); ++img) {
    const InstanceSet& set = predictions[img];
    for (int idx = 0; idx < static_cast<int>(set.instances.size()); ++idx) {
      if (set.instances[idx].class_id == cls) {
        refs.push_back(PredRef{set.instances[idx].score, img, idx});
      }
    }
  }
  std::sort(refs.begin(), refs.end(), [](const PredRef& a, const PredRef& b) {
    if (a.score != b.score) {
      return a.score > b.score;
    }
    if (a.image != b.image) {
      return a.image < b.image;
    }
    return a.index < b.index;
  });

  std::vector<std::vector<char>> gt_used(ground_truths.size());
  for (std::size_t img = 0; img < ground_truths.size(); ++img) {
    gt_used[img].assign(ground_truths[img].instances.size(), 0);
  }

  std::vector<char> is_tp(refs.size(), 0);
  for (std::size_t k = 0; k < refs.size(); ++k) {
    const PredRef& ref = refs[k];
    if (ref.image >= static_cast<int>(ground_truths.size())) {
      continue;  // no ground truth for this image: FP
    }
    const InstanceSet& gset = ground_truths[ref.image];
    const Instance& pred = predictions[ref.image].instances[ref.index];
    double best_iou = 0.0;
    int best_g = -1;
    for (int g = 0; g < static_cast<int>(gset.instances.size()); ++g) {
      if (gset.instances[g].class_id != cls || gt_used[ref.image][g]) {
        continue;
      }
      const double v = match_iou(pred, gset.instances[g], match_kind);
      if (v > best_iou) {
        best_iou = v;
        best_g = g;
      }
    }
    if (best_g >= 0 && best_iou >= threshold) {
      gt_used[ref.image][best_g] = 1;
      is_tp[k] = 1;
    }
  }

  // Precision envelope over the cumulative curve, sampled at evenly spaced
  // recall values.
  std::vector<double> precision(refs.size());
  std::vector<double> recall(refs.size());
  std::int64_t tp = 0;
  for (std::size_t k = 0; k < refs.size(); ++k) {
    tp += is_tp[k];
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / static_cast<double>(n_gt);
  }
  for (int k = static_cast<int>(refs.size()) - 2; k >= 0; --k) {
    precision[k] = std::max(precision[k], precision[k + 1]);
  }

  double total = 0.0;
  for (int s = 0; s < recall_points; ++s) {
    const double r = recall_points == 1 ? 0.0
                                        : static_cast<double>(s) / (recall_points - 1);
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) {
      total += precision[static_cast<std::size_t>(it - recall.begin())];
    }
  }
  return total / static_cast<double>(recall_points);
}

}  // namespace

ApResult average_precision(const std::vector<InstanceSet>& predictions,
                           const std::vector<InstanceSet>& ground_truths,
                           const ApConfig& config) {
  if (predictions.size() != ground_truths.size()) {
    throw std::invalid_argument("average_precision: prediction and ground-truth image counts differ");
  }
  if (config.iou_thresholds.empty() || config.recall_points < 1) {
    throw std::invalid_argument("average_precision: invalid config");
  }
  for (std::size_t k = 0; k < config.iou_thresholds.size(); ++k) {
    const double t = config.iou_thresholds[k];
    if (!(t > 0.0 && t < 1.0) || (k > 0 && t <= config.iou_thresholds[k - 1])) {
      throw std::invalid_argument(
          "average_precision: iou_thresholds must be strictly increasing within (0,1)");
    }
  }
  std::set<int> classes;
  for (const InstanceSet& set : ground_truths) {
    for (const Instance& inst : set.instances) {
      classes.insert(inst.class_id);
    }
  }

  ApResult result;
  result.per_threshold.reserve(config.iou_thresholds.size());
  for (const double t : config.iou_thresholds) {
    double sum = 0.0;
    for (const int cls : classes) {
      sum += class_ap(predictions, ground_truths, cls, t, config.recall_points,
                      config.match_kind);
    }
    result.per_threshold.push_back(classes.empty() ? 0.0
                                                   : sum / static_cast<double>(classes.size()));
  }
  double total = 0.0;
  for (const double v : result.per_threshold) {
    total += v;
  }
  result.mean_ap = total / static_cast<double>(result.per_threshold.size());
  return result;
}

}  // namespace soloseg
