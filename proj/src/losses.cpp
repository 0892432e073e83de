#include "soloseg/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace soloseg {

namespace {

void check_shapes(int ph, int pw, int qh, int qw, const char* what) {
  if (ph != qh || pw != qw) {
    throw std::invalid_argument(std::string(what) + ": prediction and target shapes differ");
  }
}

double dice_from_sums(double dot, double p2, double q2) {
  const double denom = p2 + q2;
  if (denom == 0.0) {
    return 1.0;
  }
  return 2.0 * dot / denom;
}

}  // namespace

double dice_coefficient(const SoftMask& p, const BinaryMask& q) {
  check_shapes(p.height(), p.width(), q.height(), q.width(), "dice_coefficient");
  double dot = 0.0;
  double p2 = 0.0;
  for (int r = 0; r < p.height(); ++r) {
    for (int c = 0; c < p.width(); ++c) {
      const double v = p(r, c);
      p2 += v * v;
      if (q.test(r, c)) {
        dot += v;
      }
    }
  }
  return dice_from_sums(dot, p2, static_cast<double>(q.area()));
}

double dice_coefficient_soft(const SoftMask& p, const SoftMask& q) {
  check_shapes(p.height(), p.width(), q.height(), q.width(), "dice_coefficient_soft");
  double dot = 0.0;
  double p2 = 0.0;
  double q2 = 0.0;
  for (int r = 0; r < p.height(); ++r) {
    for (int c = 0; c < p.width(); ++c) {
      const double pv = p(r, c);
      const double qv = q(r, c);
      dot += pv * qv;
      p2 += pv * pv;
      q2 += qv * qv;
    }
  }
  return dice_from_sums(dot, p2, q2);
}

LossValue dice_loss(const SoftMask& p, const BinaryMask& q, bool with_grad) {
  check_shapes(p.height(), p.width(), q.height(), q.width(), "dice_loss");
  double dot = 0.0;
  double p2 = 0.0;
  for (int r = 0; r < p.height(); ++r) {
    for (int c = 0; c < p.width(); ++c) {
      const double v = p(r, c);
      p2 += v * v;
      if (q.test(r, c)) {
        dot += v;
      }
    }
  }
  const double q2 = static_cast<double>(q.area());
  const double denom = p2 + q2;

  LossValue out;
  out.value = 1.0 - dice_from_sums(dot, p2, q2);
  if (with_grad) {
    Grid grad = Grid::Zero(p.height(), p.width());
    if (denom > 0.0) {
      // d(1 - 2*dot/denom)/dp_i = -(2*q_i*denom - 4*p_i*dot) / denom^2
      const double inv2 = 1.0 / (denom * denom);
      for (int r = 0; r < p.height(); ++r) {
        for (int c = 0; c < p.width(); ++c) {
          const double qi = q.test(r, c) ? 1.0 : 0.0;
          grad(r, c) = -(2.0 * qi * denom - 4.0 * p(r, c) * dot) * inv2;
        }
      }
    }
    out.gradient = std::move(grad);
  }
  return out;
}

LossValue weighted_bce_loss(const SoftMask& p, const BinaryMask& q, double loss_weight,
                            double positive_weight, bool with_grad, double eps) {
  check_shapes(p.height(), p.width(), q.height(), q.width(), "weighted_bce_loss");
  const double n = static_cast<double>(p.height()) * p.width();
  double sum = 0.0;
  Grid grad;
  if (with_grad) {
    grad = Grid::Zero(p.height(), p.width());
  }
  for (int r = 0; r < p.height(); ++r) {
    for (int c = 0; c < p.width(); ++c) {
      const bool fg = q.test(r, c);
      const double w = fg ? positive_weight : 1.0;
      const double raw = p(r, c);
      const double pv = std::min(std::max(raw, eps), 1.0 - eps);
      const double ce = fg ? -std::log(pv) : -std::log(1.0 - pv);
      sum += w * ce;
      if (with_grad && raw > eps && raw < 1.0 - eps) {
        const double dce = fg ? -1.0 / pv : 1.0 / (1.0 - pv);
        grad(r, c) = loss_weight * w * dce / n;
      }
    }
  }
  LossValue out;
  out.value = loss_weight * sum / n;
  if (with_grad) {
    out.gradient = std::move(grad);
  }
  return out;
}

LossValue focal_mask_loss(const SoftMask& p, const BinaryMask& q, double loss_weight,
                          double alpha, double gamma, bool with_grad, double eps) {
  check_shapes(p.height(), p.width(), q.height(), q.width(), "focal_mask_loss");
  const double n = static_cast<double>(p.height()) * p.width();
  double sum = 0.0;
  Grid grad;
  if (with_grad) {
    grad = Grid::Zero(p.height(), p.width());
  }
  for (int r = 0; r < p.height(); ++r) {
    for (int c = 0; c < p.width(); ++c) {
      const bool fg = q.test(r, c);
      const double raw = p(r, c);
      const double pv = std::min(std::max(raw, eps), 1.0 - eps);
      const double pt = fg ? pv : 1.0 - pv;
      const double at = fg ? alpha : 1.0 - alpha;
      const double focus = std::pow(1.0 - pt, gamma);
      sum += at * focus * -std::log(pt);
      if (with_grad && raw > eps && raw < 1.0 - eps) {
        // d/d pt of -(1-pt)^g log(pt), then d pt/d p = +-1.
        double d = -focus / pt;
        if (gamma > 0.0) {
          d += gamma * std::pow(1.0 - pt, gamma - 1.0) * std::log(pt);
        }
        grad(r, c) = loss_weight * at * (fg ? d : -d) / n;
      }
    }
  }
  LossValue out;
  out.value = loss_weight * sum / n;
  if (with_grad) {
    out.gradient = std::move(grad);
  }
  return out;
}

LossValue mae_loss(const SoftMask& p, const SoftMask& target, bool with_grad) {
  check_shapes(p.height(), p.width(), target.height(), target.width(), "mae_loss");
  const double n = static_cast<double>(p.height()) * p.width();
  double sum = 0.0;
  Grid grad;
  if (with_grad) {
    grad = Grid::Zero(p.height(), p.width());
  }
  for (int r = 0; r < p.height(); ++r) {
    for (int c = 0; c < p.width(); ++c) {
      const double d = p(r, c) - target(r, c);
      sum += std::abs(d);
      if (with_grad && d != 0.0) {
        grad(r, c) = (d > 0.0 ? 1.0 : -1.0) / n;
      }
    }
  }
  LossValue out;
  out.value = sum / n;
  if (with_grad) {
    out.gradient = std::move(grad);
  }
  return out;
}

double solo_total_loss(double category_loss, const std::vector<double>& mask_losses,
                       std::int64_t n_pos, double lambda) {
  double mask_sum = 0.0;
  for (const double v : mask_losses) {
    mask_sum += v;
  }
  return category_loss + lambda * mask_sum / static_cast<double>(std::max<std::int64_t>(n_pos, 1));
}

double matte_loss(const SoftMask& p, const SoftMask& target) {
  return mae_loss(p, target).value + (1.0 - dice_coefficient_soft(p, target));
}

}  // namespace soloseg
