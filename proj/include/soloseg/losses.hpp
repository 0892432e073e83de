#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "soloseg/mask.hpp"

namespace soloseg {

struct LossValue {
  double value = 0.0;
  // d value / d p, same shape as the prediction; present when requested.
  std::optional<Grid> gradient;
};

// 2*sum(p*q) / (sum(p^2) + sum(q^2)); 1 when both masks are all zero.
double dice_coefficient(const SoftMask& p, const BinaryMask& q);
double dice_coefficient_soft(const SoftMask& p, const SoftMask& q);

// 1 - dice_coefficient
LossValue dice_loss(const SoftMask& p, const BinaryMask& q, bool with_grad = false);

// Mean over pixels of w * cross-entropy, w = positive_weight on foreground
// pixels and 1 elsewhere, scaled by loss_weight. Predictions are clamped to
// [eps, 1-eps] before the logs; clamped pixels get zero gradient.
LossValue weighted_bce_loss(const SoftMask& p, const BinaryMask& q, double loss_weight = 10.0,
                            double positive_weight = 2.0, bool with_grad = false,
                            double eps = 1e-7);

// Mean over pixels of -alpha_t * (1 - p_t)^gamma * log(p_t), scaled by
// loss_weight, with p_t = p on foreground and 1-p on background, and
// alpha_t = alpha / 1-alpha respectively. gamma = 0, alpha = 0.5 and
// loss_weight = 2 reproduce the unweighted BCE bit for bit.
LossValue focal_mask_loss(const SoftMask& p, const BinaryMask& q, double loss_weight = 20.0,
                          double alpha = 0.25, double gamma = 2.0, bool with_grad = false,
                          double eps = 1e-7);

// Mean absolute error against a soft target; gradient is the sign
// subgradient (0 where equal).
LossValue mae_loss(const SoftMask& p, const SoftMask& target, bool with_grad = false);

// L = L_cate + lambda * sum(mask_losses) / max(n_pos, 1)
double solo_total_loss(double category_loss, const std::vector<double>& mask_losses,
                       std::int64_t n_pos, double lambda = 3.0);

// MAE plus soft dice loss against a soft ground-truth matte.
double matte_loss(const SoftMask& p, const SoftMask& target);

}  // namespace soloseg
