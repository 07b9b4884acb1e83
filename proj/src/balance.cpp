#include "balance.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace stiffpinn {

void BalanceHyper::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0 && beta < 1.0) || !(eps >= 0.0))
    fail(ErrorCode::InvalidArgument,
         "balance: need alpha >= 0, 0 <= beta < 1, eps >= 0");
  if (!(w_min >= 0.0 && w_min < 1.0 / 3.0))
    fail(ErrorCode::InvalidArgument, "balance: need 0 <= w_min < 1/3");
}

WeightState::WeightState(BalanceHyper hyper) : hyper_(hyper) {
  hyper_.validate();
}

void WeightState::smooth_update(double g_pde, double g_ic, double g_bc) {
  const Triple g{g_pde, g_ic, g_bc};
  for (double v : g)
    if (!std::isfinite(v) || v < 0.0)
      fail(ErrorCode::NonFinite,
           "balance: gradient norms must be finite and non-negative");
  if (!initialized_) {
    smoothed_ = g;
    initialized_ = true;
    return;
  }
  for (int k = 0; k < 3; ++k)
    smoothed_[k] = hyper_.beta * smoothed_[k] + (1.0 - hyper_.beta) * g[k];
}

Triple WeightState::compute_weights() {
  if (!initialized_)
    fail(ErrorCode::InvalidArgument,
         "balance: compute_weights before the first smooth_update");
  weights_ = floor_normalized_weights(smoothed_, hyper_);
  return weights_;
}

Triple floor_normalized_weights(const Triple& smoothed,
                                const BalanceHyper& hyper) {
  Triple raw{};
  bool any_finite = false;
  for (int k = 0; k < 3; ++k) {
    if (std::isfinite(smoothed[k])) any_finite = true;
    raw[k] = std::pow(smoothed[k] + hyper.eps, -hyper.alpha);
    if (!std::isfinite(raw[k])) raw[k] = std::isnan(raw[k]) ? 0.0 : raw[k];
  }
  if (!any_finite)
    fail(ErrorCode::NonFinite, "balance: all smoothed norms are non-finite");
  // (0 + eps)^-alpha overflows only when eps == 0; give that term all mass.
  bool any_inf = false;
  for (double r : raw) any_inf = any_inf || std::isinf(r);
  if (any_inf)
    for (double& r : raw) r = std::isinf(r) ? 1.0 : 0.0;

  std::array<bool, 3> clamped{false, false, false};
  Triple w{};
  for (int pass = 0; pass < 3; ++pass) {
    double free_raw = 0.0;
    int n_clamped = 0;
    for (int k = 0; k < 3; ++k) {
      if (clamped[k])
        ++n_clamped;
      else
        free_raw += raw[k];
    }
    const double free_mass = 1.0 - n_clamped * hyper.w_min;
    for (int k = 0; k < 3; ++k) {
      if (clamped[k])
        w[k] = hyper.w_min;
      else
        w[k] = free_raw > 0.0 ? free_mass * raw[k] / free_raw
                              : free_mass / (3 - n_clamped);
    }
    bool changed = false;
    for (int k = 0; k < 3; ++k)
      if (!clamped[k] && w[k] < hyper.w_min) {
        clamped[k] = true;
        changed = true;
      }
    if (!changed) break;
  }
  // Rounding can push a free weight one ulp past the ceiling.
  const double ceiling = 1.0 - 2.0 * hyper.w_min;
  for (double& v : w) v = std::min(v, ceiling);
  return w;
}

}  // namespace stiffpinn
