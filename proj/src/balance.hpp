#pragma once

#include "loss.hpp"

namespace stiffpinn {

struct BalanceHyper {
  double alpha = 0.5;
  double beta = 0.9;
  double eps = 1e-8;
  double w_min = 0.05;

  void validate() const;
};

// Smoothed gradient norms and the resulting loss weights. Weights stay on
// the simplex with every entry in [w_min, 1 - 2 w_min].
class WeightState {
 public:
  explicit WeightState(BalanceHyper hyper = {});

  void smooth_update(double g_pde, double g_ic, double g_bc);
  void smooth_update(const Triple& g) { smooth_update(g[0], g[1], g[2]); }

  // Recomputes the weights from the smoothed norms and stores them.
  Triple compute_weights();

  const Triple& weights() const { return weights_; }
  const Triple& smoothed() const { return smoothed_; }
  bool initialized() const { return initialized_; }
  const BalanceHyper& hyper() const { return hyper_; }

 private:
  BalanceHyper hyper_;
  Triple smoothed_{0.0, 0.0, 0.0};
  Triple weights_{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  bool initialized_ = false;
};

// Inverse-power weights normalized to the simplex with a lower floor.
Triple floor_normalized_weights(const Triple& smoothed,
                                const BalanceHyper& hyper);

}  // namespace stiffpinn
