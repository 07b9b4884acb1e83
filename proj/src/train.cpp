#include "train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "error.hpp"

namespace stiffpinn {

namespace {

// Tape buffers are a few MB each and are freed every epoch. Keep them on the
// heap instead of mmap so pages are not faulted in again each time.
void tune_allocator() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
  });
#endif
}

}  // namespace

AdamState::AdamState(std::size_t n, double lr_)
    : m(n, 0.0), v(n, 0.0), lr(lr_) {}

void AdamState::reset() {
  std::fill(m.begin(), m.end(), 0.0);
  std::fill(v.begin(), v.end(), 0.0);
  step_count = 0;
}

void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grad) {
  if (params.size() != grad.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    fail(ErrorCode::InvalidArgument, "adam: shape mismatch");
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!std::isfinite(grad[i]))
      fail(ErrorCode::NonFinite,
           "adam: non-finite gradient entry " + std::to_string(i) +
               " at step " + std::to_string(state.step_count + 1));
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::Standard: return "standard";
    case Variant::Adaptive: return "adaptive";
    case Variant::AdaptiveColloc: return "adaptive-colloc";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "standard") return Variant::Standard;
  if (name == "adaptive") return Variant::Adaptive;
  if (name == "adaptive-colloc" || name == "adaptive_colloc")
    return Variant::AdaptiveColloc;
  fail(ErrorCode::InvalidArgument, "unknown variant '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (epochs < 0 || finetune_epochs < 0)
    fail(ErrorCode::InvalidArgument, "train: epoch counts must be >= 0");
  if (finetune_epochs > 0 && variant != Variant::AdaptiveColloc)
    fail(ErrorCode::InvalidArgument,
         "train: finetune epochs only apply to the adaptive-colloc variant");
  if (!(lr >= 0.0) || !std::isfinite(lr))
    fail(ErrorCode::InvalidArgument, "train: learning rate must be >= 0");
  arch.validate();
  sampler.validate();
  balance.validate();
  problem.validate();
}

TrainResult train(const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  tune_allocator();
  TrainResult result;
  result.params = init_params(config.arch, derive_seed(config.seed, 0));
  Rng sampler_rng(derive_seed(config.seed, 1));
  Rng resample_rng(derive_seed(config.seed, 2));
  PointSet points = sample_uniform(config.problem, config.sampler, sampler_rng);

  AdamState adam(result.params.size(), config.lr);
  WeightState balance(config.balance);
  const bool adaptive = config.variant != Variant::Standard;
  const int finetune =
      config.variant == Variant::AdaptiveColloc ? config.finetune_epochs : 0;
  const int total_epochs = config.epochs + finetune;
  result.logs.epochs.reserve(static_cast<std::size_t>(total_epochs));

  for (int epoch = 0; epoch < total_epochs; ++epoch) {
    if (config.variant == Variant::AdaptiveColloc && epoch == config.epochs) {
      points = resample_residual(config.arch, result.params, config.problem,
                                 config.sampler, resample_rng);
      if (config.reset_adam_on_resample) adam.reset();
      result.logs.resample_epoch = epoch;
    }

    const LossBreakdown breakdown =
        component_grads(config.arch, result.params, config.problem, points);
    Triple weights{1.0, 1.0, 1.0};
    if (adaptive) {
      balance.smooth_update(breakdown.norms());
      weights = balance.compute_weights();
    }
    const double total = total_loss(weights, breakdown);
    if (!std::isfinite(total))
      fail(ErrorCode::Diverged,
           "train: total loss became non-finite at epoch " +
               std::to_string(epoch));

    EpochLog log{epoch, breakdown.losses(), breakdown.norms(), weights, total};
    const GradVector grad = total_grad(weights, breakdown);
    try {
      adam_step(adam, result.params, grad);
    } catch (const Error& e) {
      fail(ErrorCode::Diverged, "train: epoch " + std::to_string(epoch) +
                                    ": " + e.what());
    }
    result.logs.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  result.final_points = std::move(points);
  return result;
}

void write_train_log_csv(const std::filesystem::path& path,
                         const TrainLogs& logs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << "epoch,l_pde,l_ic,l_bc,g_pde,g_ic,g_bc,w_pde,w_ic,w_bc,total\n";
  char buf[512];
  for (const EpochLog& e : logs.epochs) {
    std::snprintf(buf, sizeof buf,
                  "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                  "%.17g\n",
                  e.epoch, e.losses[0], e.losses[1], e.losses[2], e.norms[0],
                  e.norms[1], e.norms[2], e.weights[0], e.weights[1],
                  e.weights[2], e.total);
    out << buf;
  }
}

}  // namespace stiffpinn
