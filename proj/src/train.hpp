#pragma once

#include <filesystem>
#include <functional>
#include <string_view>

#include "balance.hpp"
#include "colloc.hpp"

namespace stiffpinn {

struct AdamState {
  std::vector<double> m, v;
  std::uint64_t step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double lr);
  void reset();
};

void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grad);

enum class Variant { Standard, Adaptive, AdaptiveColloc };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);

struct TrainConfig {
  Variant variant = Variant::Standard;
  int epochs = 5000;
  int finetune_epochs = 0;
  std::uint64_t seed = 0;
  Architecture arch;
  SamplerConfig sampler;
  BalanceHyper balance;
  ProblemSpec problem;
  double lr = 1e-3;
  bool reset_adam_on_resample = false;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  Triple losses{};
  Triple norms{};
  Triple weights{};
  double total = 0.0;
};

struct TrainLogs {
  std::vector<EpochLog> epochs;
  int resample_epoch = -1;  // first epoch trained on the resampled set
};

struct TrainResult {
  ParamVector params;
  TrainLogs logs;
  PointSet final_points;
};

// Observer invoked after each epoch.
using EpochCallback = std::function<void(const EpochLog&)>;

TrainResult train(const TrainConfig& config, const EpochCallback& on_epoch = {});

void write_train_log_csv(const std::filesystem::path& path,
                         const TrainLogs& logs);

}  // namespace stiffpinn
