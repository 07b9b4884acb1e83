#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "refsolve.hpp"
#include "train.hpp"

namespace stiffpinn {

double relative_l2(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& ref);

struct BoundaryErrors {
  double left_mae = 0.0, right_mae = 0.0;
  double left_rmse = 0.0, right_rmse = 0.0;
};

BoundaryErrors boundary_errors(const Architecture& arch,
                               std::span<const double> params,
                               const ProblemSpec& spec,
                               std::size_t n_t_eval = 1000);

// Fixed seed for metric evaluation points, independent of training seeds.
inline constexpr std::uint64_t kMetricSeed = 20251017;

double mean_sq_residual(const Architecture& arch,
                        std::span<const double> params,
                        const ProblemSpec& spec, std::size_t n_eval = 10000,
                        std::uint64_t seed = kMetricSeed);

struct EvalGrid {
  std::vector<double> x_nodes;
  std::vector<double> t_nodes;
};

EvalGrid make_eval_grid(std::size_t n_x = 256, std::size_t n_t = 101);

// Network values on the tensor grid, n_t x n_x.
Eigen::MatrixXd predict_grid(const Architecture& arch,
                             std::span<const double> params,
                             const EvalGrid& grid);

ReferenceGrid build_reference(ProblemKind kind);

struct MetricsRecord {
  std::string problem;
  std::string variant;
  std::uint64_t seed = 0;
  std::optional<double> rel_l2;
  std::string reference;  // which solver produced u_ref
  double bc_left_mae = 0.0, bc_right_mae = 0.0;
  double bc_left_rmse = 0.0, bc_right_rmse = 0.0;
  double mean_sq_residual = 0.0;
  double wall_time_s = 0.0;  // summary.csv only; metrics.json stays reproducible
  int epochs_run = 0;
  std::string status = "ok";
  std::string message;
  Triple final_losses{};
  Triple final_weights{};
};

std::string metrics_to_json(const MetricsRecord& m);

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::Burgers;
  std::vector<Variant> variants{Variant::Standard};
  std::vector<std::uint64_t> seeds{0};
  int epochs = 5000;
  int finetune_epochs = 2000;
  SamplerConfig sampler;
  double lr = 1e-3;
  BalanceHyper balance;
  Architecture arch;
  std::filesystem::path out = "runs";
  int jobs = 1;
  bool desk_scale = false;
  bool dump_points = false;
  bool reset_adam_on_resample = false;
  bool verbose = false;
  std::size_t eval_nx = 256, eval_nt = 101;

  // Applies the reduced desk-scale profile.
  void apply_desk_scale();
  TrainConfig train_config(Variant variant, std::uint64_t seed) const;
};

// Flat key/value JSON mirroring the CLI flag names (e.g. "finetune-epochs").
ExperimentConfig experiment_config_from_json(const std::string& text);

struct ExperimentResult {
  std::vector<MetricsRecord> runs;  // sorted by (problem, variant, seed)
  int exit_code = 0;
};

// One training run plus evaluation, written under `dir`.
MetricsRecord run_single(const ExperimentConfig& config, Variant variant,
                         std::uint64_t seed, const ReferenceGrid& reference,
                         const std::filesystem::path& dir);

ExperimentResult run_experiment(const ExperimentConfig& config,
                                std::ostream* progress = nullptr);

void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<MetricsRecord>& runs);

}  // namespace stiffpinn
