#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "loss.hpp"
#include "rng.hpp"

namespace stiffpinn {

struct SamplerConfig {
  std::size_t n_f = 10000;
  std::size_t n_i = 2000;
  std::size_t n_b = 2000;
  std::size_t pool_size = 100000;

  void validate() const;
};

PointSet sample_uniform(const ProblemSpec& spec, const SamplerConfig& config,
                        Rng& rng);

// Weighted sampling of `count` distinct indices with inclusion driven by
// `weights` (exponential keys). Zero weights are only taken once every
// positive-weight index has been used.
std::vector<std::size_t> weighted_sample_without_replacement(
    std::span<const double> weights, std::size_t count, Rng& rng);

// |f| at each candidate; used by resample_from_field.
using ResidualField = std::function<Eigen::VectorXd(
    std::span<const double> x, std::span<const double> t)>;

// Draws pool_size uniform candidates, keeps n_f of them with probability
// proportional to |field|, regenerates the initial and boundary sets.
PointSet resample_from_field(const ProblemSpec& spec,
                             const SamplerConfig& config,
                             const ResidualField& field, Rng& rng);

PointSet resample_residual(const Architecture& arch,
                           std::span<const double> params,
                           const ProblemSpec& spec,
                           const SamplerConfig& config, Rng& rng);

void write_interior_csv(const std::filesystem::path& path,
                        const PointSet& points);

}  // namespace stiffpinn
