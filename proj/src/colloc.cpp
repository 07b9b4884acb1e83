#include "colloc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "error.hpp"

namespace stiffpinn {

void SamplerConfig::validate() const {
  if (n_f == 0 || n_i == 0 || n_b == 0)
    fail(ErrorCode::InvalidArgument, "sampler: counts must be positive");
  if (pool_size < n_f)
    fail(ErrorCode::InvalidArgument, "sampler: pool_size must be >= n_f");
}

namespace {

void fill_initial_and_boundary(const ProblemSpec& spec,
                               const SamplerConfig& config, Rng& rng,
                               PointSet& out) {
  out.initial_x.resize(config.n_i);
  for (double& x : out.initial_x) x = rng.uniform(spec.x_min, spec.x_max);
  out.boundary_side.resize(config.n_b);
  out.boundary_t.resize(config.n_b);
  for (std::size_t i = 0; i < config.n_b; ++i) {
    out.boundary_side[i] = i % 2 == 0 ? Side::Left : Side::Right;
    out.boundary_t[i] = rng.uniform(spec.t_min, spec.t_max);
  }
}

}  // namespace

PointSet sample_uniform(const ProblemSpec& spec, const SamplerConfig& config,
                        Rng& rng) {
  config.validate();
  PointSet out;
  out.interior_x.resize(config.n_f);
  out.interior_t.resize(config.n_f);
  for (std::size_t i = 0; i < config.n_f; ++i) {
    out.interior_x[i] = rng.uniform(spec.x_min, spec.x_max);
    out.interior_t[i] = rng.uniform(spec.t_min, spec.t_max);
  }
  fill_initial_and_boundary(spec, config, rng, out);
  return out;
}

std::vector<std::size_t> weighted_sample_without_replacement(
    std::span<const double> weights, std::size_t count, Rng& rng) {
  if (count > weights.size())
    fail(ErrorCode::InvalidArgument,
         "weighted sample: count exceeds number of candidates");
  struct Key {
    int tier;
    double key;
    std::size_t index;
  };
  std::vector<Key> keys(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    if (!std::isfinite(w) || w < 0.0)
      fail(ErrorCode::NonFinite, "weighted sample: weight " +
                                     std::to_string(i) +
                                     " is negative or non-finite");
    const double u = rng.uniform_open();
    if (w > 0.0)
      keys[i] = Key{0, -std::log(u) / w, i};
    else
      keys[i] = Key{1, u, i};
  }
  auto less = [](const Key& a, const Key& b) {
    if (a.tier != b.tier) return a.tier < b.tier;
    if (a.key != b.key) return a.key < b.key;
    return a.index < b.index;
  };
  const auto nth = keys.begin() + static_cast<std::ptrdiff_t>(count);
  std::nth_element(keys.begin(), nth, keys.end(), less);
  std::vector<std::size_t> picked;
  picked.reserve(count);
  for (auto it = keys.begin(); it != nth; ++it) picked.push_back(it->index);
  std::sort(picked.begin(), picked.end());
  return picked;
}

PointSet resample_from_field(const ProblemSpec& spec,
                             const SamplerConfig& config,
                             const ResidualField& field, Rng& rng) {
  config.validate();
  std::vector<double> cx(config.pool_size), ct(config.pool_size);
  for (std::size_t i = 0; i < config.pool_size; ++i) {
    cx[i] = rng.uniform(spec.x_min, spec.x_max);
    ct[i] = rng.uniform(spec.t_min, spec.t_max);
  }
  const Eigen::VectorXd r = field(cx, ct);
  if (static_cast<std::size_t>(r.size()) != config.pool_size)
    fail(ErrorCode::InvalidArgument, "resample: field returned wrong length");
  std::vector<double> weights(config.pool_size);
  for (std::size_t i = 0; i < config.pool_size; ++i) {
    const double v = r(static_cast<Eigen::Index>(i));
    if (!std::isfinite(v)) {
      char buf[128];
      std::snprintf(buf, sizeof buf,
                    "resample: non-finite residual at candidate %zu "
                    "(x = %.17g, t = %.17g)",
                    i, cx[i], ct[i]);
      fail(ErrorCode::NonFinite, buf);
    }
    weights[i] = std::abs(v);
  }
  const auto picked =
      weighted_sample_without_replacement(weights, config.n_f, rng);
  PointSet out;
  out.interior_x.reserve(config.n_f);
  out.interior_t.reserve(config.n_f);
  for (std::size_t i : picked) {
    out.interior_x.push_back(cx[i]);
    out.interior_t.push_back(ct[i]);
  }
  fill_initial_and_boundary(spec, config, rng, out);
  return out;
}

PointSet resample_residual(const Architecture& arch,
                           std::span<const double> params,
                           const ProblemSpec& spec,
                           const SamplerConfig& config, Rng& rng) {
  const ResidualField field = [&](std::span<const double> x,
                                  std::span<const double> t) {
    return residual_values(spec, evaluate_jets(arch, params, x, t));
  };
  return resample_from_field(spec, config, field, rng);
}

void write_interior_csv(const std::filesystem::path& path,
                        const PointSet& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << "x,t\n";
  char buf[64];
  for (std::size_t i = 0; i < points.interior_x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", points.interior_x[i],
                  points.interior_t[i]);
    out << buf;
  }
}

}  // namespace stiffpinn
