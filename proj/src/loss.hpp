#pragma once

#include <array>
#include <vector>

#include "problems.hpp"

namespace stiffpinn {

struct PointSet {
  std::vector<double> interior_x, interior_t;
  std::vector<double> initial_x;
  std::vector<Side> boundary_side;
  std::vector<double> boundary_t;

  void validate(const ProblemSpec& spec) const;
};

NodeId loss_pde(Tape& tape, const Architecture& arch,
                std::span<const double> params, const ProblemSpec& spec,
                std::span<const double> x, std::span<const double> t);
NodeId loss_ic(Tape& tape, const Architecture& arch,
               std::span<const double> params, const ProblemSpec& spec,
               std::span<const double> x);
NodeId loss_bc(Tape& tape, const Architecture& arch,
               std::span<const double> params, const ProblemSpec& spec,
               std::span<const Side> side, std::span<const double> t);

// Value and parameter gradient of one independently recorded component.
struct ComponentGrad {
  double loss = 0.0;
  GradVector grad;
  double norm = 0.0;
};

ComponentGrad differentiate(const Tape& tape, NodeId root,
                            std::size_t n_params);

enum Component { kPde = 0, kIc = 1, kBc = 2 };
using Triple = std::array<double, 3>;

struct LossBreakdown {
  std::array<ComponentGrad, 3> parts;

  double l_pde() const { return parts[kPde].loss; }
  double l_ic() const { return parts[kIc].loss; }
  double l_bc() const { return parts[kBc].loss; }
  Triple losses() const;
  Triple norms() const;
};

LossBreakdown component_grads(const Architecture& arch,
                              std::span<const double> params,
                              const ProblemSpec& spec, const PointSet& points);

double total_loss(const Triple& weights, const LossBreakdown& breakdown);
GradVector total_grad(const Triple& weights, const LossBreakdown& breakdown);

}  // namespace stiffpinn
