#include "loss.hpp"

#include <cmath>

#include "error.hpp"

namespace stiffpinn {

namespace {

void require_nonempty(std::size_t n, const char* what) {
  if (n == 0)
    fail(ErrorCode::InvalidArgument, std::string(what) + ": empty point set");
}

void check_weights(const Triple& weights) {
  for (double w : weights)
    if (!std::isfinite(w) || w < 0.0)
      fail(ErrorCode::InvalidArgument,
           "loss weights must be finite and non-negative");
}

NodeId target_row(Tape& tape, std::span<const double> values) {
  Matrix row(1, static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i)
    row(0, static_cast<Eigen::Index>(i)) = values[i];
  return tape.constant(std::move(row));
}

}  // namespace

void PointSet::validate(const ProblemSpec& spec) const {
  if (interior_x.empty() || initial_x.empty() || boundary_t.empty())
    fail(ErrorCode::InvalidArgument, "point set: counts must be positive");
  if (interior_x.size() != interior_t.size() ||
      boundary_side.size() != boundary_t.size())
    fail(ErrorCode::InvalidArgument, "point set: coordinate lengths differ");
  auto in_x = [&](double x) { return x >= spec.x_min && x <= spec.x_max; };
  auto in_t = [&](double t) { return t >= spec.t_min && t <= spec.t_max; };
  for (std::size_t i = 0; i < interior_x.size(); ++i)
    if (!in_x(interior_x[i]) || !in_t(interior_t[i]))
      fail(ErrorCode::OutOfDomain, "point set: interior point outside domain");
  for (double x : initial_x)
    if (!in_x(x))
      fail(ErrorCode::OutOfDomain, "point set: initial point outside domain");
  for (double t : boundary_t)
    if (!in_t(t))
      fail(ErrorCode::OutOfDomain, "point set: boundary time outside domain");
}

NodeId loss_pde(Tape& tape, const Architecture& arch,
                std::span<const double> params, const ProblemSpec& spec,
                std::span<const double> x, std::span<const double> t) {
  require_nonempty(x.size(), "pde loss");
  const Jet jet = forward_jet(tape, arch, params, x, t);
  return tape.mean_squares(residual(tape, spec, jet));
}

NodeId loss_ic(Tape& tape, const Architecture& arch,
               std::span<const double> params, const ProblemSpec& spec,
               std::span<const double> x) {
  require_nonempty(x.size(), "initial-condition loss");
  const std::vector<double> t(x.size(), spec.t_min);
  std::vector<double> target(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) target[i] = ic_value(spec, x[i]);
  const NodeId u = forward_value_node(tape, arch, params, x, t);
  return tape.mean_squares(tape.sub(u, target_row(tape, target)));
}

NodeId loss_bc(Tape& tape, const Architecture& arch,
               std::span<const double> params, const ProblemSpec& spec,
               std::span<const Side> side, std::span<const double> t) {
  require_nonempty(t.size(), "boundary-condition loss");
  if (side.size() != t.size())
    fail(ErrorCode::InvalidArgument, "boundary loss: side/t lengths differ");
  std::vector<double> x(t.size());
  std::vector<double> target(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    x[i] = spec.boundary_x(side[i]);
    target[i] = bc_value(spec, side[i], t[i]);
  }
  const NodeId u = forward_value_node(tape, arch, params, x, t);
  return tape.mean_squares(tape.sub(u, target_row(tape, target)));
}

ComponentGrad differentiate(const Tape& tape, NodeId root,
                            std::size_t n_params) {
  ComponentGrad out;
  out.loss = tape.scalar(root);
  out.grad = tape.backward(root, n_params);
  out.norm = l2_norm(out.grad);
  return out;
}

Triple LossBreakdown::losses() const {
  return {parts[kPde].loss, parts[kIc].loss, parts[kBc].loss};
}

Triple LossBreakdown::norms() const {
  return {parts[kPde].norm, parts[kIc].norm, parts[kBc].norm};
}

LossBreakdown component_grads(const Architecture& arch,
                              std::span<const double> params,
                              const ProblemSpec& spec, const PointSet& points) {
  const std::size_t n = params.size();
  LossBreakdown out;
  {
    Tape tape;
    const NodeId root = loss_pde(tape, arch, params, spec, points.interior_x,
                                 points.interior_t);
    out.parts[kPde] = differentiate(tape, root, n);
  }
  {
    Tape tape;
    const NodeId root = loss_ic(tape, arch, params, spec, points.initial_x);
    out.parts[kIc] = differentiate(tape, root, n);
  }
  {
    Tape tape;
    const NodeId root = loss_bc(tape, arch, params, spec, points.boundary_side,
                                points.boundary_t);
    out.parts[kBc] = differentiate(tape, root, n);
  }
  return out;
}

double total_loss(const Triple& weights, const LossBreakdown& breakdown) {
  check_weights(weights);
  double total = 0.0;
  for (int k = 0; k < 3; ++k) total += weights[k] * breakdown.parts[k].loss;
  return total;
}

GradVector total_grad(const Triple& weights, const LossBreakdown& breakdown) {
  check_weights(weights);
  const std::size_t n = breakdown.parts[kPde].grad.size();
  for (const auto& part : breakdown.parts)
    if (part.grad.size() != n)
      fail(ErrorCode::InvalidArgument, "total_grad: gradient lengths differ");
  GradVector g(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = weights[kPde] * breakdown.parts[kPde].grad[i] +
           weights[kIc] * breakdown.parts[kIc].grad[i] +
           weights[kBc] * breakdown.parts[kBc].grad[i];
  return g;
}

}  // namespace stiffpinn
