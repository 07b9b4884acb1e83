#include "problems.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "error.hpp"

namespace stiffpinn {

double sin_pi(double x) {
  double r = std::remainder(x, 2.0);  // [-1, 1]
  if (r > 0.5)
    r = 1.0 - r;
  else if (r < -0.5)
    r = -1.0 - r;
  return std::sin(std::numbers::pi * r);
}

std::string_view problem_name(ProblemKind kind) {
  return kind == ProblemKind::Burgers ? "burgers" : "allen-cahn";
}

ProblemKind parse_problem(std::string_view name) {
  if (name == "burgers") return ProblemKind::Burgers;
  if (name == "allen-cahn" || name == "allen_cahn")
    return ProblemKind::AllenCahn;
  fail(ErrorCode::InvalidArgument, "unknown problem '" + std::string(name) + "'");
}

ProblemSpec ProblemSpec::burgers(double nu) {
  ProblemSpec spec;
  spec.kind = ProblemKind::Burgers;
  spec.nu = nu;
  spec.validate();
  return spec;
}

ProblemSpec ProblemSpec::allen_cahn(double eps2) {
  ProblemSpec spec;
  spec.kind = ProblemKind::AllenCahn;
  spec.eps2 = eps2;
  spec.validate();
  return spec;
}

ProblemSpec ProblemSpec::make(ProblemKind kind) {
  return kind == ProblemKind::Burgers ? burgers() : allen_cahn();
}

void ProblemSpec::validate() const {
  if (kind == ProblemKind::Burgers && !(nu > 0.0))
    fail(ErrorCode::InvalidArgument, "burgers: viscosity must be positive");
  if (kind == ProblemKind::AllenCahn && !(eps2 > 0.0))
    fail(ErrorCode::InvalidArgument, "allen-cahn: eps^2 must be positive");
  if (!(x_min < x_max) || !(t_min < t_max))
    fail(ErrorCode::InvalidArgument, "problem: empty domain");
}

NodeId residual_burgers(Tape& tape, const Jet& jet, double nu) {
  const NodeId advection = tape.mul(jet.u, jet.u_x);
  const std::array inputs{jet.u_t, advection, jet.u_xx};
  const std::array coeffs{1.0, 1.0, -nu};
  return tape.affine(inputs, coeffs);
}

NodeId residual_allen_cahn(Tape& tape, const Jet& jet, double eps2) {
  const NodeId cube = tape.mul(tape.square(jet.u), jet.u);
  const std::array inputs{jet.u_t, jet.u_xx, cube, jet.u};
  const std::array coeffs{1.0, -eps2, 1.0, -1.0};
  return tape.affine(inputs, coeffs);
}

NodeId residual(Tape& tape, const ProblemSpec& spec, const Jet& jet) {
  return spec.kind == ProblemKind::Burgers
             ? residual_burgers(tape, jet, spec.nu)
             : residual_allen_cahn(tape, jet, spec.eps2);
}

Eigen::VectorXd residual_values(const ProblemSpec& spec, const JetValues& jet) {
  if (spec.kind == ProblemKind::Burgers)
    return jet.u_t + jet.u.cwiseProduct(jet.u_x) - spec.nu * jet.u_xx;
  return jet.u_t - spec.eps2 * jet.u_xx +
         (jet.u.array().cube() - jet.u.array()).matrix();
}

double ic_value(const ProblemSpec& spec, double x) {
  if (!(x >= spec.x_min && x <= spec.x_max))
    fail(ErrorCode::OutOfDomain,
         "initial condition: x = " + std::to_string(x) + " outside domain");
  if (spec.kind == ProblemKind::Burgers) return -sin_pi(x);
  return x * x * std::cos(std::numbers::pi * x);
}

double bc_value(const ProblemSpec& spec, Side side, double t) {
  if (side != Side::Left && side != Side::Right)
    fail(ErrorCode::InvalidArgument, "boundary condition: invalid side");
  if (!(t >= spec.t_min && t <= spec.t_max))
    fail(ErrorCode::OutOfDomain,
         "boundary condition: t = " + std::to_string(t) + " outside domain");
  return spec.kind == ProblemKind::Burgers ? 0.0 : -1.0;
}

}  // namespace stiffpinn
