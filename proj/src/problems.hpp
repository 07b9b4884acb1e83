#pragma once

#include <string>
#include <string_view>

#include "derivnet.hpp"

namespace stiffpinn {

enum class ProblemKind { Burgers, AllenCahn };
enum class Side { Left, Right };

std::string_view problem_name(ProblemKind kind);
ProblemKind parse_problem(std::string_view name);

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Burgers;
  double nu = 0.01;     // Burgers viscosity
  double eps2 = 1e-4;   // Allen-Cahn interface parameter squared
  double x_min = -1.0, x_max = 1.0;
  double t_min = 0.0, t_max = 1.0;

  static ProblemSpec burgers(double nu = 0.01);
  static ProblemSpec allen_cahn(double eps2 = 1e-4);
  static ProblemSpec make(ProblemKind kind);

  void validate() const;
  double boundary_x(Side side) const { return side == Side::Left ? x_min : x_max; }
};

// f = u_t + u u_x - nu u_xx
NodeId residual_burgers(Tape& tape, const Jet& jet, double nu);
// f = u_t - eps2 u_xx + u^3 - u
NodeId residual_allen_cahn(Tape& tape, const Jet& jet, double eps2);
NodeId residual(Tape& tape, const ProblemSpec& spec, const Jet& jet);

// Tape-free residual values, same formulas.
Eigen::VectorXd residual_values(const ProblemSpec& spec, const JetValues& jet);

// sin(pi x) with exact zeros at the integers.
double sin_pi(double x);

double ic_value(const ProblemSpec& spec, double x);
double bc_value(const ProblemSpec& spec, Side side, double t);

}  // namespace stiffpinn
