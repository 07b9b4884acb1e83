#pragma once

// Finite-difference reference solutions and the Cole-Hopf closed form for
// the Burgers benchmark.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace stiffpinn {

struct ReferenceGrid {
  std::vector<double> x_nodes;  // uniform over [-1, 1]
  std::vector<double> t_nodes;  // output times
  Eigen::MatrixXd values;       // n_t x n_x
  std::string scheme;
  std::vector<double> dt_history;
  double cfl = 0.0;
  std::size_t bound_violations = 0;  // steps whose dt exceeded a bound
};

std::vector<double> uniform_nodes(double lo, double hi, std::size_t n);

// Output times 0, 0.01, ..., 1.
std::vector<double> default_output_times();

ReferenceGrid solve_burgers_fd(double nu, std::size_t n_x, double cfl_c,
                               std::vector<double> output_times =
                                   default_output_times());

ReferenceGrid solve_allen_cahn_fd(double eps2, std::size_t n_x, double dt_max,
                                  std::vector<double> output_times =
                                      default_output_times(),
                                  std::function<double(double)> initial = {});

struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;  // for the weight function exp(-s^2)
};

GaussHermite gauss_hermite(std::size_t order);

double cole_hopf_exact(double x, double t, double nu, std::size_t quad_order);

double interpolate(const ReferenceGrid& grid, double x, double t);

// Values of `grid` resampled onto the tensor grid (ts x xs).
Eigen::MatrixXd sample_grid(const ReferenceGrid& grid,
                            const std::vector<double>& xs,
                            const std::vector<double>& ts);

void write_grid_csv(const std::filesystem::path& path,
                    const std::vector<double>& x_nodes,
                    const std::vector<double>& t_nodes,
                    const Eigen::MatrixXd& values);
std::string grid_to_json(const ReferenceGrid& grid);
void write_grid_json(const std::filesystem::path& path,
                     const ReferenceGrid& grid);
ReferenceGrid read_grid_csv(const std::filesystem::path& path);

}  // namespace stiffpinn
