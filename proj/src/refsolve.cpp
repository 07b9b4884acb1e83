#include "refsolve.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "error.hpp"
#include "problems.hpp"

namespace stiffpinn {

namespace {

void check_output_times(const std::vector<double>& times) {
  if (times.empty() || times.front() != 0.0)
    fail(ErrorCode::InvalidArgument,
         "reference solver: output times must start at t = 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      fail(ErrorCode::InvalidArgument,
           "reference solver: output times must increase");
}

void check_state(const std::vector<double>& u, std::size_t step) {
  for (double v : u)
    if (!std::isfinite(v))
      fail(ErrorCode::NonFinite, "reference solver: non-finite state at step " +
                                     std::to_string(step));
}

// Node i of n, computed so that mirrored nodes are exact negatives.
double symmetric_node(std::size_t i, std::size_t n) {
  const double m = static_cast<double>(n - 1);
  return (2.0 * static_cast<double>(i) - m) / m;
}

// Shortens dt to land on the next output time; returns true if it does.
bool clip_to_output(double t, double next_out, double& dt) {
  if (t + dt >= next_out) {
    dt = next_out - t;
    return true;
  }
  return false;
}

}  // namespace

std::vector<double> uniform_nodes(double lo, double hi, std::size_t n) {
  if (n < 2) fail(ErrorCode::InvalidArgument, "uniform_nodes: need n >= 2");
  std::vector<double> out(n);
  const double span = hi - lo;
  for (std::size_t i = 0; i < n; ++i)
    out[i] = lo + span * static_cast<double>(i) / static_cast<double>(n - 1);
  out.back() = hi;
  return out;
}

std::vector<double> default_output_times() {
  std::vector<double> t(101);
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<double>(i) / 100.0;
  return t;
}

ReferenceGrid solve_burgers_fd(double nu, std::size_t n_x, double cfl_c,
                               std::vector<double> output_times) {
  if (n_x < 129)
    fail(ErrorCode::InvalidArgument, "burgers fd: n_x must be >= 129");
  if (!(cfl_c > 0.0 && cfl_c <= 0.5))
    fail(ErrorCode::InvalidArgument, "burgers fd: cfl must be in (0, 0.5]");
  if (!(nu > 0.0))
    fail(ErrorCode::InvalidArgument, "burgers fd: viscosity must be positive");
  check_output_times(output_times);

  ReferenceGrid grid;
  grid.scheme = "rusanov-central-euler";
  grid.cfl = cfl_c;
  grid.x_nodes.resize(n_x);
  for (std::size_t i = 0; i < n_x; ++i) grid.x_nodes[i] = symmetric_node(i, n_x);
  grid.t_nodes = std::move(output_times);
  grid.values.resize(static_cast<Eigen::Index>(grid.t_nodes.size()),
                     static_cast<Eigen::Index>(n_x));

  const double dx = 2.0 / static_cast<double>(n_x - 1);
  std::vector<double> u(n_x), next(n_x), flux(n_x - 1);
  for (std::size_t i = 0; i < n_x; ++i) u[i] = -sin_pi(grid.x_nodes[i]);
  u.front() = 0.0;
  u.back() = 0.0;
  for (std::size_t i = 0; i < n_x; ++i) grid.values(0, static_cast<Eigen::Index>(i)) = u[i];

  const double diffusion_bound = dx * dx / (2.0 * nu);
  double t = 0.0;
  std::size_t step = 0;
  for (std::size_t out = 1; out < grid.t_nodes.size(); ++out) {
    const double target = grid.t_nodes[out];
    bool reached = false;
    while (!reached) {
      double umax = 0.0;
      for (double v : u) umax = std::max(umax, std::abs(v));
      const double advection_bound =
          umax > 0.0 ? dx / umax : std::numeric_limits<double>::infinity();
      double dt = cfl_c * std::min(advection_bound, diffusion_bound);
      reached = clip_to_output(t, target, dt);
      if (dt > advection_bound || dt > diffusion_bound) ++grid.bound_violations;

      for (std::size_t i = 0; i + 1 < n_x; ++i) {
        const double ul = u[i], ur = u[i + 1];
        const double a = std::max(std::abs(ul), std::abs(ur));
        flux[i] = 0.25 * (ul * ul + ur * ur) - 0.5 * a * (ur - ul);
      }
      const double r_adv = dt / dx;
      const double r_diff = nu * dt / (dx * dx);
      for (std::size_t i = 1; i + 1 < n_x; ++i)
        next[i] = u[i] - r_adv * (flux[i] - flux[i - 1]) +
                  r_diff * (u[i + 1] - 2.0 * u[i] + u[i - 1]);
      next.front() = 0.0;
      next.back() = 0.0;
      u.swap(next);
      t = reached ? target : t + dt;
      grid.dt_history.push_back(dt);
      ++step;
      check_state(u, step);
    }
    for (std::size_t i = 0; i < n_x; ++i)
      grid.values(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(i)) = u[i];
  }
  return grid;
}

ReferenceGrid solve_allen_cahn_fd(double eps2, std::size_t n_x, double dt_max,
                                  std::vector<double> output_times,
                                  std::function<double(double)> initial) {
  if (n_x < 129)
    fail(ErrorCode::InvalidArgument, "allen-cahn fd: n_x must be >= 129");
  if (!(dt_max > 0.0))
    fail(ErrorCode::InvalidArgument, "allen-cahn fd: dt_max must be positive");
  if (!(eps2 > 0.0))
    fail(ErrorCode::InvalidArgument, "allen-cahn fd: eps^2 must be positive");
  check_output_times(output_times);
  if (!initial) {
    const ProblemSpec spec = ProblemSpec::allen_cahn(eps2);
    initial = [spec](double x) { return ic_value(spec, x); };
  }

  ReferenceGrid grid;
  grid.scheme = "central-euler";
  grid.x_nodes.resize(n_x);
  for (std::size_t i = 0; i < n_x; ++i) grid.x_nodes[i] = symmetric_node(i, n_x);
  grid.t_nodes = std::move(output_times);
  grid.values.resize(static_cast<Eigen::Index>(grid.t_nodes.size()),
                     static_cast<Eigen::Index>(n_x));

  const double dx = 2.0 / static_cast<double>(n_x - 1);
  const double diffusion_bound = dx * dx / (2.0 * eps2);
  constexpr double reaction_cap = 0.1;
  const double dt_nominal =
      std::min({dt_max, 0.4 * diffusion_bound, reaction_cap});
  grid.cfl = dt_nominal / diffusion_bound;

  std::vector<double> u(n_x), next(n_x);
  for (std::size_t i = 0; i < n_x; ++i) u[i] = initial(grid.x_nodes[i]);
  for (std::size_t i = 0; i < n_x; ++i) grid.values(0, static_cast<Eigen::Index>(i)) = u[i];
  u.front() = -1.0;
  u.back() = -1.0;

  double t = 0.0;
  std::size_t step = 0;
  for (std::size_t out = 1; out < grid.t_nodes.size(); ++out) {
    const double target = grid.t_nodes[out];
    bool reached = false;
    while (!reached) {
      double dt = dt_nominal;
      reached = clip_to_output(t, target, dt);
      if (dt > diffusion_bound || dt > reaction_cap) ++grid.bound_violations;
      const double r = eps2 * dt / (dx * dx);
      for (std::size_t i = 1; i + 1 < n_x; ++i) {
        const double v = u[i];
        next[i] = v + r * (u[i + 1] - 2.0 * v + u[i - 1]) - dt * (v * v * v - v);
      }
      next.front() = -1.0;
      next.back() = -1.0;
      u.swap(next);
      t = reached ? target : t + dt;
      grid.dt_history.push_back(dt);
      ++step;
      check_state(u, step);
    }
    for (std::size_t i = 0; i < n_x; ++i)
      grid.values(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(i)) = u[i];
  }
  return grid;
}

GaussHermite gauss_hermite(std::size_t order) {
  if (order < 1) fail(ErrorCode::InvalidArgument, "gauss_hermite: order >= 1");
  const auto n = static_cast<Eigen::Index>(order);
  constexpr double pim4 = 0.7511255444649425;  // pi^(-1/4)

  // Golub-Welsch for starting nodes, then Newton on the normalized
  // recurrence for accurate nodes and weights.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max<Eigen::Index>(n - 1, 0));
  for (Eigen::Index k = 0; k + 1 < n; ++k)
    sub(k) = std::sqrt(0.5 * static_cast<double>(k + 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success)
    fail(ErrorCode::NonFinite, "gauss_hermite: eigenvalue solve failed");

  GaussHermite gh{std::vector<double>(order), std::vector<double>(order)};
  for (Eigen::Index i = 0; i < n; ++i) {
    double z = eig.eigenvalues()(n - 1 - i);
    double pp = 1.0;
    for (int it = 0; it < 20; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const auto jd = static_cast<double>(j);
        p1 = z * std::sqrt(2.0 / (jd + 1.0)) * p2 -
             std::sqrt(jd / (jd + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * static_cast<double>(n)) * p2;
      const double step = p1 / pp;
      z -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    gh.nodes[static_cast<std::size_t>(i)] = z;
    gh.weights[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
  }
  return gh;
}

namespace {

const GaussHermite& cached_gauss_hermite(std::size_t order) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<GaussHermite>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussHermite>(gauss_hermite(order));
  return *slot;
}

}  // namespace

double cole_hopf_exact(double x, double t, double nu, std::size_t quad_order) {
  if (!(t > 0.0))
    fail(ErrorCode::InvalidArgument,
         "cole_hopf_exact: t must be positive (use the initial condition)");
  if (quad_order < 32)
    fail(ErrorCode::InvalidArgument, "cole_hopf_exact: quad_order must be >= 32");
  if (!(nu > 0.0))
    fail(ErrorCode::InvalidArgument, "cole_hopf_exact: nu must be positive");
  const GaussHermite& gh = cached_gauss_hermite(quad_order);
  const double scale = 2.0 * std::sqrt(nu * t);
  const double inv = 1.0 / (2.0 * std::numbers::pi * nu);

  std::vector<double> expo(quad_order);
  double emax = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < quad_order; ++k) {
    const double y = x - scale * gh.nodes[k];
    expo[k] = -std::cos(std::numbers::pi * y) * inv;
    emax = std::max(emax, expo[k]);
  }
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < quad_order; ++k) {
    const double y = x - scale * gh.nodes[k];
    const double phi = gh.weights[k] * std::exp(expo[k] - emax);
    num += sin_pi(y) * phi;
    den += phi;
  }
  return -num / den;
}

double interpolate(const ReferenceGrid& grid, double x, double t) {
  const auto& xs = grid.x_nodes;
  const auto& ts = grid.t_nodes;
  if (xs.size() < 2 || ts.empty())
    fail(ErrorCode::InvalidArgument, "interpolate: empty grid");
  if (!(x >= xs.front() && x <= xs.back() && t >= ts.front() && t <= ts.back()))
    fail(ErrorCode::OutOfDomain, "interpolate: point outside grid");

  auto locate = [](const std::vector<double>& nodes, double q,
                   std::size_t& i, double& w) {
    if (nodes.size() == 1) {
      i = 0;
      w = 0.0;
      return;
    }
    auto it = std::upper_bound(nodes.begin(), nodes.end(), q);
    i = static_cast<std::size_t>(it - nodes.begin());
    i = i == 0 ? 0 : i - 1;
    if (i >= nodes.size() - 1) i = nodes.size() - 2;
    w = (q - nodes[i]) / (nodes[i + 1] - nodes[i]);
  };
  std::size_t ix, it;
  double wx, wt;
  locate(xs, x, ix, wx);
  locate(ts, t, it, wt);
  const auto& v = grid.values;
  auto at = [&](std::size_t r, std::size_t c) {
    return v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  };
  auto row = [&](std::size_t r) {
    if (wx == 0.0) return at(r, ix);
    if (wx == 1.0) return at(r, ix + 1);
    return (1.0 - wx) * at(r, ix) + wx * at(r, ix + 1);
  };
  if (ts.size() == 1 || wt == 0.0) return row(it);
  if (wt == 1.0) return row(it + 1);
  return (1.0 - wt) * row(it) + wt * row(it + 1);
}

Eigen::MatrixXd sample_grid(const ReferenceGrid& grid,
                            const std::vector<double>& xs,
                            const std::vector<double>& ts) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ts.size()),
                      static_cast<Eigen::Index>(xs.size()));
  for (std::size_t j = 0; j < ts.size(); ++j)
    for (std::size_t i = 0; i < xs.size(); ++i)
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
          interpolate(grid, xs[i], ts[j]);
  return out;
}

void write_grid_csv(const std::filesystem::path& path,
                    const std::vector<double>& x_nodes,
                    const std::vector<double>& t_nodes,
                    const Eigen::MatrixXd& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  char buf[32];
  out << "t";
  for (double x : x_nodes) {
    std::snprintf(buf, sizeof buf, ",%.17g", x);
    out << buf;
  }
  out << '\n';
  for (std::size_t j = 0; j < t_nodes.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g", t_nodes[j]);
    out << buf;
    for (std::size_t i = 0; i < x_nodes.size(); ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g",
                    values(static_cast<Eigen::Index>(j),
                           static_cast<Eigen::Index>(i)));
      out << buf;
    }
    out << '\n';
  }
}

std::string grid_to_json(const ReferenceGrid& grid) {
  nlohmann::json j;
  j["x"] = grid.x_nodes;
  j["t"] = grid.t_nodes;
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < grid.values.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(grid.values.cols()));
    for (Eigen::Index c = 0; c < grid.values.cols(); ++c)
      row[static_cast<std::size_t>(c)] = grid.values(r, c);
    rows.push_back(row);
  }
  j["values"] = rows;
  double dt_min = 0.0, dt_max = 0.0;
  if (!grid.dt_history.empty()) {
    dt_min = *std::min_element(grid.dt_history.begin(), grid.dt_history.end());
    dt_max = *std::max_element(grid.dt_history.begin(), grid.dt_history.end());
  }
  j["meta"] = {{"scheme", grid.scheme},
               {"cfl", grid.cfl},
               {"steps", grid.dt_history.size()},
               {"dt_min", dt_min},
               {"dt_max", dt_max}};
  return j.dump();
}

void write_grid_json(const std::filesystem::path& path,
                     const ReferenceGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << grid_to_json(grid) << '\n';
}

ReferenceGrid read_grid_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
  ReferenceGrid grid;
  grid.scheme = "csv";
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  if (!std::getline(in, line)) fail(ErrorCode::Io, "grid csv: empty file");
  auto header = split(line);
  if (header.size() < 3 || header[0] != "t")
    fail(ErrorCode::Io, "grid csv: bad header");
  for (std::size_t i = 1; i < header.size(); ++i)
    grid.x_nodes.push_back(std::stod(header[i]));
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size())
      fail(ErrorCode::Io, "grid csv: ragged row");
    grid.t_nodes.push_back(std::stod(cells[0]));
    std::vector<double> row;
    for (std::size_t i = 1; i < cells.size(); ++i)
      row.push_back(std::stod(cells[i]));
    rows.push_back(std::move(row));
  }
  grid.values.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(grid.x_nodes.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      grid.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c];
  return grid;
}

}  // namespace stiffpinn
