#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "error.hpp"
#include "problems.hpp"
#include "refsolve.hpp"
#include "report.hpp"

using namespace stiffpinn;

namespace {

double rel_l2_vs_cole_hopf(const ReferenceGrid& g, std::size_t row,
                           double nu) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < g.x_nodes.size(); ++i) {
    const double e = cole_hopf_exact(g.x_nodes[i], g.t_nodes[row], nu, 128);
    const double d = g.values(static_cast<Eigen::Index>(row),
                              static_cast<Eigen::Index>(i)) - e;
    num += d * d;
    den += e * e;
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("gauss-hermite: moments") {
  for (std::size_t n : {5u, 32u, 128u, 300u}) {
    const GaussHermite gh = gauss_hermite(n);
    double m0 = 0.0, m2 = 0.0, m4 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double s2 = gh.nodes[k] * gh.nodes[k];
      m0 += gh.weights[k];
      m2 += gh.weights[k] * s2;
      m4 += gh.weights[k] * s2 * s2;
    }
    const double sp = std::sqrt(std::numbers::pi);
    CHECK(m0 == doctest::Approx(sp).epsilon(1e-13));
    CHECK(m2 == doctest::Approx(sp / 2).epsilon(1e-13));
    CHECK(m4 == doctest::Approx(3 * sp / 4).epsilon(1e-13));
  }
}

TEST_CASE("cole-hopf: oracle properties") {
  CHECK(std::abs(cole_hopf_exact(0.0, 0.5, 0.01, 64)) <= 1e-14);
  CHECK(std::abs(cole_hopf_exact(1.0, 0.5, 0.01, 64)) <= 1e-12);
  CHECK(std::abs(cole_hopf_exact(-1.0, 0.8, 0.01, 64)) <= 1e-12);
  const double a = cole_hopf_exact(0.25, 0.5, 0.01, 96);
  const double b = cole_hopf_exact(0.25, 0.5, 0.01, 128);
  CHECK(std::abs(a - b) <= 1e-8 * std::abs(b));
  // Frozen from the 96/128 self-convergence above.
  CHECK(b == doctest::Approx(-0.8380331348603).epsilon(1e-11));
  // Heat-equation limit for large viscosity: u ~ -exp(-nu pi^2 t) sin(pi x).
  const double nu = 10.0, t = 0.05;
  CHECK(cole_hopf_exact(0.5, t, nu, 64) ==
        doctest::Approx(-std::exp(-nu * std::numbers::pi * std::numbers::pi * t))
            .epsilon(1e-2));
  CHECK_THROWS_AS(cole_hopf_exact(0.1, 0.0, 0.01, 64), Error);
  CHECK_THROWS_AS(cole_hopf_exact(0.1, 0.5, 0.01, 16), Error);
}

TEST_CASE("burgers fd: grid invariants") {
  const ReferenceGrid g = solve_burgers_fd(0.01, 257, 0.4);
  REQUIRE(g.values.rows() == 101);
  REQUIRE(g.values.cols() == 257);
  CHECK(g.bound_violations == 0);
  for (std::size_t i = 0; i < g.x_nodes.size(); ++i)
    CHECK(g.values(0, static_cast<Eigen::Index>(i)) == -sin_pi(g.x_nodes[i]));
  double asym = 0.0;
  for (Eigen::Index r = 0; r < g.values.rows(); ++r) {
    CHECK(g.values(r, 0) == 0.0);
    CHECK(g.values(r, 256) == 0.0);
    for (Eigen::Index i = 0; i < 257; ++i)
      asym = std::max(asym, std::abs(g.values(r, i) + g.values(r, 256 - i)));
  }
  CHECK(asym <= 1e-8);
  CHECK(g.values.allFinite());
  CHECK_THROWS_AS(solve_burgers_fd(0.01, 65, 0.4), Error);
  CHECK_THROWS_AS(solve_burgers_fd(0.01, 257, 0.6), Error);
}

TEST_CASE("burgers fd: error against the oracle shrinks under refinement") {
  double prev = 1.0;
  for (std::size_t n : {513u, 1025u, 2049u}) {
    const ReferenceGrid g = solve_burgers_fd(0.01, n, 0.4, {0.0, 0.5});
    const double err = rel_l2_vs_cole_hopf(g, 1, 0.01);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("allen-cahn fd: invariants") {
  const ReferenceGrid g = solve_allen_cahn_fd(1e-4, 257, 1e-3);
  CHECK(g.values.allFinite());
  for (std::size_t i = 0; i < g.x_nodes.size(); ++i) {
    const double x = g.x_nodes[i];
    if (i == 0 || i + 1 == g.x_nodes.size()) continue;
    CHECK(g.values(0, static_cast<Eigen::Index>(i)) ==
          ic_value(ProblemSpec::allen_cahn(), x));
  }
  for (Eigen::Index r = 0; r < g.values.rows(); ++r) {
    CHECK(g.values(r, 0) == -1.0);
    CHECK(g.values(r, g.values.cols() - 1) == -1.0);
  }
  CHECK(g.values.cwiseAbs().maxCoeff() <= 1.0 + 1e-8);
  CHECK(g.bound_violations == 0);

  const ReferenceGrid flat = solve_allen_cahn_fd(
      1e-4, 129, 1e-2, default_output_times(), [](double) { return -1.0; });
  CHECK((flat.values.array() == -1.0).all());
}

TEST_CASE("interpolate") {
  ReferenceGrid g;
  g.x_nodes = uniform_nodes(-1, 1, 5);
  g.t_nodes = {0.0, 0.5, 1.0};
  g.values.resize(3, 5);
  for (Eigen::Index r = 0; r < 3; ++r)
    for (Eigen::Index i = 0; i < 5; ++i)
      g.values(r, i) = 2.0 * g.x_nodes[static_cast<std::size_t>(i)] +
                       3.0 * g.t_nodes[static_cast<std::size_t>(r)] + 0.125;
  CHECK(interpolate(g, 0.5, 0.5) == g.values(1, 3));
  CHECK(interpolate(g, -1.0, 0.0) == g.values(0, 0));
  CHECK(interpolate(g, 1.0, 1.0) == g.values(2, 4));
  CHECK(interpolate(g, 0.25, 0.25) ==
        doctest::Approx(0.5 * (g.values(0, 2) + g.values(1, 3))));
  CHECK_THROWS_AS(interpolate(g, 1.01, 0.5), Error);
  CHECK_THROWS_AS(interpolate(g, 0.0, -0.1), Error);
}

TEST_CASE("interpolate: coarse round trip keeps oracle error") {
  const ReferenceGrid fine = solve_burgers_fd(0.01, 2049, 0.4, {0.0, 0.5});
  ReferenceGrid coarse;
  coarse.t_nodes = fine.t_nodes;
  for (std::size_t i = 0; i < fine.x_nodes.size(); i += 2)
    coarse.x_nodes.push_back(fine.x_nodes[i]);
  coarse.values.resize(2, static_cast<Eigen::Index>(coarse.x_nodes.size()));
  for (Eigen::Index i = 0; i < coarse.values.cols(); ++i)
    coarse.values.col(i) = fine.values.col(2 * i);
  ReferenceGrid back = fine;
  back.values = sample_grid(coarse, fine.x_nodes, fine.t_nodes);
  const double before = rel_l2_vs_cole_hopf(fine, 1, 0.01);
  const double after = rel_l2_vs_cole_hopf(back, 1, 0.01);
  CHECK(std::abs(after - before) <= 1e-4);
}

TEST_CASE("grid csv and json") {
  const ReferenceGrid g = solve_allen_cahn_fd(1e-4, 129, 1e-2, {0.0, 0.5, 1.0});
  const auto dir = std::filesystem::temp_directory_path();
  write_grid_csv(dir / "sp_grid.csv", g.x_nodes, g.t_nodes, g.values);
  const ReferenceGrid back = read_grid_csv(dir / "sp_grid.csv");
  CHECK(back.x_nodes == g.x_nodes);
  CHECK(back.t_nodes == g.t_nodes);
  CHECK(back.values == g.values);
  const std::string json = grid_to_json(g);
  CHECK(json.find("\"values\"") != std::string::npos);
  CHECK(json.find("\"scheme\"") != std::string::npos);
  std::filesystem::remove(dir / "sp_grid.csv");
}
