// Exercises the shared library through its C header only.

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "stiffpinn/stiffpinn.h"

namespace {

std::filesystem::path tmp_dir() {
  const char* env = std::getenv("SP_TEST_TMP");
  auto dir = env ? std::filesystem::path(env)
                 : std::filesystem::temp_directory_path() / "stiffpinn_capi";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("capi: version and errors") {
  CHECK(std::string(sp_version()).size() > 0);
  sp_network* net = nullptr;
  CHECK(sp_network_create(0, 50, 0, &net) == SP_ERR_INVALID_ARGUMENT);
  CHECK(net == nullptr);
  CHECK(std::string(sp_last_error()).size() > 0);
  CHECK(sp_network_create(7, 50, 0, nullptr) == SP_ERR_INVALID_ARGUMENT);
  double v = 0.0;
  CHECK(sp_problem_ic(SP_PROBLEM_BURGERS, 2.0, &v) == SP_ERR_OUT_OF_DOMAIN);
  CHECK(sp_problem_ic(static_cast<sp_problem>(7), 0.0, &v) ==
        SP_ERR_INVALID_ARGUMENT);
}

TEST_CASE("capi: network") {
  sp_network* net = nullptr;
  REQUIRE(sp_network_create(7, 50, 3, &net) == SP_OK);
  CHECK(sp_network_param_count(net) == 15501);

  std::vector<double> p(15501);
  REQUIRE(sp_network_get_params(net, p.data(), p.size()) == SP_OK);
  CHECK(sp_network_get_params(net, p.data(), 10) == SP_ERR_INVALID_ARGUMENT);

  double jet[4], u = 0.0, f = 0.0;
  REQUIRE(sp_network_jet(net, 0.3, 0.4, jet) == SP_OK);
  REQUIRE(sp_network_value(net, 0.3, 0.4, &u) == SP_OK);
  CHECK(std::abs(u - jet[0]) <= 1e-12);
  REQUIRE(sp_network_residual(net, SP_PROBLEM_BURGERS, 0.3, 0.4, &f) == SP_OK);
  CHECK(f == doctest::Approx(jet[2] + jet[0] * jet[1] - 0.01 * jet[3]));
  CHECK(sp_network_value(net, NAN, 0.4, &u) == SP_ERR_NON_FINITE);

  std::fill(p.begin(), p.end(), 0.0);
  REQUIRE(sp_network_set_params(net, p.data(), p.size()) == SP_OK);
  double left = -1, right = -1, msr = -1;
  REQUIRE(sp_network_boundary_errors(net, SP_PROBLEM_ALLEN_CAHN, 100, &left,
                                     &right) == SP_OK);
  CHECK(left == 1.0);
  CHECK(right == 1.0);
  REQUIRE(sp_network_mean_sq_residual(net, SP_PROBLEM_BURGERS, 1000, 1, &msr) ==
          SP_OK);
  CHECK(msr == 0.0);

  const auto path = (tmp_dir() / "net.json").string();
  p[15500] = 0.25;
  REQUIRE(sp_network_set_params(net, p.data(), p.size()) == SP_OK);
  REQUIRE(sp_network_save(net, path.c_str()) == SP_OK);
  sp_network* back = nullptr;
  REQUIRE(sp_network_load(path.c_str(), &back) == SP_OK);
  REQUIRE(sp_network_value(back, -0.5, 0.5, &u) == SP_OK);
  CHECK(u == 0.25);
  CHECK(sp_network_load("/nonexistent/net.json", &back) == SP_ERR_IO);
  sp_network_destroy(back);
  sp_network_destroy(net);
  sp_network_destroy(nullptr);
}

TEST_CASE("capi: tape") {
  sp_tape* tape = nullptr;
  REQUIRE(sp_tape_create(&tape) == SP_OK);
  const double params[] = {3.0, 0.5};
  uint32_t a = 0, b = 0, sq = 0, th = 0, sum = 0;
  REQUIRE(sp_tape_param(tape, params, 2, 0, &a) == SP_OK);
  REQUIRE(sp_tape_param(tape, params, 2, 1, &b) == SP_OK);
  REQUIRE(sp_tape_record(tape, SP_OP_SQUARE, &a, 1, nullptr, 0, 0.0, &sq) == SP_OK);
  REQUIRE(sp_tape_record(tape, SP_OP_TANH, &b, 1, nullptr, 0, 0.0, &th) == SP_OK);
  const uint32_t pair[] = {sq, th};
  REQUIRE(sp_tape_record(tape, SP_OP_ADD, pair, 2, nullptr, 0, 0.0, &sum) == SP_OK);
  double v = 0.0;
  REQUIRE(sp_tape_value(tape, sum, &v) == SP_OK);
  CHECK(v == doctest::Approx(9.0 + std::tanh(0.5)));
  double g[2];
  REQUIRE(sp_tape_backward(tape, sum, g, 2) == SP_OK);
  CHECK(g[0] == doctest::Approx(6.0));
  CHECK(g[1] == doctest::Approx(1.0 - std::tanh(0.5) * std::tanh(0.5)));

  uint32_t bad = 0;
  CHECK(sp_tape_record(tape, 11, &a, 1, nullptr, 0, 0.0, &bad) ==
        SP_ERR_INVALID_ARGUMENT);
  CHECK(sp_tape_record(tape, 1, &a, 1, nullptr, 0, 0.0, &bad) ==
        SP_ERR_INVALID_ARGUMENT);
  CHECK(sp_tape_record(tape, 99, &a, 1, nullptr, 0, 0.0, &bad) ==
        SP_ERR_INVALID_ARGUMENT);
  CHECK(sp_tape_param(tape, params, 2, 2, &bad) == SP_ERR_INVALID_ARGUMENT);
  sp_tape_destroy(tape);
}

TEST_CASE("capi: weights") {
  sp_weights* w = nullptr;
  REQUIRE(sp_weights_create(0.5, 0.9, 1e-8, 0.05, &w) == SP_OK);
  const double norms[] = {100.0, 1.0, 1.0};
  double out[3];
  REQUIRE(sp_weights_update(w, norms, out) == SP_OK);
  CHECK(out[0] == doctest::Approx(0.05));
  CHECK(out[1] == doctest::Approx(0.475));
  const double bad[] = {-1.0, 1.0, 1.0};
  CHECK(sp_weights_update(w, bad, out) == SP_ERR_NON_FINITE);
  sp_weights_destroy(w);
  CHECK(sp_weights_create(0.5, 1.5, 1e-8, 0.05, &w) == SP_ERR_INVALID_ARGUMENT);
}

TEST_CASE("capi: reference grids") {
  sp_grid* g = nullptr;
  REQUIRE(sp_grid_solve_burgers(0.01, 257, 0.4, &g) == SP_OK);
  size_t nt = 0, nx = 0;
  REQUIRE(sp_grid_dims(g, &nt, &nx) == SP_OK);
  CHECK(nt == 101);
  CHECK(nx == 257);
  double v = 1.0;
  REQUIRE(sp_grid_interpolate(g, 1.0, 0.5, &v) == SP_OK);
  CHECK(v == 0.0);
  CHECK(sp_grid_interpolate(g, 1.5, 0.5, &v) == SP_ERR_OUT_OF_DOMAIN);
  const auto csv = (tmp_dir() / "grid.csv").string();
  const auto json = (tmp_dir() / "grid.json").string();
  CHECK(sp_grid_write_csv(g, csv.c_str()) == SP_OK);
  CHECK(sp_grid_write_json(g, json.c_str()) == SP_OK);
  CHECK(std::filesystem::file_size(csv) > 0);
  sp_grid_destroy(g);

  CHECK(sp_grid_solve_burgers(0.01, 100, 0.4, &g) == SP_ERR_INVALID_ARGUMENT);
  REQUIRE(sp_grid_solve_allen_cahn(1e-4, 129, 1e-2, &g) == SP_OK);
  REQUIRE(sp_grid_interpolate(g, -1.0, 0.7, &v) == SP_OK);
  CHECK(v == -1.0);
  sp_grid_destroy(g);

  double u = 0.0;
  REQUIRE(sp_cole_hopf(0.25, 0.5, 0.01, 128, &u) == SP_OK);
  CHECK(u == doctest::Approx(-0.8380331348603).epsilon(1e-11));
  CHECK(sp_cole_hopf(0.25, 0.0, 0.01, 128, &u) == SP_ERR_INVALID_ARGUMENT);
}

TEST_CASE("capi: training") {
  const std::string cfg =
      R"({"problem":"allen-cahn","variant":"adaptive","seed":1,"epochs":5,)"
      R"("n-f":64,"n-i":16,"n-b":16,"pool-size":128,)"
      R"("hidden-layers":2,"hidden-width":6})";
  const auto log = (tmp_dir() / "train_log.csv").string();
  sp_network* net = nullptr;
  REQUIRE(sp_train(cfg.c_str(), log.c_str(), &net) == SP_OK);
  CHECK(sp_network_param_count(net) == 2 * 6 + 6 + 6 * 6 + 6 + 6 + 1);
  CHECK(std::filesystem::exists(log));
  sp_network_destroy(net);
  CHECK(sp_train(R"({"variant":"all"})", nullptr, &net) ==
        SP_ERR_INVALID_ARGUMENT);

  const std::string exp = R"({"problem":"burgers","variant":"standard",)"
                          R"("epochs":2,"n-f":32,"n-i":8,"n-b":8,)"
                          R"("pool-size":64,"hidden-layers":1,"hidden-width":4,)"
                          R"("out":")" + (tmp_dir() / "exp").string() + "\"}";
  int code = -1;
  REQUIRE(sp_experiment_run(exp.c_str(), 0, &code) == SP_OK);
  CHECK(code == 0);
  CHECK(std::filesystem::exists(tmp_dir() / "exp" / "summary.csv"));
  CHECK(sp_experiment_run("{", 0, &code) == SP_ERR_INVALID_ARGUMENT);
}
