// stiffpinn command-line driver. Everything goes through the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "stiffpinn/stiffpinn.h"

namespace {

int report_failure(const char* what, sp_status status) {
  std::fprintf(stderr, "stiffpinn: %s failed (status %d): %s\n", what,
               static_cast<int>(status), sp_last_error());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed network training lab for stiff PDEs"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Train and evaluate a variant x seed matrix");
  std::string problem = "burgers";
  std::string variant = "standard";
  std::string seeds = "0";
  int epochs = 5000;
  int finetune_epochs = 2000;
  std::string out_dir = "runs";
  std::string config_file;
  int jobs = 1;
  bool desk_scale = false;
  bool dump_points = false;
  bool verbose = false;
  double lr = 1e-3;
  std::size_t n_f = 10000, n_i = 2000, n_b = 2000, pool = 100000;

  run->add_option("--problem", problem, "burgers | allen-cahn")
      ->check(CLI::IsMember({"burgers", "allen-cahn"}));
  run->add_option("--variant", variant,
                  "standard | adaptive | adaptive-colloc | all")
      ->check(CLI::IsMember({"standard", "adaptive", "adaptive-colloc", "all"}));
  auto* seed_opt = run->add_option("--seed", seeds, "Training seed");
  run->add_option("--seeds", seeds, "Comma-separated training seeds")
      ->excludes(seed_opt);
  run->add_option("--epochs", epochs, "Adam epochs before any resampling");
  run->add_option("--finetune-epochs", finetune_epochs,
                  "Epochs after residual resampling (adaptive-colloc only)");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--config", config_file,
                  "Flat JSON file with the same keys as these flags");
  run->add_option("--jobs", jobs, "Runs executed concurrently")
      ->check(CLI::PositiveNumber);
  run->add_flag("--desk-scale", desk_scale,
                "Reduced profile: 1000 epochs, 2000 interior points");
  run->add_option("--lr", lr, "Adam learning rate");
  run->add_option("--n-f", n_f, "Interior collocation points");
  run->add_option("--n-i", n_i, "Initial-condition points");
  run->add_option("--n-b", n_b, "Boundary points");
  run->add_option("--pool-size", pool, "Candidate pool for residual resampling");
  run->add_flag("--dump-points", dump_points,
                "Write the final interior point set to points.csv");
  run->add_flag("-v,--verbose", verbose, "Print one line per finished run");

  auto* ref = app.add_subcommand("reference", "Write a reference solution grid");
  std::string ref_problem = "burgers";
  std::string ref_out = "reference_grid.csv";
  std::size_t ref_nx = 0;
  ref->add_option("--problem", ref_problem, "burgers | allen-cahn")
      ->check(CLI::IsMember({"burgers", "allen-cahn"}));
  ref->add_option("--out", ref_out, "Output file (.csv or .json)");
  ref->add_option("--nx", ref_nx, "Spatial nodes (default 2049 / 1025)");

  CLI11_PARSE(app, argc, argv);

  if (*ref) {
    sp_grid* grid = nullptr;
    sp_status st;
    if (ref_problem == "burgers")
      st = sp_grid_solve_burgers(0.01, ref_nx ? ref_nx : 2049, 0.4, &grid);
    else
      st = sp_grid_solve_allen_cahn(1e-4, ref_nx ? ref_nx : 1025, 1e-4, &grid);
    if (st != SP_OK) return report_failure("reference solve", st);
    const bool json = ref_out.size() > 5 &&
                      ref_out.compare(ref_out.size() - 5, 5, ".json") == 0;
    st = json ? sp_grid_write_json(grid, ref_out.c_str())
              : sp_grid_write_csv(grid, ref_out.c_str());
    sp_grid_destroy(grid);
    if (st != SP_OK) return report_failure("writing the grid", st);
    return 0;
  }

  nlohmann::json config = nlohmann::json::object();
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) {
      std::fprintf(stderr, "stiffpinn: cannot read %s\n", config_file.c_str());
      return 1;
    }
    try {
      config = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      std::fprintf(stderr, "stiffpinn: %s: %s\n", config_file.c_str(), e.what());
      return 1;
    }
  }
  // Flags given on the command line override the config file.
  auto given = [&](const char* name) { return run->count(name) > 0; };
  if (desk_scale) config["desk-scale"] = true;
  if (given("--problem")) config["problem"] = problem;
  if (given("--variant")) config["variant"] = variant;
  if (given("--seed") || given("--seeds")) config["seeds"] = seeds;
  if (given("--epochs")) config["epochs"] = epochs;
  if (given("--finetune-epochs")) config["finetune-epochs"] = finetune_epochs;
  if (given("--out")) config["out"] = out_dir;
  if (given("--jobs")) config["jobs"] = jobs;
  if (given("--lr")) config["lr"] = lr;
  if (given("--n-f")) config["n-f"] = n_f;
  if (given("--n-i")) config["n-i"] = n_i;
  if (given("--n-b")) config["n-b"] = n_b;
  if (given("--pool-size")) config["pool-size"] = pool;
  if (dump_points) config["dump-points"] = true;
  if (!config.contains("out")) config["out"] = out_dir;

  int exit_code = 0;
  const std::string text = config.dump();
  const sp_status st = sp_experiment_run(text.c_str(), verbose ? 1 : 0, &exit_code);
  if (st != SP_OK) return report_failure("experiment", st);
  if (exit_code != 0)
    std::fprintf(stderr, "stiffpinn: one or more runs failed; see summary.csv\n");
  return exit_code;
}
