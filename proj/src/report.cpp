#include "report.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "error.hpp"

namespace stiffpinn {

namespace {

class NeumaierSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double relative_l2(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& ref) {
  if (pred.rows() != ref.rows() || pred.cols() != ref.cols())
    fail(ErrorCode::InvalidArgument, "relative_l2: shapes differ");
  const double denom = ref.norm();
  if (!(denom > 0.0))
    fail(ErrorCode::InvalidArgument, "relative_l2: reference has zero norm");
  return (pred - ref).norm() / denom;
}

BoundaryErrors boundary_errors(const Architecture& arch,
                               std::span<const double> params,
                               const ProblemSpec& spec, std::size_t n_t_eval) {
  if (n_t_eval < 2)
    fail(ErrorCode::InvalidArgument, "boundary_errors: need n_t_eval >= 2");
  const std::vector<double> ts = uniform_nodes(spec.t_min, spec.t_max, n_t_eval);
  BoundaryErrors out;
  for (Side side : {Side::Left, Side::Right}) {
    const std::vector<double> xs(n_t_eval, spec.boundary_x(side));
    const Eigen::VectorXd u = forward_values(arch, params, xs, ts);
    NeumaierSum abs_sum, sq_sum;
    for (std::size_t j = 0; j < n_t_eval; ++j) {
      const double e = u(static_cast<Eigen::Index>(j)) - bc_value(spec, side, ts[j]);
      abs_sum.add(std::abs(e));
      sq_sum.add(e * e);
    }
    const double n = static_cast<double>(n_t_eval);
    const double mae = abs_sum.value() / n;
    const double rmse = std::sqrt(sq_sum.value() / n);
    if (side == Side::Left) {
      out.left_mae = mae;
      out.left_rmse = rmse;
    } else {
      out.right_mae = mae;
      out.right_rmse = rmse;
    }
  }
  return out;
}

double mean_sq_residual(const Architecture& arch,
                        std::span<const double> params,
                        const ProblemSpec& spec, std::size_t n_eval,
                        std::uint64_t seed) {
  if (n_eval < 1)
    fail(ErrorCode::InvalidArgument, "mean_sq_residual: need n_eval >= 1");
  Rng rng(seed);
  std::vector<double> x(n_eval), t(n_eval);
  for (std::size_t i = 0; i < n_eval; ++i) {
    x[i] = rng.uniform(spec.x_min, spec.x_max);
    t[i] = rng.uniform(spec.t_min, spec.t_max);
  }
  const Eigen::VectorXd f =
      residual_values(spec, evaluate_jets(arch, params, x, t));
  NeumaierSum sum;
  for (Eigen::Index i = 0; i < f.size(); ++i) sum.add(f(i) * f(i));
  return sum.value() / static_cast<double>(n_eval);
}

EvalGrid make_eval_grid(std::size_t n_x, std::size_t n_t) {
  return EvalGrid{uniform_nodes(-1.0, 1.0, n_x), uniform_nodes(0.0, 1.0, n_t)};
}

Eigen::MatrixXd predict_grid(const Architecture& arch,
                             std::span<const double> params,
                             const EvalGrid& grid) {
  const std::size_t nx = grid.x_nodes.size();
  const std::size_t nt = grid.t_nodes.size();
  std::vector<double> x(nx * nt), t(nx * nt);
  for (std::size_t j = 0; j < nt; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      x[j * nx + i] = grid.x_nodes[i];
      t[j * nx + i] = grid.t_nodes[j];
    }
  const Eigen::VectorXd u = forward_values(arch, params, x, t);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(nx));
  for (std::size_t j = 0; j < nt; ++j)
    for (std::size_t i = 0; i < nx; ++i)
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
          u(static_cast<Eigen::Index>(j * nx + i));
  return out;
}

ReferenceGrid build_reference(ProblemKind kind) {
  if (kind == ProblemKind::Burgers) return solve_burgers_fd(0.01, 2049, 0.4);
  return solve_allen_cahn_fd(1e-4, 1025, 1e-4);
}

std::string metrics_to_json(const MetricsRecord& m) {
  nlohmann::ordered_json j;
  j["problem"] = m.problem;
  j["variant"] = m.variant;
  j["seed"] = m.seed;
  j["status"] = m.status;
  if (!m.message.empty()) j["message"] = m.message;
  if (m.rel_l2) {
    j["rel_l2"] = *m.rel_l2;
    j["reference"] = m.reference;
  }
  j["bc_left_mae"] = m.bc_left_mae;
  j["bc_right_mae"] = m.bc_right_mae;
  j["bc_left_rmse"] = m.bc_left_rmse;
  j["bc_right_rmse"] = m.bc_right_rmse;
  j["mean_sq_residual"] = m.mean_sq_residual;
  j["epochs_run"] = m.epochs_run;
  j["final_losses"] = {{"pde", m.final_losses[0]},
                       {"ic", m.final_losses[1]},
                       {"bc", m.final_losses[2]}};
  j["final_weights"] = {{"pde", m.final_weights[0]},
                        {"ic", m.final_weights[1]},
                        {"bc", m.final_weights[2]}};
  return j.dump(2) + "\n";
}

void ExperimentConfig::apply_desk_scale() {
  desk_scale = true;
  epochs = 1000;
  finetune_epochs = 400;
  sampler.n_f = 2000;
  sampler.n_i = 500;
  sampler.n_b = 500;
  sampler.pool_size = 20000;
}

TrainConfig ExperimentConfig::train_config(Variant variant,
                                           std::uint64_t seed) const {
  TrainConfig tc;
  tc.variant = variant;
  tc.epochs = epochs;
  tc.finetune_epochs = variant == Variant::AdaptiveColloc ? finetune_epochs : 0;
  tc.seed = seed;
  tc.arch = arch;
  tc.sampler = sampler;
  tc.balance = balance;
  tc.problem = ProblemSpec::make(problem);
  tc.lr = lr;
  tc.reset_adam_on_resample = reset_adam_on_resample;
  return tc;
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  ExperimentConfig c;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
  }
  if (!j.is_object())
    fail(ErrorCode::InvalidArgument, "config: expected a JSON object");

  static const std::vector<std::string> known{
      "problem",   "variant",     "seed",         "seeds",
      "epochs",    "finetune-epochs", "out",       "jobs",
      "desk-scale", "n-f",        "n-i",          "n-b",
      "pool-size", "lr",          "alpha",        "beta",
      "eps",       "w-min",       "hidden-layers", "hidden-width",
      "dump-points", "reset-adam", "verbose",     "eval-nx",
      "eval-nt"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      fail(ErrorCode::InvalidArgument, "config: unknown key '" + it.key() + "'");

  try {
    // desk-scale first so explicit values override the profile.
    if (j.value("desk-scale", false)) c.apply_desk_scale();
    if (j.contains("problem"))
      c.problem = parse_problem(j["problem"].get<std::string>());
    if (j.contains("variant")) {
      const auto v = j["variant"].get<std::string>();
      if (v == "all")
        c.variants = {Variant::Standard, Variant::Adaptive,
                      Variant::AdaptiveColloc};
      else
        c.variants = {parse_variant(v)};
    }
    auto parse_seeds = [](const nlohmann::json& s) {
      std::vector<std::uint64_t> seeds;
      if (s.is_array()) {
        for (const auto& v : s) seeds.push_back(v.get<std::uint64_t>());
      } else if (s.is_number_unsigned() || s.is_number_integer()) {
        seeds.push_back(s.get<std::uint64_t>());
      } else {
        std::string str = s.get<std::string>();
        std::size_t start = 0;
        while (start <= str.size()) {
          const std::size_t comma = str.find(',', start);
          const std::string tok = str.substr(start, comma - start);
          if (tok.empty() ||
              tok.find_first_not_of("0123456789") != std::string::npos)
            fail(ErrorCode::InvalidArgument, "config: bad seed list '" + str + "'");
          seeds.push_back(std::stoull(tok));
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
      }
      if (seeds.empty())
        fail(ErrorCode::InvalidArgument, "config: empty seed list");
      return seeds;
    };
    if (j.contains("seed")) c.seeds = parse_seeds(j["seed"]);
    if (j.contains("seeds")) c.seeds = parse_seeds(j["seeds"]);
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("finetune-epochs"))
      c.finetune_epochs = j["finetune-epochs"].get<int>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("jobs")) c.jobs = j["jobs"].get<int>();
    if (j.contains("n-f")) c.sampler.n_f = j["n-f"].get<std::size_t>();
    if (j.contains("n-i")) c.sampler.n_i = j["n-i"].get<std::size_t>();
    if (j.contains("n-b")) c.sampler.n_b = j["n-b"].get<std::size_t>();
    if (j.contains("pool-size"))
      c.sampler.pool_size = j["pool-size"].get<std::size_t>();
    if (j.contains("lr")) c.lr = j["lr"].get<double>();
    if (j.contains("alpha")) c.balance.alpha = j["alpha"].get<double>();
    if (j.contains("beta")) c.balance.beta = j["beta"].get<double>();
    if (j.contains("eps")) c.balance.eps = j["eps"].get<double>();
    if (j.contains("w-min")) c.balance.w_min = j["w-min"].get<double>();
    if (j.contains("hidden-layers"))
      c.arch.hidden_layers = j["hidden-layers"].get<int>();
    if (j.contains("hidden-width"))
      c.arch.hidden_width = j["hidden-width"].get<int>();
    if (j.contains("dump-points")) c.dump_points = j["dump-points"].get<bool>();
    if (j.contains("reset-adam"))
      c.reset_adam_on_resample = j["reset-adam"].get<bool>();
    if (j.contains("verbose")) c.verbose = j["verbose"].get<bool>();
    if (j.contains("eval-nx")) c.eval_nx = j["eval-nx"].get<std::size_t>();
    if (j.contains("eval-nt")) c.eval_nt = j["eval-nt"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
  }
  if (c.jobs < 1) fail(ErrorCode::InvalidArgument, "config: jobs must be >= 1");
  if (c.variants.empty())
    fail(ErrorCode::InvalidArgument, "config: no variants selected");
  for (Variant v : c.variants)
    c.train_config(v, c.seeds.front()).validate();
  return c;
}

MetricsRecord run_single(const ExperimentConfig& config, Variant variant,
                         std::uint64_t seed, const ReferenceGrid& reference,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  MetricsRecord m;
  m.problem = std::string(problem_name(config.problem));
  m.variant = std::string(variant_name(variant));
  m.seed = seed;

  const TrainConfig tc = config.train_config(variant, seed);
  const auto start = std::chrono::steady_clock::now();
  TrainResult result;
  try {
    result = train(tc);
  } catch (const Error& e) {
    m.status = e.code() == ErrorCode::Diverged ? "diverged" : "failed";
    m.message = e.what();
    m.wall_time_s = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    write_text(dir / "metrics.json", metrics_to_json(m));
    return m;
  }

  const ProblemSpec& spec = tc.problem;
  const EvalGrid eval = make_eval_grid(config.eval_nx, config.eval_nt);
  const Eigen::MatrixXd pred = predict_grid(tc.arch, result.params, eval);
  const Eigen::MatrixXd ref = sample_grid(reference, eval.x_nodes, eval.t_nodes);
  m.rel_l2 = relative_l2(pred, ref);
  m.reference = reference.scheme + " finite-difference, n_x = " +
                std::to_string(reference.x_nodes.size());
  const BoundaryErrors bc = boundary_errors(tc.arch, result.params, spec);
  m.bc_left_mae = bc.left_mae;
  m.bc_right_mae = bc.right_mae;
  m.bc_left_rmse = bc.left_rmse;
  m.bc_right_rmse = bc.right_rmse;
  m.mean_sq_residual = mean_sq_residual(tc.arch, result.params, spec);
  m.epochs_run = static_cast<int>(result.logs.epochs.size());
  if (!result.logs.epochs.empty()) {
    m.final_losses = result.logs.epochs.back().losses;
    m.final_weights = result.logs.epochs.back().weights;
  }
  m.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  write_text(dir / "metrics.json", metrics_to_json(m));
  write_train_log_csv(dir / "train_log.csv", result.logs);
  save_checkpoint(dir / "checkpoint.json",
                  Checkpoint{tc.arch, seed, result.params});
  write_grid_csv(dir / "solution_grid.csv", eval.x_nodes, eval.t_nodes, pred);
  if (config.dump_points) write_interior_csv(dir / "points.csv", result.final_points);
  return m;
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                std::ostream* progress) {
  std::filesystem::create_directories(config.out);
  const std::string pname(problem_name(config.problem));
  const std::filesystem::path problem_dir = config.out / pname;
  std::filesystem::create_directories(problem_dir);

  const ReferenceGrid reference = build_reference(config.problem);
  write_grid_csv(problem_dir / "reference_grid.csv", reference.x_nodes,
                 reference.t_nodes, reference.values);

  struct Job {
    Variant variant;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (Variant v : config.variants)
    for (std::uint64_t s : config.seeds) jobs.push_back({v, s});
  std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
    const auto na = variant_name(a.variant), nb = variant_name(b.variant);
    if (na != nb) return na < nb;
    return a.seed < b.seed;
  });
  jobs.erase(std::unique(jobs.begin(), jobs.end(),
                         [](const Job& a, const Job& b) {
                           return a.variant == b.variant && a.seed == b.seed;
                         }),
             jobs.end());

  ExperimentResult result;
  result.runs.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      const auto dir = problem_dir / std::string(variant_name(job.variant)) /
                       ("seed_" + std::to_string(job.seed));
      result.runs[i] = run_single(config, job.variant, job.seed, reference, dir);
      if (progress) {
        std::lock_guard lock(progress_mutex);
        const MetricsRecord& m = result.runs[i];
        *progress << pname << " " << m.variant << " seed " << m.seed << ": "
                  << m.status;
        if (m.rel_l2) *progress << " rel_l2=" << *m.rel_l2;
        *progress << " bc=(" << m.bc_left_mae << ", " << m.bc_right_mae
                  << ") res=" << m.mean_sq_residual << " [" << m.wall_time_s
                  << " s]\n";
      }
    }
  };
  const int n_threads =
      std::max(1, std::min<int>(config.jobs, static_cast<int>(jobs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int k = 0; k < n_threads; ++k) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }

  write_summary_csv(config.out / "summary.csv", result.runs);
  for (const MetricsRecord& m : result.runs)
    if (m.status != "ok") result.exit_code = 2;
  return result;
}

void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<MetricsRecord>& runs) {
  std::vector<MetricsRecord> sorted = runs;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const MetricsRecord& a, const MetricsRecord& b) {
                     return std::tie(a.problem, a.variant, a.seed) <
                            std::tie(b.problem, b.variant, b.seed);
                   });
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << "problem,variant,seed,status,rel_l2,bc_left_mae,bc_right_mae,"
         "bc_left_rmse,bc_right_rmse,mean_sq_residual,wall_time_s,epochs_run\n";
  auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  for (const MetricsRecord& m : sorted)
    out << m.problem << ',' << m.variant << ',' << m.seed << ',' << m.status
        << ',' << opt(m.rel_l2) << ',' << format_double(m.bc_left_mae) << ','
        << format_double(m.bc_right_mae) << ','
        << format_double(m.bc_left_rmse) << ','
        << format_double(m.bc_right_rmse) << ','
        << format_double(m.mean_sq_residual) << ','
        << format_double(m.wall_time_s) << ',' << m.epochs_run << '\n';

  // Median row per (problem, variant) over the successful seeds.
  std::map<std::pair<std::string, std::string>, std::vector<const MetricsRecord*>>
      groups;
  for (const MetricsRecord& m : sorted)
    if (m.status == "ok") groups[{m.problem, m.variant}].push_back(&m);
  for (const auto& [key, members] : groups) {
    auto med = [&](auto field) {
      std::vector<double> v;
      for (const MetricsRecord* m : members) v.push_back(field(*m));
      return format_double(median(v));
    };
    std::string rel;
    if (std::all_of(members.begin(), members.end(),
                    [](const MetricsRecord* m) { return m->rel_l2.has_value(); }))
      rel = med([](const MetricsRecord& m) { return *m.rel_l2; });
    out << key.first << ',' << key.second << ",median,ok," << rel << ','
        << med([](const MetricsRecord& m) { return m.bc_left_mae; }) << ','
        << med([](const MetricsRecord& m) { return m.bc_right_mae; }) << ','
        << med([](const MetricsRecord& m) { return m.bc_left_rmse; }) << ','
        << med([](const MetricsRecord& m) { return m.bc_right_rmse; }) << ','
        << med([](const MetricsRecord& m) { return m.mean_sq_residual; }) << ','
        << med([](const MetricsRecord& m) { return m.wall_time_s; }) << ','
        << members.front()->epochs_run << '\n';
  }
}

}  // namespace stiffpinn
