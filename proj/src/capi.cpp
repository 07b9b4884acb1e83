#include "stiffpinn/stiffpinn.h"

#include <cmath>
#include <iostream>
#include <new>
#include <string>

#include "error.hpp"
#include "report.hpp"

using namespace stiffpinn;

struct sp_network {
  Architecture arch;
  std::uint64_t seed = 0;
  ParamVector params;
};

struct sp_tape {
  Tape tape;
};

struct sp_weights {
  WeightState state;
};

struct sp_grid {
  ReferenceGrid grid;
};

static_assert(static_cast<int>(OpKind::Add) == SP_OP_ADD &&
              static_cast<int>(OpKind::Affine) == SP_OP_AFFINE &&
              static_cast<int>(OpKind::Custom) == SP_OP_CUSTOM);

namespace {

thread_local std::string g_last_error;

sp_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return SP_ERR_INVALID_ARGUMENT;
    case ErrorCode::OutOfDomain: return SP_ERR_OUT_OF_DOMAIN;
    case ErrorCode::NonFinite: return SP_ERR_NON_FINITE;
    case ErrorCode::Diverged: return SP_ERR_DIVERGED;
    case ErrorCode::Io: return SP_ERR_IO;
  }
  return SP_ERR_INTERNAL;
}

template <typename F>
sp_status guarded(F&& body) {
  try {
    body();
    return SP_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SP_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SP_ERR_INTERNAL;
  }
}

template <typename T>
void require(const T* p, const char* what) {
  if (p == nullptr)
    fail(ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

ProblemSpec problem_of(sp_problem p) {
  if (p == SP_PROBLEM_BURGERS) return ProblemSpec::burgers();
  if (p == SP_PROBLEM_ALLEN_CAHN) return ProblemSpec::allen_cahn();
  fail(ErrorCode::InvalidArgument, "unknown problem id " + std::to_string(p));
}

Side side_of(int side) {
  if (side == SP_SIDE_LEFT) return Side::Left;
  if (side == SP_SIDE_RIGHT) return Side::Right;
  fail(ErrorCode::InvalidArgument, "invalid side " + std::to_string(side));
}

}  // namespace

extern "C" {

const char* sp_version(void) { return "1.0.0"; }

const char* sp_last_error(void) { return g_last_error.c_str(); }

sp_status sp_network_create(int hidden_layers, int hidden_width, uint64_t seed,
                            sp_network** out) {
  return guarded([&] {
    require(out, "out");
    Architecture arch;
    arch.hidden_layers = hidden_layers;
    arch.hidden_width = hidden_width;
    arch.validate();
    *out = new sp_network{arch, seed, init_params(arch, seed)};
  });
}

void sp_network_destroy(sp_network* net) { delete net; }

size_t sp_network_param_count(const sp_network* net) {
  return net ? net->params.size() : 0;
}

sp_status sp_network_get_params(const sp_network* net, double* out, size_t n) {
  return guarded([&] {
    require(net, "net");
    require(out, "out");
    if (n != net->params.size())
      fail(ErrorCode::InvalidArgument, "parameter count mismatch");
    std::copy(net->params.begin(), net->params.end(), out);
  });
}

sp_status sp_network_set_params(sp_network* net, const double* params,
                                size_t n) {
  return guarded([&] {
    require(net, "net");
    require(params, "params");
    if (n != net->params.size())
      fail(ErrorCode::InvalidArgument, "parameter count mismatch");
    for (size_t i = 0; i < n; ++i)
      if (!std::isfinite(params[i]))
        fail(ErrorCode::NonFinite, "non-finite parameter " + std::to_string(i));
    net->params.assign(params, params + n);
  });
}

sp_status sp_network_value(const sp_network* net, double x, double t,
                           double* out) {
  return guarded([&] {
    require(net, "net");
    require(out, "out");
    *out = forward_value(net->arch, net->params, x, t);
  });
}

sp_status sp_network_jet(const sp_network* net, double x, double t,
                         double out[4]) {
  return guarded([&] {
    require(net, "net");
    require(out, "out");
    const JetValues j = evaluate_jets(net->arch, net->params,
                                      std::span<const double>(&x, 1),
                                      std::span<const double>(&t, 1));
    out[0] = j.u(0);
    out[1] = j.u_x(0);
    out[2] = j.u_t(0);
    out[3] = j.u_xx(0);
  });
}

sp_status sp_network_residual(const sp_network* net, sp_problem problem,
                              double x, double t, double* out) {
  return guarded([&] {
    require(net, "net");
    require(out, "out");
    const JetValues j = evaluate_jets(net->arch, net->params,
                                      std::span<const double>(&x, 1),
                                      std::span<const double>(&t, 1));
    *out = residual_values(problem_of(problem), j)(0);
  });
}

sp_status sp_network_boundary_errors(const sp_network* net, sp_problem problem,
                                     size_t n_t, double* left, double* right) {
  return guarded([&] {
    require(net, "net");
    require(left, "left");
    require(right, "right");
    const BoundaryErrors e =
        boundary_errors(net->arch, net->params, problem_of(problem), n_t);
    *left = e.left_mae;
    *right = e.right_mae;
  });
}

sp_status sp_network_mean_sq_residual(const sp_network* net, sp_problem problem,
                                      size_t n_eval, uint64_t seed,
                                      double* out) {
  return guarded([&] {
    require(net, "net");
    require(out, "out");
    *out = mean_sq_residual(net->arch, net->params, problem_of(problem), n_eval,
                            seed);
  });
}

sp_status sp_network_save(const sp_network* net, const char* path) {
  return guarded([&] {
    require(net, "net");
    require(path, "path");
    save_checkpoint(path, Checkpoint{net->arch, net->seed, net->params});
  });
}

sp_status sp_network_load(const char* path, sp_network** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    Checkpoint c = load_checkpoint(path);
    *out = new sp_network{c.arch, c.seed, std::move(c.params)};
  });
}

sp_status sp_problem_ic(sp_problem problem, double x, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = ic_value(problem_of(problem), x);
  });
}

sp_status sp_problem_bc(sp_problem problem, int side, double t, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = bc_value(problem_of(problem), side_of(side), t);
  });
}

sp_status sp_tape_create(sp_tape** out) {
  return guarded([&] {
    require(out, "out");
    *out = new sp_tape{};
  });
}

void sp_tape_destroy(sp_tape* tape) { delete tape; }

sp_status sp_tape_param(sp_tape* tape, const double* params, size_t n_params,
                        size_t index, uint32_t* id) {
  return guarded([&] {
    require(tape, "tape");
    require(params, "params");
    require(id, "id");
    if (index >= n_params)
      fail(ErrorCode::InvalidArgument, "parameter index out of range");
    *id = tape->tape
              .param(std::span<const double>(params, n_params), index, 1, 1)
              .index;
  });
}

sp_status sp_tape_record(sp_tape* tape, int op_kind, const uint32_t* inputs,
                         size_t n_inputs, const double* coeffs,
                         size_t n_coeffs, double value, uint32_t* id) {
  return guarded([&] {
    require(tape, "tape");
    require(id, "id");
    if (n_inputs > 0) require(inputs, "inputs");
    if (n_coeffs > 0) require(coeffs, "coeffs");
    switch (op_kind) {
      case SP_OP_CONSTANT: case SP_OP_ADD: case SP_OP_SUB: case SP_OP_MUL:
      case SP_OP_SQUARE: case SP_OP_TANH: case SP_OP_SCALE: case SP_OP_AFFINE:
      case SP_OP_MEAN_SQUARES: case SP_OP_CUSTOM:
        break;
      default:
        fail(ErrorCode::InvalidArgument,
             "unknown op kind " + std::to_string(op_kind));
    }
    std::vector<NodeId> ids(n_inputs);
    for (size_t i = 0; i < n_inputs; ++i) ids[i] = NodeId{inputs[i]};
    *id = tape->tape
              .record(static_cast<OpKind>(op_kind), ids,
                      std::span<const double>(coeffs, n_coeffs), value)
              .index;
  });
}

sp_status sp_tape_value(const sp_tape* tape, uint32_t id, double* out) {
  return guarded([&] {
    require(tape, "tape");
    require(out, "out");
    *out = tape->tape.scalar(NodeId{id});
  });
}

sp_status sp_tape_backward(const sp_tape* tape, uint32_t root, double* grad,
                           size_t n_params) {
  return guarded([&] {
    require(tape, "tape");
    if (n_params > 0) require(grad, "grad");
    const GradVector g = tape->tape.backward(NodeId{root}, n_params);
    std::copy(g.begin(), g.end(), grad);
  });
}

sp_status sp_weights_create(double alpha, double beta, double eps,
                            double w_min, sp_weights** out) {
  return guarded([&] {
    require(out, "out");
    *out = new sp_weights{WeightState(BalanceHyper{alpha, beta, eps, w_min})};
  });
}

void sp_weights_destroy(sp_weights* w) { delete w; }

sp_status sp_weights_update(sp_weights* w, const double norms[3],
                            double weights_out[3]) {
  return guarded([&] {
    require(w, "weights");
    require(norms, "norms");
    require(weights_out, "weights_out");
    w->state.smooth_update(norms[0], norms[1], norms[2]);
    const Triple out = w->state.compute_weights();
    for (int k = 0; k < 3; ++k) weights_out[k] = out[k];
  });
}

sp_status sp_grid_solve_burgers(double nu, size_t n_x, double cfl,
                                sp_grid** out) {
  return guarded([&] {
    require(out, "out");
    *out = new sp_grid{solve_burgers_fd(nu, n_x, cfl)};
  });
}

sp_status sp_grid_solve_allen_cahn(double eps2, size_t n_x, double dt_max,
                                   sp_grid** out) {
  return guarded([&] {
    require(out, "out");
    *out = new sp_grid{solve_allen_cahn_fd(eps2, n_x, dt_max)};
  });
}

void sp_grid_destroy(sp_grid* grid) { delete grid; }

sp_status sp_grid_dims(const sp_grid* grid, size_t* n_t, size_t* n_x) {
  return guarded([&] {
    require(grid, "grid");
    require(n_t, "n_t");
    require(n_x, "n_x");
    *n_t = grid->grid.t_nodes.size();
    *n_x = grid->grid.x_nodes.size();
  });
}

sp_status sp_grid_interpolate(const sp_grid* grid, double x, double t,
                              double* out) {
  return guarded([&] {
    require(grid, "grid");
    require(out, "out");
    *out = interpolate(grid->grid, x, t);
  });
}

sp_status sp_grid_write_csv(const sp_grid* grid, const char* path) {
  return guarded([&] {
    require(grid, "grid");
    require(path, "path");
    write_grid_csv(path, grid->grid.x_nodes, grid->grid.t_nodes,
                   grid->grid.values);
  });
}

sp_status sp_grid_write_json(const sp_grid* grid, const char* path) {
  return guarded([&] {
    require(grid, "grid");
    require(path, "path");
    write_grid_json(path, grid->grid);
  });
}

sp_status sp_cole_hopf(double x, double t, double nu, size_t quad_order,
                       double* out) {
  return guarded([&] {
    require(out, "out");
    *out = cole_hopf_exact(x, t, nu, quad_order);
  });
}

sp_status sp_train(const char* config_json, const char* log_csv_path,
                   sp_network** net) {
  return guarded([&] {
    require(config_json, "config_json");
    require(net, "net");
    const ExperimentConfig config = experiment_config_from_json(config_json);
    if (config.variants.size() != 1 || config.seeds.size() != 1)
      fail(ErrorCode::InvalidArgument,
           "sp_train: config must name exactly one variant and one seed");
    const TrainConfig tc =
        config.train_config(config.variants.front(), config.seeds.front());
    TrainResult result = train(tc);
    if (log_csv_path) write_train_log_csv(log_csv_path, result.logs);
    *net = new sp_network{tc.arch, tc.seed, std::move(result.params)};
  });
}

sp_status sp_experiment_run(const char* config_json, int verbose,
                            int* exit_code) {
  return guarded([&] {
    require(config_json, "config_json");
    require(exit_code, "exit_code");
    const ExperimentConfig config = experiment_config_from_json(config_json);
    const ExperimentResult result =
        run_experiment(config, verbose ? &std::cerr : nullptr);
    *exit_code = result.exit_code;
  });
}

}  // extern "C"
