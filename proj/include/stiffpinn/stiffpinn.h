/*
 * stiffpinn: physics-informed networks for the viscous Burgers and
 * Allen-Cahn benchmarks, with finite-difference reference solvers.
 *
 * C interface. Objects are opaque handles created by *_create / *_load /
 * *_solve functions and released with the matching *_destroy. Every
 * fallible call returns an sp_status; on failure sp_last_error() holds a
 * message for the calling thread until its next failing call.
 */
#ifndef STIFFPINN_STIFFPINN_H
#define STIFFPINN_STIFFPINN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(STIFFPINN_BUILDING)
#    define SP_API __declspec(dllexport)
#  else
#    define SP_API __declspec(dllimport)
#  endif
#else
#  define SP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sp_status {
  SP_OK = 0,
  SP_ERR_INVALID_ARGUMENT = 1,
  SP_ERR_OUT_OF_DOMAIN = 2,
  SP_ERR_NON_FINITE = 3,
  SP_ERR_DIVERGED = 4,
  SP_ERR_IO = 5,
  SP_ERR_INTERNAL = 6
} sp_status;

typedef enum sp_problem {
  SP_PROBLEM_BURGERS = 0,
  SP_PROBLEM_ALLEN_CAHN = 1
} sp_problem;

typedef enum sp_side { SP_SIDE_LEFT = 0, SP_SIDE_RIGHT = 1 } sp_side;

/* Op kinds accepted by sp_tape_record. */
typedef enum sp_op {
  SP_OP_CONSTANT = 0,
  SP_OP_ADD = 2,
  SP_OP_SUB = 3,
  SP_OP_MUL = 4,
  SP_OP_SQUARE = 5,
  SP_OP_TANH = 6,
  SP_OP_SCALE = 7,
  SP_OP_AFFINE = 8,
  SP_OP_MEAN_SQUARES = 9,
  SP_OP_CUSTOM = 10
} sp_op;

SP_API const char* sp_version(void);
SP_API const char* sp_last_error(void);

/* ---- Network ---------------------------------------------------------- */

typedef struct sp_network sp_network;

/* Glorot-uniform weights, zero biases; 2 inputs (x, t), 1 output. */
SP_API sp_status sp_network_create(int hidden_layers, int hidden_width,
                                   uint64_t seed, sp_network** out);
SP_API void sp_network_destroy(sp_network* net);
SP_API size_t sp_network_param_count(const sp_network* net);
SP_API sp_status sp_network_get_params(const sp_network* net, double* out,
                                       size_t n);
SP_API sp_status sp_network_set_params(sp_network* net, const double* params,
                                       size_t n);
SP_API sp_status sp_network_value(const sp_network* net, double x, double t,
                                  double* out);
/* out = (u, u_x, u_t, u_xx) */
SP_API sp_status sp_network_jet(const sp_network* net, double x, double t,
                                double out[4]);
SP_API sp_status sp_network_residual(const sp_network* net, sp_problem problem,
                                     double x, double t, double* out);
/* Mean absolute boundary error over n_t uniformly spaced times. */
SP_API sp_status sp_network_boundary_errors(const sp_network* net,
                                            sp_problem problem, size_t n_t,
                                            double* left, double* right);
SP_API sp_status sp_network_mean_sq_residual(const sp_network* net,
                                             sp_problem problem, size_t n_eval,
                                             uint64_t seed, double* out);
SP_API sp_status sp_network_save(const sp_network* net, const char* path);
SP_API sp_status sp_network_load(const char* path, sp_network** out);

/* ---- Problems --------------------------------------------------------- */

SP_API sp_status sp_problem_ic(sp_problem problem, double x, double* out);
SP_API sp_status sp_problem_bc(sp_problem problem, int side, double t,
                               double* out);

/* ---- Scalar tape ------------------------------------------------------ */

typedef struct sp_tape sp_tape;

SP_API sp_status sp_tape_create(sp_tape** out);
SP_API void sp_tape_destroy(sp_tape* tape);
/* Leaf bound to params[index]; backward() reports d/d params[index]. */
SP_API sp_status sp_tape_param(sp_tape* tape, const double* params,
                               size_t n_params, size_t index, uint32_t* id);
/* coeffs: SCALE factor; AFFINE coefficients followed by the offset;
   CUSTOM local partials. value: CONSTANT value or CUSTOM node value. */
SP_API sp_status sp_tape_record(sp_tape* tape, int op_kind,
                                const uint32_t* inputs, size_t n_inputs,
                                const double* coeffs, size_t n_coeffs,
                                double value, uint32_t* id);
SP_API sp_status sp_tape_value(const sp_tape* tape, uint32_t id, double* out);
SP_API sp_status sp_tape_backward(const sp_tape* tape, uint32_t root,
                                  double* grad, size_t n_params);

/* ---- Adaptive loss weights -------------------------------------------- */

typedef struct sp_weights sp_weights;

SP_API sp_status sp_weights_create(double alpha, double beta, double eps,
                                   double w_min, sp_weights** out);
SP_API void sp_weights_destroy(sp_weights* w);
/* Smooths the (pde, ic, bc) gradient norms and writes the new weights. */
SP_API sp_status sp_weights_update(sp_weights* w, const double norms[3],
                                   double weights_out[3]);

/* ---- Reference solutions ---------------------------------------------- */

typedef struct sp_grid sp_grid;

SP_API sp_status sp_grid_solve_burgers(double nu, size_t n_x, double cfl,
                                       sp_grid** out);
SP_API sp_status sp_grid_solve_allen_cahn(double eps2, size_t n_x,
                                          double dt_max, sp_grid** out);
SP_API void sp_grid_destroy(sp_grid* grid);
SP_API sp_status sp_grid_dims(const sp_grid* grid, size_t* n_t, size_t* n_x);
SP_API sp_status sp_grid_interpolate(const sp_grid* grid, double x, double t,
                                     double* out);
SP_API sp_status sp_grid_write_csv(const sp_grid* grid, const char* path);
SP_API sp_status sp_grid_write_json(const sp_grid* grid, const char* path);
SP_API sp_status sp_cole_hopf(double x, double t, double nu,
                              size_t quad_order, double* out);

/* ---- Training and experiments ----------------------------------------- */

/* Trains one run described by a flat JSON config (same keys as the CLI
   flags; "variant" must name a single variant and "seed" a single seed).
   The trained network is returned through *net; the per-epoch log is
   written to log_csv_path when it is non-NULL. */
SP_API sp_status sp_train(const char* config_json, const char* log_csv_path,
                          sp_network** net);

/* Runs the variant x seed matrix and writes all result files. *exit_code is
   0 when every run succeeded. */
SP_API sp_status sp_experiment_run(const char* config_json, int verbose,
                                   int* exit_code);

#ifdef __cplusplus
}
#endif

#endif /* STIFFPINN_STIFFPINN_H */
