#pragma once

// Fully connected tanh network u(x, t) and its derivative jets.
//
// ParamVector layout, layer by layer from the input side: the weight
// matrix (fan_out x fan_in) in row-major order, then the fan_out biases.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tape.hpp"

namespace stiffpinn {

using ParamVector = std::vector<double>;

struct Architecture {
  int input_dim = 2;
  int hidden_layers = 7;
  int hidden_width = 50;
  int output_dim = 1;

  std::size_t param_count() const;
  void validate() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct LayerView {
  std::size_t weight_offset;
  std::size_t bias_offset;
  int fan_in;
  int fan_out;
};

std::vector<LayerView> layer_layout(const Architecture& arch);

ParamVector init_params(const Architecture& arch, std::uint64_t seed);

// Tape nodes (each 1 x n) for u and its derivatives at n points.
struct Jet {
  NodeId u;
  NodeId u_x;
  NodeId u_t;
  NodeId u_xx;
};

// Plain values of a jet at n points.
struct JetValues {
  Eigen::VectorXd u, u_x, u_t, u_xx;
};

Jet forward_jet(Tape& tape, const Architecture& arch,
                std::span<const double> params, std::span<const double> x,
                std::span<const double> t);

// Value-only forward pass on the tape, for initial/boundary losses.
NodeId forward_value_node(Tape& tape, const Architecture& arch,
                          std::span<const double> params,
                          std::span<const double> x,
                          std::span<const double> t);

double forward_value(const Architecture& arch, std::span<const double> params,
                     double x, double t);

Eigen::VectorXd forward_values(const Architecture& arch,
                               std::span<const double> params,
                               std::span<const double> x,
                               std::span<const double> t);

// Tape-free jet evaluation; processes the points in chunks.
JetValues evaluate_jets(const Architecture& arch,
                        std::span<const double> params,
                        std::span<const double> x, std::span<const double> t);

struct Checkpoint {
  Architecture arch;
  std::uint64_t seed = 0;
  ParamVector params;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace stiffpinn
