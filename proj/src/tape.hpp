#pragma once

// Reverse-mode automatic differentiation over matrix-valued nodes.
//
// Every node holds a dense value (a 1x1 matrix for scalars). Rows index
// features, columns index sample points, so a whole batch of collocation
// points flows through one node. Parameters enter as leaves bound to an
// offset into the flat parameter vector; backward() scatters their
// adjoints back into a GradVector of the same length.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace stiffpinn {

using Matrix = Eigen::MatrixXd;
using GradVector = std::vector<double>;

enum class OpKind : std::uint8_t {
  Constant,
  Param,
  Add,
  Sub,
  Mul,
  Square,
  Tanh,
  Scale,
  Affine,       // sum_k c_k * in_k + c0
  MeanSquares,  // (1/n) sum in^2, all entries
  Custom,       // scalar node with caller-supplied local partials
  Dense,        // W * A, plus bias b on the first `block` columns
  JetTanh,      // tanh propagated through stacked (v, v_x, v_t, v_xx) blocks
  SliceCols,
};

std::string_view op_name(OpKind kind);

struct NodeId {
  std::uint32_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

class Tape {
 public:
  Tape() = default;

  NodeId constant(Matrix value);
  NodeId constant(double value);

  // Leaf bound to params[offset, offset + rows*cols), read row-major.
  NodeId param(std::span<const double> params, std::size_t offset,
               Eigen::Index rows, Eigen::Index cols);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId square(NodeId a);
  NodeId tanh(NodeId a);
  NodeId scale(NodeId a, double c);
  NodeId affine(std::span<const NodeId> inputs, std::span<const double> coeffs,
                double offset = 0.0);
  NodeId mean_squares(NodeId a);

  // Scalar node whose value and local partials w.r.t. scalar inputs are
  // supplied by the caller.
  NodeId custom(std::span<const NodeId> inputs, double value,
                std::span<const double> partials);

  NodeId dense(NodeId weight, NodeId bias, NodeId input, Eigen::Index block);
  NodeId jet_tanh(NodeId z, Eigen::Index block);
  NodeId slice_cols(NodeId a, Eigen::Index start, Eigen::Index count);

  // Generic entry point keyed by op kind for scalar graphs. `coeffs` carries
  // the Scale factor, Affine coefficients (offset last) or Custom partials.
  NodeId record(OpKind kind, std::span<const NodeId> inputs,
                std::span<const double> coeffs = {}, double value = 0.0);

  const Matrix& value(NodeId id) const;
  double scalar(NodeId id) const;
  OpKind kind(NodeId id) const;
  std::span<const NodeId> inputs(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  // d(root)/d(params). `n_params` is the length of the bound ParamVector.
  GradVector backward(NodeId root, std::size_t n_params) const;

 private:
  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    Matrix value;
    std::vector<double> coeffs;
    std::size_t offset = 0;   // Param
    Eigen::Index block = 0;   // Dense, JetTanh, SliceCols
  };

  NodeId push(Node node);
  const Node& at(NodeId id) const;
  void check_input(NodeId id) const;

  std::vector<Node> nodes_;
};

double l2_norm(std::span<const double> v);

// Vectorized tanh; Eigen's double tanh is scalar code.
template <typename Derived>
Eigen::ArrayXXd fast_tanh(const Eigen::ArrayBase<Derived>& z) {
  const Eigen::ArrayXXd e = (-2.0 * z.abs()).exp();
  return ((1.0 - e) / (1.0 + e)) * z.sign();
}

}  // namespace stiffpinn
