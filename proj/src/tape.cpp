#include "tape.hpp"

#include <cmath>
#include <string>

#include "error.hpp"

namespace stiffpinn {

namespace {

double compensated_sum_of_squares(const Matrix& m) {
  double sum = 0.0;
  double comp = 0.0;
  const double* data = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double term = data[i] * data[i];
    const double t = sum + term;
    if (std::abs(sum) >= std::abs(term))
      comp += (sum - t) + term;
    else
      comp += (term - t) + sum;
    sum = t;
  }
  return sum + comp;
}

void accumulate(Matrix& adj, const Matrix& contribution) {
  if (adj.size() == 0)
    adj = contribution;
  else
    adj += contribution;
}

void accumulate(Matrix& adj, Matrix&& contribution) {
  if (adj.size() == 0)
    adj = std::move(contribution);
  else
    adj += contribution;
}

template <typename Expr>
void accumulate_expr(Matrix& adj, const Expr& expr) {
  if (adj.size() == 0)
    adj = expr;
  else
    adj += expr;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(ErrorCode::InvalidArgument,
         std::string(op) + ": operand shapes differ (" +
             std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
             " vs " + std::to_string(b.rows()) + "x" +
             std::to_string(b.cols()) + ")");
}

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Constant: return "constant";
    case OpKind::Param: return "param";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Square: return "square";
    case OpKind::Tanh: return "tanh";
    case OpKind::Scale: return "scale";
    case OpKind::Affine: return "affine";
    case OpKind::MeanSquares: return "mean_squares";
    case OpKind::Custom: return "custom";
    case OpKind::Dense: return "dense";
    case OpKind::JetTanh: return "jet_tanh";
    case OpKind::SliceCols: return "slice_cols";
  }
  return "unknown";
}

NodeId Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::at(NodeId id) const {
  check_input(id);
  return nodes_[id.index];
}

void Tape::check_input(NodeId id) const {
  if (id.index >= nodes_.size())
    fail(ErrorCode::InvalidArgument,
         "tape: node id " + std::to_string(id.index) + " does not exist");
}

NodeId Tape::constant(Matrix value) {
  return push(Node{OpKind::Constant, {}, std::move(value), {}, 0, 0});
}

NodeId Tape::constant(double value) {
  return constant(Matrix::Constant(1, 1, value));
}

NodeId Tape::param(std::span<const double> params, std::size_t offset,
                   Eigen::Index rows, Eigen::Index cols) {
  const auto count = static_cast<std::size_t>(rows * cols);
  if (offset + count > params.size())
    fail(ErrorCode::InvalidArgument, "tape: parameter slice out of range");
  Matrix value(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      value(r, c) = params[offset + static_cast<std::size_t>(r * cols + c)];
  return push(Node{OpKind::Param, {}, std::move(value), {}, offset, 0});
}

NodeId Tape::add(NodeId a, NodeId b) {
  const Matrix& va = at(a).value;
  const Matrix& vb = at(b).value;
  require_same_shape(va, vb, "add");
  return push(Node{OpKind::Add, {a, b}, va + vb, {}, 0, 0});
}

NodeId Tape::sub(NodeId a, NodeId b) {
  const Matrix& va = at(a).value;
  const Matrix& vb = at(b).value;
  require_same_shape(va, vb, "sub");
  return push(Node{OpKind::Sub, {a, b}, va - vb, {}, 0, 0});
}

NodeId Tape::mul(NodeId a, NodeId b) {
  const Matrix& va = at(a).value;
  const Matrix& vb = at(b).value;
  require_same_shape(va, vb, "mul");
  return push(
      Node{OpKind::Mul, {a, b}, va.cwiseProduct(vb), {}, 0, 0});
}

NodeId Tape::square(NodeId a) {
  const Matrix& va = at(a).value;
  return push(Node{OpKind::Square, {a}, va.array().square().matrix(), {}, 0, 0});
}

NodeId Tape::tanh(NodeId a) {
  const Matrix& va = at(a).value;
  return push(Node{OpKind::Tanh, {a}, fast_tanh(va.array()).matrix(), {}, 0, 0});
}

NodeId Tape::scale(NodeId a, double c) {
  const Matrix& va = at(a).value;
  return push(Node{OpKind::Scale, {a}, c * va, {c}, 0, 0});
}

NodeId Tape::affine(std::span<const NodeId> inputs,
                    std::span<const double> coeffs, double offset) {
  if (inputs.empty() || inputs.size() != coeffs.size())
    fail(ErrorCode::InvalidArgument,
         "affine: need one coefficient per input and at least one input");
  const Matrix& first = at(inputs[0]).value;
  Matrix value = Matrix::Constant(first.rows(), first.cols(), offset);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Matrix& v = at(inputs[k]).value;
    require_same_shape(first, v, "affine");
    value += coeffs[k] * v;
  }
  return push(Node{OpKind::Affine,
                   {inputs.begin(), inputs.end()},
                   std::move(value),
                   {coeffs.begin(), coeffs.end()},
                   0,
                   0});
}

NodeId Tape::mean_squares(NodeId a) {
  const Matrix& va = at(a).value;
  if (va.size() == 0)
    fail(ErrorCode::InvalidArgument, "mean_squares: empty operand");
  const double mean =
      compensated_sum_of_squares(va) / static_cast<double>(va.size());
  return push(
      Node{OpKind::MeanSquares, {a}, Matrix::Constant(1, 1, mean), {}, 0, 0});
}

NodeId Tape::custom(std::span<const NodeId> inputs, double value,
                    std::span<const double> partials) {
  if (inputs.size() != partials.size())
    fail(ErrorCode::InvalidArgument,
         "custom: need one local partial per input");
  for (NodeId id : inputs) {
    const Matrix& v = at(id).value;
    if (v.size() != 1)
      fail(ErrorCode::InvalidArgument, "custom: inputs must be scalar nodes");
  }
  return push(Node{OpKind::Custom,
                   {inputs.begin(), inputs.end()},
                   Matrix::Constant(1, 1, value),
                   {partials.begin(), partials.end()},
                   0,
                   0});
}

NodeId Tape::dense(NodeId weight, NodeId bias, NodeId input,
                   Eigen::Index block) {
  const Matrix& w = at(weight).value;
  const Matrix& b = at(bias).value;
  const Matrix& a = at(input).value;
  if (w.cols() != a.rows() || b.rows() != w.rows() || b.cols() != 1)
    fail(ErrorCode::InvalidArgument, "dense: incompatible shapes");
  if (block < 0 || block > a.cols())
    fail(ErrorCode::InvalidArgument, "dense: bias block exceeds columns");
  Matrix z(w.rows(), a.cols());
  z.noalias() = w * a;
  z.leftCols(block).colwise() += b.col(0);
  return push(Node{OpKind::Dense, {weight, bias, input}, std::move(z), {}, 0,
                   block});
}

NodeId Tape::jet_tanh(NodeId z_id, Eigen::Index block) {
  const Matrix& z = at(z_id).value;
  if (block <= 0 || z.cols() != 4 * block)
    fail(ErrorCode::InvalidArgument,
         "jet_tanh: input must hold four column blocks");
  const Eigen::Index rows = z.rows();
  Matrix out(rows, z.cols());
  auto v = out.leftCols(block).array();
  v = fast_tanh(z.leftCols(block).array());
  const Eigen::ArrayXXd s = 1.0 - v.square();
  const auto zx = z.middleCols(block, block).array();
  const auto zt = z.middleCols(2 * block, block).array();
  const auto zxx = z.middleCols(3 * block, block).array();
  out.middleCols(block, block).array() = s * zx;
  out.middleCols(2 * block, block).array() = s * zt;
  out.middleCols(3 * block, block).array() =
      s * zxx - 2.0 * v * s * zx.square();
  return push(Node{OpKind::JetTanh, {z_id}, std::move(out), {}, 0, block});
}

NodeId Tape::slice_cols(NodeId a, Eigen::Index start, Eigen::Index count) {
  const Matrix& va = at(a).value;
  if (start < 0 || count <= 0 || start + count > va.cols())
    fail(ErrorCode::InvalidArgument, "slice_cols: range out of bounds");
  return push(Node{OpKind::SliceCols, {a}, va.middleCols(start, count), {}, 0,
                   start});
}

NodeId Tape::record(OpKind kind, std::span<const NodeId> inputs,
                    std::span<const double> coeffs, double value) {
  auto arity = [&](std::size_t n) {
    if (inputs.size() != n)
      fail(ErrorCode::InvalidArgument,
           std::string(op_name(kind)) + ": expected " + std::to_string(n) +
               " inputs, got " + std::to_string(inputs.size()));
  };
  switch (kind) {
    case OpKind::Constant:
      arity(0);
      return constant(value);
    case OpKind::Add: arity(2); return add(inputs[0], inputs[1]);
    case OpKind::Sub: arity(2); return sub(inputs[0], inputs[1]);
    case OpKind::Mul: arity(2); return mul(inputs[0], inputs[1]);
    case OpKind::Square: arity(1); return square(inputs[0]);
    case OpKind::Tanh: arity(1); return tanh(inputs[0]);
    case OpKind::Scale:
      arity(1);
      if (coeffs.size() != 1)
        fail(ErrorCode::InvalidArgument, "scale: expected one coefficient");
      return scale(inputs[0], coeffs[0]);
    case OpKind::Affine:
      if (coeffs.size() != inputs.size() + 1)
        fail(ErrorCode::InvalidArgument,
             "affine: expected one coefficient per input plus an offset");
      return affine(inputs, coeffs.first(inputs.size()), coeffs.back());
    case OpKind::MeanSquares: {
      if (inputs.empty())
        fail(ErrorCode::InvalidArgument, "mean_squares: no inputs");
      if (inputs.size() == 1) return mean_squares(inputs[0]);
      // Mean of squares over several scalar nodes.
      std::vector<NodeId> squares;
      std::vector<double> weights(inputs.size(),
                                  1.0 / static_cast<double>(inputs.size()));
      for (NodeId id : inputs) {
        if (at(id).value.size() != 1)
          fail(ErrorCode::InvalidArgument,
               "mean_squares: multi-input form needs scalar inputs");
        squares.push_back(square(id));
      }
      return affine(squares, weights);
    }
    case OpKind::Custom:
      return custom(inputs, value, coeffs);
    case OpKind::Param:
    case OpKind::Dense:
    case OpKind::JetTanh:
    case OpKind::SliceCols:
      fail(ErrorCode::InvalidArgument,
           std::string(op_name(kind)) +
               ": not available through the generic record entry point");
  }
  fail(ErrorCode::InvalidArgument,
       "record: unknown op kind " + std::to_string(static_cast<int>(kind)));
}

const Matrix& Tape::value(NodeId id) const { return at(id).value; }

double Tape::scalar(NodeId id) const {
  const Matrix& v = at(id).value;
  if (v.size() != 1)
    fail(ErrorCode::InvalidArgument, "tape: node is not scalar");
  return v(0, 0);
}

OpKind Tape::kind(NodeId id) const { return at(id).kind; }

std::span<const NodeId> Tape::inputs(NodeId id) const {
  return at(id).inputs;
}

GradVector Tape::backward(NodeId root, std::size_t n_params) const {
  if (at(root).value.size() != 1)
    fail(ErrorCode::InvalidArgument, "backward: root must be a scalar node");

  GradVector grad(n_params, 0.0);
  std::vector<Matrix> adj(root.index + 1);
  adj[root.index] = Matrix::Ones(1, 1);

  for (std::size_t i = root.index + 1; i-- > 0;) {
    if (adj[i].size() == 0) continue;
    const Node& node = nodes_[i];
    const Matrix& g = adj[i];
    auto in = [&](std::size_t k) -> Matrix& {
      return adj[node.inputs[k].index];
    };
    auto in_value = [&](std::size_t k) -> const Matrix& {
      return nodes_[node.inputs[k].index].value;
    };

    switch (node.kind) {
      case OpKind::Constant:
        break;
      case OpKind::Param: {
        const Eigen::Index cols = node.value.cols();
        if (node.offset + static_cast<std::size_t>(node.value.size()) >
            n_params)
          fail(ErrorCode::InvalidArgument,
               "backward: parameter leaf exceeds gradient length");
        for (Eigen::Index r = 0; r < g.rows(); ++r)
          for (Eigen::Index c = 0; c < cols; ++c)
            grad[node.offset + static_cast<std::size_t>(r * cols + c)] +=
                g(r, c);
        break;
      }
      case OpKind::Add:
        accumulate(in(0), g);
        accumulate(in(1), g);
        break;
      case OpKind::Sub:
        accumulate(in(0), g);
        accumulate_expr(in(1), -g);
        break;
      case OpKind::Mul:
        accumulate_expr(in(0), g.cwiseProduct(in_value(1)));
        accumulate_expr(in(1), g.cwiseProduct(in_value(0)));
        break;
      case OpKind::Square:
        accumulate_expr(in(0), 2.0 * g.cwiseProduct(in_value(0)));
        break;
      case OpKind::Tanh:
        accumulate_expr(
            in(0), (g.array() * (1.0 - node.value.array().square())).matrix());
        break;
      case OpKind::Scale:
        accumulate_expr(in(0), node.coeffs[0] * g);
        break;
      case OpKind::Affine:
        for (std::size_t k = 0; k < node.inputs.size(); ++k)
          accumulate_expr(in(k), node.coeffs[k] * g);
        break;
      case OpKind::MeanSquares: {
        const Matrix& a = in_value(0);
        accumulate_expr(in(0),
                        (2.0 * g(0, 0) / static_cast<double>(a.size())) * a);
        break;
      }
      case OpKind::Custom:
        for (std::size_t k = 0; k < node.inputs.size(); ++k)
          accumulate(in(k), Matrix::Constant(1, 1, node.coeffs[k] * g(0, 0)));
        break;
      case OpKind::Dense: {
        const Matrix& w = in_value(0);
        const Matrix& a = in_value(2);
        Matrix gw(w.rows(), w.cols());
        gw.noalias() = g * a.transpose();
        accumulate(in(0), std::move(gw));
        accumulate_expr(in(1), g.leftCols(node.block).rowwise().sum());
        if (nodes_[node.inputs[2].index].kind != OpKind::Constant) {
          Matrix ga(a.rows(), a.cols());
          ga.noalias() = w.transpose() * g;
          accumulate(in(2), std::move(ga));
        }
        break;
      }
      case OpKind::JetTanh: {
        const Eigen::Index n = node.block;
        const Matrix& z = in_value(0);
        const auto v = node.value.leftCols(n).array();
        const Eigen::ArrayXXd s = 1.0 - v.square();
        const Eigen::ArrayXXd vs = v * s;
        const auto zx = z.middleCols(n, n).array();
        const auto zt = z.middleCols(2 * n, n).array();
        const auto zxx = z.middleCols(3 * n, n).array();
        const auto gv = g.leftCols(n).array();
        const auto gvx = g.middleCols(n, n).array();
        const auto gvt = g.middleCols(2 * n, n).array();
        const auto gvxx = g.middleCols(3 * n, n).array();

        Matrix gz(z.rows(), z.cols());
        // d(v s)/dz = s (s - 2 v^2)
        gz.leftCols(n).array() =
            gv * s - 2.0 * vs * (gvx * zx + gvt * zt + gvxx * zxx) -
            2.0 * gvxx * zx.square() * s * (s - 2.0 * v.square());
        gz.middleCols(n, n).array() = gvx * s - 4.0 * gvxx * vs * zx;
        gz.middleCols(2 * n, n).array() = gvt * s;
        gz.middleCols(3 * n, n).array() = gvxx * s;
        accumulate(in(0), std::move(gz));
        break;
      }
      case OpKind::SliceCols: {
        Matrix& target = in(0);
        const Matrix& a = in_value(0);
        if (target.size() == 0) target = Matrix::Zero(a.rows(), a.cols());
        target.middleCols(node.block, g.cols()) += g;
        break;
      }
    }
    adj[i] = Matrix();
  }
  return grad;
}

double l2_norm(std::span<const double> v) {
  double scale = 0.0;
  double ssq = 1.0;
  for (double x : v) {
    if (x == 0.0) continue;
    const double ax = std::abs(x);
    if (scale < ax) {
      ssq = 1.0 + ssq * (scale / ax) * (scale / ax);
      scale = ax;
    } else {
      ssq += (ax / scale) * (ax / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

}  // namespace stiffpinn
