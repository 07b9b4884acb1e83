#include "derivnet.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "error.hpp"
#include "rng.hpp"

namespace stiffpinn {

namespace {

constexpr Eigen::Index kChunk = 4096;

void check_points(std::span<const double> x, std::span<const double> t) {
  if (x.size() != t.size())
    fail(ErrorCode::InvalidArgument, "network: x and t lengths differ");
  if (x.empty()) fail(ErrorCode::InvalidArgument, "network: no points");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(t[i]))
      fail(ErrorCode::NonFinite,
           "network: non-finite input at point " + std::to_string(i));
}

void check_params(const Architecture& arch, std::span<const double> params) {
  if (params.size() != arch.param_count())
    fail(ErrorCode::InvalidArgument,
         "network: expected " + std::to_string(arch.param_count()) +
             " parameters, got " + std::to_string(params.size()));
}

// Weight matrix of one layer as an Eigen map over the row-major layout.
using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

RowMajorMap weight_map(std::span<const double> params, const LayerView& l) {
  return RowMajorMap(params.data() + l.weight_offset, l.fan_out, l.fan_in);
}

Eigen::Map<const Eigen::VectorXd> bias_map(std::span<const double> params,
                                           const LayerView& l) {
  return Eigen::Map<const Eigen::VectorXd>(params.data() + l.bias_offset,
                                           l.fan_out);
}

Matrix stacked_inputs(std::span<const double> x, std::span<const double> t) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Matrix a = Matrix::Zero(2, 4 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    a(0, j) = x[static_cast<std::size_t>(j)];
    a(1, j) = t[static_cast<std::size_t>(j)];
    a(0, n + j) = 1.0;
    a(1, 2 * n + j) = 1.0;
  }
  return a;
}

Matrix value_inputs(std::span<const double> x, std::span<const double> t) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Matrix a(2, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    a(0, j) = x[static_cast<std::size_t>(j)];
    a(1, j) = t[static_cast<std::size_t>(j)];
  }
  return a;
}

}  // namespace

std::size_t Architecture::param_count() const {
  const auto w = static_cast<std::size_t>(hidden_width);
  const auto l = static_cast<std::size_t>(hidden_layers);
  const auto in = static_cast<std::size_t>(input_dim);
  const auto out = static_cast<std::size_t>(output_dim);
  return in * w + w + (l - 1) * (w * w + w) + w * out + out;
}

void Architecture::validate() const {
  if (input_dim != 2 || output_dim != 1)
    fail(ErrorCode::InvalidArgument,
         "architecture: only 2 inputs and 1 output are supported");
  if (hidden_layers < 1 || hidden_width < 1)
    fail(ErrorCode::InvalidArgument,
         "architecture: need at least one hidden layer of width >= 1");
}

std::vector<LayerView> layer_layout(const Architecture& arch) {
  arch.validate();
  std::vector<LayerView> layers;
  std::size_t offset = 0;
  int fan_in = arch.input_dim;
  for (int l = 0; l <= arch.hidden_layers; ++l) {
    const int fan_out =
        l == arch.hidden_layers ? arch.output_dim : arch.hidden_width;
    LayerView view{offset,
                   offset + static_cast<std::size_t>(fan_in * fan_out), fan_in,
                   fan_out};
    offset = view.bias_offset + static_cast<std::size_t>(fan_out);
    layers.push_back(view);
    fan_in = fan_out;
  }
  return layers;
}

ParamVector init_params(const Architecture& arch, std::uint64_t seed) {
  ParamVector params(arch.param_count(), 0.0);
  Rng rng(seed);
  for (const LayerView& l : layer_layout(arch)) {
    const double bound = std::sqrt(6.0 / (l.fan_in + l.fan_out));
    const auto count = static_cast<std::size_t>(l.fan_in * l.fan_out);
    for (std::size_t i = 0; i < count; ++i)
      params[l.weight_offset + i] = rng.uniform(-bound, bound);
  }
  return params;
}

Jet forward_jet(Tape& tape, const Architecture& arch,
                std::span<const double> params, std::span<const double> x,
                std::span<const double> t) {
  check_params(arch, params);
  check_points(x, t);
  const auto n = static_cast<Eigen::Index>(x.size());
  const auto layers = layer_layout(arch);

  NodeId a = tape.constant(stacked_inputs(x, t));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerView& view = layers[l];
    const NodeId w =
        tape.param(params, view.weight_offset, view.fan_out, view.fan_in);
    const NodeId b = tape.param(params, view.bias_offset, view.fan_out, 1);
    const NodeId z = tape.dense(w, b, a, n);
    a = l + 1 < layers.size() ? tape.jet_tanh(z, n) : z;
  }
  return Jet{tape.slice_cols(a, 0, n), tape.slice_cols(a, n, n),
             tape.slice_cols(a, 2 * n, n), tape.slice_cols(a, 3 * n, n)};
}

NodeId forward_value_node(Tape& tape, const Architecture& arch,
                          std::span<const double> params,
                          std::span<const double> x,
                          std::span<const double> t) {
  check_params(arch, params);
  check_points(x, t);
  const auto n = static_cast<Eigen::Index>(x.size());
  const auto layers = layer_layout(arch);

  NodeId a = tape.constant(value_inputs(x, t));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerView& view = layers[l];
    const NodeId w =
        tape.param(params, view.weight_offset, view.fan_out, view.fan_in);
    const NodeId b = tape.param(params, view.bias_offset, view.fan_out, 1);
    const NodeId z = tape.dense(w, b, a, n);
    a = l + 1 < layers.size() ? tape.tanh(z) : z;
  }
  return a;
}

Eigen::VectorXd forward_values(const Architecture& arch,
                               std::span<const double> params,
                               std::span<const double> x,
                               std::span<const double> t) {
  check_params(arch, params);
  check_points(x, t);
  const auto layers = layer_layout(arch);
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::VectorXd out(n);
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index m = std::min(kChunk, n - start);
    const auto s = static_cast<std::size_t>(start);
    const auto c = static_cast<std::size_t>(m);
    Matrix a = value_inputs(x.subspan(s, c), t.subspan(s, c));
    for (std::size_t l = 0; l < layers.size(); ++l) {
      Matrix z(layers[l].fan_out, m);
      z.noalias() = weight_map(params, layers[l]) * a;
      z.colwise() += bias_map(params, layers[l]);
      if (l + 1 < layers.size())
        a = fast_tanh(z.array()).matrix();
      else
        a = std::move(z);
    }
    out.segment(start, m) = a.row(0).transpose();
  }
  return out;
}

double forward_value(const Architecture& arch, std::span<const double> params,
                     double x, double t) {
  return forward_values(arch, params, std::span<const double>(&x, 1),
                        std::span<const double>(&t, 1))(0);
}

JetValues evaluate_jets(const Architecture& arch,
                        std::span<const double> params,
                        std::span<const double> x, std::span<const double> t) {
  check_params(arch, params);
  check_points(x, t);
  const auto layers = layer_layout(arch);
  const auto n = static_cast<Eigen::Index>(x.size());
  JetValues out{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n),
                Eigen::VectorXd(n)};
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index m = std::min(kChunk, n - start);
    const auto s = static_cast<std::size_t>(start);
    const auto c = static_cast<std::size_t>(m);
    Matrix a = stacked_inputs(x.subspan(s, c), t.subspan(s, c));
    for (std::size_t l = 0; l < layers.size(); ++l) {
      Matrix z(layers[l].fan_out, 4 * m);
      z.noalias() = weight_map(params, layers[l]) * a;
      z.leftCols(m).colwise() += bias_map(params, layers[l]);
      if (l + 1 == layers.size()) {
        a = std::move(z);
        break;
      }
      a.resize(z.rows(), z.cols());
      const Eigen::ArrayXXd v = fast_tanh(z.leftCols(m).array());
      const Eigen::ArrayXXd sd = 1.0 - v.square();
      const auto zx = z.middleCols(m, m).array();
      a.leftCols(m) = v.matrix();
      a.middleCols(m, m).array() = sd * zx;
      a.middleCols(2 * m, m).array() = sd * z.middleCols(2 * m, m).array();
      a.middleCols(3 * m, m).array() =
          sd * z.middleCols(3 * m, m).array() - 2.0 * v * sd * zx.square();
    }
    out.u.segment(start, m) = a.block(0, 0, 1, m).transpose();
    out.u_x.segment(start, m) = a.block(0, m, 1, m).transpose();
    out.u_t.segment(start, m) = a.block(0, 2 * m, 1, m).transpose();
    out.u_xx.segment(start, m) = a.block(0, 3 * m, 1, m).transpose();
  }
  return out;
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  std::ostringstream out;
  out << "{\"architecture\":{\"input_dim\":" << ckpt.arch.input_dim
      << ",\"hidden_layers\":" << ckpt.arch.hidden_layers
      << ",\"hidden_width\":" << ckpt.arch.hidden_width
      << ",\"output_dim\":" << ckpt.arch.output_dim << "},\"seed\":"
      << ckpt.seed << ",\"params\":[";
  char buf[40];
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", ckpt.params[i]);
    if (i) out << ',';
    out << buf;
  }
  out << "]}\n";
  return out.str();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  Checkpoint ckpt;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto& a = j.at("architecture");
    ckpt.arch.input_dim = a.at("input_dim").get<int>();
    ckpt.arch.hidden_layers = a.at("hidden_layers").get<int>();
    ckpt.arch.hidden_width = a.at("hidden_width").get<int>();
    ckpt.arch.output_dim = a.at("output_dim").get<int>();
    ckpt.seed = j.at("seed").get<std::uint64_t>();
    ckpt.params = j.at("params").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Io, std::string("checkpoint: ") + e.what());
  }
  ckpt.arch.validate();
  check_params(ckpt.arch, ckpt.params);
  for (double p : ckpt.params)
    if (!std::isfinite(p))
      fail(ErrorCode::NonFinite, "checkpoint: non-finite parameter");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path,
                     const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << checkpoint_to_json(ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace stiffpinn
