#pragma once

#include <string>
#include <vector>

#include "vqcount/common.hpp"
#include "vqcount/graph.hpp"
#include "vqcount/random.hpp"

namespace vqcount {

enum class Activation : uint8_t { Identity = 0, Tanh = 1, Relu = 2 };

// Fully-connected network. Weight matrices are (out x in), biases (1 x out);
// weight shapes chain with dims by construction.
struct DenseNet {
  std::vector<int> dims;
  std::vector<Mat> weights;
  std::vector<Mat> biases;
  std::vector<Activation> hidden_acts;  // one per hidden layer
  Activation output_act = Activation::Identity;

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  int layer_count() const { return static_cast<int>(weights.size()); }
};

// Uniform init in +/- sqrt(6/(fan_in+fan_out)), biases zero.
inline DenseNet make_net(std::vector<int> dims, Activation hidden, Activation output,
                         RandomStream& rng) {
  require(dims.size() >= 2, "make_net: need at least input and output dims");
  for (int d : dims) require(d > 0, "make_net: dims must be positive");
  DenseNet net;
  net.dims = std::move(dims);
  net.output_act = output;
  for (size_t l = 0; l + 1 < net.dims.size(); ++l) {
    int fan_in = net.dims[l], fan_out = net.dims[l + 1];
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    net.weights.push_back(rng.uniform_mat(fan_out, fan_in, -bound, bound));
    net.biases.push_back(Mat::Zero(1, fan_out));
    if (l + 2 < net.dims.size()) net.hidden_acts.push_back(hidden);
  }
  return net;
}

inline Mat apply_activation(Activation act, Mat x) {
  switch (act) {
    case Activation::Identity: return x;
    case Activation::Tanh: return x.array().tanh();
    case Activation::Relu: return x.cwiseMax(0.0);
  }
  throw std::logic_error("unknown activation");
}

// Plain inference path, batch rows.
inline Mat net_forward(const DenseNet& net, const Mat& x) {
  require(x.cols() == net.input_dim(), "net_forward: input width mismatch");
  Mat h = x;
  for (int l = 0; l < net.layer_count(); ++l) {
    h = ((h * net.weights[l].transpose()).rowwise() + net.biases[l].row(0)).eval();
    Activation act = (l + 1 < net.layer_count()) ? net.hidden_acts[l] : net.output_act;
    h = apply_activation(act, std::move(h));
  }
  return h;
}

inline Vec net_forward_vec(const DenseNet& net, const Vec& x) {
  Mat out = net_forward(net, x.transpose());
  return out.row(0).transpose();
}

// ---- tape path ------------------------------------------------------------

struct NetVars {
  std::vector<Var> w, b;
};

inline NetVars net_params(Graph& g, const DenseNet& net, bool trainable = true) {
  NetVars vars;
  for (int l = 0; l < net.layer_count(); ++l) {
    vars.w.push_back(g.leaf(net.weights[l], trainable));
    vars.b.push_back(g.leaf(net.biases[l], trainable));
  }
  return vars;
}

inline Var net_apply_activation(Graph& g, Activation act, Var x) {
  switch (act) {
    case Activation::Identity: return x;
    case Activation::Tanh: return g.tanh_(x);
    case Activation::Relu: return g.relu_(x);
  }
  throw std::logic_error("unknown activation");
}

inline Var net_forward(Graph& g, const DenseNet& net, const NetVars& vars, Var x) {
  require(g.value(x).cols() == net.input_dim(), "net_forward: input width mismatch");
  Var h = x;
  for (int l = 0; l < net.layer_count(); ++l) {
    h = g.linear(h, vars.w[l], vars.b[l]);
    Activation act = (l + 1 < net.layer_count()) ? net.hidden_acts[l] : net.output_act;
    h = net_apply_activation(g, act, h);
  }
  return h;
}

// Parameter tensors in a fixed order (matching NetVars), for optimizers and
// gradient collection.
inline std::vector<Mat*> net_param_ptrs(DenseNet& net) {
  std::vector<Mat*> out;
  for (int l = 0; l < net.layer_count(); ++l) {
    out.push_back(&net.weights[l]);
    out.push_back(&net.biases[l]);
  }
  return out;
}

inline std::vector<Mat> net_collect_grads(const Graph& g, const NetVars& vars) {
  std::vector<Mat> grads;
  for (size_t l = 0; l < vars.w.size(); ++l) {
    grads.push_back(g.grad(vars.w[l]));
    grads.push_back(g.grad(vars.b[l]));
  }
  return grads;
}

inline bool net_all_finite(const DenseNet& net) {
  for (const Mat& w : net.weights)
    if (!w.allFinite()) return false;
  for (const Mat& b : net.biases)
    if (!b.allFinite()) return false;
  return true;
}

// ---- checkpoint format ------------------------------------------------------
// header: magic "VQCN", u32 version, u32 n_dims, u32 dims[], u8 hidden act
// tags, u8 output act tag; then per layer W row-major f64 LE, then bias f64 LE.

inline constexpr uint32_t kNetMagic = 0x4e435156;  // "VQCN"
inline constexpr uint32_t kNetVersion = 1;

inline void save_net(std::ostream& os, const DenseNet& net) {
  write_u32(os, kNetMagic);
  write_u32(os, kNetVersion);
  write_u32(os, static_cast<uint32_t>(net.dims.size()));
  for (int d : net.dims) write_u32(os, static_cast<uint32_t>(d));
  for (Activation a : net.hidden_acts) write_u8(os, static_cast<uint8_t>(a));
  write_u8(os, static_cast<uint8_t>(net.output_act));
  for (int l = 0; l < net.layer_count(); ++l) {
    const Mat& w = net.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) write_f64(os, w(i, j));
    for (Eigen::Index j = 0; j < net.biases[l].cols(); ++j) write_f64(os, net.biases[l](0, j));
  }
}

inline DenseNet load_net(std::istream& is) {
  require(read_u32(is) == kNetMagic, "bad net checkpoint magic");
  require(read_u32(is) == kNetVersion, "unsupported net checkpoint version");
  uint32_t n_dims = read_u32(is);
  require(n_dims >= 2 && n_dims < 64, "net checkpoint: implausible layer count");
  DenseNet net;
  for (uint32_t i = 0; i < n_dims; ++i) net.dims.push_back(static_cast<int>(read_u32(is)));
  for (uint32_t i = 0; i + 2 < n_dims; ++i)
    net.hidden_acts.push_back(static_cast<Activation>(read_u8(is)));
  net.output_act = static_cast<Activation>(read_u8(is));
  for (uint32_t l = 0; l + 1 < n_dims; ++l) {
    Mat w(net.dims[l + 1], net.dims[l]);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = read_f64(is);
    net.weights.push_back(std::move(w));
    Mat b(1, net.dims[l + 1]);
    for (Eigen::Index j = 0; j < b.cols(); ++j) b(0, j) = read_f64(is);
    net.biases.push_back(std::move(b));
  }
  return net;
}

}  // namespace vqcount
