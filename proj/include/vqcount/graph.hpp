#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "vqcount/common.hpp"

namespace vqcount {

// Reverse-mode tape over dense matrices. Nodes are created in topological
// order by construction (define-by-run), so backward() is a single reverse
// sweep. One Graph per loss evaluation; leaves are copied in and gradients
// read back out by Var id.
struct Var {
  int id = -1;
};

class Graph {
 public:
  Var constant(Mat value) { return push(std::move(value), false, {}); }

  Var leaf(Mat value, bool trainable = true) {
    return push(std::move(value), trainable, {});
  }

  const Mat& value(Var v) const { return nodes_[check(v)].value; }
  const Mat& grad(Var v) const { return nodes_[check(v)].grad; }

  // y = x * W^T + b broadcast over rows. W is (out x in), b is (1 x out).
  Var linear(Var x, Var w, Var b) {
    const Mat& xv = nodes_[check(x)].value;
    const Mat& wv = nodes_[check(w)].value;
    const Mat& bv = nodes_[check(b)].value;
    require(xv.cols() == wv.cols(), "linear: input width mismatch");
    require(bv.rows() == 1 && bv.cols() == wv.rows(), "linear: bias shape mismatch");
    Mat y = (xv * wv.transpose()).rowwise() + bv.row(0);
    return push(std::move(y), any_grad({x, w, b}), [=, this](const Mat& g) {
      if (wants(x)) nodes_[x.id].grad += g * nodes_[w.id].value;
      if (wants(w)) nodes_[w.id].grad += g.transpose() * nodes_[x.id].value;
      if (wants(b)) nodes_[b.id].grad += g.colwise().sum();
    });
  }

  Var add(Var a, Var b) {
    same_shape(a, b, "add");
    Mat y = nodes_[a.id].value + nodes_[b.id].value;
    return push(std::move(y), any_grad({a, b}), [=, this](const Mat& g) {
      if (wants(a)) nodes_[a.id].grad += g;
      if (wants(b)) nodes_[b.id].grad += g;
    });
  }

  Var sub(Var a, Var b) {
    same_shape(a, b, "sub");
    Mat y = nodes_[a.id].value - nodes_[b.id].value;
    return push(std::move(y), any_grad({a, b}), [=, this](const Mat& g) {
      if (wants(a)) nodes_[a.id].grad += g;
      if (wants(b)) nodes_[b.id].grad -= g;
    });
  }

  Var mul(Var a, Var b) {
    same_shape(a, b, "mul");
    Mat y = nodes_[a.id].value.cwiseProduct(nodes_[b.id].value);
    return push(std::move(y), any_grad({a, b}), [=, this](const Mat& g) {
      if (wants(a)) nodes_[a.id].grad += g.cwiseProduct(nodes_[b.id].value);
      if (wants(b)) nodes_[b.id].grad += g.cwiseProduct(nodes_[a.id].value);
    });
  }

  // elementwise min; ties route gradient to the first argument
  Var min_(Var a, Var b) {
    same_shape(a, b, "min");
    const Mat& av = nodes_[a.id].value;
    const Mat& bv = nodes_[b.id].value;
    Mat y = av.cwiseMin(bv);
    return push(std::move(y), any_grad({a, b}), [=, this](const Mat& g) {
      const Mat& avv = nodes_[a.id].value;
      const Mat& bvv = nodes_[b.id].value;
      for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j) {
          if (avv(i, j) <= bvv(i, j)) {
            if (wants(a)) nodes_[a.id].grad(i, j) += g(i, j);
          } else if (wants(b)) {
            nodes_[b.id].grad(i, j) += g(i, j);
          }
        }
    });
  }

  Var scale(Var a, double c) {
    Mat y = nodes_[check(a)].value * c;
    return push(std::move(y), wants(a), [=, this](const Mat& g) {
      if (wants(a)) nodes_[a.id].grad += g * c;
    });
  }

  Var add_scalar(Var a, double c) {
    Mat y = nodes_[check(a)].value.array() + c;
    return push(std::move(y), wants(a), [=, this](const Mat& g) {
      if (wants(a)) nodes_[a.id].grad += g;
    });
  }

  Var tanh_(Var a) {
    Mat y = nodes_[check(a)].value.array().tanh();
    int yid = next_id();
    return push(std::move(y), wants(a), [=, this](const Mat& g) {
      if (wants(a))
        nodes_[a.id].grad.array() += g.array() * (1.0 - nodes_[yid].value.array().square());
    });
  }

  Var relu_(Var a) {
    Mat y = nodes_[check(a)].value.cwiseMax(0.0);
    return push(std::move(y), wants(a), [=, this](const Mat& g) {
      if (wants(a))
        nodes_[a.id].grad.array() +=
            g.array() * (nodes_[a.id].value.array() > 0.0).cast<double>();
    });
  }

  Var exp_(Var a) {
    Mat y = nodes_[check(a)].value.array().exp();
    int yid = next_id();
    return push(std::move(y), wants(a), [=, this](const Mat& g) {
      if (wants(a)) nodes_[a.id].grad.array() += g.array() * nodes_[yid].value.array();
    });
  }

  Var log_(Var a) {
    Mat y = nodes_[check(a)].value.array().log();
    return push(std::move(y), wants(a), [=, this](const Mat& g) {
      if (wants(a)) nodes_[a.id].grad.array() += g.array() / nodes_[a.id].value.array();
    });
  }

  Var square_(Var a) {
    Mat y = nodes_[check(a)].value.array().square();
    return push(std::move(y), wants(a), [=, this](const Mat& g) {
      if (wants(a)) nodes_[a.id].grad.array() += g.array() * 2.0 * nodes_[a.id].value.array();
    });
  }

  // log(1 + exp(x)), overflow-safe
  Var softplus_(Var a) {
    const Mat& av = nodes_[check(a)].value;
    Mat y(av.rows(), av.cols());
    for (Eigen::Index i = 0; i < av.size(); ++i) {
      double x = av(i);
      y(i) = x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    }
    return push(std::move(y), wants(a), [=, this](const Mat& g) {
      if (wants(a))
        nodes_[a.id].grad.array() +=
            g.array() / (1.0 + (-nodes_[a.id].value.array()).exp());
    });
  }

  Var rowsum(Var a) {
    Mat y = nodes_[check(a)].value.rowwise().sum();
    return push(std::move(y), wants(a), [=, this](const Mat& g) {
      if (wants(a)) nodes_[a.id].grad.colwise() += g.col(0);
    });
  }

  Var sum(Var a) {
    Mat y(1, 1);
    y(0, 0) = nodes_[check(a)].value.sum();
    return push(std::move(y), wants(a), [=, this](const Mat& g) {
      if (wants(a)) nodes_[a.id].grad.array() += g(0, 0);
    });
  }

  Var mean(Var a) {
    double n = static_cast<double>(nodes_[check(a)].value.size());
    Mat y(1, 1);
    y(0, 0) = nodes_[a.id].value.sum() / n;
    return push(std::move(y), wants(a), [=, this](const Mat& g) {
      if (wants(a)) nodes_[a.id].grad.array() += g(0, 0) / n;
    });
  }

  Var concat_cols(Var a, Var b) {
    const Mat& av = nodes_[check(a)].value;
    const Mat& bv = nodes_[check(b)].value;
    require(av.rows() == bv.rows(), "concat_cols: row mismatch");
    Mat y(av.rows(), av.cols() + bv.cols());
    y << av, bv;
    Eigen::Index ac = av.cols();
    return push(std::move(y), any_grad({a, b}), [=, this](const Mat& g) {
      if (wants(a)) nodes_[a.id].grad += g.leftCols(ac);
      if (wants(b)) nodes_[b.id].grad += g.rightCols(g.cols() - ac);
    });
  }

  Var slice_cols(Var a, int from, int count) {
    const Mat& av = nodes_[check(a)].value;
    require(from >= 0 && from + count <= av.cols(), "slice_cols: out of range");
    Mat y = av.middleCols(from, count);
    return push(std::move(y), wants(a), [=, this](const Mat& g) {
      if (wants(a)) nodes_[a.id].grad.middleCols(from, count) += g;
    });
  }

  Var detach(Var a) { return constant(nodes_[check(a)].value); }

  // Straight-through: forward takes the quantized values, backward copies
  // the incoming gradient onto the encoder output unchanged.
  Var ste(Var a, Mat forward_value) {
    require(forward_value.rows() == nodes_[check(a)].value.rows() &&
                forward_value.cols() == nodes_[a.id].value.cols(),
            "ste: shape mismatch");
    return push(std::move(forward_value), wants(a), [=, this](const Mat& g) {
      if (wants(a)) nodes_[a.id].grad += g;
    });
  }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse order.
  void backward(Var loss) {
    const Mat& lv = nodes_[check(loss)].value;
    require(lv.rows() == 1 && lv.cols() == 1, "backward: loss must be scalar");
    for (auto& n : nodes_)
      if (n.needs_grad) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    if (!nodes_[loss.id].needs_grad) return;
    nodes_[loss.id].grad(0, 0) = 1.0;
    for (int i = loss.id; i >= 0; --i) {
      if (nodes_[i].needs_grad && nodes_[i].back) nodes_[i].back(nodes_[i].grad);
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(const Mat&)> back;
    bool needs_grad = false;
  };

  int check(Var v) const {
    require(v.id >= 0 && v.id < static_cast<int>(nodes_.size()), "invalid Var");
    return v.id;
  }
  bool wants(Var v) const { return nodes_[v.id].needs_grad; }
  bool any_grad(std::initializer_list<Var> vs) const {
    for (Var v : vs)
      if (nodes_[check(v)].needs_grad) return true;
    return false;
  }
  void same_shape(Var a, Var b, const char* op) const {
    const Mat& av = nodes_[check(a)].value;
    const Mat& bv = nodes_[check(b)].value;
    require(av.rows() == bv.rows() && av.cols() == bv.cols(),
            std::string(op) + ": shape mismatch");
  }
  int next_id() const { return static_cast<int>(nodes_.size()); }

  Var push(Mat value, bool needs_grad, std::function<void(const Mat&)> back) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
};

}  // namespace vqcount
