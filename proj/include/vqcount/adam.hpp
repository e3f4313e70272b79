#pragma once

#include <vector>

#include "vqcount/common.hpp"

namespace vqcount {

// Adaptive-moment optimizer. Moment tensors mirror parameter shapes.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step = 0;
  std::vector<Mat> m, v;
};

inline AdamState make_adam(const std::vector<Mat*>& params, double lr) {
  AdamState s;
  s.lr = lr;
  for (const Mat* p : params) {
    s.m.push_back(Mat::Zero(p->rows(), p->cols()));
    s.v.push_back(Mat::Zero(p->rows(), p->cols()));
  }
  return s;
}

inline void adam_step(AdamState& s, const std::vector<Mat*>& params,
                      const std::vector<Mat>& grads) {
  require(params.size() == s.m.size() && grads.size() == s.m.size(),
          "adam_step: tensor count mismatch");
  s.step += 1;
  double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Mat& p = *params[i];
    const Mat& g = grads[i];
    require(p.rows() == g.rows() && p.cols() == g.cols(), "adam_step: grad shape mismatch");
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g.cwiseProduct(g);
    Mat mhat = s.m[i] / bc1;
    Mat vhat = s.v[i] / bc2;
    p.array() -= s.lr * mhat.array() / (vhat.array().sqrt() + s.eps);
  }
}

}  // namespace vqcount
