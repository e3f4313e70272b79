#pragma once

#include <vector>

#include "vqcount/codebook.hpp"
#include "vqcount/common.hpp"

namespace vqcount {

// Fuzzy C-means codebook update. Membership of a latent subvector to every
// vector of its codebook is proportional to inverse squared distance; each
// vector then moves toward the membership-weighted batch mean with a step
// size driven by its recent use rate, so rarely used vectors move most.

inline constexpr double kUsageDecay = 0.99;  // epsilon

// f_k = d_k^-2 / sum_j d_j^-2. Computed as (d_min/d_k)^2 ratios so near-zero
// distances cannot overflow. An exact zero distance takes full membership,
// split equally across exact ties (the d -> 0 limit).
inline Vec membership(const Codebook& cb, const Vec& sub) {
  require(sub.size() == cb.dim(), "membership: width mismatch");
  int n = cb.size();
  Vec d2(n);
  for (int k = 0; k < n; ++k) d2(k) = (cb.vectors.row(k).transpose() - sub).squaredNorm();
  double dmin = d2.minCoeff();
  Vec f = Vec::Zero(n);
  if (dmin == 0.0) {
    int ties = 0;
    for (int k = 0; k < n; ++k)
      if (d2(k) == 0.0) ++ties;
    for (int k = 0; k < n; ++k)
      if (d2(k) == 0.0) f(k) = 1.0 / ties;
    return f;
  }
  double denom = 0.0;
  for (int k = 0; k < n; ++k) {
    f(k) = dmin / d2(k);
    denom += f(k);
  }
  f /= denom;
  return f;
}

// alpha = exp(-10 N R_k / (1 - eps) - 1e-3); underflow clamps to exactly 0,
// freezing frequently used vectors.
inline double step_size(double use_rate, int vectors_per_codebook, double decay = kUsageDecay) {
  require(use_rate >= 0.0 && use_rate <= 1.0, "step_size: use rate out of [0,1]");
  require(decay > 0.0 && decay < 1.0, "step_size: decay out of (0,1)");
  double arg = -10.0 * vectors_per_codebook * use_rate / (1.0 - decay) - 1e-3;
  return std::exp(arg);
}

// Decay-then-increment keeps R_k an exponential average of recent selections.
inline void record_usage(Codebook& cb, const std::vector<int>& selected, double decay = kUsageDecay) {
  cb.used_count *= decay;
  cb.total_count *= decay;
  for (int k : selected) {
    require(k >= 0 && k < cb.size(), "record_usage: label out of range");
    cb.used_count(k) += 1.0;
  }
  cb.total_count += static_cast<double>(selected.size());
}

// One FCM round for one codebook: every vector k moves to
//   e_k <- (1 - a_k) e_k + a_k * (sum_i f_ik z_i / sum_i f_ik)
// with its own use-rate step a_k, then usage counters advance with the
// batch's argmin selections. Empty batch is a no-op.
inline void fcm_update(Codebook& cb, const Mat& batch_subvectors,
                       const std::vector<int>& selected_labels,
                       double decay = kUsageDecay) {
  if (batch_subvectors.rows() == 0) return;
  require(batch_subvectors.cols() == cb.dim(), "fcm_update: width mismatch");
  require(static_cast<Eigen::Index>(selected_labels.size()) == batch_subvectors.rows(),
          "fcm_update: labels/batch size mismatch");

  int n = cb.size();
  Eigen::Index batch = batch_subvectors.rows();
  Mat weighted_sum = Mat::Zero(n, cb.dim());
  Vec weight_total = Vec::Zero(n);
  for (Eigen::Index i = 0; i < batch; ++i) {
    Vec f = membership(cb, batch_subvectors.row(i).transpose());
    weighted_sum += f * batch_subvectors.row(i);
    weight_total += f;
  }

  for (int k = 0; k < n; ++k) {
    if (weight_total(k) <= 0.0) continue;
    double alpha = step_size(cb.use_rate(k), n, decay);
    if (alpha == 0.0) continue;
    Vec target = weighted_sum.row(k).transpose() / weight_total(k);
    cb.vectors.row(k) = (1.0 - alpha) * cb.vectors.row(k) + alpha * target.transpose();
  }

  record_usage(cb, selected_labels, decay);
}

}  // namespace vqcount
