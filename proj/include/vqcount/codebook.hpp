#pragma once

#include <vector>

#include "vqcount/common.hpp"
#include "vqcount/random.hpp"

namespace vqcount {

// One codebook: N vectors spanning one latent subspace, plus per-vector
// usage counters. used_count carries the epsilon-decayed use counts N^u_k;
// total_count is their running sum N^a (kept equal to used_count.sum()).
struct Codebook {
  Mat vectors;      // N x dim
  Vec used_count;   // N
  double total_count = 0.0;

  int size() const { return static_cast<int>(vectors.rows()); }
  int dim() const { return static_cast<int>(vectors.cols()); }

  double use_rate(int k) const {
    return total_count > 0.0 ? used_count(k) / total_count : 0.0;
  }
};

// H codebooks over H contiguous equal-width latent subspaces.
struct CodebookSet {
  std::vector<Codebook> books;

  int num_codebooks() const { return static_cast<int>(books.size()); }
  int vectors_per_codebook() const { return books.empty() ? 0 : books[0].size(); }
  int subspace_dim() const { return books.empty() ? 0 : books[0].dim(); }
  int latent_dim() const { return num_codebooks() * subspace_dim(); }
};

inline CodebookSet make_codebook_set(int num_codebooks, int vectors_per_codebook,
                                     int latent_dim) {
  require(num_codebooks > 0 && vectors_per_codebook > 0, "codebooks: positive sizes");
  require(latent_dim % num_codebooks == 0,
          "latent dim must be divisible by the codebook count");
  int dim = latent_dim / num_codebooks;
  CodebookSet set;
  for (int h = 0; h < num_codebooks; ++h) {
    Codebook cb;
    cb.vectors = Mat::Zero(vectors_per_codebook, dim);
    cb.used_count = Vec::Zero(vectors_per_codebook);
    cb.total_count = 0.0;
    set.books.push_back(std::move(cb));
  }
  return set;
}

// Contiguous equal-width slices of the latent vector; concatenation of the
// slices reproduces the input exactly.
inline std::vector<Vec> partition_latent(const Vec& z_e, int num_codebooks) {
  require(num_codebooks > 0, "partition: positive codebook count");
  require(z_e.size() % num_codebooks == 0, "partition: latent not divisible");
  int dim = static_cast<int>(z_e.size()) / num_codebooks;
  std::vector<Vec> subs;
  subs.reserve(num_codebooks);
  for (int h = 0; h < num_codebooks; ++h) subs.push_back(z_e.segment(h * dim, dim));
  return subs;
}

// Nearest codebook vector by Euclidean distance; lowest index wins ties so
// counting stays deterministic.
inline int nearest_vector(const Codebook& cb, const Vec& sub, double* best_sq = nullptr) {
  require(sub.size() == cb.dim(), "quantize: subspace width mismatch");
  int best = 0;
  double best_d = (cb.vectors.row(0).transpose() - sub).squaredNorm();
  for (int k = 1; k < cb.size(); ++k) {
    double d = (cb.vectors.row(k).transpose() - sub).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  if (best_sq) *best_sq = best_d;
  return best;
}

struct QuantizationResult {
  Vec z_q;                  // concatenated selected vectors
  std::vector<int> labels;  // H indices, one per codebook
  Vec distances;            // Euclidean distance per subspace
};

inline QuantizationResult quantize(const CodebookSet& set, const Vec& z_e) {
  require(z_e.size() == set.latent_dim(), "quantize: latent width mismatch");
  int H = set.num_codebooks();
  int dim = set.subspace_dim();
  QuantizationResult out;
  out.z_q.resize(z_e.size());
  out.labels.resize(H);
  out.distances.resize(H);
  for (int h = 0; h < H; ++h) {
    Vec sub = z_e.segment(h * dim, dim);
    double d2 = 0.0;
    int k = nearest_vector(set.books[h], sub, &d2);
    out.labels[h] = k;
    out.distances(h) = std::sqrt(d2);
    out.z_q.segment(h * dim, dim) = set.books[h].vectors.row(k).transpose();
  }
  return out;
}

// Batch variant: rows of z_e quantized independently.
struct BatchQuantization {
  Mat z_q;                              // batch x latent
  std::vector<std::vector<int>> labels; // batch x H
};

inline BatchQuantization quantize_batch(const CodebookSet& set, const Mat& z_e) {
  BatchQuantization out;
  out.z_q.resize(z_e.rows(), z_e.cols());
  out.labels.resize(z_e.rows());
  for (Eigen::Index i = 0; i < z_e.rows(); ++i) {
    QuantizationResult q = quantize(set, z_e.row(i).transpose());
    out.z_q.row(i) = q.z_q.transpose();
    out.labels[i] = std::move(q.labels);
  }
  return out;
}

}  // namespace vqcount
