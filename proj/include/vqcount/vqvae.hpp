#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "vqcount/adam.hpp"
#include "vqcount/codebook.hpp"
#include "vqcount/fcm.hpp"
#include "vqcount/graph.hpp"
#include "vqcount/net.hpp"
#include "vqcount/random.hpp"

namespace vqcount {

// Conditional multi-codebook VQVAE. The encoder sees (state, action), the
// latent is partitioned into H subspaces quantized against per-subspace
// codebooks, and the decoder reconstructs the action from (z_q, state).
struct ConditionalVqvae {
  DenseNet encoder;  // (state_dim + action_dim) -> latent_dim
  DenseNet decoder;  // (latent_dim + state_dim) -> action_dim
  CodebookSet codebooks;
  int state_dim = 0;
  int action_dim = 0;
  double commit_coef = 0.25;  // gamma

  int latent_dim() const { return codebooks.latent_dim(); }
};

inline ConditionalVqvae make_vqvae(int state_dim, int action_dim, int latent_dim,
                                   int num_codebooks, int vectors_per_codebook,
                                   const std::vector<int>& hidden, double commit_coef,
                                   RandomStream& rng) {
  ConditionalVqvae v;
  v.state_dim = state_dim;
  v.action_dim = action_dim;
  v.commit_coef = commit_coef;
  std::vector<int> enc_dims{state_dim + action_dim};
  enc_dims.insert(enc_dims.end(), hidden.begin(), hidden.end());
  enc_dims.push_back(latent_dim);
  std::vector<int> dec_dims{latent_dim + state_dim};
  dec_dims.insert(dec_dims.end(), hidden.begin(), hidden.end());
  dec_dims.push_back(action_dim);
  v.encoder = make_net(enc_dims, Activation::Relu, Activation::Identity, rng);
  v.decoder = make_net(dec_dims, Activation::Relu, Activation::Identity, rng);
  v.codebooks = make_codebook_set(num_codebooks, vectors_per_codebook, latent_dim);
  return v;
}

inline Mat encode_batch(const ConditionalVqvae& v, const Mat& states, const Mat& actions) {
  require(states.cols() == v.state_dim, "encode: state width mismatch");
  require(actions.cols() == v.action_dim, "encode: action width mismatch");
  require(states.rows() == actions.rows(), "encode: batch size mismatch");
  Mat input(states.rows(), states.cols() + actions.cols());
  input << states, actions;
  return net_forward(v.encoder, input);
}

inline Vec encode(const ConditionalVqvae& v, const Vec& state, const Vec& action) {
  return encode_batch(v, state.transpose(), action.transpose()).row(0).transpose();
}

inline Mat decode_batch(const ConditionalVqvae& v, const Mat& z_q, const Mat& states) {
  require(z_q.cols() == v.latent_dim(), "decode: latent width mismatch");
  require(states.cols() == v.state_dim, "decode: state width mismatch");
  Mat input(z_q.rows(), z_q.cols() + states.cols());
  input << z_q, states;
  return net_forward(v.decoder, input);
}

inline std::vector<int> labels_for(const ConditionalVqvae& v, const Vec& state, const Vec& action) {
  return quantize(v.codebooks, encode(v, state, action)).labels;
}

// Eq.-7 style three-term loss, split out for logging. The codebook and
// commitment sums over subspaces equal full-latent squared norms because the
// subspaces partition the latent.
struct VqLoss {
  double total = 0.0;
  double recon = 0.0;
  double codebook = 0.0;
  double commit = 0.0;
};

inline VqLoss vq_loss(const Mat& actions, const Mat& decoded, const Mat& z_e, const Mat& z_q,
                      double commit_coef) {
  VqLoss out;
  double batch = static_cast<double>(actions.rows());
  out.recon = (actions - decoded).squaredNorm() / batch;
  out.codebook = (z_e - z_q).squaredNorm() / batch;
  out.commit = commit_coef * out.codebook;
  out.total = out.recon + out.codebook + out.commit;
  return out;
}

// Per-sample total loss, used by the OOD identification experiment.
inline Vec vq_loss_per_sample(const ConditionalVqvae& v, const Mat& states, const Mat& actions) {
  Mat z_e = encode_batch(v, states, actions);
  BatchQuantization q = quantize_batch(v.codebooks, z_e);
  Mat decoded = decode_batch(v, q.z_q, states);
  Vec out(states.rows());
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    double recon = (actions.row(i) - decoded.row(i)).squaredNorm();
    double cbl = (z_e.row(i) - q.z_q.row(i)).squaredNorm();
    out(i) = recon + cbl + v.commit_coef * cbl;
  }
  return out;
}

// Sample codebook vectors from encoder outputs of a warmup batch so no
// codebook starts dead. Distinct transitions are drawn when the dataset is
// large enough.
inline void init_codebooks_from_data(ConditionalVqvae& v, const Mat& states, const Mat& actions,
                                     RandomStream& rng) {
  int n = v.codebooks.vectors_per_codebook();
  int total = static_cast<int>(states.rows());
  require(total > 0, "codebook init: empty warmup data");
  std::vector<int> idx(n);
  if (total >= n) {
    std::vector<int> perm(total);
    for (int i = 0; i < total; ++i) perm[i] = i;
    for (int i = 0; i < n; ++i) {
      int j = i + rng.uniform_int(total - i);
      std::swap(perm[i], perm[j]);
      idx[i] = perm[i];
    }
  } else {
    for (int i = 0; i < n; ++i) idx[i] = rng.uniform_int(total);
  }
  Mat sel_s(n, v.state_dim), sel_a(n, v.action_dim);
  for (int i = 0; i < n; ++i) {
    sel_s.row(i) = states.row(idx[i]);
    sel_a.row(i) = actions.row(idx[i]);
  }
  Mat z = encode_batch(v, sel_s, sel_a);
  int dim = v.codebooks.subspace_dim();
  for (int h = 0; h < v.codebooks.num_codebooks(); ++h) {
    v.codebooks.books[h].vectors = z.middleCols(h * dim, dim);
    v.codebooks.books[h].used_count.setZero();
    v.codebooks.books[h].total_count = 0.0;
  }
}

struct VqvaeOptimizers {
  AdamState encoder;
  AdamState decoder;
  AdamState codebooks;  // used only when FCM is disabled
};

inline VqvaeOptimizers make_vqvae_optimizers(ConditionalVqvae& v, double lr) {
  VqvaeOptimizers opt;
  opt.encoder = make_adam(net_param_ptrs(v.encoder), lr);
  opt.decoder = make_adam(net_param_ptrs(v.decoder), lr);
  std::vector<Mat*> cb_params;
  for (auto& cb : v.codebooks.books) cb_params.push_back(&cb.vectors);
  opt.codebooks = make_adam(cb_params, lr);
  return opt;
}

// One pretraining step: encoder/decoder follow the straight-through gradient
// of recon + commit; codebooks move by FCM (Eq. 17) or, with use_fcm=false,
// by the gradient of the codebook term restricted to selected vectors.
inline VqLoss vqvae_train_step(ConditionalVqvae& v, VqvaeOptimizers& opt, const Mat& states,
                               const Mat& actions, bool use_fcm) {
  Graph g;
  NetVars enc_vars = net_params(g, v.encoder, true);
  NetVars dec_vars = net_params(g, v.decoder, true);

  Var s_in = g.constant(states);
  Var a_in = g.constant(actions);
  Var z_e = net_forward(g, v.encoder, enc_vars, g.concat_cols(s_in, a_in));

  // copy: later node pushes reallocate the tape's storage
  Mat z_e_val = g.value(z_e);
  BatchQuantization q = quantize_batch(v.codebooks, z_e_val);

  Var z_q_st = g.ste(z_e, q.z_q);
  Var decoded = net_forward(g, v.decoder, dec_vars, g.concat_cols(z_q_st, s_in));

  double batch = static_cast<double>(states.rows());
  Var recon = g.scale(g.sum(g.square_(g.sub(decoded, a_in))), 1.0 / batch);
  Var commit = g.scale(g.sum(g.square_(g.sub(z_e, g.constant(q.z_q)))), v.commit_coef / batch);
  Var loss = g.add(recon, commit);
  g.backward(loss);

  VqLoss losses = vq_loss(actions, g.value(decoded), z_e_val, q.z_q, v.commit_coef);
  require(std::isfinite(losses.total), "vqvae_train_step: non-finite loss");

  adam_step(opt.encoder, net_param_ptrs(v.encoder), net_collect_grads(g, enc_vars));
  adam_step(opt.decoder, net_param_ptrs(v.decoder), net_collect_grads(g, dec_vars));

  int H = v.codebooks.num_codebooks();
  int dim = v.codebooks.subspace_dim();
  std::vector<std::vector<int>> selected(H, std::vector<int>(states.rows()));
  for (Eigen::Index i = 0; i < states.rows(); ++i)
    for (int h = 0; h < H; ++h) selected[h][i] = q.labels[i][h];

  if (use_fcm) {
    for (int h = 0; h < H; ++h)
      fcm_update(v.codebooks.books[h], z_e_val.middleCols(h * dim, dim), selected[h]);
  } else {
    // d/d e_k of mean_i ||z_i - e_{k_i}||^2, nonzero only for selected vectors
    std::vector<Mat*> cb_params;
    std::vector<Mat> cb_grads;
    for (int h = 0; h < H; ++h) {
      Codebook& cb = v.codebooks.books[h];
      Mat sub = z_e_val.middleCols(h * dim, dim);
      Mat grad = Mat::Zero(cb.size(), dim);
      for (Eigen::Index i = 0; i < sub.rows(); ++i)
        grad.row(selected[h][i]) += 2.0 * (cb.vectors.row(selected[h][i]) - sub.row(i)) / batch;
      cb_params.push_back(&cb.vectors);
      cb_grads.push_back(std::move(grad));
    }
    adam_step(opt.codebooks, cb_params, cb_grads);
    for (int h = 0; h < H; ++h) record_usage(v.codebooks.books[h], selected[h]);
  }

  return losses;
}

// ---- checkpoint ------------------------------------------------------------
// encoder net, decoder net, then codebooks: header (H, N, dim, gamma, dims),
// per codebook N x dim row-major f64 plus usage counters as u64. Decayed
// counters are rounded; totals are recomputed from the rounded counts on load.

inline constexpr uint32_t kVqvaeMagic = 0x51565156;  // "VQVQ"
inline constexpr uint32_t kVqvaeVersion = 1;

inline void save_vqvae(std::ostream& os, const ConditionalVqvae& v) {
  save_net(os, v.encoder);
  save_net(os, v.decoder);
  write_u32(os, kVqvaeMagic);
  write_u32(os, kVqvaeVersion);
  write_u32(os, static_cast<uint32_t>(v.codebooks.num_codebooks()));
  write_u32(os, static_cast<uint32_t>(v.codebooks.vectors_per_codebook()));
  write_u32(os, static_cast<uint32_t>(v.codebooks.subspace_dim()));
  write_u32(os, static_cast<uint32_t>(v.state_dim));
  write_u32(os, static_cast<uint32_t>(v.action_dim));
  write_f64(os, v.commit_coef);
  for (const Codebook& cb : v.codebooks.books) {
    for (int k = 0; k < cb.size(); ++k)
      for (int j = 0; j < cb.dim(); ++j) write_f64(os, cb.vectors(k, j));
    for (int k = 0; k < cb.size(); ++k)
      write_u64(os, static_cast<uint64_t>(std::llround(std::max(0.0, cb.used_count(k)))));
  }
}

inline ConditionalVqvae load_vqvae(std::istream& is) {
  ConditionalVqvae v;
  v.encoder = load_net(is);
  v.decoder = load_net(is);
  require(read_u32(is) == kVqvaeMagic, "bad vqvae checkpoint magic");
  require(read_u32(is) == kVqvaeVersion, "unsupported vqvae checkpoint version");
  uint32_t H = read_u32(is);
  uint32_t N = read_u32(is);
  uint32_t dim = read_u32(is);
  v.state_dim = static_cast<int>(read_u32(is));
  v.action_dim = static_cast<int>(read_u32(is));
  v.commit_coef = read_f64(is);
  v.codebooks = make_codebook_set(static_cast<int>(H), static_cast<int>(N),
                                  static_cast<int>(H * dim));
  for (Codebook& cb : v.codebooks.books) {
    for (int k = 0; k < cb.size(); ++k)
      for (int j = 0; j < cb.dim(); ++j) cb.vectors(k, j) = read_f64(is);
    for (int k = 0; k < cb.size(); ++k) cb.used_count(k) = static_cast<double>(read_u64(is));
    cb.total_count = cb.used_count.sum();
  }
  return v;
}

}  // namespace vqcount
