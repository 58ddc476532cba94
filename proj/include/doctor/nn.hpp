#pragma once

#include "doctor/tensor.hpp"

namespace doctor {

// x {din} or {n,din}; W {din,dout}; b {dout}. Rank-1 input gives rank-1 output.
Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b);

// Single-head scaled dot-product attention with learned projections.
// query {nq,dq}, key/value {nk,dk}; wq {dq,dh}, wk {dk,dh}, wv {dk,dv}.
// Output {nq,dv}, rows aligned with query rows. Throws on empty sequences.
Tensor attention(const Tensor& query, const Tensor& key, const Tensor& value,
                 const Tensor& wq, const Tensor& wk, const Tensor& wv);

struct AffineParams {
  Tensor W;
  Tensor b;
};

struct AttentionParams {
  Tensor wq;
  Tensor wk;
  Tensor wv;
};

inline Tensor affine(const Tensor& x, const AffineParams& p) { return affine(x, p.W, p.b); }

inline Tensor self_attention(const Tensor& x, const AttentionParams& p) {
  return attention(x, x, x, p.wq, p.wk, p.wv);
}

inline Tensor cross_attention(const Tensor& q, const Tensor& context, const AttentionParams& p) {
  return attention(q, context, context, p.wq, p.wk, p.wv);
}

// Two-layer perceptron with tanh hidden activation; rank-1 or rank-2 input.
struct MlpParams {
  AffineParams hidden;
  AffineParams out;
};

Tensor mlp(const Tensor& x, const MlpParams& p);

// Binary cross-entropy of probability p {1} against a 0/1 label, with the
// log arguments clamped away from zero by 1e-12.
Tensor bce_loss(const Tensor& p, int label);

// Zero-pads (or truncates) a vector to length n.
Tensor fit_vec(const Tensor& v, int n);

}  // namespace doctor
