#include "doctor/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace doctor {

Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b) {
  if (W.rank() != 2 || b.rank() != 1 || b.shape()[0] != W.shape()[1])
    throw std::invalid_argument("affine: bad parameter shapes " + shape_str(W.shape()) + ", " + shape_str(b.shape()));
  if (x.rank() == 1) {
    Tensor y = matmul(reshape(x, {1, x.shape()[0]}), W);
    return add(reshape(y, {W.shape()[1]}), b);
  }
  Tensor y = matmul(x, W);
  return add(y, repeat_rows(b, y.rows()));
}

Tensor attention(const Tensor& query, const Tensor& key, const Tensor& value,
                 const Tensor& wq, const Tensor& wk, const Tensor& wv) {
  if (query.rank() != 2 || key.rank() != 2 || value.rank() != 2)
    throw std::invalid_argument("attention: query/key/value must be rank-2 matrices");
  if (query.rows() == 0 || key.rows() == 0)
    throw std::invalid_argument("attention: empty sequence");
  if (key.rows() != value.rows())
    throw std::invalid_argument("attention: key rows " + std::to_string(key.rows()) + " != value rows " +
                                std::to_string(value.rows()));
  Tensor q = matmul(query, wq);
  Tensor k = matmul(key, wk);
  if (q.cols() != k.cols())
    throw std::invalid_argument("attention: projected head dims differ, " + shape_str(q.shape()) + " vs " +
                                shape_str(k.shape()));
  Tensor v = matmul(value, wv);
  Tensor scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(q.cols())));
  return matmul(softmax_rows(scores), v);
}

Tensor mlp(const Tensor& x, const MlpParams& p) {
  return affine(tanh_t(affine(x, p.hidden)), p.out);
}

Tensor bce_loss(const Tensor& p, int label) {
  if (label != 0 && label != 1) throw std::invalid_argument("bce_loss: label must be 0 or 1");
  if (p.size() != 1) throw std::invalid_argument("bce_loss: probability must be scalar");
  constexpr double kEps = 1e-12;
  if (label == 1) return scale(log_t(add_scalar(p, kEps)), -1.0);
  return scale(log_t(add_scalar(scale(p, -1.0), 1.0 + kEps)), -1.0);
}

Tensor fit_vec(const Tensor& v, int n) {
  if (v.rank() != 1) throw std::invalid_argument("fit_vec: need rank-1, got " + shape_str(v.shape()));
  const int d = v.shape()[0];
  if (d == n) return v;
  if (d > n) return reshape(slice_rows(reshape(v, {d, 1}), 0, n), {n});
  return concat_vec({v, Tensor::zeros({n - d})});
}

}  // namespace doctor
