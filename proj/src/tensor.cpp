#include "doctor/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "doctor/kernels.hpp"

namespace doctor {

namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

long shape_size(const Shape& s) {
  long n = 1;
  for (int d : s) n *= d;
  return n;
}

void check_shape(const Shape& s, const char* op) {
  for (int d : s) {
    if (d <= 0) throw std::invalid_argument(std::string(op) + ": non-positive dim in shape " + shape_str(s));
  }
}

NodePtr make_node(Shape shape, const char* op) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->data.assign(static_cast<std::size_t>(shape_size(n->shape)), 0.0);
  n->op = op;
  return n;
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error(op, a.shape(), b.shape());
}

// Wires parents and the grad flag; the caller fills data and backprop.
Tensor finish(NodePtr out, std::vector<NodePtr> parents, std::function<void(Node&)> backprop) {
  bool rg = false;
  for (const auto& p : parents) rg = rg || p->requires_grad;
  out->parents = std::move(parents);
  out->requires_grad = rg;
  if (rg) out->backprop = std::move(backprop);
  return Tensor(std::move(out));
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::string r = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) r += ",";
    r += std::to_string(s[i]);
  }
  return r + "]";
}

// ---- Tensor basics ----

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  check_shape(shape, "zeros");
  auto n = make_node(std::move(shape), "leaf");
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.node()->data.begin(), t.node()->data.end(), value);
  return t;
}

Tensor Tensor::of(Shape shape, std::vector<double> data, bool requires_grad) {
  check_shape(shape, "of");
  if (shape_size(shape) != static_cast<long>(data.size()))
    throw std::invalid_argument("Tensor::of: shape " + shape_str(shape) + " does not match data length " +
                                std::to_string(data.size()));
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return of({1}, {value}, requires_grad); }

const Shape& Tensor::shape() const { return node_->shape; }
int Tensor::rank() const { return static_cast<int>(node_->shape.size()); }
long Tensor::size() const { return node_->size(); }

int Tensor::rows() const {
  if (rank() == 1) return 1;
  if (rank() == 2) return node_->shape[0];
  throw std::logic_error("Tensor::rows: rank-" + std::to_string(rank()) + " tensor");
}

int Tensor::cols() const {
  if (rank() == 1) return node_->shape[0];
  if (rank() == 2) return node_->shape[1];
  throw std::logic_error("Tensor::cols: rank-" + std::to_string(rank()) + " tensor");
}

bool Tensor::requires_grad() const { return node_->requires_grad; }
const std::vector<double>& Tensor::data() const { return node_->data; }

std::vector<double>& Tensor::leaf_data() {
  if (!node_->parents.empty()) throw std::logic_error("leaf_data: tensor is not a leaf");
  return node_->data;
}

const std::vector<double>& Tensor::grad() const {
  if (!has_grad()) throw std::logic_error("grad: no gradient populated");
  return node_->grad;
}

bool Tensor::has_grad() const { return node_ && node_->grad.size() == node_->data.size(); }

void Tensor::zero_grad() { node_->grad.clear(); }

double Tensor::value() const {
  if (size() != 1) throw std::logic_error("value: tensor of shape " + shape_str(shape()) + " is not scalar");
  return node_->data[0];
}

double Tensor::at(long i) const { return node_->data.at(static_cast<std::size_t>(i)); }

double Tensor::at(int r, int c) const {
  if (rank() != 2) throw std::logic_error("at(r,c): rank-" + std::to_string(rank()) + " tensor");
  return node_->data.at(static_cast<std::size_t>(r) * node_->shape[1] + c);
}

// ---- backward ----

void backward(const Tensor& loss) {
  if (!loss.defined()) throw std::invalid_argument("backward: undefined tensor");
  if (loss.size() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
  NodePtr root = loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order over the requires_grad subgraph.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx].get();
      ++idx;
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior grads are scratch for this pass; leaf grads accumulate across
  // passes until explicitly zeroed.
  for (Node* n : order) {
    if (n->parents.empty()) {
      n->ensure_grad();
    } else {
      n->grad.assign(n->data.size(), 0.0);
    }
  }
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop) n->backprop(*n);
  }
}

// ---- elementwise ----

namespace {

Tensor elementwise_binary(const char* op, const Tensor& a, const Tensor& b,
                          double (*f)(double, double), double da_coef, double db_coef) {
  require_same_shape(op, a, b);
  auto out = make_node(a.shape(), op);
  const auto& ad = a.data();
  const auto& bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) out->data[i] = f(ad[i], bd[i]);
  auto pa = a.node();
  auto pb = b.node();
  return finish(out, {pa, pb}, [pa, pb, da_coef, db_coef](Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += da_coef * self.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += db_coef * self.grad[i];
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise_binary("add", a, b, [](double x, double y) { return x + y; }, 1.0, 1.0);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise_binary("sub", a, b, [](double x, double y) { return x - y; }, 1.0, -1.0);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  auto out = make_node(a.shape(), "mul");
  const auto& ad = a.data();
  const auto& bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) out->data[i] = ad[i] * bd[i];
  auto pa = a.node();
  auto pb = b.node();
  return finish(out, {pa, pb}, [pa, pb](Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += pb->data[i] * self.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += pa->data[i] * self.grad[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  auto out = make_node(a.shape(), "scale");
  const auto& ad = a.data();
  for (std::size_t i = 0; i < ad.size(); ++i) out->data[i] = s * ad[i];
  auto pa = a.node();
  return finish(out, {pa}, [pa, s](Node& self) {
    pa->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += s * self.grad[i];
  });
}

Tensor add_scalar(const Tensor& a, double s) {
  auto out = make_node(a.shape(), "add_scalar");
  const auto& ad = a.data();
  for (std::size_t i = 0; i < ad.size(); ++i) out->data[i] = ad[i] + s;
  auto pa = a.node();
  return finish(out, {pa}, [pa](Node& self) {
    pa->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
  });
}

namespace {

// Unary op whose local derivative is a function of the output value.
Tensor unary_from_output(const char* op, const Tensor& a, double (*f)(double), double (*df_of_y)(double)) {
  auto out = make_node(a.shape(), op);
  const auto& ad = a.data();
  for (std::size_t i = 0; i < ad.size(); ++i) out->data[i] = f(ad[i]);
  auto pa = a.node();
  return finish(out, {pa}, [pa, df_of_y](Node& self) {
    pa->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += df_of_y(self.data[i]) * self.grad[i];
  });
}

}  // namespace

Tensor tanh_t(const Tensor& a) {
  return unary_from_output("tanh", a, [](double x) { return std::tanh(x); },
                           [](double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_from_output("sigmoid", a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                           [](double y) { return y * (1.0 - y); });
}

Tensor exp_t(const Tensor& a) {
  return unary_from_output("exp", a, [](double x) { return std::exp(x); }, [](double y) { return y; });
}

Tensor log_t(const Tensor& a) {
  auto out = make_node(a.shape(), "log");
  const auto& ad = a.data();
  for (std::size_t i = 0; i < ad.size(); ++i) out->data[i] = std::log(ad[i]);
  auto pa = a.node();
  return finish(out, {pa}, [pa](Node& self) {
    pa->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] / pa->data[i];
  });
}

// ---- linear algebra ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) shape_error("matmul", a.shape(), b.shape());
  const int m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  auto out = make_node({m, n}, "matmul");
  kernels::matmul(a.data().data(), b.data().data(), out->data.data(), m, k, n);
  auto pa = a.node();
  auto pb = b.node();
  return finish(out, {pa, pb}, [pa, pb, m, k, n](Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      kernels::matmul_nt(self.grad.data(), pb->data.data(), pa->grad.data(), m, n, k);
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      kernels::matmul_tn(pa->data.data(), self.grad.data(), pb->grad.data(), m, k, n);
    }
  });
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw std::invalid_argument("transpose: need rank-2, got " + shape_str(a.shape()));
  const int m = a.shape()[0], n = a.shape()[1];
  auto out = make_node({n, m}, "transpose");
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out->data[static_cast<std::size_t>(j) * m + i] = a.data()[static_cast<std::size_t>(i) * n + j];
  auto pa = a.node();
  return finish(out, {pa}, [pa, m, n](Node& self) {
    pa->ensure_grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        pa->grad[static_cast<std::size_t>(i) * n + j] += self.grad[static_cast<std::size_t>(j) * m + i];
  });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  if (a.rank() != 1 || b.rank() != 1 || a.shape() != b.shape()) shape_error("dot", a.shape(), b.shape());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) acc += a.data()[i] * b.data()[i];
  auto out = make_node({1}, "dot");
  out->data[0] = acc;
  auto pa = a.node();
  auto pb = b.node();
  return finish(out, {pa, pb}, [pa, pb](Node& self) {
    const double g = self.grad[0];
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (std::size_t i = 0; i < pa->data.size(); ++i) pa->grad[i] += g * pb->data[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (std::size_t i = 0; i < pb->data.size(); ++i) pb->grad[i] += g * pa->data[i];
    }
  });
}

// ---- structure ----

Tensor reshape(const Tensor& a, Shape shape) {
  check_shape(shape, "reshape");
  if (shape_size(shape) != a.size())
    throw std::invalid_argument("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  auto out = make_node(std::move(shape), "reshape");
  out->data = a.data();
  auto pa = a.node();
  return finish(out, {pa}, [pa](Node& self) {
    pa->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty input");
  const int d = parts[0].cols();
  int total = 0;
  for (const auto& p : parts) {
    if (p.rank() != 2) throw std::invalid_argument("concat_rows: need rank-2 parts, got " + shape_str(p.shape()));
    if (p.cols() != d) shape_error("concat_rows", parts[0].shape(), p.shape());
    total += p.rows();
  }
  auto out = make_node({total, d}, "concat_rows");
  std::vector<NodePtr> ps;
  long off = 0;
  for (const auto& p : parts) {
    std::copy(p.data().begin(), p.data().end(), out->data.begin() + off);
    off += p.size();
    ps.push_back(p.node());
  }
  return finish(out, ps, [ps](Node& self) {
    long off2 = 0;
    for (const auto& p : ps) {
      if (p->requires_grad) {
        p->ensure_grad();
        for (long i = 0; i < p->size(); ++i) p->grad[static_cast<std::size_t>(i)] += self.grad[static_cast<std::size_t>(off2 + i)];
      }
      off2 += p->size();
    }
  });
}

Tensor concat_vec(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_vec: empty input");
  long total = 0;
  for (const auto& p : parts) {
    if (p.rank() != 1) throw std::invalid_argument("concat_vec: need rank-1 parts, got " + shape_str(p.shape()));
    total += p.size();
  }
  auto out = make_node({static_cast<int>(total)}, "concat_vec");
  std::vector<NodePtr> ps;
  long off = 0;
  for (const auto& p : parts) {
    std::copy(p.data().begin(), p.data().end(), out->data.begin() + off);
    off += p.size();
    ps.push_back(p.node());
  }
  return finish(out, ps, [ps](Node& self) {
    long off2 = 0;
    for (const auto& p : ps) {
      if (p->requires_grad) {
        p->ensure_grad();
        for (long i = 0; i < p->size(); ++i) p->grad[static_cast<std::size_t>(i)] += self.grad[static_cast<std::size_t>(off2 + i)];
      }
      off2 += p->size();
    }
  });
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: empty input");
  const int d = static_cast<int>(rows[0].size());
  for (const auto& r : rows) {
    if (r.rank() != 1 || r.size() != d) shape_error("stack_rows", rows[0].shape(), r.shape());
  }
  auto out = make_node({static_cast<int>(rows.size()), d}, "stack_rows");
  std::vector<NodePtr> ps;
  long off = 0;
  for (const auto& r : rows) {
    std::copy(r.data().begin(), r.data().end(), out->data.begin() + off);
    off += d;
    ps.push_back(r.node());
  }
  return finish(out, ps, [ps, d](Node& self) {
    long off2 = 0;
    for (const auto& p : ps) {
      if (p->requires_grad) {
        p->ensure_grad();
        for (int i = 0; i < d; ++i) p->grad[static_cast<std::size_t>(i)] += self.grad[static_cast<std::size_t>(off2 + i)];
      }
      off2 += d;
    }
  });
}

Tensor slice_rows(const Tensor& a, int r0, int r1) {
  if (a.rank() != 2) throw std::invalid_argument("slice_rows: need rank-2, got " + shape_str(a.shape()));
  const int n = a.shape()[0], d = a.shape()[1];
  if (r0 < 0 || r1 > n || r0 >= r1)
    throw std::invalid_argument("slice_rows: range [" + std::to_string(r0) + "," + std::to_string(r1) +
                                ") invalid for " + shape_str(a.shape()));
  auto out = make_node({r1 - r0, d}, "slice_rows");
  std::copy(a.data().begin() + static_cast<long>(r0) * d, a.data().begin() + static_cast<long>(r1) * d,
            out->data.begin());
  auto pa = a.node();
  return finish(out, {pa}, [pa, r0, d](Node& self) {
    pa->ensure_grad();
    const long base = static_cast<long>(r0) * d;
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[static_cast<std::size_t>(base) + i] += self.grad[i];
  });
}

Tensor repeat_rows(const Tensor& v, int n) {
  if (v.rank() != 1) throw std::invalid_argument("repeat_rows: need rank-1, got " + shape_str(v.shape()));
  if (n <= 0) throw std::invalid_argument("repeat_rows: n must be positive");
  const int d = static_cast<int>(v.size());
  auto out = make_node({n, d}, "repeat_rows");
  for (int i = 0; i < n; ++i) std::copy(v.data().begin(), v.data().end(), out->data.begin() + static_cast<long>(i) * d);
  auto pv = v.node();
  return finish(out, {pv}, [pv, n, d](Node& self) {
    pv->ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) pv->grad[static_cast<std::size_t>(j)] += self.grad[static_cast<std::size_t>(i) * d + j];
  });
}

// ---- reductions ----

Tensor mean_all(const Tensor& a) {
  const long n = a.size();
  double acc = 0.0;
  for (double x : a.data()) acc += x;
  auto out = make_node({1}, "mean_all");
  out->data[0] = acc / static_cast<double>(n);
  auto pa = a.node();
  return finish(out, {pa}, [pa, n](Node& self) {
    pa->ensure_grad();
    const double g = self.grad[0] / static_cast<double>(n);
    for (auto& gv : pa->grad) gv += g;
  });
}

Tensor sum_all(const Tensor& a) {
  double acc = 0.0;
  for (double x : a.data()) acc += x;
  auto out = make_node({1}, "sum_all");
  out->data[0] = acc;
  auto pa = a.node();
  return finish(out, {pa}, [pa](Node& self) {
    pa->ensure_grad();
    const double g = self.grad[0];
    for (auto& gv : pa->grad) gv += g;
  });
}

Tensor mean_rows(const Tensor& a) {
  if (a.rank() != 2) throw std::invalid_argument("mean_rows: need rank-2, got " + shape_str(a.shape()));
  const int n = a.shape()[0], d = a.shape()[1];
  auto out = make_node({d}, "mean_rows");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out->data[static_cast<std::size_t>(j)] += a.data()[static_cast<std::size_t>(i) * d + j];
  for (auto& x : out->data) x /= static_cast<double>(n);
  auto pa = a.node();
  return finish(out, {pa}, [pa, n, d](Node& self) {
    pa->ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j)
        pa->grad[static_cast<std::size_t>(i) * d + j] += self.grad[static_cast<std::size_t>(j)] / static_cast<double>(n);
  });
}

Tensor squared_l2(const Tensor& a) {
  double acc = 0.0;
  for (double x : a.data()) acc += x * x;
  auto out = make_node({1}, "squared_l2");
  out->data[0] = acc;
  auto pa = a.node();
  return finish(out, {pa}, [pa](Node& self) {
    pa->ensure_grad();
    const double g = self.grad[0];
    for (std::size_t i = 0; i < pa->data.size(); ++i) pa->grad[i] += 2.0 * pa->data[i] * g;
  });
}

// ---- row-wise nonlinearities ----

namespace {

void rows_view(const Tensor& a, const char* op, int& n, int& d) {
  if (a.rank() == 1) {
    n = 1;
    d = a.shape()[0];
  } else if (a.rank() == 2) {
    n = a.shape()[0];
    d = a.shape()[1];
  } else {
    throw std::invalid_argument(std::string(op) + ": need rank-1 or rank-2, got " + shape_str(a.shape()));
  }
}

}  // namespace

Tensor softmax_rows(const Tensor& a) {
  int n, d;
  rows_view(a, "softmax_rows", n, d);
  auto out = make_node(a.shape(), "softmax_rows");
  for (int i = 0; i < n; ++i) {
    const double* x = a.data().data() + static_cast<long>(i) * d;
    double* y = out->data.data() + static_cast<long>(i) * d;
    double mx = x[0];
    for (int j = 1; j < d; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (int j = 0; j < d; ++j) {
      y[j] = std::exp(x[j] - mx);
      z += y[j];
    }
    for (int j = 0; j < d; ++j) y[j] /= z;
  }
  auto pa = a.node();
  return finish(out, {pa}, [pa, n, d](Node& self) {
    pa->ensure_grad();
    for (int i = 0; i < n; ++i) {
      const double* y = self.data.data() + static_cast<long>(i) * d;
      const double* g = self.grad.data() + static_cast<long>(i) * d;
      double* gx = pa->grad.data() + static_cast<long>(i) * d;
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += g[j] * y[j];
      for (int j = 0; j < d; ++j) gx[j] += y[j] * (g[j] - s);
    }
  });
}

Tensor layernorm(const Tensor& a) {
  constexpr double kEps = 1e-5;
  int n, d;
  rows_view(a, "layernorm", n, d);
  auto out = make_node(a.shape(), "layernorm");
  std::vector<double> inv_std(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double* x = a.data().data() + static_cast<long>(i) * d;
    double* y = out->data.data() + static_cast<long>(i) * d;
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += x[j];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= d;
    const double is = 1.0 / std::sqrt(var + kEps);
    inv_std[static_cast<std::size_t>(i)] = is;
    for (int j = 0; j < d; ++j) y[j] = (x[j] - mu) * is;
  }
  auto pa = a.node();
  return finish(out, {pa}, [pa, n, d, inv_std](Node& self) {
    pa->ensure_grad();
    for (int i = 0; i < n; ++i) {
      const double* y = self.data.data() + static_cast<long>(i) * d;
      const double* g = self.grad.data() + static_cast<long>(i) * d;
      double* gx = pa->grad.data() + static_cast<long>(i) * d;
      double gm = 0.0, gym = 0.0;
      for (int j = 0; j < d; ++j) {
        gm += g[j];
        gym += g[j] * y[j];
      }
      gm /= d;
      gym /= d;
      const double is = inv_std[static_cast<std::size_t>(i)];
      for (int j = 0; j < d; ++j) gx[j] += is * (g[j] - gm - y[j] * gym);
    }
  });
}

// ---- convolution ----

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  if (x.rank() != 3) throw std::invalid_argument("conv2d: input must be {h,w,c}, got " + shape_str(x.shape()));
  if (w.rank() != 4) throw std::invalid_argument("conv2d: kernel must be {kh,kw,ci,co}, got " + shape_str(w.shape()));
  const int h = x.shape()[0], wd = x.shape()[1], ci = x.shape()[2];
  const int kh = w.shape()[0], kw = w.shape()[1], wci = w.shape()[2], co = w.shape()[3];
  if (wci != ci) shape_error("conv2d", x.shape(), w.shape());
  if (b.rank() != 1 || b.shape()[0] != co) shape_error("conv2d", w.shape(), b.shape());
  if (stride <= 0) throw std::invalid_argument("conv2d: stride must be positive");
  const int ho = kernels::conv_out_dim(h, kh, stride, pad);
  const int wo = kernels::conv_out_dim(wd, kw, stride, pad);
  if (ho <= 0 || wo <= 0)
    throw std::invalid_argument("conv2d: kernel " + shape_str(w.shape()) + " too large for input " + shape_str(x.shape()));
  auto out = make_node({ho, wo, co}, "conv2d");
  kernels::conv2d(x.data().data(), w.data().data(), b.data().data(), out->data.data(), h, wd, ci, kh, kw, co, stride,
                  pad);
  auto px = x.node();
  auto pw = w.node();
  auto pb = b.node();
  return finish(out, {px, pw, pb}, [px, pw, pb, h, wd, ci, kh, kw, co, stride, pad, ho, wo](Node& self) {
    if (px->requires_grad) px->ensure_grad();
    if (pw->requires_grad) pw->ensure_grad();
    if (pb->requires_grad) pb->ensure_grad();
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        const double* gp = self.grad.data() + (static_cast<long>(oy) * wo + ox) * co;
        if (pb->requires_grad)
          for (int f = 0; f < co; ++f) pb->grad[static_cast<std::size_t>(f)] += gp[f];
        for (int ky = 0; ky < kh; ++ky) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < kw; ++kx) {
            const int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= wd) continue;
            const long xoff = (static_cast<long>(iy) * wd + ix) * ci;
            const long woff = (static_cast<long>(ky) * kw + kx) * ci * co;
            for (int c = 0; c < ci; ++c) {
              for (int f = 0; f < co; ++f) {
                const double g = gp[f];
                if (px->requires_grad)
                  px->grad[static_cast<std::size_t>(xoff + c)] += g * pw->data[static_cast<std::size_t>(woff + c * co + f)];
                if (pw->requires_grad)
                  pw->grad[static_cast<std::size_t>(woff + c * co + f)] += g * px->data[static_cast<std::size_t>(xoff + c)];
              }
            }
          }
        }
      }
    }
  });
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  if (x.rank() != 2) throw std::invalid_argument("conv1d: input must be {l,c}, got " + shape_str(x.shape()));
  if (w.rank() != 3) throw std::invalid_argument("conv1d: kernel must be {k,ci,co}, got " + shape_str(w.shape()));
  const int l = x.shape()[0], ci = x.shape()[1];
  const int kk = w.shape()[0], wci = w.shape()[1], co = w.shape()[2];
  if (wci != ci) shape_error("conv1d", x.shape(), w.shape());
  if (b.rank() != 1 || b.shape()[0] != co) shape_error("conv1d", w.shape(), b.shape());
  if (stride <= 0) throw std::invalid_argument("conv1d: stride must be positive");
  const int lo = kernels::conv_out_dim(l, kk, stride, pad);
  if (lo <= 0)
    throw std::invalid_argument("conv1d: kernel " + shape_str(w.shape()) + " too large for input " + shape_str(x.shape()));
  auto out = make_node({lo, co}, "conv1d");
  for (int o = 0; o < lo; ++o) {
    double* op = out->data.data() + static_cast<long>(o) * co;
    for (int f = 0; f < co; ++f) op[f] += b.data()[static_cast<std::size_t>(f)];
    for (int kx = 0; kx < kk; ++kx) {
      const int ix = o * stride + kx - pad;
      if (ix < 0 || ix >= l) continue;
      const double* xp = x.data().data() + static_cast<long>(ix) * ci;
      const double* wp = w.data().data() + static_cast<long>(kx) * ci * co;
      for (int c = 0; c < ci; ++c)
        for (int f = 0; f < co; ++f) op[f] += xp[c] * wp[static_cast<long>(c) * co + f];
    }
  }
  auto px = x.node();
  auto pw = w.node();
  auto pb = b.node();
  return finish(out, {px, pw, pb}, [px, pw, pb, l, ci, kk, co, stride, pad, lo](Node& self) {
    if (px->requires_grad) px->ensure_grad();
    if (pw->requires_grad) pw->ensure_grad();
    if (pb->requires_grad) pb->ensure_grad();
    for (int o = 0; o < lo; ++o) {
      const double* gp = self.grad.data() + static_cast<long>(o) * co;
      if (pb->requires_grad)
        for (int f = 0; f < co; ++f) pb->grad[static_cast<std::size_t>(f)] += gp[f];
      for (int kx = 0; kx < kk; ++kx) {
        const int ix = o * stride + kx - pad;
        if (ix < 0 || ix >= l) continue;
        const long xoff = static_cast<long>(ix) * ci;
        const long woff = static_cast<long>(kx) * ci * co;
        for (int c = 0; c < ci; ++c) {
          for (int f = 0; f < co; ++f) {
            if (px->requires_grad) px->grad[static_cast<std::size_t>(xoff + c)] += gp[f] * pw->data[static_cast<std::size_t>(woff + c * co + f)];
            if (pw->requires_grad) pw->grad[static_cast<std::size_t>(woff + c * co + f)] += gp[f] * px->data[static_cast<std::size_t>(xoff + c)];
          }
        }
      }
    }
  });
}

Tensor detach(const Tensor& a) {
  auto out = make_node(a.shape(), "detach");
  out->data = a.data();
  return Tensor(std::move(out));
}

}  // namespace doctor
