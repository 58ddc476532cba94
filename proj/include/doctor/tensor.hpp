#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace doctor {

using Shape = std::vector<int>;

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // allocated on demand, same length as data
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // scatters grad into the parents
  const char* op = "leaf";

  long size() const { return static_cast<long>(data.size()); }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

// Dense 64-bit tensor with reverse-mode differentiation. Value-semantic
// handle to a shared graph node; data is immutable after creation except for
// the grad buffer and explicit leaf updates (optimizer steps). There is no
// broadcasting: shapes must match exactly, with explicit reshape/expand ops.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor of(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int rank() const;
  long size() const;
  int rows() const;  // rank-2 (and rank-1, which counts as one row)
  int cols() const;
  bool requires_grad() const;

  const std::vector<double>& data() const;
  std::vector<double>& leaf_data();  // mutation valid for leaves only (optimizer updates)
  const std::vector<double>& grad() const;
  bool has_grad() const;
  void zero_grad();

  double value() const;  // scalar tensors
  double at(long i) const;
  double at(int r, int c) const;

  std::shared_ptr<detail::Node> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Propagates d(loss)/d(node) to every reachable node with requires_grad set.
// loss must be a scalar; repeated calls accumulate into existing grads.
void backward(const Tensor& loss);

// ---- elementwise / scalar ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor tanh_t(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp_t(const Tensor& a);
Tensor log_t(const Tensor& a);

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);  // {m,k} x {k,n}
Tensor transpose(const Tensor& a);                // {m,n} -> {n,m}
Tensor dot(const Tensor& a, const Tensor& b);     // {d} . {d} -> {1}

// ---- structure ----
Tensor reshape(const Tensor& a, Shape shape);
Tensor concat_rows(const std::vector<Tensor>& parts);  // {ni,d} -> {sum ni, d}
Tensor concat_vec(const std::vector<Tensor>& parts);   // {di} -> {sum di}
Tensor stack_rows(const std::vector<Tensor>& rows);    // n x {d} -> {n,d}
Tensor slice_rows(const Tensor& a, int r0, int r1);    // rows [r0, r1)
Tensor repeat_rows(const Tensor& v, int n);            // {d} -> {n,d}

// ---- reductions ----
Tensor mean_all(const Tensor& a);   // {1}
Tensor sum_all(const Tensor& a);    // {1}
Tensor mean_rows(const Tensor& a);  // {n,d} -> {d}
Tensor squared_l2(const Tensor& a); // sum of squares -> {1}

// ---- row-wise nonlinearities ----
Tensor softmax_rows(const Tensor& a);  // rank-1 or rank-2; softmax per row
Tensor layernorm(const Tensor& a);     // per row: zero mean, unit variance, eps 1e-5

// ---- convolution ----
// x {h,w,ci}, w {kh,kw,ci,co}, b {co} -> {ho,wo,co}; zero padding.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);
// x {l,ci}, w {k,ci,co}, b {co} -> {lo,co}
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);

// Cuts the graph: same values, no parents, requires_grad off.
Tensor detach(const Tensor& a);

std::string shape_str(const Shape& s);

}  // namespace doctor
