#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace nesy {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily, same length as value
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Pulls this node's grad into the parents' grads. Empty for leaves.
  std::function<void(TensorNode&)> backprop;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

// Dense 64-bit tensor participating in a define-by-run tape. Values are
// immutable after construction except for leaf mutation by the optimizer;
// gradients accumulate in place across backward() calls until zero_grad().
class Tensor {
 public:
  Tensor() = default;

  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor from(std::vector<double> data, Shape shape, bool requires_grad = false);
  static Tensor vector(std::vector<double> data, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  bool is_scalar() const { return node_->value.size() == 1; }
  double item() const;
  const std::vector<double>& values() const { return node_->value; }
  const std::vector<double>& grad() const;
  bool requires_grad() const { return node_->requires_grad; }

  // Leaf-only mutation, used by the optimizer between tape builds.
  void set_values(std::vector<double> v);
  void zero_grad();

  std::shared_ptr<TensorNode> node() const { return node_; }

  static Tensor wrap(std::shared_ptr<TensorNode> n) { return Tensor(std::move(n)); }

 private:
  explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}
  std::shared_ptr<TensorNode> node_;
};

// Builds a non-leaf node. `backprop` must accumulate into parent grads via
// TensorNode::ensure_grad; it is only invoked when the node requires grad.
Tensor make_op(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
               std::function<void(TensorNode&)> backprop);

// Elementwise with numpy-style broadcasting on both operands.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor minimum(const Tensor& a, const Tensor& b);
Tensor maximum(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& a);
Tensor pow(const Tensor& a, double exponent);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);

// Clamps values to [lo, hi]; gradient is identity strictly inside the band
// and zero outside it.
Tensor clamp(const Tensor& a, double lo, double hi);

Tensor matmul(const Tensor& a, const Tensor& b);  // rank-2 only

Tensor sum(const Tensor& a);   // full reduction -> scalar
Tensor mean(const Tensor& a);  // full reduction -> scalar

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor stack_scalars(const std::vector<Tensor>& parts);  // k scalars -> [k]
Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t len);

// Gathers elements (rank 1) or rows (rank 2) by index; duplicates allowed.
Tensor index_rows(const Tensor& a, const std::vector<std::size_t>& indices);

Tensor reshape(const Tensor& a, Shape shape);
Tensor broadcast_to(const Tensor& a, const Shape& shape);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator+(const Tensor& a, double b) { return add(a, Tensor::scalar(b)); }
inline Tensor operator+(double a, const Tensor& b) { return add(Tensor::scalar(a), b); }
inline Tensor operator-(const Tensor& a, double b) { return sub(a, Tensor::scalar(b)); }
inline Tensor operator-(double a, const Tensor& b) { return sub(Tensor::scalar(a), b); }
inline Tensor operator*(const Tensor& a, double b) { return mul(a, Tensor::scalar(b)); }
inline Tensor operator*(double a, const Tensor& b) { return mul(Tensor::scalar(a), b); }
inline Tensor operator/(const Tensor& a, double b) { return div(a, Tensor::scalar(b)); }
inline Tensor operator/(double a, const Tensor& b) { return div(Tensor::scalar(a), b); }

// Reverse pass from a scalar loss. Visits the graph in reverse topological
// order exactly once; repeated calls without zero_grad accumulate.
void backward(const Tensor& loss);

}  // namespace nesy
