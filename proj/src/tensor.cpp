#include "nesy/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "nesy/error.hpp"

namespace nesy {

std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from({v}, Shape{}, requires_grad);
}

Tensor Tensor::from(std::vector<double> data, Shape shape, bool requires_grad) {
  if (data.size() != numel(shape))
    throw ValidationError("tensor data length " + std::to_string(data.size()) +
                          " does not match shape " + shape_str(shape));
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  n->is_leaf = true;
  return Tensor::wrap(std::move(n));
}

Tensor Tensor::vector(std::vector<double> data, bool requires_grad) {
  Shape s{data.size()};
  return from(std::move(data), std::move(s), requires_grad);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::vector<double> d(numel(shape), 0.0);
  return from(std::move(d), std::move(shape), requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  std::vector<double> d(numel(shape), v);
  return from(std::move(d), std::move(shape), requires_grad);
}

double Tensor::item() const {
  if (size() != 1)
    throw ValidationError("item() on non-scalar tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

const std::vector<double>& Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::set_values(std::vector<double> v) {
  if (!node_->is_leaf) throw ValidationError("set_values on non-leaf tensor");
  if (v.size() != node_->value.size())
    throw ValidationError("set_values length mismatch");
  node_->value = std::move(v);
}

void Tensor::zero_grad() {
  node_->grad.assign(node_->value.size(), 0.0);
}

Tensor make_op(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
               std::function<void(TensorNode&)> backprop) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->is_leaf = false;
  n->parents.reserve(parents.size());
  bool rg = false;
  for (auto& p : parents) {
    rg = rg || p.node()->requires_grad;
    n->parents.push_back(p.node());
  }
  n->requires_grad = rg;
  if (rg) n->backprop = std::move(backprop);
  return Tensor::wrap(std::move(n));
}

// ---------------------------------------------------------------------------
// broadcasting

namespace {

Shape broadcast_shape(const Shape& a, const Shape& b) {
  std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1)
      throw ValidationError("shapes not broadcast-compatible: " + shape_str(a) +
                            " vs " + shape_str(b));
    out[i] = std::max(da, db);
  }
  return out;
}

// Strides of `in` aligned to an output of shape `out`; broadcast dims get 0.
std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> strides(out.size(), 0);
  std::size_t acc = 1;
  for (std::size_t i = 0; i < in.size(); ++i) {
    std::size_t rev = in.size() - 1 - i;          // index into `in`
    std::size_t out_rev = out.size() - 1 - i;     // aligned index into `out`
    strides[out_rev] = (in[rev] == 1 && out[out_rev] != 1) ? 0 : acc;
    acc *= in[rev];
  }
  return strides;
}

// Calls fn(iout, ia, ib) for every output element.
template <class F>
void for_each_broadcast(const Shape& out, const Shape& sa, const Shape& sb, F&& fn) {
  std::size_t n = numel(out);
  if (sa == sb) {  // fast path: identical shapes
    for (std::size_t i = 0; i < n; ++i) fn(i, i, i);
    return;
  }
  if (numel(sa) == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i, std::size_t{0}, i);
    return;
  }
  if (numel(sb) == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i, i, std::size_t{0});
    return;
  }
  auto stra = broadcast_strides(sa, out);
  auto strb = broadcast_strides(sb, out);
  std::vector<std::size_t> idx(out.size(), 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i < n; ++i) {
    fn(i, ia, ib);
    for (std::size_t d = out.size(); d-- > 0;) {
      ++idx[d];
      ia += stra[d];
      ib += strb[d];
      if (idx[d] < out[d]) break;
      ia -= stra[d] * out[d];
      ib -= strb[d] * out[d];
      idx[d] = 0;
    }
  }
}

// dfa(va, vb) = d out / d a evaluated elementwise, likewise dfb.
template <class FwdF, class DaF, class DbF>
Tensor binary_op(const Tensor& a, const Tensor& b, FwdF fwd, DaF dfa, DbF dfb) {
  Shape out_shape = broadcast_shape(a.shape(), b.shape());
  std::vector<double> out(numel(out_shape));
  const auto& va = a.values();
  const auto& vb = b.values();
  for_each_broadcast(out_shape, a.shape(), b.shape(),
                     [&](std::size_t io, std::size_t ia, std::size_t ib) {
                       out[io] = fwd(va[ia], vb[ib]);
                     });
  auto an = a.node();
  auto bn = b.node();
  Shape sa = a.shape(), sb = b.shape();
  return make_op(out_shape, std::move(out), {a, b},
                 [an, bn, sa, sb, dfa, dfb](TensorNode& n) {
                   const bool ga = an->requires_grad;
                   const bool gb = bn->requires_grad;
                   if (ga) an->ensure_grad();
                   if (gb) bn->ensure_grad();
                   for_each_broadcast(
                       n.shape, sa, sb,
                       [&](std::size_t io, std::size_t ia, std::size_t ib) {
                         double g = n.grad[io];
                         if (ga) an->grad[ia] += g * dfa(an->value[ia], bn->value[ib]);
                         if (gb) bn->grad[ib] += g * dfb(an->value[ia], bn->value[ib]);
                       });
                 });
}

template <class FwdF, class DF>
Tensor unary_op(const Tensor& a, FwdF fwd, DF df) {
  std::vector<double> out(a.size());
  const auto& va = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(va[i]);
  auto an = a.node();
  return make_op(a.shape(), std::move(out), {a}, [an, df](TensorNode& n) {
    an->ensure_grad();
    for (std::size_t i = 0; i < n.value.size(); ++i)
      an->grad[i] += n.grad[i] * df(an->value[i], n.value[i]);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  // Subgradient routed to the smaller operand; ties go to a.
  return binary_op(
      a, b, [](double x, double y) { return std::min(x, y); },
      [](double x, double y) { return x <= y ? 1.0 : 0.0; },
      [](double x, double y) { return x <= y ? 0.0 : 1.0; });
}

Tensor maximum(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return std::max(x, y); },
      [](double x, double y) { return x >= y ? 1.0 : 0.0; },
      [](double x, double y) { return x >= y ? 0.0 : 1.0; });
}

Tensor neg(const Tensor& a) {
  return unary_op(a, [](double x) { return -x; },
                  [](double, double) { return -1.0; });
}

Tensor pow(const Tensor& a, double e) {
  return unary_op(a, [e](double x) { return std::pow(x, e); },
                  [e](double x, double) {
                    if (x == 0.0) return e == 1.0 ? 1.0 : 0.0;
                    return e * std::pow(x, e - 1.0);
                  });
}

Tensor exp(const Tensor& a) {
  return unary_op(a, [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary_op(a, [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(a,
                  [](double x) {
                    return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                                  : std::exp(x) / (1.0 + std::exp(x));
                  },
                  [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary_op(a, [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (!(lo < hi))
    throw ValidationError("clamp bounds must satisfy lo < hi");
  return unary_op(a,
                  [lo, hi](double x) { return std::min(hi, std::max(lo, x)); },
                  [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0])
    throw ValidationError("matmul shape mismatch: " + shape_str(a.shape()) + " x " +
                          shape_str(b.shape()));
  const std::size_t m = a.shape()[0], k = a.shape()[1], p = b.shape()[1];
  std::vector<double> out(m * p, 0.0);
  const auto& va = a.values();
  const auto& vb = b.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t t = 0; t < k; ++t) {
      double x = va[i * k + t];
      if (x == 0.0) continue;
      const double* brow = vb.data() + t * p;
      double* orow = out.data() + i * p;
      for (std::size_t j = 0; j < p; ++j) orow[j] += x * brow[j];
    }
  auto an = a.node();
  auto bn = b.node();
  return make_op({m, p}, std::move(out), {a, b}, [an, bn, m, k, p](TensorNode& n) {
    if (an->requires_grad) {
      an->ensure_grad();  // dA = dC * B^T
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t t = 0; t < k; ++t) {
          double acc = 0.0;
          const double* grow = n.grad.data() + i * p;
          const double* brow = bn->value.data() + t * p;
          for (std::size_t j = 0; j < p; ++j) acc += grow[j] * brow[j];
          an->grad[i * k + t] += acc;
        }
    }
    if (bn->requires_grad) {
      bn->ensure_grad();  // dB = A^T * dC
      for (std::size_t t = 0; t < k; ++t)
        for (std::size_t i = 0; i < m; ++i) {
          double x = an->value[i * k + t];
          if (x == 0.0) continue;
          const double* grow = n.grad.data() + i * p;
          double* brow = bn->grad.data() + t * p;
          for (std::size_t j = 0; j < p; ++j) brow[j] += x * grow[j];
        }
    }
  });
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  auto an = a.node();
  return make_op(Shape{}, {acc}, {a}, [an](TensorNode& n) {
    an->ensure_grad();
    double g = n.grad[0];
    for (double& gi : an->grad) gi += g;
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw ValidationError("mean of empty tensor");
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  double inv = 1.0 / static_cast<double>(a.size());
  auto an = a.node();
  return make_op(Shape{}, {acc * inv}, {a}, [an, inv](TensorNode& n) {
    an->ensure_grad();
    double g = n.grad[0] * inv;
    for (double& gi : an->grad) gi += g;
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ValidationError("concat of zero tensors");
  const std::size_t rank = parts[0].shape().size();
  if (rank == 0 || rank > 2 || axis >= rank)
    throw ValidationError("concat supports rank 1-2, axis < rank");
  for (const auto& p : parts)
    if (p.shape().size() != rank)
      throw ValidationError("concat rank mismatch");

  if (rank == 1 || axis == 0) {
    // stack along rows; column count (rank 2) must agree
    std::size_t cols = rank == 2 ? parts[0].shape()[1] : 1;
    std::size_t rows = 0;
    for (const auto& p : parts) {
      if (rank == 2 && p.shape()[1] != cols)
        throw ValidationError("concat column mismatch");
      rows += p.shape()[0];
    }
    std::vector<double> out;
    out.reserve(rows * cols);
    for (const auto& p : parts)
      out.insert(out.end(), p.values().begin(), p.values().end());
    Shape os = rank == 2 ? Shape{rows, cols} : Shape{rows};
    std::vector<std::shared_ptr<TensorNode>> nodes;
    for (const auto& p : parts) nodes.push_back(p.node());
    return make_op(os, std::move(out), parts, [nodes](TensorNode& n) {
      std::size_t off = 0;
      for (auto& pn : nodes) {
        if (pn->requires_grad) {
          pn->ensure_grad();
          for (std::size_t i = 0; i < pn->value.size(); ++i)
            pn->grad[i] += n.grad[off + i];
        }
        off += pn->value.size();
      }
    });
  }

  // rank 2, axis 1
  std::size_t rows = parts[0].shape()[0];
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.shape()[0] != rows) throw ValidationError("concat row mismatch");
    cols += p.shape()[1];
  }
  std::vector<double> out(rows * cols);
  std::size_t coff = 0;
  for (const auto& p : parts) {
    std::size_t pc = p.shape()[1];
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < pc; ++c)
        out[r * cols + coff + c] = p.values()[r * pc + c];
    coff += pc;
  }
  std::vector<std::shared_ptr<TensorNode>> nodes;
  for (const auto& p : parts) nodes.push_back(p.node());
  return make_op({rows, cols}, std::move(out), parts,
                 [nodes, rows, cols](TensorNode& n) {
                   std::size_t coff = 0;
                   for (auto& pn : nodes) {
                     std::size_t pc = pn->shape[1];
                     if (pn->requires_grad) {
                       pn->ensure_grad();
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t c = 0; c < pc; ++c)
                           pn->grad[r * pc + c] += n.grad[r * cols + coff + c];
                     }
                     coff += pc;
                   }
                 });
}

Tensor stack_scalars(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ValidationError("stack of zero tensors");
  std::vector<double> out;
  out.reserve(parts.size());
  for (const auto& p : parts) {
    if (p.size() != 1) throw ValidationError("stack_scalars expects scalars");
    out.push_back(p.values()[0]);
  }
  std::vector<std::shared_ptr<TensorNode>> nodes;
  for (const auto& p : parts) nodes.push_back(p.node());
  return make_op({parts.size()}, std::move(out), parts, [nodes](TensorNode& n) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i]->requires_grad) {
        nodes[i]->ensure_grad();
        nodes[i]->grad[0] += n.grad[i];
      }
    }
  });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t len) {
  const auto& s = a.shape();
  if (s.empty() || s.size() > 2 || axis >= s.size())
    throw ValidationError("slice supports rank 1-2, axis < rank");
  if (start + len > s[axis])
    throw ValidationError("slice out of range on axis " + std::to_string(axis));
  auto an = a.node();
  if (s.size() == 1) {
    std::vector<double> out(a.values().begin() + start, a.values().begin() + start + len);
    return make_op({len}, std::move(out), {a}, [an, start, len](TensorNode& n) {
      an->ensure_grad();
      for (std::size_t i = 0; i < len; ++i) an->grad[start + i] += n.grad[i];
    });
  }
  std::size_t rows = s[0], cols = s[1];
  if (axis == 0) {
    std::vector<double> out(a.values().begin() + start * cols,
                            a.values().begin() + (start + len) * cols);
    return make_op({len, cols}, std::move(out), {a},
                   [an, start, len, cols](TensorNode& n) {
                     an->ensure_grad();
                     for (std::size_t i = 0; i < len * cols; ++i)
                       an->grad[start * cols + i] += n.grad[i];
                   });
  }
  std::vector<double> out(rows * len);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < len; ++c)
      out[r * len + c] = a.values()[r * cols + start + c];
  return make_op({rows, len}, std::move(out), {a},
                 [an, rows, cols, start, len](TensorNode& n) {
                   an->ensure_grad();
                   for (std::size_t r = 0; r < rows; ++r)
                     for (std::size_t c = 0; c < len; ++c)
                       an->grad[r * cols + start + c] += n.grad[r * len + c];
                 });
}

Tensor index_rows(const Tensor& a, const std::vector<std::size_t>& indices) {
  const auto& s = a.shape();
  if (s.empty() || s.size() > 2)
    throw ValidationError("index_rows supports rank 1-2");
  std::size_t rows = s[0];
  std::size_t cols = s.size() == 2 ? s[1] : 1;
  for (std::size_t idx : indices)
    if (idx >= rows)
      throw ValidationError("index_rows: index " + std::to_string(idx) +
                            " out of range for " + shape_str(s));
  std::vector<double> out(indices.size() * cols);
  for (std::size_t i = 0; i < indices.size(); ++i)
    for (std::size_t c = 0; c < cols; ++c)
      out[i * cols + c] = a.values()[indices[i] * cols + c];
  Shape os = s.size() == 2 ? Shape{indices.size(), cols} : Shape{indices.size()};
  auto an = a.node();
  auto idxs = indices;
  return make_op(os, std::move(out), {a}, [an, idxs, cols](TensorNode& n) {
    an->ensure_grad();
    for (std::size_t i = 0; i < idxs.size(); ++i)
      for (std::size_t c = 0; c < cols; ++c)
        an->grad[idxs[i] * cols + c] += n.grad[i * cols + c];
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size())
    throw ValidationError("reshape " + shape_str(a.shape()) + " -> " +
                          shape_str(shape) + ": element count mismatch");
  auto an = a.node();
  return make_op(std::move(shape), a.values(), {a}, [an](TensorNode& n) {
    an->ensure_grad();
    for (std::size_t i = 0; i < n.value.size(); ++i) an->grad[i] += n.grad[i];
  });
}

Tensor broadcast_to(const Tensor& a, const Shape& shape) {
  Shape check = broadcast_shape(a.shape(), shape);
  if (check != shape)
    throw ValidationError("cannot broadcast " + shape_str(a.shape()) + " to " +
                          shape_str(shape));
  std::vector<double> out(numel(shape));
  for_each_broadcast(shape, a.shape(), shape,
                     [&](std::size_t io, std::size_t ia, std::size_t) {
                       out[io] = a.values()[ia];
                     });
  auto an = a.node();
  Shape sa = a.shape();
  return make_op(shape, std::move(out), {a}, [an, sa](TensorNode& n) {
    an->ensure_grad();
    for_each_broadcast(n.shape, sa, n.shape,
                       [&](std::size_t io, std::size_t ia, std::size_t) {
                         an->grad[ia] += n.grad[io];
                       });
  });
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw ValidationError("backward requires a scalar loss");
  auto root = loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order DFS over grad-requiring ancestors.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second)
        stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Intermediate grads are scratch space for this pass; only leaf grads
  // accumulate across backward calls.
  for (TensorNode* n : order)
    if (!n->is_leaf) n->grad.assign(n->value.size(), 0.0);
  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backprop) n->backprop(*n);
  }
}

}  // namespace nesy
