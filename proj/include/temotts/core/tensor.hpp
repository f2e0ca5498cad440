#pragma once

// Reverse-mode automatic differentiation on small dense tensors of double.
// Define-by-run: every op builds a node holding its value, its parents, and a
// closure that scatters the node's gradient back into the parents. Parameters
// are leaf nodes that outlive the per-step graphs; intermediate nodes are
// freed when the step's Tensor handles go out of scope.

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "temotts/core/common.hpp"
#include "temotts/core/random.hpp"

namespace temotts::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out + "]";
}

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized lazily by ensure_grad()
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
  void zero_grad() { grad.assign(value.size(), 0.0); }
};

using NodePtr = std::shared_ptr<Node>;

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor make(Shape shape, std::vector<double> data, bool requires_grad = false) {
    if (shape_numel(shape) != data.size())
      throw Error("tensor data size " + std::to_string(data.size()) + " does not match shape " +
                  shape_str(shape));
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(n);
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<double> d(shape_numel(shape), 0.0);
    return make(std::move(shape), std::move(d), requires_grad);
  }

  static Tensor full(Shape shape, double v, bool requires_grad = false) {
    std::vector<double> d(shape_numel(shape), v);
    return make(std::move(shape), std::move(d), requires_grad);
  }

  static Tensor scalar(double v, bool requires_grad = false) {
    return make(Shape{}, std::vector<double>{v}, requires_grad);
  }

  static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0, bool requires_grad = false) {
    std::vector<double> d(shape_numel(shape));
    for (auto& x : d) x = rng.normal(0.0, stddev);
    return make(std::move(shape), std::move(d), requires_grad);
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->value.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }

  std::vector<double>& data() { return node_->value; }
  const std::vector<double>& data() const { return node_->value; }
  std::vector<double>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  bool requires_grad() const { return node_->requires_grad; }

  double item() const {
    if (numel() != 1) throw Error("item() on non-scalar tensor " + shape_str(shape()));
    return node_->value[0];
  }

  double at(std::size_t r, std::size_t c) const { return node_->value[r * dim(1) + c]; }

  NodePtr node() const { return node_; }

  // Runs reverse-mode accumulation from this (scalar) tensor. Gradients of all
  // reachable requires_grad nodes are accumulated into their .grad buffers.
  void backward() const {
    if (numel() != 1) throw Error("backward() requires a scalar loss");
    if (!node_->requires_grad) return;  // loss of constants: nothing to do
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    topo(node_.get(), seen, order);
    for (Node* n : order) n->ensure_grad();
    node_->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node* n = *it;
      if (n->backward) n->backward(*n);
    }
  }

 private:
  static void topo(Node* n, std::unordered_set<Node*>& seen, std::vector<Node*>& order) {
    if (!n->requires_grad || seen.count(n)) return;
    // Iterative DFS; graphs can be thousands of nodes deep for long sequences.
    struct Frame {
      Node* node;
      std::size_t next_parent;
    };
    std::vector<Frame> stack{{n, 0}};
    seen.insert(n);
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next_parent < f.node->parents.size()) {
        Node* p = f.node->parents[f.next_parent++].get();
        if (p->requires_grad && !seen.count(p)) {
          seen.insert(p);
          stack.push_back({p, 0});
        }
      } else {
        order.push_back(f.node);
        stack.pop_back();
      }
    }
  }

  NodePtr node_;
};

namespace detail {

inline Tensor unary(const Tensor& a, Shape out_shape, std::vector<double> value,
                    std::function<void(Node&, Node&)> back) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(out_shape);
  n->value = std::move(value);
  if (a.requires_grad()) {
    n->requires_grad = true;
    n->parents = {a.node()};
    n->backward = [back = std::move(back)](Node& self) {
      Node& pa = *self.parents[0];
      pa.ensure_grad();
      back(self, pa);
    };
  }
  return Tensor(n);
}

inline Tensor binary(const Tensor& a, const Tensor& b, Shape out_shape, std::vector<double> value,
                     std::function<void(Node&, Node&, Node&)> back) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(out_shape);
  n->value = std::move(value);
  if (a.requires_grad() || b.requires_grad()) {
    n->requires_grad = true;
    n->parents = {a.node(), b.node()};
    n->backward = [back = std::move(back)](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      pa.ensure_grad();
      pb.ensure_grad();
      back(self, pa, pb);
    };
  }
  return Tensor(n);
}

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw Error(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                shape_str(b.shape()));
}

}  // namespace detail

// ---- elementwise ----

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "add");
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] + b.data()[i];
  return detail::binary(a, b, a.shape(), std::move(v), [](Node& self, Node& pa, Node& pb) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (pa.requires_grad) pa.grad[i] += self.grad[i];
      if (pb.requires_grad) pb.grad[i] += self.grad[i];
    }
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "sub");
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] - b.data()[i];
  return detail::binary(a, b, a.shape(), std::move(v), [](Node& self, Node& pa, Node& pb) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (pa.requires_grad) pa.grad[i] += self.grad[i];
      if (pb.requires_grad) pb.grad[i] -= self.grad[i];
    }
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "mul");
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] * b.data()[i];
  return detail::binary(a, b, a.shape(), std::move(v), [](Node& self, Node& pa, Node& pb) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (pa.requires_grad) pa.grad[i] += self.grad[i] * pb.value[i];
      if (pb.requires_grad) pb.grad[i] += self.grad[i] * pa.value[i];
    }
  });
}

inline Tensor scale(const Tensor& a, double c) {
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] * c;
  return detail::unary(a, a.shape(), std::move(v), [c](Node& self, Node& pa) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * c;
  });
}

inline Tensor add_scalar(const Tensor& a, double c) {
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] + c;
  return detail::unary(a, a.shape(), std::move(v), [](Node& self, Node& pa) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
  });
}

// matrix [M x N] plus row vector [N], broadcast over rows
inline Tensor add_rowvec(const Tensor& a, const Tensor& row) {
  if (a.rank() != 2 || row.rank() != 1 || a.dim(1) != row.dim(0))
    throw Error("add_rowvec: want [MxN] + [N], got " + shape_str(a.shape()) + " + " +
                shape_str(row.shape()));
  const std::size_t m = a.dim(0), nn = a.dim(1);
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < nn; ++j) v[i * nn + j] = a.data()[i * nn + j] + row.data()[j];
  return detail::binary(a, row, a.shape(), std::move(v), [m, nn](Node& self, Node& pa, Node& pb) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < nn; ++j) {
        if (pa.requires_grad) pa.grad[i * nn + j] += self.grad[i * nn + j];
        if (pb.requires_grad) pb.grad[j] += self.grad[i * nn + j];
      }
  });
}

inline Tensor relu(const Tensor& a) {
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
  return detail::unary(a, a.shape(), std::move(v), [](Node& self, Node& pa) {
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (pa.value[i] > 0.0) pa.grad[i] += self.grad[i];
  });
}

inline Tensor tanh_t(const Tensor& a) {
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::tanh(a.data()[i]);
  return detail::unary(a, a.shape(), std::move(v), [](Node& self, Node& pa) {
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      pa.grad[i] += self.grad[i] * (1.0 - self.value[i] * self.value[i]);
  });
}

inline Tensor sigmoid(const Tensor& a) {
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + std::exp(-a.data()[i]));
  return detail::unary(a, a.shape(), std::move(v), [](Node& self, Node& pa) {
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      pa.grad[i] += self.grad[i] * self.value[i] * (1.0 - self.value[i]);
  });
}

inline Tensor exp_t(const Tensor& a) {
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(a.data()[i]);
  return detail::unary(a, a.shape(), std::move(v), [](Node& self, Node& pa) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * self.value[i];
  });
}

inline Tensor log_t(const Tensor& a) {
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::log(a.data()[i]);
  return detail::unary(a, a.shape(), std::move(v), [](Node& self, Node& pa) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] / pa.value[i];
  });
}

// ---- linear algebra ----

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw Error("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                shape_str(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), nn = b.dim(1);
  std::vector<double> v(m * nn, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a.data()[i * k + p];
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < nn; ++j) v[i * nn + j] += av * b.data()[p * nn + j];
    }
  return detail::binary(a, b, Shape{m, nn}, std::move(v),
                        [m, k, nn](Node& self, Node& pa, Node& pb) {
                          // dA = G * B^T ; dB = A^T * G
                          if (pa.requires_grad) {
                            for (std::size_t i = 0; i < m; ++i)
                              for (std::size_t p = 0; p < k; ++p) {
                                double acc = 0.0;
                                for (std::size_t j = 0; j < nn; ++j)
                                  acc += self.grad[i * nn + j] * pb.value[p * nn + j];
                                pa.grad[i * k + p] += acc;
                              }
                          }
                          if (pb.requires_grad) {
                            for (std::size_t p = 0; p < k; ++p)
                              for (std::size_t j = 0; j < nn; ++j) {
                                double acc = 0.0;
                                for (std::size_t i = 0; i < m; ++i)
                                  acc += pa.value[i * k + p] * self.grad[i * nn + j];
                                pb.grad[p * nn + j] += acc;
                              }
                          }
                        });
}

inline Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw Error("transpose: rank-2 only");
  const std::size_t m = a.dim(0), nn = a.dim(1);
  std::vector<double> v(m * nn);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < nn; ++j) v[j * m + i] = a.data()[i * nn + j];
  return detail::unary(a, Shape{nn, m}, std::move(v), [m, nn](Node& self, Node& pa) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < nn; ++j) pa.grad[i * nn + j] += self.grad[j * m + i];
  });
}

inline Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel())
    throw Error("reshape: numel mismatch " + shape_str(a.shape()) + " -> " + shape_str(shape));
  std::vector<double> v = a.data();
  return detail::unary(a, std::move(shape), std::move(v), [](Node& self, Node& pa) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
  });
}

// ---- reductions ----

inline Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double x : a.data()) s += x;
  return detail::unary(a, Shape{}, {s}, [](Node& self, Node& pa) {
    for (std::size_t i = 0; i < pa.grad.size(); ++i) pa.grad[i] += self.grad[0];
  });
}

inline Tensor mean_all(const Tensor& a) {
  double s = 0.0;
  for (double x : a.data()) s += x;
  const double inv = 1.0 / static_cast<double>(a.numel());
  return detail::unary(a, Shape{}, {s * inv}, [inv](Node& self, Node& pa) {
    for (std::size_t i = 0; i < pa.grad.size(); ++i) pa.grad[i] += self.grad[0] * inv;
  });
}

// ---- row-structured ops ----

inline Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1) {
  if (a.rank() != 2 || r1 > a.dim(0) || r0 >= r1) throw Error("slice_rows: bad range");
  const std::size_t nn = a.dim(1);
  std::vector<double> v(a.data().begin() + r0 * nn, a.data().begin() + r1 * nn);
  return detail::unary(a, Shape{r1 - r0, nn}, std::move(v), [r0, nn](Node& self, Node& pa) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[r0 * nn + i] += self.grad[i];
  });
}

inline Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1) {
  if (a.rank() != 2 || c1 > a.dim(1) || c0 >= c1) throw Error("slice_cols: bad range");
  const std::size_t m = a.dim(0), nn = a.dim(1), w = c1 - c0;
  std::vector<double> v(m * w);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j) v[i * w + j] = a.data()[i * nn + c0 + j];
  return detail::unary(a, Shape{m, w}, std::move(v), [m, nn, c0, w](Node& self, Node& pa) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) pa.grad[i * nn + c0 + j] += self.grad[i * w + j];
  });
}

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw Error("concat_cols: empty");
  const std::size_t m = parts[0].dim(0);
  std::size_t total = 0;
  bool rg = false;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.dim(0) != m) throw Error("concat_cols: row mismatch");
    total += p.dim(1);
    rg = rg || p.requires_grad();
  }
  auto n = std::make_shared<Node>();
  n->shape = Shape{m, total};
  n->value.resize(m * total);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.dim(1);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) n->value[i * total + off + j] = p.data()[i * w + j];
    off += w;
  }
  if (rg) {
    n->requires_grad = true;
    for (const auto& p : parts) n->parents.push_back(p.node());
    n->backward = [m, total](Node& self) {
      std::size_t off2 = 0;
      for (auto& pp : self.parents) {
        pp->ensure_grad();
        const std::size_t w = pp->shape[1];
        if (pp->requires_grad)
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < w; ++j)
              pp->grad[i * w + j] += self.grad[i * total + off2 + j];
        off2 += w;
      }
    };
  }
  return Tensor(n);
}

inline Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw Error("concat_rows: empty");
  const std::size_t nn = parts[0].dim(1);
  std::size_t rows = 0;
  bool rg = false;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.dim(1) != nn) throw Error("concat_rows: col mismatch");
    rows += p.dim(0);
    rg = rg || p.requires_grad();
  }
  auto n = std::make_shared<Node>();
  n->shape = Shape{rows, nn};
  n->value.reserve(rows * nn);
  for (const auto& p : parts) n->value.insert(n->value.end(), p.data().begin(), p.data().end());
  if (rg) {
    n->requires_grad = true;
    for (const auto& p : parts) n->parents.push_back(p.node());
    n->backward = [nn](Node& self) {
      std::size_t off = 0;
      for (auto& pp : self.parents) {
        pp->ensure_grad();
        const std::size_t count = pp->shape[0] * nn;
        if (pp->requires_grad)
          for (std::size_t i = 0; i < count; ++i) pp->grad[i] += self.grad[off + i];
        off += count;
      }
    };
  }
  return Tensor(n);
}

// Embedding lookup: rows of table indexed by ids.
inline Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& ids) {
  if (table.rank() != 2) throw Error("gather_rows: table must be rank-2");
  const std::size_t nn = table.dim(1);
  std::vector<double> v(ids.size() * nn);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= table.dim(0)) throw Error("gather_rows: id out of range");
    for (std::size_t j = 0; j < nn; ++j) v[i * nn + j] = table.data()[ids[i] * nn + j];
  }
  return detail::unary(table, Shape{ids.size(), nn}, std::move(v), [ids, nn](Node& self, Node& pa) {
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = 0; j < nn; ++j) pa.grad[ids[i] * nn + j] += self.grad[i * nn + j];
  });
}

// Length regulator primitive: row i of the input repeated counts[i] times.
inline Tensor repeat_rows(const Tensor& a, const std::vector<std::size_t>& counts) {
  if (a.rank() != 2 || counts.size() != a.dim(0))
    throw Error("repeat_rows: counts length must equal row count");
  const std::size_t nn = a.dim(1);
  std::size_t total = 0;
  for (auto c : counts) total += c;
  std::vector<double> v;
  v.reserve(total * nn);
  for (std::size_t i = 0; i < counts.size(); ++i)
    for (std::size_t r = 0; r < counts[i]; ++r)
      v.insert(v.end(), a.data().begin() + i * nn, a.data().begin() + (i + 1) * nn);
  return detail::unary(a, Shape{total, nn}, std::move(v), [counts, nn](Node& self, Node& pa) {
    std::size_t row = 0;
    for (std::size_t i = 0; i < counts.size(); ++i)
      for (std::size_t r = 0; r < counts[i]; ++r, ++row)
        for (std::size_t j = 0; j < nn; ++j) pa.grad[i * nn + j] += self.grad[row * nn + j];
  });
}

// ---- fused row-wise primitives ----

inline Tensor softmax_rows(const Tensor& a) {
  if (a.rank() != 2) throw Error("softmax_rows: rank-2 only");
  const std::size_t m = a.dim(0), nn = a.dim(1);
  std::vector<double> v(m * nn);
  for (std::size_t i = 0; i < m; ++i) {
    double mx = a.data()[i * nn];
    for (std::size_t j = 1; j < nn; ++j) mx = std::max(mx, a.data()[i * nn + j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < nn; ++j) {
      v[i * nn + j] = std::exp(a.data()[i * nn + j] - mx);
      sum += v[i * nn + j];
    }
    for (std::size_t j = 0; j < nn; ++j) v[i * nn + j] /= sum;
  }
  return detail::unary(a, a.shape(), std::move(v), [m, nn](Node& self, Node& pa) {
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < nn; ++j) dot += self.grad[i * nn + j] * self.value[i * nn + j];
      for (std::size_t j = 0; j < nn; ++j)
        pa.grad[i * nn + j] += self.value[i * nn + j] * (self.grad[i * nn + j] - dot);
    }
  });
}

inline Tensor log_softmax_rows(const Tensor& a) {
  if (a.rank() != 2) throw Error("log_softmax_rows: rank-2 only");
  const std::size_t m = a.dim(0), nn = a.dim(1);
  std::vector<double> v(m * nn);
  for (std::size_t i = 0; i < m; ++i) {
    double mx = a.data()[i * nn];
    for (std::size_t j = 1; j < nn; ++j) mx = std::max(mx, a.data()[i * nn + j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < nn; ++j) sum += std::exp(a.data()[i * nn + j] - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t j = 0; j < nn; ++j) v[i * nn + j] = a.data()[i * nn + j] - lse;
  }
  return detail::unary(a, a.shape(), std::move(v), [m, nn](Node& self, Node& pa) {
    for (std::size_t i = 0; i < m; ++i) {
      double gsum = 0.0;
      for (std::size_t j = 0; j < nn; ++j) gsum += self.grad[i * nn + j];
      for (std::size_t j = 0; j < nn; ++j)
        pa.grad[i * nn + j] += self.grad[i * nn + j] - std::exp(self.value[i * nn + j]) * gsum;
    }
  });
}

// Per-row layer norm with learned gain/bias over the last dimension.
inline Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                         double eps = 1e-5) {
  if (x.rank() != 2 || gamma.rank() != 1 || beta.rank() != 1 || gamma.dim(0) != x.dim(1) ||
      beta.dim(0) != x.dim(1))
    throw Error("layer_norm: want x[MxN], gamma[N], beta[N]");
  const std::size_t m = x.dim(0), nn = x.dim(1);
  std::vector<double> v(m * nn);
  auto xhat = std::make_shared<std::vector<double>>(m * nn);
  auto rstd = std::make_shared<std::vector<double>>(m);
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < nn; ++j) mean += x.data()[i * nn + j];
    mean /= static_cast<double>(nn);
    double var = 0.0;
    for (std::size_t j = 0; j < nn; ++j) {
      const double d = x.data()[i * nn + j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(nn);
    const double r = 1.0 / std::sqrt(var + eps);
    (*rstd)[i] = r;
    for (std::size_t j = 0; j < nn; ++j) {
      const double h = (x.data()[i * nn + j] - mean) * r;
      (*xhat)[i * nn + j] = h;
      v[i * nn + j] = h * gamma.data()[j] + beta.data()[j];
    }
  }
  auto n = std::make_shared<Node>();
  n->shape = x.shape();
  n->value = std::move(v);
  if (x.requires_grad() || gamma.requires_grad() || beta.requires_grad()) {
    n->requires_grad = true;
    n->parents = {x.node(), gamma.node(), beta.node()};
    n->backward = [m, nn, xhat, rstd](Node& self) {
      Node& px = *self.parents[0];
      Node& pg = *self.parents[1];
      Node& pb = *self.parents[2];
      px.ensure_grad();
      pg.ensure_grad();
      pb.ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t j = 0; j < nn; ++j) {
          const double dy = self.grad[i * nn + j] * pg.value[j];
          sum_dy += dy;
          sum_dy_xhat += dy * (*xhat)[i * nn + j];
        }
        const double inv_n = 1.0 / static_cast<double>(nn);
        for (std::size_t j = 0; j < nn; ++j) {
          const double dy = self.grad[i * nn + j] * pg.value[j];
          if (px.requires_grad)
            px.grad[i * nn + j] +=
                (*rstd)[i] * (dy - inv_n * sum_dy - (*xhat)[i * nn + j] * inv_n * sum_dy_xhat);
          if (pg.requires_grad) pg.grad[j] += self.grad[i * nn + j] * (*xhat)[i * nn + j];
          if (pb.requires_grad) pb.grad[j] += self.grad[i * nn + j];
        }
      }
    };
  }
  return Tensor(n);
}

// ---- convolutions ----

// 1-D convolution over rows of x [T x Cin], weight [Cout x Cin x K], zero padding
// keeps the output length T (K odd).
inline Tensor conv1d_same(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 2 || w.rank() != 3 || b.rank() != 1)
    throw Error("conv1d_same: want x[TxCin], w[CoutxCinxK], b[Cout]");
  const std::size_t t_len = x.dim(0), cin = x.dim(1);
  const std::size_t cout = w.dim(0), k = w.dim(2);
  if (w.dim(1) != cin || b.dim(0) != cout || k % 2 == 0)
    throw Error("conv1d_same: inconsistent shapes");
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  std::vector<double> v(t_len * cout);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t co = 0; co < cout; ++co) {
      double acc = b.data()[co];
      for (std::size_t ci = 0; ci < cin; ++ci)
        for (std::size_t kk = 0; kk < k; ++kk) {
          const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(kk) - pad;
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_len)) continue;
          acc += x.data()[static_cast<std::size_t>(src) * cin + ci] *
                 w.data()[(co * cin + ci) * k + kk];
        }
      v[t * cout + co] = acc;
    }
  auto n = std::make_shared<Node>();
  n->shape = Shape{t_len, cout};
  n->value = std::move(v);
  if (x.requires_grad() || w.requires_grad() || b.requires_grad()) {
    n->requires_grad = true;
    n->parents = {x.node(), w.node(), b.node()};
    n->backward = [t_len, cin, cout, k, pad](Node& self) {
      Node& px = *self.parents[0];
      Node& pw = *self.parents[1];
      Node& pb = *self.parents[2];
      px.ensure_grad();
      pw.ensure_grad();
      pb.ensure_grad();
      for (std::size_t t = 0; t < t_len; ++t)
        for (std::size_t co = 0; co < cout; ++co) {
          const double g = self.grad[t * cout + co];
          if (g == 0.0) continue;
          if (pb.requires_grad) pb.grad[co] += g;
          for (std::size_t ci = 0; ci < cin; ++ci)
            for (std::size_t kk = 0; kk < k; ++kk) {
              const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(kk) - pad;
              if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_len)) continue;
              if (px.requires_grad)
                px.grad[static_cast<std::size_t>(src) * cin + ci] +=
                    g * pw.value[(co * cin + ci) * k + kk];
              if (pw.requires_grad)
                pw.grad[(co * cin + ci) * k + kk] +=
                    g * px.value[static_cast<std::size_t>(src) * cin + ci];
            }
        }
    };
  }
  return Tensor(n);
}

inline std::size_t conv_out_len(std::size_t in, std::size_t k, std::size_t stride,
                                std::size_t pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// 2-D convolution: x [Cin x H x W], weight [Cout x Cin x K x K].
inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride,
                     std::size_t pad) {
  if (x.rank() != 3 || w.rank() != 4 || b.rank() != 1)
    throw Error("conv2d: want x[CinxHxW], w[CoutxCinxKxK], b[Cout]");
  const std::size_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const std::size_t cout = w.dim(0), k = w.dim(2);
  if (w.dim(1) != cin || w.dim(3) != k || b.dim(0) != cout) throw Error("conv2d: shape mismatch");
  const std::size_t oh = conv_out_len(h, k, stride, pad);
  const std::size_t ow = conv_out_len(wd, k, stride, pad);
  if (oh == 0 || ow == 0) throw Error("conv2d: output collapses to zero size");
  std::vector<double> v(cout * oh * ow);
  for (std::size_t co = 0; co < cout; ++co)
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        double acc = b.data()[co];
        for (std::size_t ci = 0; ci < cin; ++ci)
          for (std::size_t ki = 0; ki < k; ++ki)
            for (std::size_t kj = 0; kj < k; ++kj) {
              const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i * stride + ki) - static_cast<std::ptrdiff_t>(pad);
              const std::ptrdiff_t sj = static_cast<std::ptrdiff_t>(j * stride + kj) - static_cast<std::ptrdiff_t>(pad);
              if (si < 0 || sj < 0 || si >= static_cast<std::ptrdiff_t>(h) ||
                  sj >= static_cast<std::ptrdiff_t>(wd))
                continue;
              acc += x.data()[(ci * h + static_cast<std::size_t>(si)) * wd + static_cast<std::size_t>(sj)] *
                     w.data()[((co * cin + ci) * k + ki) * k + kj];
            }
        v[(co * oh + i) * ow + j] = acc;
      }
  auto n = std::make_shared<Node>();
  n->shape = Shape{cout, oh, ow};
  n->value = std::move(v);
  if (x.requires_grad() || w.requires_grad() || b.requires_grad()) {
    n->requires_grad = true;
    n->parents = {x.node(), w.node(), b.node()};
    n->backward = [cin, h, wd, cout, k, oh, ow, stride, pad](Node& self) {
      Node& px = *self.parents[0];
      Node& pw = *self.parents[1];
      Node& pb = *self.parents[2];
      px.ensure_grad();
      pw.ensure_grad();
      pb.ensure_grad();
      for (std::size_t co = 0; co < cout; ++co)
        for (std::size_t i = 0; i < oh; ++i)
          for (std::size_t j = 0; j < ow; ++j) {
            const double g = self.grad[(co * oh + i) * ow + j];
            if (g == 0.0) continue;
            if (pb.requires_grad) pb.grad[co] += g;
            for (std::size_t ci = 0; ci < cin; ++ci)
              for (std::size_t ki = 0; ki < k; ++ki)
                for (std::size_t kj = 0; kj < k; ++kj) {
                  const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i * stride + ki) - static_cast<std::ptrdiff_t>(pad);
                  const std::ptrdiff_t sj = static_cast<std::ptrdiff_t>(j * stride + kj) - static_cast<std::ptrdiff_t>(pad);
                  if (si < 0 || sj < 0 || si >= static_cast<std::ptrdiff_t>(h) ||
                      sj >= static_cast<std::ptrdiff_t>(wd))
                    continue;
                  const std::size_t xi = (ci * h + static_cast<std::size_t>(si)) * wd + static_cast<std::size_t>(sj);
                  const std::size_t wi = ((co * cin + ci) * k + ki) * k + kj;
                  if (px.requires_grad) px.grad[xi] += g * pw.value[wi];
                  if (pw.requires_grad) pw.grad[wi] += g * px.value[xi];
                }
          }
    };
  }
  return Tensor(n);
}

// ---- regularization / losses ----

// Inverted dropout. Identity when !training or p == 0.
inline Tensor dropout(const Tensor& a, double p, bool training, Rng* rng) {
  if (!training || p <= 0.0) return a;
  if (!rng) throw Error("dropout: training mode requires an rng");
  const double keep = 1.0 - p;
  auto mask = std::make_shared<std::vector<double>>(a.numel());
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) {
    (*mask)[i] = rng->uniform() < p ? 0.0 : 1.0 / keep;
    v[i] = a.data()[i] * (*mask)[i];
  }
  return detail::unary(a, a.shape(), std::move(v), [mask](Node& self, Node& pa) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * (*mask)[i];
  });
}

inline Tensor l1_loss(const Tensor& pred, const Tensor& target) {
  detail::check_same_shape(pred, target, "l1_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) s += std::fabs(pred.data()[i] - target.data()[i]);
  const double inv = 1.0 / static_cast<double>(pred.numel());
  return detail::binary(pred, target, Shape{}, {s * inv},
                        [inv](Node& self, Node& pa, Node& pb) {
                          for (std::size_t i = 0; i < pa.value.size(); ++i) {
                            const double d = pa.value[i] - pb.value[i];
                            const double sg = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                            if (pa.requires_grad) pa.grad[i] += self.grad[0] * sg * inv;
                            if (pb.requires_grad) pb.grad[i] -= self.grad[0] * sg * inv;
                          }
                        });
}

inline Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  detail::check_same_shape(pred, target, "mse_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double d = pred.data()[i] - target.data()[i];
    s += d * d;
  }
  const double inv = 1.0 / static_cast<double>(pred.numel());
  return detail::binary(pred, target, Shape{}, {s * inv},
                        [inv](Node& self, Node& pa, Node& pb) {
                          for (std::size_t i = 0; i < pa.value.size(); ++i) {
                            const double d = pa.value[i] - pb.value[i];
                            if (pa.requires_grad) pa.grad[i] += self.grad[0] * 2.0 * d * inv;
                            if (pb.requires_grad) pb.grad[i] -= self.grad[0] * 2.0 * d * inv;
                          }
                        });
}

}  // namespace temotts::nn
