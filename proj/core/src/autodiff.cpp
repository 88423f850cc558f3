#include "grn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "grn/error.hpp"

namespace grn::ad {

std::size_t num_elements(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

namespace {

// Sums in ascending order so the result depends only on the multiset of
// terms. Neighbour sums and normalisers then commute exactly with relabeling.
template <typename T>
T order_free_sum(std::vector<T>& terms) {
  std::sort(terms.begin(), terms.end());
  T acc = T(0);
  for (auto v : terms) acc += v;
  return acc;
}

template <typename T>
Tape<T>& tape_of(std::initializer_list<const Tensor<T>*> xs) {
  for (const auto* x : xs) {
    if (x->tape()) return *x->tape();
  }
  throw ContractError("operation has no tape: every input is a detached parameter");
}

template <typename T>
Tape<T>& tape_of(std::span<const Tensor<T>> xs) {
  for (const auto& x : xs) {
    if (x.tape()) return *x.tape();
  }
  throw ContractError("operation has no tape: every input is a detached parameter");
}

template <typename T>
void require_defined(const Tensor<T>& x, const char* op) {
  if (!x.defined()) throw ContractError(std::string(op) + ": undefined tensor");
}

template <typename T>
void require_vector(const Tensor<T>& x, const char* op) {
  if (x.rank() != 1) {
    throw DimensionError(std::string(op) + " expects a vector, got " + shape_string(x.shape()));
  }
}

enum class Binary { Add, Sub, Mul };

template <typename T>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, Binary kind, const char* name) {
  require_defined(a, name);
  require_defined(b, name);
  const bool same = a.shape() == b.shape();
  const bool a_scalar = a.size() == 1 && !same;
  const bool b_scalar = b.size() == 1 && !same;
  if (!same && !a_scalar && !b_scalar) {
    throw DimensionError(std::string(name) + ": incompatible shapes " + shape_string(a.shape()) +
                         " and " + shape_string(b.shape()));
  }
  const Shape& out_shape = a_scalar ? b.shape() : a.shape();
  const std::size_t n = num_elements(out_shape);
  auto av = a.values();
  auto bv = b.values();
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T x = av[a_scalar ? 0 : i];
    const T y = bv[b_scalar ? 0 : i];
    switch (kind) {
      case Binary::Add: out[i] = x + y; break;
      case Binary::Sub: out[i] = x - y; break;
      case Binary::Mul: out[i] = x * y; break;
    }
  }
  auto backward = [kind, a_scalar, b_scalar, n](Node<T>& self) {
    const auto& g = self.grad;
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& ga = pa.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        const T d = kind == Binary::Mul ? g[i] * pb.value[b_scalar ? 0 : i] : g[i];
        ga[a_scalar ? 0 : i] += d;
      }
    }
    if (pb.requires_grad) {
      auto& gb = pb.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        T d = g[i];
        if (kind == Binary::Sub) d = -d;
        if (kind == Binary::Mul) d = g[i] * pa.value[a_scalar ? 0 : i];
        gb[b_scalar ? 0 : i] += d;
      }
    }
  };
  return tape_of<T>({&a, &b}).record(out_shape, std::move(out), {a, b}, backward);
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace

template <typename T>
Tensor<T> Tensor<T>::parameter(Shape shape, std::vector<T> values) {
  if (num_elements(shape) != values.size()) {
    throw DimensionError("parameter of shape " + shape_string(shape) + " given " +
                         std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = true;
  return Tensor(std::move(node));
}

template <typename T>
std::size_t Tensor<T>::rows() const {
  return rank() == 0 ? 1 : shape()[0];
}

template <typename T>
std::size_t Tensor<T>::cols() const {
  return rank() < 2 ? 1 : shape()[1];
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

template <typename T>
Tensor<T> Tape<T>::constant(Shape shape, std::vector<T> values) {
  if (num_elements(shape) != values.size()) {
    throw DimensionError("constant of shape " + shape_string(shape) + " given " +
                         std::to_string(values.size()) + " values");
  }
  return record(std::move(shape), std::move(values), {}, {});
}

template <typename T>
Tensor<T> Tape<T>::zeros(Shape shape) {
  const auto n = num_elements(shape);
  return constant(std::move(shape), std::vector<T>(n, T(0)));
}

template <typename T>
Tensor<T> Tape<T>::record(Shape shape, std::vector<T> value, std::vector<Tensor<T>> parents,
                          std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->tape = this;
  node->id = nodes_.size();
  for (const auto& p : parents) node->requires_grad = node->requires_grad || p.requires_grad();
  if (node->requires_grad) {
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.handle());
    node->backward = std::move(backward);
  }
  nodes_.push_back(node);
  return Tensor<T>(std::move(node));
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " +
                        (loss.defined() ? shape_string(loss.shape()) : std::string("<undefined>")));
  }
  if (nodes_.empty()) throw ContractError("backward on an empty tape");
  if (loss.tape() != this) throw ContractError("loss was not recorded on this tape");
  for (auto& n : nodes_) n->grad.clear();
  if (!loss.requires_grad()) return;
  loss.node()->grad_buffer()[0] = T(1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node<T>& n = **it;
    if (n.backward && !n.grad.empty()) n.backward(n);
  }
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  if (a.rank() != 2 || (b.rank() != 1 && b.rank() != 2) || a.shape()[1] != b.shape()[0]) {
    throw DimensionError("matmul: cannot multiply " + shape_string(a.shape()) + " by " +
                         shape_string(b.shape()));
  }
  const std::size_t m = a.shape()[0];
  const std::size_t k = a.shape()[1];
  const std::size_t n = b.rank() == 1 ? 1 : b.shape()[1];
  Shape out_shape = b.rank() == 1 ? Shape{m} : Shape{m, n};
  std::vector<T> out(m * n, T(0));
  auto av = a.values();
  auto bv = b.values();
  if (n == 1) {
    for (std::size_t i = 0; i < m; ++i) {
      T acc = T(0);
      const T* arow = av.data() + i * k;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * bv[p];
      out[i] = acc;
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const T x = av[i * k + p];
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] += x * bv[p * n + j];
      }
    }
  }
  auto backward = [m, k, n](Node<T>& self) {
    const auto& g = self.grad;
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& ga = pa.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          T acc = T(0);
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * pb.value[p * n + j];
          ga[i * k + p] += acc;
        }
    }
    if (pb.requires_grad) {
      auto& gb = pb.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const T x = pa.value[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += x * g[i * n + j];
        }
    }
  };
  return tape_of<T>({&a, &b}).record(std::move(out_shape), std::move(out), {a, b}, backward);
}

template <typename T>
Tensor<T> dot(const Tensor<T>& a, const Tensor<T>& b) {
  require_defined(a, "dot");
  require_defined(b, "dot");
  if (a.shape() != b.shape()) {
    throw DimensionError("dot: shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  T acc = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  auto backward = [](Node<T>& self) {
    const T g = self.grad[0];
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& ga = pa.grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * pb.value[i];
    }
    if (pb.requires_grad) {
      auto& gb = pb.grad_buffer();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g * pa.value[i];
    }
  };
  return tape_of<T>({&a, &b}).record({}, {acc}, {a, b}, backward);
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, Binary::Add, "add");
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, Binary::Sub, "sub");
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, Binary::Mul, "mul");
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  require_defined(x, "scale");
  std::vector<T> out(x.values().begin(), x.values().end());
  for (auto& v : out) v *= factor;
  auto backward = [factor](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  };
  return tape_of<T>({&x}).record(x.shape(), std::move(out), {x}, backward);
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  require_defined(x, "sigmoid");
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(x[i]);
  auto backward = [](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T s = self.value[i];
      g[i] += self.grad[i] * s * (T(1) - s);
    }
  };
  return tape_of<T>({&x}).record(x.shape(), std::move(out), {x}, backward);
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  require_defined(x, "tanh");
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x[i]);
  auto backward = [](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T t = self.value[i];
      g[i] += self.grad[i] * (T(1) - t * t);
    }
  };
  return tape_of<T>({&x}).record(x.shape(), std::move(out), {x}, backward);
}

template <typename T>
Tensor<T> one_minus(const Tensor<T>& x) {
  require_defined(x, "one_minus");
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = T(1) - x[i];
  auto backward = [](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
  };
  return tape_of<T>({&x}).record(x.shape(), std::move(out), {x}, backward);
}

template <typename T>
Tensor<T> add_n(std::span<const Tensor<T>> xs) {
  if (xs.empty()) throw DegenerateInputError("add_n of zero tensors");
  const Shape& shape = xs[0].shape();
  for (const auto& x : xs) {
    if (x.shape() != shape) {
      throw DimensionError("add_n: shapes " + shape_string(shape) + " and " +
                           shape_string(x.shape()));
    }
  }
  std::vector<T> out(xs[0].values().begin(), xs[0].values().end());
  if (xs.size() == 2) {
    auto v = xs[1].values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  } else if (xs.size() > 2) {
    std::vector<T> column(xs.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (std::size_t k = 0; k < xs.size(); ++k) column[k] = xs[k][i];
      out[i] = order_free_sum(column);
    }
  }
  auto backward = [](Node<T>& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  };
  return tape_of<T>(xs).record(shape, std::move(out), {xs.begin(), xs.end()}, backward);
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  require_defined(x, "sum");
  T acc = T(0);
  for (auto v : x.values()) acc += v;
  auto backward = [](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (auto& v : g) v += self.grad[0];
  };
  return tape_of<T>({&x}).record({}, {acc}, {x}, backward);
}

template <typename T>
Tensor<T> mean(std::span<const Tensor<T>> xs) {
  if (xs.empty()) throw DegenerateInputError("mean over an empty set");
  return scale(add_n(xs), T(1) / static_cast<T>(xs.size()));
}

template <typename T>
Tensor<T> mean_rows(const Tensor<T>& m) {
  require_defined(m, "mean_rows");
  if (m.rank() != 2) throw DimensionError("mean_rows expects a matrix, got " + shape_string(m.shape()));
  const std::size_t r = m.shape()[0];
  const std::size_t c = m.shape()[1];
  if (r == 0) throw DegenerateInputError("mean over an empty axis");
  std::vector<T> out(c, T(0));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += m.at(i, j);
  const T inv = T(1) / static_cast<T>(r);
  for (auto& v : out) v *= inv;
  auto backward = [r, c, inv](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += inv * self.grad[j];
  };
  return tape_of<T>({&m}).record({c}, std::move(out), {m}, backward);
}

template <typename T>
Tensor<T> concat(std::span<const Tensor<T>> xs) {
  if (xs.empty()) throw DegenerateInputError("concat of zero tensors");
  const std::size_t rank = xs[0].rank();
  if (rank == 0) throw DimensionError("concat of scalars; use stack or a rank-1 view");
  Shape trailing(xs[0].shape().begin() + 1, xs[0].shape().end());
  std::size_t lead = 0;
  std::size_t total = 0;
  for (const auto& x : xs) {
    require_defined(x, "concat");
    Shape t(x.shape().begin() + 1, x.shape().end());
    if (x.rank() != rank || t != trailing) {
      throw DimensionError("concat: shapes " + shape_string(xs[0].shape()) + " and " +
                           shape_string(x.shape()) + " disagree outside axis 0");
    }
    lead += x.shape()[0];
    total += x.size();
  }
  std::vector<T> out;
  out.reserve(total);
  for (const auto& x : xs) out.insert(out.end(), x.values().begin(), x.values().end());
  Shape shape = xs[0].shape();
  shape[0] = lead;
  auto backward = [](Node<T>& self) {
    std::size_t off = 0;
    for (auto& p : self.parents) {
      const std::size_t n = p->value.size();
      if (p->requires_grad) {
        auto& g = p->grad_buffer();
        for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[off + i];
      }
      off += n;
    }
  };
  return tape_of<T>(xs).record(std::move(shape), std::move(out), {xs.begin(), xs.end()}, backward);
}

template <typename T>
Tensor<T> stack_rows(std::span<const Tensor<T>> rows) {
  if (rows.empty()) throw DegenerateInputError("stack_rows of zero rows");
  for (const auto& r : rows) require_vector(r, "stack_rows");
  const std::size_t width = rows[0].size();
  std::vector<T> out;
  out.reserve(rows.size() * width);
  for (const auto& r : rows) {
    if (r.size() != width) {
      throw DimensionError("stack_rows: row lengths " + std::to_string(width) + " and " +
                           std::to_string(r.size()));
    }
    out.insert(out.end(), r.values().begin(), r.values().end());
  }
  auto backward = [width](Node<T>& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      auto& p = *self.parents[k];
      if (!p.requires_grad) continue;
      auto& g = p.grad_buffer();
      for (std::size_t i = 0; i < width; ++i) g[i] += self.grad[k * width + i];
    }
  };
  return tape_of<T>(rows).record({rows.size(), width}, std::move(out), {rows.begin(), rows.end()},
                                 backward);
}

template <typename T>
Tensor<T> row(const Tensor<T>& m, std::size_t i) {
  require_defined(m, "row");
  if (m.rank() != 2) throw DimensionError("row expects a matrix, got " + shape_string(m.shape()));
  if (i >= m.shape()[0]) throw ContractError("row index " + std::to_string(i) + " out of range");
  const std::size_t c = m.shape()[1];
  std::vector<T> out(m.values().begin() + i * c, m.values().begin() + (i + 1) * c);
  auto backward = [i, c](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j];
  };
  return tape_of<T>({&m}).record({c}, std::move(out), {m}, backward);
}

template <typename T>
Tensor<T> slice(const Tensor<T>& v, std::size_t offset, std::size_t length) {
  require_defined(v, "slice");
  require_vector(v, "slice");
  if (offset + length > v.size() || length == 0) {
    throw DimensionError("slice [" + std::to_string(offset) + ", +" + std::to_string(length) +
                         ") of " + shape_string(v.shape()));
  }
  std::vector<T> out(v.values().begin() + offset, v.values().begin() + offset + length);
  auto backward = [offset, length](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t j = 0; j < length; ++j) g[offset + j] += self.grad[j];
  };
  return tape_of<T>({&v}).record({length}, std::move(out), {v}, backward);
}

template <typename T>
Tensor<T> select(const Tensor<T>& v, std::size_t i) {
  require_defined(v, "select");
  if (i >= v.size()) throw ContractError("select index " + std::to_string(i) + " out of range");
  auto backward = [i](Node<T>& self) { self.parents[0]->grad_buffer()[i] += self.grad[0]; };
  return tape_of<T>({&v}).record({}, {v[i]}, {v}, backward);
}

namespace {

template <typename T>
std::vector<bool> live_positions(const Tensor<T>& x, const Mask& mask, const char* op) {
  require_defined(x, op);
  require_vector(x, op);
  if (mask.empty()) return std::vector<bool>(x.size(), true);
  if (mask.size() != x.size()) {
    throw DimensionError(std::string(op) + ": mask of length " + std::to_string(mask.size()) +
                         " for vector " + shape_string(x.shape()));
  }
  if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
    throw InvalidMaskError(std::string(op) + ": every position is masked");
  }
  return mask;
}

}  // namespace

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, const Mask& mask) {
  auto live = live_positions(x, mask, "softmax");
  const std::size_t n = x.size();
  T hi = -std::numeric_limits<T>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (live[i]) hi = std::max(hi, x[i]);
  std::vector<T> out(n, T(0));
  std::vector<T> terms;
  for (std::size_t i = 0; i < n; ++i)
    if (live[i]) terms.push_back(out[i] = std::exp(x[i] - hi));
  const T z = order_free_sum(terms);
  for (auto& v : out) v /= z;
  auto backward = [n](Node<T>& self) {
    T inner = T(0);
    for (std::size_t i = 0; i < n; ++i) inner += self.grad[i] * self.value[i];
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < n; ++i) g[i] += self.value[i] * (self.grad[i] - inner);
  };
  return tape_of<T>({&x}).record(x.shape(), std::move(out), {x}, backward);
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x, const Mask& mask) {
  auto live = live_positions(x, mask, "log_softmax");
  const std::size_t n = x.size();
  T hi = -std::numeric_limits<T>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (live[i]) hi = std::max(hi, x[i]);
  std::vector<T> terms;
  for (std::size_t i = 0; i < n; ++i)
    if (live[i]) terms.push_back(std::exp(x[i] - hi));
  const T log_z = hi + std::log(order_free_sum(terms));
  std::vector<T> out(n, -std::numeric_limits<T>::infinity());
  for (std::size_t i = 0; i < n; ++i)
    if (live[i]) out[i] = x[i] - log_z;
  auto backward = [n, live = std::move(live)](Node<T>& self) {
    T total = T(0);
    for (std::size_t i = 0; i < n; ++i)
      if (live[i]) total += self.grad[i];
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < n; ++i)
      if (live[i]) g[i] += self.grad[i] - std::exp(self.value[i]) * total;
  };
  return tape_of<T>({&x}).record(x.shape(), std::move(out), {x}, backward);
}

template <typename T>
Tensor<T> lookup(Tape<T>& tape, const Tensor<T>& table, std::size_t index) {
  require_defined(table, "lookup");
  if (table.rank() != 2) {
    throw DimensionError("lookup expects a matrix table, got " + shape_string(table.shape()));
  }
  if (index >= table.shape()[0]) {
    throw ContractError("lookup index " + std::to_string(index) + " outside table of " +
                        std::to_string(table.shape()[0]) + " rows");
  }
  const std::size_t c = table.shape()[1];
  std::vector<T> out(table.values().begin() + index * c, table.values().begin() + (index + 1) * c);
  auto backward = [index, c](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t j = 0; j < c; ++j) g[index * c + j] += self.grad[j];
  };
  return tape.record({c}, std::move(out), {table}, backward);
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, bool training, Rng& rng) {
  require_defined(x, "dropout");
  if (!(p >= 0.0 && p < 1.0)) throw ContractError("dropout probability must lie in [0, 1)");
  if (!training || p == 0.0) return x;
  const T keep_scale = T(1) / static_cast<T>(1.0 - p);
  std::vector<T> factor(x.size());
  for (auto& f : factor) f = uniform01(rng) < p ? T(0) : keep_scale;
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * factor[i];
  auto backward = [factor = std::move(factor)](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor[i];
  };
  return tape_of<T>({&x}).record(x.shape(), std::move(out), {x}, backward);
}

#define GRN_INSTANTIATE_AUTODIFF(T)                                                   \
  template class Tensor<T>;                                                           \
  template class Tape<T>;                                                             \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> dot(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> scale(const Tensor<T>&, T);                                      \
  template Tensor<T> sigmoid(const Tensor<T>&);                                       \
  template Tensor<T> tanh(const Tensor<T>&);                                          \
  template Tensor<T> one_minus(const Tensor<T>&);                                     \
  template Tensor<T> add_n(std::span<const Tensor<T>>);                               \
  template Tensor<T> sum(const Tensor<T>&);                                           \
  template Tensor<T> mean(std::span<const Tensor<T>>);                                \
  template Tensor<T> mean_rows(const Tensor<T>&);                                     \
  template Tensor<T> concat(std::span<const Tensor<T>>);                              \
  template Tensor<T> stack_rows(std::span<const Tensor<T>>);                          \
  template Tensor<T> row(const Tensor<T>&, std::size_t);                              \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t);               \
  template Tensor<T> select(const Tensor<T>&, std::size_t);                           \
  template Tensor<T> softmax(const Tensor<T>&, const Mask&);                          \
  template Tensor<T> log_softmax(const Tensor<T>&, const Mask&);                      \
  template Tensor<T> lookup(Tape<T>&, const Tensor<T>&, std::size_t);                 \
  template Tensor<T> dropout(const Tensor<T>&, double, bool, Rng&);

GRN_INSTANTIATE_AUTODIFF(float)
GRN_INSTANTIATE_AUTODIFF(double)

}  // namespace grn::ad
