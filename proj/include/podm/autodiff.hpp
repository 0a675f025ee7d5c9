#pragma once

// Define-by-run reverse-mode autodiff over podm::Tensor.
//
// A Tape records every op executed in a forward pass. Parameters enter the
// tape as leaves that alias the Parameter's value; their adjoints accumulate
// straight into Parameter::grad, so several tapes (one per session) can feed
// a single optimizer step.

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "podm/errors.hpp"
#include "podm/tensor.hpp"

namespace podm {

struct Parameter {
  Parameter(std::string name_, Tensor value_)
      : name(std::move(name_)), value(std::move(value_)), grad(value.shape()) {}

  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad() { grad.fill(0.0); }
};

// Named parameters, iterated in name order. Node-based storage keeps
// Parameter addresses stable for the lifetime of the set.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, Tensor value) {
    auto [it, inserted] = params_.try_emplace(name, name, std::move(value));
    if (!inserted) throw UsageError("duplicate parameter name: " + name);
    return it->second;
  }

  Parameter& get(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw UsageError("unknown parameter: " + name);
    return it->second;
  }
  const Parameter& get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw UsageError("unknown parameter: " + name);
    return it->second;
  }
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  void zero_grad() {
    for (auto& [_, p] : params_) p.zero_grad();
  }

  std::size_t size() const { return params_.size(); }
  std::size_t total_values() const {
    std::size_t n = 0;
    for (const auto& [_, p] : params_) n += p.value.size();
    return n;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Parameter> params_;
};

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  double item() const { return value().item(); }
  std::size_t size() const { return value().size(); }
  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  // Called during backward with the node's own id; reads grad(self) and
  // accumulates into adjoint(input) for each input.
  using Backward = std::function<void(Tape&, std::size_t)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value) {
    if (!value.all_finite()) throw NumericError("non-finite constant on tape");
    nodes_.push_back(Node{std::move(value), nullptr, {}, false, false, {}});
    return Var(this, nodes_.size() - 1);
  }
  Var scalar(double v) { return constant(Tensor::scalar(v)); }

  Var param(Parameter& p) {
    nodes_.push_back(Node{{}, &p, {}, false, grad_enabled_, {}});
    return Var(this, nodes_.size() - 1);
  }

  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, Backward fn) {
    return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(fn));
  }

  Var record(std::string_view op, Tensor value, std::span<const Var> inputs, Backward fn) {
    if (!value.all_finite())
      throw NumericError("non-finite output in op '" + std::string(op) + "'");
    bool needs = false;
    for (const Var& v : inputs) {
      if (v.tape_ != this) throw UsageError("op '" + std::string(op) + "' mixes tapes");
      needs = needs || nodes_[v.id_].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), nullptr, {}, false, needs, needs ? std::move(fn) : Backward{}});
    return Var(this, nodes_.size() - 1);
  }

  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.param ? n.param->value : n.value;
  }

  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Adjoint of a node during backward (zeros if nothing flowed into it).
  const Tensor& grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.param) return n.param->grad;
    ensure_grad(n);
    return n.grad;
  }

  // Mutable adjoint buffer of an input; parameter leaves alias Parameter::grad.
  Tensor& adjoint(std::size_t id) {
    Node& n = nodes_[id];
    if (n.param) return n.param->grad;
    ensure_grad(n);
    return n.grad;
  }

  void backward(Var loss) {
    if (loss.tape_ != this) throw UsageError("backward: loss belongs to another tape");
    if (loss.value().size() != 1)
      throw UsageError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
    if (backward_done_) throw UsageError("backward already ran on this tape");
    backward_done_ = true;
    if (!nodes_[loss.id_].requires_grad) return;
    Node& root = nodes_[loss.id_];
    if (root.param) {
      root.param->grad[0] += 1.0;
      return;
    }
    ensure_grad(root);
    root.grad[0] += 1.0;
    for (std::size_t id = loss.id_ + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (n.has_grad && n.backward) n.backward(*this, id);
    }
  }

  std::size_t size() const { return nodes_.size(); }
  bool grad_enabled() const { return grad_enabled_; }

 private:
  struct Node {
    Tensor value;
    Parameter* param;
    Tensor grad;
    bool has_grad;
    bool requires_grad;
    Backward backward;
  };

  static void ensure_grad(Node& n) {
    if (!n.has_grad) {
      n.grad = Tensor(n.value.shape());
      n.has_grad = true;
    }
  }

  std::deque<Node> nodes_;
  bool grad_enabled_;
  bool backward_done_ = false;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

// ---------------------------------------------------------------------------
// Elementwise ops. Operands must have identical shapes, or one of them must be
// a rank-0 scalar.

namespace detail {

inline Shape broadcast_shape(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.shape() == b.shape()) return a.shape();
  if (a.is_scalar()) return b.shape();
  if (b.is_scalar()) return a.shape();
  throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                       shape_str(b.shape()) + " are not broadcast-compatible");
}

// f(x, y) -> out; dx(x, y, out) and dy(x, y, out) are the local partials.
template <class F, class DX, class DY>
Var binary(std::string_view op, Var a, Var b, F f, DX dx, DY dy) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor out(broadcast_shape(x, y, op));
  const bool xs = x.size() == 1 && x.shape() != out.shape();
  const bool ys = y.size() == 1 && y.shape() != out.shape();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[xs ? 0 : i], y[ys ? 0 : i]);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(op, std::move(out), {a, b}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(ia);
    const Tensor& yv = t.value(ib);
    const Tensor& ov = t.value(self);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.adjoint(ia);
      for (std::size_t i = 0; i < g.size(); ++i)
        ga[xs ? 0 : i] += g[i] * dx(xv[xs ? 0 : i], yv[ys ? 0 : i], ov[i]);
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.adjoint(ib);
      for (std::size_t i = 0; i < g.size(); ++i)
        gb[ys ? 0 : i] += g[i] * dy(xv[xs ? 0 : i], yv[ys ? 0 : i], ov[i]);
    }
  });
}

// f(x) -> out; d(x, out) is the local derivative.
template <class F, class D>
Var unary(std::string_view op, Var a, F f, D d) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  const std::size_t ia = a.id();
  return a.tape().record(op, std::move(out), {a}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(ia);
    const Tensor& ov = t.value(self);
    Tensor& ga = t.adjoint(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * d(xv[i], ov[i]);
  });
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline void require_rank(const Tensor& t, std::size_t rank, std::string_view op) {
  if (t.rank() != rank)
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(t.shape()));
}

}  // namespace detail

inline Var add(Var a, Var b) {
  return detail::binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

inline Var sub(Var a, Var b) {
  return detail::binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

inline Var mul(Var a, Var b) {
  return detail::binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

inline Var div(Var a, Var b) {
  return detail::binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double x, double y, double) { return -x / (y * y); });
}

inline Var scale(Var a, double c) {
  return detail::unary(
      "scale", a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

inline Var add_scalar(Var a, double c) {
  return detail::unary(
      "add_scalar", a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

inline Var neg(Var a) { return scale(a, -1.0); }

inline Var sigmoid(Var a) {
  return detail::unary(
      "sigmoid", a, [](double x) { return detail::sigmoid(x); },
      [](double, double y) { return y * (1.0 - y); });
}

inline Var softplus(Var a) {
  return detail::unary(
      "softplus", a, [](double x) { return detail::softplus(x); },
      [](double x, double) { return detail::sigmoid(x); });
}

inline Var relu(Var a) {
  return detail::unary(
      "relu", a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

inline Var exp(Var a) {
  return detail::unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

inline Var log(Var a) {
  for (double v : a.value().data())
    if (!(v > 0)) throw DomainError("log of non-positive value " + std::to_string(v));
  return detail::unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

inline Var square(Var a) {
  return detail::unary(
      "square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

inline Var sqrt(Var a) {
  for (double v : a.value().data())
    if (!(v > 0)) throw DomainError("sqrt of non-positive value " + std::to_string(v));
  return detail::unary(
      "sqrt", a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

// Gradient barrier: same value, no adjoint flows back.
inline Var detach(Var a) { return a.tape().constant(a.value()); }

// ---------------------------------------------------------------------------
// Linear algebra and shape ops.

inline Var matmul(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  detail::require_rank(x, 2, "matmul");
  detail::require_rank(y, 2, "matmul");
  const std::size_t m = x.rows(), k = x.cols(), n = y.cols();
  if (y.rows() != k)
    throw DimensionError("matmul: inner dimensions differ, " + shape_str(x.shape()) + " x " +
                         shape_str(y.shape()));
  Tensor out(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = &out[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = x[i * k + p];
      if (xv == 0.0) continue;
      const double* yrow = &y[p * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += xv * yrow[j];
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("matmul", std::move(out), {a, b}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(ia);
    const Tensor& yv = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.adjoint(ia);  // g * y^T
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          const double* grow = &g[i * n];
          const double* yrow = &yv[p * n];
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * yrow[j];
          ga[i * k + p] += acc;
        }
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.adjoint(ib);  // x^T * g
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = &g[i * n];
        for (std::size_t p = 0; p < k; ++p) {
          const double xv_ip = xv[i * k + p];
          if (xv_ip == 0.0) continue;
          double* brow = &gb[p * n];
          for (std::size_t j = 0; j < n; ++j) brow[j] += xv_ip * grow[j];
        }
      }
    }
  });
}

inline Var transpose(Var a) {
  const Tensor& x = a.value();
  detail::require_rank(x, 2, "transpose");
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out(Shape{n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x[i * n + j];
  const std::size_t ia = a.id();
  return a.tape().record("transpose", std::move(out), {a}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.adjoint(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
  });
}

inline Var reshape(Var a, Shape shape) {
  const Tensor& x = a.value();
  if (shape_size(shape) != x.size())
    throw DimensionError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape));
  Tensor out(std::move(shape), x.values());
  const std::size_t ia = a.id();
  return a.tape().record("reshape", std::move(out), {a}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.adjoint(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

// Adds a row vector [n] to every row of a matrix [m x n] (bias add).
inline Var add_row(Var a, Var row) {
  const Tensor& x = a.value();
  const Tensor& r = row.value();
  detail::require_rank(x, 2, "add_row");
  detail::require_rank(r, 1, "add_row");
  const std::size_t m = x.rows(), n = x.cols();
  if (r.size() != n)
    throw DimensionError("add_row: row of length " + std::to_string(r.size()) + " vs " +
                         shape_str(x.shape()));
  Tensor out = x;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += r[j];
  const std::size_t ia = a.id(), ir = row.id();
  return a.tape().record("add_row", std::move(out), {a, row}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.adjoint(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(ir)) {
      Tensor& gr = t.adjoint(ir);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gr[j] += g[i * n + j];
    }
  });
}

// Stacks a vector [n] into m identical rows [m x n].
inline Var repeat_rows(Var v, std::size_t m) {
  const Tensor& x = v.value();
  detail::require_rank(x, 1, "repeat_rows");
  const std::size_t n = x.size();
  Tensor out(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[j];
  const std::size_t iv = v.id();
  return v.tape().record("repeat_rows", std::move(out), {v}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gv = t.adjoint(iv);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) gv[j] += g[i * n + j];
  });
}

// Concatenates vectors end to end.
inline Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  std::vector<double> data;
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // (id, length)
  for (const Var& p : parts) {
    detail::require_rank(p.value(), 1, "concat");
    const auto d = p.value().data();
    data.insert(data.end(), d.begin(), d.end());
    spans.emplace_back(p.id(), d.size());
  }
  Tape& tape = parts.front().tape();
  return tape.record("concat", Tensor::vector(std::move(data)), parts, [spans](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    std::size_t off = 0;
    for (auto [id, len] : spans) {
      if (t.requires_grad(id)) {
        Tensor& gi = t.adjoint(id);
        for (std::size_t i = 0; i < len; ++i) gi[i] += g[off + i];
      }
      off += len;
    }
  });
}
inline Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

// Concatenates matrices with equal row counts side by side.
inline Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts.front().value().rows();
  std::size_t total = 0;
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // (id, cols)
  for (const Var& p : parts) {
    detail::require_rank(p.value(), 2, "concat_cols");
    if (p.value().rows() != m) throw DimensionError("concat_cols: row counts differ");
    spans.emplace_back(p.id(), p.value().cols());
    total += p.value().cols();
  }
  Tensor out(Shape{m, total});
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& x = p.value();
    const std::size_t c = x.cols();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < c; ++j) out[i * total + off + j] = x[i * c + j];
    off += c;
  }
  Tape& tape = parts.front().tape();
  return tape.record("concat_cols", std::move(out), parts, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    std::size_t o = 0;
    for (auto [id, c] : spans) {
      if (t.requires_grad(id)) {
        Tensor& gi = t.adjoint(id);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < c; ++j) gi[i * c + j] += g[i * total + o + j];
      }
      o += c;
    }
  });
}
inline Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

// Embedding lookup: row ids[i] of table [V x d]. Id 0 is the reserved
// padding/none row and yields zeros without receiving gradient.
inline Var gather_rows(Var table, std::span<const std::int64_t> ids, std::string_view what = "table") {
  const Tensor& tv = table.value();
  detail::require_rank(tv, 2, "gather_rows");
  const std::size_t vocab = tv.rows(), d = tv.cols();
  for (std::int64_t id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= vocab)
      throw DataError("id " + std::to_string(id) + " out of range for " + std::string(what) +
                      " vocabulary of size " + std::to_string(vocab));
  Tensor out(Shape{ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == 0) continue;
    const double* src = &tv[static_cast<std::size_t>(ids[i]) * d];
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = src[j];
  }
  const std::size_t it = table.id();
  std::vector<std::int64_t> idv(ids.begin(), ids.end());
  return table.tape().record("gather_rows", std::move(out), {table},
                             [it, d, idv = std::move(idv)](Tape& t, std::size_t self) {
                               const Tensor& g = t.grad(self);
                               Tensor& gt = t.adjoint(it);
                               for (std::size_t i = 0; i < idv.size(); ++i) {
                                 if (idv[i] == 0) continue;
                                 double* dst = &gt[static_cast<std::size_t>(idv[i]) * d];
                                 for (std::size_t j = 0; j < d; ++j) dst[j] += g[i * d + j];
                               }
                             });
}

// ---------------------------------------------------------------------------
// Reductions. Without an axis they reduce to a rank-0 scalar; with an axis on
// a matrix, axis 0 collapses rows ([m x n] -> [n]) and axis 1 collapses
// columns ([m x n] -> [m]).

namespace detail {

enum class Reduce { kSum, kMean, kMax };

inline Var reduce(Var a, Reduce kind, std::optional<std::size_t> axis, std::string_view op) {
  const Tensor& x = a.value();
  if (x.size() == 0) throw DomainError(std::string(op) + " of empty tensor");
  if (axis && x.rank() == 1 && *axis == 0) axis.reset();
  if (axis && (x.rank() != 2 || *axis > 1))
    throw DimensionError(std::string(op) + ": invalid axis for shape " + shape_str(x.shape()));

  const std::size_t groups = !axis ? 1 : (*axis == 0 ? x.cols() : x.rows());
  const std::size_t len = !axis ? x.size() : (*axis == 0 ? x.rows() : x.cols());
  // flat index of the j-th member of group g
  const std::size_t cols = x.rank() == 2 ? x.cols() : 0;
  const std::optional<std::size_t> ax = axis;
  auto index_of = [ax, cols](std::size_t g, std::size_t j) -> std::size_t {
    if (!ax) return j;
    return *ax == 0 ? j * cols + g : g * cols + j;
  };

  Tensor out(axis ? Shape{groups} : Shape{});
  std::vector<std::size_t> argmax(kind == Reduce::kMax ? groups : 0);
  for (std::size_t g = 0; g < groups; ++g) {
    if (kind == Reduce::kMax) {
      std::size_t best = index_of(g, 0);
      for (std::size_t j = 1; j < len; ++j)
        if (x[index_of(g, j)] > x[best]) best = index_of(g, j);
      argmax[g] = best;
      out[g] = x[best];
    } else {
      double acc = 0.0;
      for (std::size_t j = 0; j < len; ++j) acc += x[index_of(g, j)];
      out[g] = kind == Reduce::kMean ? acc / static_cast<double>(len) : acc;
    }
  }
  const std::size_t ia = a.id();
  return a.tape().record(op, std::move(out), {a}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.adjoint(ia);
    for (std::size_t gi = 0; gi < groups; ++gi) {
      if (kind == Reduce::kMax) {
        ga[argmax[gi]] += g[gi];
      } else {
        const double w = kind == Reduce::kMean ? g[gi] / static_cast<double>(len) : g[gi];
        for (std::size_t j = 0; j < len; ++j) ga[index_of(gi, j)] += w;
      }
    }
  });
}

}  // namespace detail

inline Var sum(Var a, std::optional<std::size_t> axis = std::nullopt) {
  return detail::reduce(a, detail::Reduce::kSum, axis, "sum");
}
inline Var mean(Var a, std::optional<std::size_t> axis = std::nullopt) {
  return detail::reduce(a, detail::Reduce::kMean, axis, "mean");
}
// Ties route the gradient to the first maximal element.
inline Var max(Var a, std::optional<std::size_t> axis = std::nullopt) {
  return detail::reduce(a, detail::Reduce::kMax, axis, "max");
}

// ---------------------------------------------------------------------------
// Softmax family (max-shifted).

inline Var log_softmax(Var logits) {
  const Tensor& x = logits.value();
  detail::require_rank(x, 1, "log_softmax");
  if (x.size() == 0) throw DomainError("log_softmax of empty vector");
  double m = x[0];
  for (double v : x.data()) m = std::max(m, v);
  double acc = 0.0;
  for (double v : x.data()) acc += std::exp(v - m);
  const double lse = m + std::log(acc);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lse;
  const std::size_t ia = logits.id();
  return logits.tape().record("log_softmax", std::move(out), {logits}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    double gs = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) gs += g[i];
    Tensor& ga = t.adjoint(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] - std::exp(y[i]) * gs;
  });
}

// Row-wise softmax of a matrix.
inline Var softmax_rows(Var a) {
  const Tensor& x = a.value();
  detail::require_rank(x, 2, "softmax_rows");
  const std::size_t m = x.rows(), n = x.cols();
  if (n == 0) throw DomainError("softmax_rows with zero columns");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < m; ++i) {
    double mx = x[i * n];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x[i * n + j]);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += (out[i * n + j] = std::exp(x[i * n + j] - mx));
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= acc;
  }
  const std::size_t ia = a.id();
  return a.tape().record("softmax_rows", std::move(out), {a}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& ga = t.adjoint(ia);
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * y[i * n + j];
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
    }
  });
}

}  // namespace podm
