#include "acrotag/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

namespace acrotag::ad {

namespace {

std::size_t shape_product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

Tensor checked(Tensor t, const char* op) {
  if (!t.all_finite()) {
    throw NumericError(std::string(op) + ": non-finite value in output");
  }
  return t;
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
  }
}

void require_vector(const Tensor& t, std::size_t n, const char* op) {
  if (t.rank() != 1 || t.size() != n) {
    throw ShapeError(std::string(op) + ": expected a vector of length " + std::to_string(n) +
                     ", got " + shape_string(t.shape()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(shape_product(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_product(shape_) != values_.size()) {
    throw ShapeError("tensor: shape " + shape_string(shape_) + " does not hold " +
                     std::to_string(values_.size()) + " values");
  }
}

std::size_t Tensor::rows() const {
  if (shape_.size() == 2) return shape_[0];
  return 1;
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 2) return shape_[1];
  if (shape_.size() == 1) return shape_[0];
  return 1;
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

double l2_norm(const Tensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += v * v;
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Tape

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw std::out_of_range("tape: unknown variable");
  return nodes_[v.id];
}

Tape::Node& Tape::node(Var v) {
  if (v.id >= nodes_.size()) throw std::out_of_range("tape: unknown variable");
  return nodes_[v.id];
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::param(const Tensor& value, Tensor* grad_sink) {
  if (grad_sink && !grad_sink->same_shape(value)) {
    throw ShapeError("tape: gradient sink shape " + shape_string(grad_sink->shape()) +
                     " differs from parameter shape " + shape_string(value.shape()));
  }
  Node n;
  n.ref = &value;
  n.sink = grad_sink;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::record(Tensor value, bool requires_grad, BackwardFn fn) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Tensor& Tape::value(Var v) const {
  const Node& n = node(v);
  return n.ref ? *n.ref : n.owned;
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

Tensor Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.sink) return *n.sink;
  if (n.reached) return n.grad;
  return Tensor(value(v).shape());
}

Tensor& Tape::grad_slot(Var v) {
  Node& n = node(v);
  if (n.sink) return *n.sink;
  if (!n.reached) {
    n.grad = Tensor(value(v).shape());
    n.reached = true;
  }
  return n.grad;
}

void Tape::backward(Var loss, double seed) {
  if (differentiated_) throw std::logic_error("tape: backward() already ran on this tape");
  if (value(loss).size() != 1) {
    throw ShapeError("tape: backward() needs a scalar loss, got " +
                     shape_string(value(loss).shape()));
  }
  differentiated_ = true;
  if (!node(loss).requires_grad) return;
  grad_slot(loss)[0] += seed;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.reached || !n.backward) continue;
    n.backward(*this, n.grad);
  }
}

// ---------------------------------------------------------------------------
// Operations

Var matmul(Tape& tape, Var a, Var b) {
  const Tensor& A = tape.value(a);
  const Tensor& B = tape.value(b);
  require_matrix(A, "matmul");
  require_matrix(B, "matmul");
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  if (B.rows() != k) {
    throw ShapeError("matmul: " + shape_string(A.shape()) + " x " + shape_string(B.shape()));
  }
  Tensor C = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = C.data() + i * n;
    const double* arow = A.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.record(checked(std::move(C), "matmul"), rg,
                     [a, b, m, k, n](Tape& t, const Tensor& dC) {
                       const Tensor& A = t.value(a);
                       const Tensor& B = t.value(b);
                       if (t.requires_grad(a)) {
                         Tensor& dA = t.grad_slot(a);
                         for (std::size_t i = 0; i < m; ++i) {
                           const double* dcrow = dC.data() + i * n;
                           double* darow = dA.data() + i * k;
                           for (std::size_t p = 0; p < k; ++p) {
                             const double* brow = B.data() + p * n;
                             double s = 0.0;
                             for (std::size_t j = 0; j < n; ++j) s += dcrow[j] * brow[j];
                             darow[p] += s;
                           }
                         }
                       }
                       if (t.requires_grad(b)) {
                         Tensor& dB = t.grad_slot(b);
                         for (std::size_t i = 0; i < m; ++i) {
                           const double* dcrow = dC.data() + i * n;
                           const double* arow = A.data() + i * k;
                           for (std::size_t p = 0; p < k; ++p) {
                             const double av = arow[p];
                             double* dbrow = dB.data() + p * n;
                             for (std::size_t j = 0; j < n; ++j) dbrow[j] += av * dcrow[j];
                           }
                         }
                       }
                     });
}

Var transpose(Tape& tape, Var a) {
  const Tensor& A = tape.value(a);
  require_matrix(A, "transpose");
  const std::size_t m = A.rows(), n = A.cols();
  Tensor T = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) T.at(j, i) = A.at(i, j);
  return tape.record(std::move(T), tape.requires_grad(a), [a, m, n](Tape& t, const Tensor& g) {
    Tensor& dA = t.grad_slot(a);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) dA.at(i, j) += g.at(j, i);
  });
}

Var add(Tape& tape, Var a, Var b) {
  const Tensor& A = tape.value(a);
  const Tensor& B = tape.value(b);
  if (!A.same_shape(B)) {
    throw ShapeError("add: " + shape_string(A.shape()) + " + " + shape_string(B.shape()));
  }
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] += B[i];
  const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.record(checked(std::move(C), "add"), rg, [a, b](Tape& t, const Tensor& g) {
    for (Var v : {a, b}) {
      if (!t.requires_grad(v)) continue;
      Tensor& d = t.grad_slot(v);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
  });
}

Var add_bias(Tape& tape, Var a, Var bias) {
  const Tensor& A = tape.value(a);
  const Tensor& b = tape.value(bias);
  require_matrix(A, "add_bias");
  require_vector(b, A.cols(), "add_bias");
  const std::size_t m = A.rows(), n = A.cols();
  Tensor C = A;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) C.at(i, j) += b[j];
  const bool rg = tape.requires_grad(a) || tape.requires_grad(bias);
  return tape.record(checked(std::move(C), "add_bias"), rg,
                     [a, bias, m, n](Tape& t, const Tensor& g) {
                       if (t.requires_grad(a)) {
                         Tensor& d = t.grad_slot(a);
                         for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
                       }
                       if (t.requires_grad(bias)) {
                         Tensor& d = t.grad_slot(bias);
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < n; ++j) d[j] += g.at(i, j);
                       }
                     });
}

Var elementwise_tanh(Tape& tape, Var a) {
  Tensor Y = tape.value(a);
  for (double& v : Y.values()) v = std::tanh(v);
  return tape.record(checked(std::move(Y), "tanh"), tape.requires_grad(a),
                     [a](Tape& t, const Tensor& g) {
                       // d tanh(x) = 1 - tanh(x)^2
                       const Tensor& X = t.value(a);
                       Tensor& d = t.grad_slot(a);
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         const double y = std::tanh(X[i]);
                         d[i] += g[i] * (1.0 - y * y);
                       }
                     });
}

Var scale(Tape& tape, Var a, double factor) {
  Tensor Y = tape.value(a);
  for (double& v : Y.values()) v *= factor;
  return tape.record(checked(std::move(Y), "scale"), tape.requires_grad(a),
                     [a, factor](Tape& t, const Tensor& g) {
                       Tensor& d = t.grad_slot(a);
                       for (std::size_t i = 0; i < g.size(); ++i) d[i] += factor * g[i];
                     });
}

Var layer_norm(Tape& tape, Var x, Var gain, Var shift, double eps) {
  const Tensor& X = tape.value(x);
  require_matrix(X, "layer_norm");
  const std::size_t m = X.rows(), n = X.cols();
  const Tensor& G = tape.value(gain);
  const Tensor& B = tape.value(shift);
  require_vector(G, n, "layer_norm");
  require_vector(B, n, "layer_norm");

  // Normalized rows and inverse deviations are kept for the backward pass.
  Tensor xhat = Tensor::matrix(m, n);
  std::vector<double> inv_std(m);
  Tensor Y = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += X.at(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double c = X.at(i, j) - mean;
      var += c * c;
    }
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat.at(i, j) = (X.at(i, j) - mean) * inv_std[i];
      Y.at(i, j) = G[j] * xhat.at(i, j) + B[j];
    }
  }
  const bool rg = tape.requires_grad(x) || tape.requires_grad(gain) || tape.requires_grad(shift);
  return tape.record(
      checked(std::move(Y), "layer_norm"), rg,
      [x, gain, shift, m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          Tape& t, const Tensor& g) {
        const Tensor& G = t.value(gain);
        if (t.requires_grad(gain)) {
          Tensor& d = t.grad_slot(gain);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) d[j] += g.at(i, j) * xhat.at(i, j);
        }
        if (t.requires_grad(shift)) {
          Tensor& d = t.grad_slot(shift);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) d[j] += g.at(i, j);
        }
        if (t.requires_grad(x)) {
          Tensor& d = t.grad_slot(x);
          const double inv_n = 1.0 / static_cast<double>(n);
          std::vector<double> dxhat(n);
          for (std::size_t i = 0; i < m; ++i) {
            double mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              dxhat[j] = g.at(i, j) * G[j];
              mean_d += dxhat[j];
              mean_dx += dxhat[j] * xhat.at(i, j);
            }
            mean_d *= inv_n;
            mean_dx *= inv_n;
            for (std::size_t j = 0; j < n; ++j) {
              d.at(i, j) += inv_std[i] * (dxhat[j] - mean_d - xhat.at(i, j) * mean_dx);
            }
          }
        }
      });
}

Var concat_rows(Tape& tape, std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t n = tape.value(parts[0]).cols();
  std::size_t total = 0;
  bool rg = false;
  for (Var p : parts) {
    const Tensor& P = tape.value(p);
    require_matrix(P, "concat_rows");
    if (P.cols() != n) throw ShapeError("concat_rows: column counts differ");
    total += P.rows();
    rg = rg || tape.requires_grad(p);
  }
  Tensor C = Tensor::matrix(total, n);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& P = tape.value(p);
    std::copy(P.values().begin(), P.values().end(), C.data() + offset);
    offset += P.size();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape.record(std::move(C), rg, [inputs = std::move(inputs)](Tape& t, const Tensor& g) {
    std::size_t offset = 0;
    for (Var p : inputs) {
      const std::size_t sz = t.value(p).size();
      if (t.requires_grad(p)) {
        Tensor& d = t.grad_slot(p);
        for (std::size_t i = 0; i < sz; ++i) d[i] += g[offset + i];
      }
      offset += sz;
    }
  });
}

Var embed_lookup(Tape& tape, Var table, std::span<const std::size_t> indices) {
  const Tensor& E = tape.value(table);
  require_matrix(E, "embed_lookup");
  const std::size_t n = E.cols();
  Tensor Y = Tensor::matrix(indices.size(), n);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= E.rows()) {
      throw ShapeError("embed_lookup: index " + std::to_string(indices[r]) +
                       " outside table of " + std::to_string(E.rows()) + " rows");
    }
    std::copy_n(E.data() + indices[r] * n, n, Y.data() + r * n);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return tape.record(std::move(Y), tape.requires_grad(table),
                     [table, n, idx = std::move(idx)](Tape& t, const Tensor& g) {
                       Tensor& d = t.grad_slot(table);
                       for (std::size_t r = 0; r < idx.size(); ++r) {
                         double* drow = d.data() + idx[r] * n;
                         const double* grow = g.data() + r * n;
                         for (std::size_t j = 0; j < n; ++j) drow[j] += grow[j];
                       }
                     });
}

Var softmax_rows(Tape& tape, Var logits) {
  const Tensor& Z = tape.value(logits);
  require_matrix(Z, "softmax_rows");
  const std::size_t m = Z.rows(), n = Z.cols();
  Tensor S = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    double mx = Z.at(i, 0);
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, Z.at(i, j));
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      S.at(i, j) = std::exp(Z.at(i, j) - mx);
      total += S.at(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) S.at(i, j) /= total;
  }
  Tensor saved = S;
  return tape.record(checked(std::move(S), "softmax_rows"), tape.requires_grad(logits),
                     [logits, m, n, S = std::move(saved)](Tape& t, const Tensor& g) {
                       Tensor& d = t.grad_slot(logits);
                       for (std::size_t i = 0; i < m; ++i) {
                         double dot = 0.0;
                         for (std::size_t j = 0; j < n; ++j) dot += g.at(i, j) * S.at(i, j);
                         for (std::size_t j = 0; j < n; ++j)
                           d.at(i, j) += S.at(i, j) * (g.at(i, j) - dot);
                       }
                     });
}

Var sum_all(Tape& tape, Var a) {
  const Tensor& A = tape.value(a);
  double s = 0.0;
  for (double v : A.values()) s += v;
  return tape.record(checked(Tensor::scalar(s), "sum_all"), tape.requires_grad(a),
                     [a](Tape& t, const Tensor& g) {
                       Tensor& d = t.grad_slot(a);
                       for (double& v : d.values()) v += g[0];
                     });
}

Var cross_entropy_sum(Tape& tape, Var probs, const Tensor& targets,
                      const std::vector<bool>& mask) {
  const Tensor& S = tape.value(probs);
  require_matrix(S, "cross_entropy_sum");
  if (!targets.same_shape(S)) {
    throw ShapeError("cross_entropy_sum: targets " + shape_string(targets.shape()) +
                     " vs probabilities " + shape_string(S.shape()));
  }
  const std::size_t m = S.rows(), n = S.cols();
  if (!mask.empty() && mask.size() != m) {
    throw ShapeError("cross_entropy_sum: mask has " + std::to_string(mask.size()) +
                     " entries for " + std::to_string(m) + " rows");
  }
  auto counted = [&mask](std::size_t i) { return mask.empty() || mask[i]; };
  double loss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!counted(i)) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const double y = targets.at(i, j);
      if (y != 0.0) loss -= y * std::log(std::max(S.at(i, j), kProbabilityFloor));
    }
  }
  return tape.record(checked(Tensor::scalar(loss), "cross_entropy_sum"),
                     tape.requires_grad(probs),
                     [probs, targets, mask, m, n](Tape& t, const Tensor& g) {
                       const Tensor& S = t.value(probs);
                       Tensor& d = t.grad_slot(probs);
                       for (std::size_t i = 0; i < m; ++i) {
                         if (!mask.empty() && !mask[i]) continue;
                         for (std::size_t j = 0; j < n; ++j) {
                           const double y = targets.at(i, j);
                           const double s = S.at(i, j);
                           // The floor is a constant below kProbabilityFloor.
                           if (y != 0.0 && s > kProbabilityFloor) d.at(i, j) -= g[0] * y / s;
                         }
                       }
                     });
}

// ---------------------------------------------------------------------------
// Gradient check

GradCheckReport grad_check(const LossBuilder& f, const std::vector<Tensor>& leaves, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("grad_check: step must be positive");

  auto evaluate = [&](const std::vector<Tensor>& at) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(at.size());
    for (const Tensor& t : at) vars.push_back(tape.leaf(t));
    const double v = tape.value(f(tape, vars))[0];
    if (!std::isfinite(v)) throw NumericError("grad_check: function value is not finite");
    return v;
  };

  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& t : leaves) vars.push_back(tape.leaf(t));
    const Var loss = f(tape, vars);
    if (!std::isfinite(tape.value(loss)[0])) {
      throw NumericError("grad_check: function value is not finite");
    }
    tape.backward(loss);
    for (Var v : vars) analytic.push_back(tape.grad(v));
  }

  GradCheckReport report;
  report.leaf_max_rel_error.assign(leaves.size(), 0.0);
  std::vector<Tensor> probe = leaves;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    for (std::size_t i = 0; i < leaves[l].size(); ++i) {
      const double x0 = leaves[l][i];
      probe[l][i] = x0 + h;
      const double fp = evaluate(probe);
      probe[l][i] = x0 - h;
      const double fm = evaluate(probe);
      probe[l][i] = x0;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[l][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double err = std::abs(a - numeric) / denom;
      report.leaf_max_rel_error[l] = std::max(report.leaf_max_rel_error[l], err);
      report.max_rel_error = std::max(report.max_rel_error, err);
      ++report.elements_checked;
    }
  }
  return report;
}

}  // namespace acrotag::ad
