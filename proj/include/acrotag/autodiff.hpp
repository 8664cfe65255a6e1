#pragma once

// Dense double-precision tensors and a reverse-mode gradient tape.
//
// A Tape records operations in append order. Nodes are referenced through
// Var handles; backward() walks the tape once in reverse and accumulates
// gradients. Three kinds of leaves exist:
//   leaf()      owns its value and its gradient
//   param()     references an external value and accumulates its gradient
//               into an external sink (used for model weights)
//   constant()  carries no gradient

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace acrotag::ad {

using Shape = std::vector<std::size_t>;

/// Raised when an operation produces NaN or Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on incompatible operand shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }

  // Rank-1 tensors are treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  bool all_finite() const;
  void fill(double v);
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

std::string shape_string(const Shape& shape);

/// Euclidean norm over every element.
double l2_norm(const Tensor& t);

struct Var {
  std::size_t id = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Var leaf(Tensor value);
  Var param(const Tensor& value, Tensor* grad_sink);
  Var constant(Tensor value);

  /// Appends an operation result. `fn` may be empty for nodes that do not
  /// propagate (e.g. when no input requires a gradient).
  Var record(Tensor value, bool requires_grad, BackwardFn fn);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;

  /// Gradient of the last backward() loss w.r.t. v. Nodes the loss never
  /// reached report zeros. For param() nodes this is the external sink.
  Tensor grad(Var v) const;

  /// Accumulation target for v's gradient; allocated on first use.
  Tensor& grad_slot(Var v);

  /// Runs reverse accumulation from a scalar node, seeding d(loss) = seed.
  /// A tape can be differentiated once.
  void backward(Var loss, double seed = 1.0);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* ref = nullptr;
    Tensor grad;
    Tensor* sink = nullptr;
    bool requires_grad = false;
    bool reached = false;
    BackwardFn backward;
  };

  const Node& node(Var v) const;
  Node& node(Var v);

  std::deque<Node> nodes_;
  bool differentiated_ = false;
};

// Forward operations. Every op checks operand shapes (ShapeError) and the
// finiteness of its output (NumericError).

Var matmul(Tape& tape, Var a, Var b);
Var transpose(Tape& tape, Var a);
Var add(Tape& tape, Var a, Var b);
/// Adds a length-n bias to every row of an (m x n) matrix.
Var add_bias(Tape& tape, Var a, Var bias);
Var elementwise_tanh(Tape& tape, Var a);
Var scale(Tape& tape, Var a, double factor);
/// Rowwise normalization with learned gain and shift (both length n).
Var layer_norm(Tape& tape, Var x, Var gain, Var shift, double eps = 1e-5);
Var concat_rows(Tape& tape, std::span<const Var> parts);
/// Gathers rows of `table` (rows x n) into an (indices.size() x n) matrix.
Var embed_lookup(Tape& tape, Var table, std::span<const std::size_t> indices);
Var softmax_rows(Tape& tape, Var logits);
Var sum_all(Tape& tape, Var a);

/// Probability floor applied inside the log of cross_entropy_sum.
inline constexpr double kProbabilityFloor = 1e-12;

/// L = -sum_i mask_i sum_j y_ij log max(s_ij, floor), summed (not averaged)
/// over unmasked rows. `targets` has the shape of `probs`; `mask` has one
/// entry per row (true = counted). An empty mask counts every row.
Var cross_entropy_sum(Tape& tape, Var probs, const Tensor& targets,
                      const std::vector<bool>& mask = {});

// Gradient checking against central finite differences.

using LossBuilder = std::function<Var(Tape&, std::span<const Var> leaves)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::vector<double> leaf_max_rel_error;
  std::size_t elements_checked = 0;
};

/// Compares the tape gradient of `f` at `leaves` with (f(x+h)-f(x-h))/(2h)
/// per element. The error of one element is |a-n| / max(|a|, |n|, 1e-8).
GradCheckReport grad_check(const LossBuilder& f, const std::vector<Tensor>& leaves,
                           double h);

}  // namespace acrotag::ad
