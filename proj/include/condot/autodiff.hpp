#pragma once

// Matrix-valued reverse-mode tape with optional graph construction during
// the backward pass, so that a gradient can itself be differentiated once.
//
// Every node stores its value; backward rules are written with the same
// differentiable ops, which is what makes reverse-over-reverse work. A tape
// lives for one loss evaluation and is not shared between threads.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "condot/tensor.hpp"

namespace condot::ad {

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  bool defined() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;
  bool requires_grad() const;
  /// Number of graph-building backward passes this node descends from.
  int order() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

using Backward =
    std::function<std::vector<Var>(Tape&, const Var& upstream, const std::vector<bool>& need)>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var constant_scalar(double value);
  Var variable(Matrix value);

  /// Gradients of a 1x1 `output` with respect to each of `wrt`. With
  /// `create_graph` the returned Vars are differentiable; only one such
  /// level is supported.
  std::vector<Var> grad(const Var& output, const std::vector<Var>& wrt, bool create_graph);

  std::size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  Var record(Matrix value, std::vector<Var> inputs, Backward backward);

 private:
  friend class Var;
  struct Node {
    Matrix value;
    bool requires_grad = false;
    int order = 0;
    std::vector<int> inputs;
    Backward backward;
  };

  std::deque<Node> nodes_;
  int pass_order_ = 0;
  bool building_ = true;
};

// Structural ops.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var neg(const Var& a);
Var mul(const Var& a, const Var& b);  // Hadamard
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var broadcast_rows(const Var& row, Eigen::Index n);  // 1xk -> nxk
Var broadcast_cols(const Var& col, Eigen::Index k);  // nx1 -> nxk
Var broadcast_scalar(const Var& s, Eigen::Index rows, Eigen::Index cols);
Var sum_rows(const Var& a);  // nxk -> 1xk
Var sum_cols(const Var& a);  // nxk -> nx1
Var sum(const Var& a);       // -> 1x1
Var mean(const Var& a);
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count);

// Elementwise nonlinearities.
Var softplus(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var exp(const Var& a);
Var log(const Var& a);
Var sqrt(const Var& a);
Var reciprocal(const Var& a);
Var square(const Var& a);

// Composites.
Var add_row(const Var& a, const Var& row);  // a + broadcast_rows(row)
Var mul_row(const Var& a, const Var& row);  // a .* broadcast_rows(row)
Var squared_norm(const Var& a);             // sum of squares -> 1x1
Var row_dot(const Var& a, const Var& b);    // per-row inner products -> nx1
Var softmax_rows(const Var& a);
Var stop_gradient(const Var& a);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator-(const Var& a) { return neg(a); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }
inline Var operator*(const Var& a, double s) { return scale(a, s); }

double softplus_value(double x);
double sigmoid_value(double x);

// ---------------------------------------------------------------------------
// Flat parameter storage.

struct ParamEntry {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index size() const { return rows * cols; }
};

/// A flat vector plus the table mapping named tensors onto it. The table
/// covers the vector exactly once, in insertion order.
class ParamVector {
 public:
  ParamVector() = default;

  /// Appends a zero-initialised tensor and returns its entry.
  const ParamEntry& add(const std::string& name, Eigen::Index rows, Eigen::Index cols);

  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  const ParamEntry& entry(const std::string& name) const;
  const std::vector<ParamEntry>& entries() const { return entries_; }

  Eigen::Map<Matrix> view(const std::string& name);
  Eigen::Map<const Matrix> view(const std::string& name) const;

  Vector& data() { return data_; }
  const Vector& data() const { return data_; }
  Eigen::Index size() const { return data_.size(); }

  /// Same layout, zero data.
  ParamVector zeros_like() const;
  bool same_layout(const ParamVector& other) const;
  /// Checks that the entries tile [0, size) without gaps or overlaps.
  bool layout_is_exact() const;

 private:
  std::vector<ParamEntry> entries_;
  std::map<std::string, std::size_t> index_;
  Vector data_;
};

/// Named tape handles for the tensors of a ParamVector.
class ParamVars {
 public:
  ParamVars() = default;
  ParamVars(Tape& tape, const ParamVector& params, bool requires_grad);

  const Var& operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return vars_.count(name) > 0; }
  const ParamVector* source() const { return source_; }

  std::vector<Var> all() const;
  /// Packs gradients (aligned with all()) back into the source layout.
  ParamVector pack(const std::vector<Var>& grads) const;

 private:
  const ParamVector* source_ = nullptr;
  std::map<std::string, Var> vars_;
  std::vector<std::string> order_;
};

// ---------------------------------------------------------------------------
// Function-level entry points.

/// Scalar-valued (per row) function of inputs x (n x d), context c and parameters.
using InputFn = std::function<Var(Tape&, const Var& x, const Var& c, const ParamVars&)>;
/// Scalar loss of the parameters; may use grad(..., create_graph=true) internally.
using LossFn = std::function<Var(Tape&, const ParamVars&)>;

/// Row-wise input gradients of f; f must return an n x 1 column (one value per
/// row of x) or a 1 x 1 scalar.
Matrix grad_wrt_input(const InputFn& f, const Matrix& x, const Matrix& c, const ParamVector& params);

struct LossAndGrad {
  double value = 0.0;
  ParamVector grad;
};

LossAndGrad grad_wrt_params(const LossFn& loss, const ParamVector& params);
double eval_loss(const LossFn& loss, const ParamVector& params);

struct FdReport {
  double max_rel_err = 0.0;
  Eigen::Index worst_coordinate = -1;
  std::vector<Eigen::Index> probed;
};

/// Compares `analytic` to central differences of `loss` on `n_probe`
/// coordinates drawn without replacement (all of them if n_probe >= size).
/// The relative error of one coordinate is |a - n| / max(|a|, |n|, 1e-3).
FdReport finite_diff_check(const std::function<double(const ParamVector&)>& loss,
                           const ParamVector& analytic, const ParamVector& params,
                           std::size_t n_probe, std::uint64_t seed);

}  // namespace condot::ad
