#include "condot/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace condot::ad {

namespace {

Tape& tape_of(const Var& v) {
  if (!v.defined()) throw Error(Errc::InvalidArgument, "use of an undefined Var");
  return *v.tape();
}

Tape& common_tape(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  if (&tape_of(b) != &t) throw Error(Errc::InvalidArgument, "Vars from different tapes");
  return t;
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(Errc::ShapeMismatch,
                std::string(op) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                    " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

template <typename F>
Matrix map_values(const Matrix& m, F f) {
  return m.unaryExpr(f);
}

}  // namespace

double softplus_value(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Var / Tape

const Matrix& Var::value() const { return tape_of(*this).nodes_[static_cast<std::size_t>(id_)].value; }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw Error(Errc::ShapeMismatch, "Var is not 1x1");
  return v(0, 0);
}

bool Var::requires_grad() const {
  return tape_of(*this).nodes_[static_cast<std::size_t>(id_)].requires_grad;
}

int Var::order() const { return tape_of(*this).nodes_[static_cast<std::size_t>(id_)].order; }

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant_scalar(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var Tape::variable(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  n.order = pass_order_;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::record(Matrix value, std::vector<Var> inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  if (building_) {
    int order = pass_order_;
    bool rg = false;
    for (const auto& in : inputs) {
      const Node& src = nodes_[static_cast<std::size_t>(in.id())];
      if (src.requires_grad) {
        rg = true;
        order = std::max(order, src.order);
      }
    }
    if (rg) {
      n.requires_grad = true;
      n.order = order;
      n.inputs.reserve(inputs.size());
      for (const auto& in : inputs) n.inputs.push_back(in.id());
      n.backward = std::move(backward);
    }
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

std::vector<Var> Tape::grad(const Var& output, const std::vector<Var>& wrt, bool create_graph) {
  if (&tape_of(output) != this) throw Error(Errc::InvalidArgument, "output is on another tape");
  if (output.rows() != 1 || output.cols() != 1) {
    throw Error(Errc::ShapeMismatch, "grad: output must be 1x1");
  }
  auto zeros_for = [&](const Var& w) { return constant(Matrix::Zero(w.rows(), w.cols())); };
  std::vector<Var> result;
  result.reserve(wrt.size());
  if (!output.requires_grad()) {
    for (const auto& w : wrt) result.push_back(zeros_for(w));
    return result;
  }
  const int out_order = output.order();
  if (create_graph && out_order >= 1) {
    throw Error(Errc::NestingTooDeep,
                "only one level of differentiable gradients is supported");
  }

  const auto top = static_cast<std::size_t>(output.id());
  std::vector<char> relevant(top + 1, 0);
  std::size_t lowest = top + 1;
  for (const auto& w : wrt) {
    const auto id = static_cast<std::size_t>(w.id());
    if (id <= top) {
      relevant[id] = 1;
      lowest = std::min(lowest, id);
    }
  }
  for (std::size_t id = lowest; id <= top && lowest <= top; ++id) {
    if (relevant[id]) continue;
    const Node& n = nodes_[id];
    if (!n.requires_grad) continue;
    for (int in : n.inputs) {
      if (relevant[static_cast<std::size_t>(in)]) {
        relevant[id] = 1;
        break;
      }
    }
  }

  const bool saved_building = building_;
  const int saved_order = pass_order_;
  building_ = create_graph;
  pass_order_ = create_graph ? out_order + 1 : 0;

  std::vector<Var> grads(top + 1);
  grads[top] = constant_scalar(1.0);
  try {
    for (std::size_t k = top + 1; k-- > 0;) {
      if (!relevant[k] || !grads[k].defined()) continue;
      // Copy what we need: recording new nodes does not move deque elements,
      // but keep the backward closure alive independently of the node.
      const Backward backward = nodes_[k].backward;
      const std::vector<int> inputs = nodes_[k].inputs;
      if (!backward) continue;
      std::vector<bool> need(inputs.size());
      for (std::size_t j = 0; j < inputs.size(); ++j)
        need[j] = relevant[static_cast<std::size_t>(inputs[j])] != 0;
      const std::vector<Var> in_grads = backward(*this, grads[k], need);
      for (std::size_t j = 0; j < inputs.size(); ++j) {
        if (!need[j] || !in_grads[j].defined()) continue;
        auto& slot = grads[static_cast<std::size_t>(inputs[j])];
        slot = slot.defined() ? add(slot, in_grads[j]) : in_grads[j];
      }
    }
  } catch (...) {
    building_ = saved_building;
    pass_order_ = saved_order;
    throw;
  }
  building_ = saved_building;
  pass_order_ = saved_order;

  for (const auto& w : wrt) {
    const auto id = static_cast<std::size_t>(w.id());
    if (id <= top && grads[id].defined()) {
      result.push_back(grads[id]);
    } else {
      result.push_back(zeros_for(w));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Ops

Var add(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a, b, "add");
  return t.record(a.value() + b.value(), {a, b},
                  [](Tape&, const Var& g, const std::vector<bool>&) {
                    return std::vector<Var>{g, g};
                  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a, b, "sub");
  return t.record(a.value() - b.value(), {a, b},
                  [](Tape&, const Var& g, const std::vector<bool>& need) {
                    return std::vector<Var>{g, need[1] ? neg(g) : Var()};
                  });
}

Var neg(const Var& a) {
  return tape_of(a).record(-a.value(), {a}, [](Tape&, const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{neg(g)};
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a, b, "mul");
  return t.record(a.value().cwiseProduct(b.value()), {a, b},
                  [a, b](Tape&, const Var& g, const std::vector<bool>& need) {
                    return std::vector<Var>{need[0] ? mul(g, b) : Var(),
                                            need[1] ? mul(g, a) : Var()};
                  });
}

Var scale(const Var& a, double s) {
  return tape_of(a).record(a.value() * s, {a},
                           [s](Tape&, const Var& g, const std::vector<bool>&) {
                             return std::vector<Var>{scale(g, s)};
                           });
}

Var add_scalar(const Var& a, double s) {
  return tape_of(a).record(a.value().array() + s, {a},
                           [](Tape&, const Var& g, const std::vector<bool>&) {
                             return std::vector<Var>{g};
                           });
}

Var matmul(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  if (a.cols() != b.rows()) {
    throw Error(Errc::ShapeMismatch, "matmul: " + std::to_string(a.rows()) + "x" +
                                         std::to_string(a.cols()) + " by " +
                                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix v = a.value() * b.value();
  return t.record(std::move(v), {a, b},
                  [a, b](Tape&, const Var& g, const std::vector<bool>& need) {
                    return std::vector<Var>{need[0] ? matmul(g, transpose(b)) : Var(),
                                            need[1] ? matmul(transpose(a), g) : Var()};
                  });
}

Var transpose(const Var& a) {
  Matrix v = a.value().transpose();
  return tape_of(a).record(std::move(v), {a}, [](Tape&, const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{transpose(g)};
  });
}

Var broadcast_rows(const Var& row, Eigen::Index n) {
  if (row.rows() != 1) throw Error(Errc::ShapeMismatch, "broadcast_rows expects a row vector");
  Matrix v = row.value().replicate(n, 1);
  return tape_of(row).record(std::move(v), {row},
                             [](Tape&, const Var& g, const std::vector<bool>&) {
                               return std::vector<Var>{sum_rows(g)};
                             });
}

Var broadcast_cols(const Var& col, Eigen::Index k) {
  if (col.cols() != 1) throw Error(Errc::ShapeMismatch, "broadcast_cols expects a column");
  Matrix v = col.value().replicate(1, k);
  return tape_of(col).record(std::move(v), {col},
                             [](Tape&, const Var& g, const std::vector<bool>&) {
                               return std::vector<Var>{sum_cols(g)};
                             });
}

Var broadcast_scalar(const Var& s, Eigen::Index rows, Eigen::Index cols) {
  Matrix v = Matrix::Constant(rows, cols, s.scalar());
  return tape_of(s).record(std::move(v), {s}, [](Tape&, const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{sum(g)};
  });
}

Var sum_rows(const Var& a) {
  const Eigen::Index n = a.rows();
  Matrix v = a.value().colwise().sum();
  return tape_of(a).record(std::move(v), {a}, [n](Tape&, const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{broadcast_rows(g, n)};
  });
}

Var sum_cols(const Var& a) {
  const Eigen::Index k = a.cols();
  Matrix v = a.value().rowwise().sum();
  return tape_of(a).record(std::move(v), {a}, [k](Tape&, const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{broadcast_cols(g, k)};
  });
}

Var sum(const Var& a) {
  const Eigen::Index r = a.rows(), c = a.cols();
  Matrix v = Matrix::Constant(1, 1, a.value().sum());
  return tape_of(a).record(std::move(v), {a},
                           [r, c](Tape&, const Var& g, const std::vector<bool>&) {
                             return std::vector<Var>{broadcast_scalar(g, r, c)};
                           });
}

Var mean(const Var& a) {
  const auto n = static_cast<double>(a.rows() * a.cols());
  if (n == 0) throw Error(Errc::EmptySet, "mean of an empty matrix");
  return scale(sum(a), 1.0 / n);
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(Errc::EmptySet, "concat_cols of nothing");
  Tape& t = tape_of(parts.front());
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  std::vector<Eigen::Index> widths;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw Error(Errc::ShapeMismatch, "concat_cols: row counts differ");
    widths.push_back(p.cols());
    cols += p.cols();
  }
  Matrix v(rows, cols);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    v.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  return t.record(std::move(v), parts,
                  [widths](Tape&, const Var& g, const std::vector<bool>& need) {
                    std::vector<Var> out(widths.size());
                    Eigen::Index o = 0;
                    for (std::size_t i = 0; i < widths.size(); ++i) {
                      if (need[i]) out[i] = slice_cols(g, o, widths[i]);
                      o += widths[i];
                    }
                    return out;
                  });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw Error(Errc::ShapeMismatch, "slice_cols out of range");
  }
  const Eigen::Index rows = a.rows(), cols = a.cols();
  Matrix v = a.value().middleCols(start, count);
  return tape_of(a).record(
      std::move(v), {a}, [rows, cols, start, count](Tape& t, const Var& g, const std::vector<bool>&) {
        std::vector<Var> parts;
        if (start > 0) parts.push_back(t.constant(Matrix::Zero(rows, start)));
        parts.push_back(g);
        if (start + count < cols) parts.push_back(t.constant(Matrix::Zero(rows, cols - start - count)));
        return std::vector<Var>{parts.size() == 1 ? g : concat_cols(parts)};
      });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(Errc::EmptySet, "concat_rows of nothing");
  Tape& t = tape_of(parts.front());
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  std::vector<Eigen::Index> heights;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw Error(Errc::ShapeMismatch, "concat_rows: column counts differ");
    heights.push_back(p.rows());
    rows += p.rows();
  }
  Matrix v(rows, cols);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    v.middleRows(off, p.rows()) = p.value();
    off += p.rows();
  }
  return t.record(std::move(v), parts,
                  [heights](Tape&, const Var& g, const std::vector<bool>& need) {
                    std::vector<Var> out(heights.size());
                    Eigen::Index o = 0;
                    for (std::size_t i = 0; i < heights.size(); ++i) {
                      if (need[i]) out[i] = slice_rows(g, o, heights[i]);
                      o += heights[i];
                    }
                    return out;
                  });
}

Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw Error(Errc::ShapeMismatch, "slice_rows out of range");
  }
  const Eigen::Index rows = a.rows(), cols = a.cols();
  Matrix v = a.value().middleRows(start, count);
  return tape_of(a).record(
      std::move(v), {a}, [rows, cols, start, count](Tape& t, const Var& g, const std::vector<bool>&) {
        std::vector<Var> parts;
        if (start > 0) parts.push_back(t.constant(Matrix::Zero(start, cols)));
        parts.push_back(g);
        if (start + count < rows) parts.push_back(t.constant(Matrix::Zero(rows - start - count, cols)));
        return std::vector<Var>{parts.size() == 1 ? g : concat_rows(parts)};
      });
}

Var softplus(const Var& a) {
  return tape_of(a).record(map_values(a.value(), softplus_value), {a},
                           [a](Tape&, const Var& g, const std::vector<bool>&) {
                             return std::vector<Var>{mul(g, sigmoid(a))};
                           });
}

Var sigmoid(const Var& a) {
  return tape_of(a).record(map_values(a.value(), sigmoid_value), {a},
                           [a](Tape&, const Var& g, const std::vector<bool>&) {
                             const Var s = sigmoid(a);
                             return std::vector<Var>{mul(g, mul(s, add_scalar(neg(s), 1.0)))};
                           });
}

Var relu(const Var& a) {
  // Subgradient at 0 is 0.
  return tape_of(a).record(a.value().cwiseMax(0.0), {a},
                           [a](Tape& t, const Var& g, const std::vector<bool>&) {
                             Matrix mask = map_values(a.value(), [](double v) { return v > 0.0 ? 1.0 : 0.0; });
                             return std::vector<Var>{mul(g, t.constant(std::move(mask)))};
                           });
}

Var leaky_relu(const Var& a, double slope) {
  return tape_of(a).record(
      map_values(a.value(), [slope](double v) { return v > 0.0 ? v : slope * v; }), {a},
      [a, slope](Tape& t, const Var& g, const std::vector<bool>&) {
        Matrix mask = map_values(a.value(), [slope](double v) { return v > 0.0 ? 1.0 : slope; });
        return std::vector<Var>{mul(g, t.constant(std::move(mask)))};
      });
}

Var exp(const Var& a) {
  return tape_of(a).record(a.value().array().exp().matrix(), {a},
                           [a](Tape&, const Var& g, const std::vector<bool>&) {
                             return std::vector<Var>{mul(g, exp(a))};
                           });
}

Var log(const Var& a) {
  return tape_of(a).record(a.value().array().log().matrix(), {a},
                           [a](Tape&, const Var& g, const std::vector<bool>&) {
                             return std::vector<Var>{mul(g, reciprocal(a))};
                           });
}

Var sqrt(const Var& a) {
  return tape_of(a).record(a.value().cwiseSqrt(), {a},
                           [a](Tape&, const Var& g, const std::vector<bool>&) {
                             return std::vector<Var>{mul(g, scale(reciprocal(sqrt(a)), 0.5))};
                           });
}

Var reciprocal(const Var& a) {
  return tape_of(a).record(a.value().cwiseInverse(), {a},
                           [a](Tape&, const Var& g, const std::vector<bool>&) {
                             const Var r = reciprocal(a);
                             return std::vector<Var>{neg(mul(g, mul(r, r)))};
                           });
}

Var square(const Var& a) {
  return tape_of(a).record(a.value().cwiseAbs2(), {a},
                           [a](Tape&, const Var& g, const std::vector<bool>&) {
                             return std::vector<Var>{mul(g, scale(a, 2.0))};
                           });
}

Var add_row(const Var& a, const Var& row) { return add(a, broadcast_rows(row, a.rows())); }

Var mul_row(const Var& a, const Var& row) { return mul(a, broadcast_rows(row, a.rows())); }

Var squared_norm(const Var& a) { return sum(square(a)); }

Var row_dot(const Var& a, const Var& b) { return sum_cols(mul(a, b)); }

Var stop_gradient(const Var& a) { return tape_of(a).constant(a.value()); }

Var softmax_rows(const Var& a) {
  Tape& t = tape_of(a);
  Matrix shift = a.value().rowwise().maxCoeff();
  const Var e = exp(sub(a, broadcast_cols(t.constant(std::move(shift)), a.cols())));
  const Var inv = reciprocal(sum_cols(e));
  return mul(e, broadcast_cols(inv, a.cols()));
}

// ---------------------------------------------------------------------------
// ParamVector

const ParamEntry& ParamVector::add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  if (index_.count(name)) throw Error(Errc::InvalidArgument, "duplicate parameter " + name);
  ParamEntry e{name, data_.size(), rows, cols};
  Vector grown = Vector::Zero(data_.size() + e.size());
  grown.head(data_.size()) = data_;
  data_ = std::move(grown);
  index_[name] = entries_.size();
  entries_.push_back(e);
  return entries_.back();
}

const ParamEntry& ParamVector::entry(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(Errc::InvalidArgument, "no parameter named " + name);
  return entries_[it->second];
}

Eigen::Map<Matrix> ParamVector::view(const std::string& name) {
  const auto& e = entry(name);
  return Eigen::Map<Matrix>(data_.data() + e.offset, e.rows, e.cols);
}

Eigen::Map<const Matrix> ParamVector::view(const std::string& name) const {
  const auto& e = entry(name);
  return Eigen::Map<const Matrix>(data_.data() + e.offset, e.rows, e.cols);
}

ParamVector ParamVector::zeros_like() const {
  ParamVector out = *this;
  out.data_.setZero();
  return out;
}

bool ParamVector::same_layout(const ParamVector& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.offset != b.offset || a.rows != b.rows || a.cols != b.cols) return false;
  }
  return data_.size() == other.data_.size();
}

bool ParamVector::layout_is_exact() const {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> spans;
  for (const auto& e : entries_) spans.emplace_back(e.offset, e.offset + e.size());
  std::sort(spans.begin(), spans.end());
  Eigen::Index cursor = 0;
  for (const auto& [lo, hi] : spans) {
    if (lo != cursor) return false;
    cursor = hi;
  }
  return cursor == data_.size();
}

ParamVars::ParamVars(Tape& tape, const ParamVector& params, bool requires_grad)
    : source_(&params) {
  for (const auto& e : params.entries()) {
    Matrix m = params.view(e.name);
    vars_[e.name] = requires_grad ? tape.variable(std::move(m)) : tape.constant(std::move(m));
    order_.push_back(e.name);
  }
}

const Var& ParamVars::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw Error(Errc::InvalidArgument, "no parameter Var named " + name);
  return it->second;
}

std::vector<Var> ParamVars::all() const {
  std::vector<Var> out;
  out.reserve(order_.size());
  for (const auto& n : order_) out.push_back(vars_.at(n));
  return out;
}

ParamVector ParamVars::pack(const std::vector<Var>& grads) const {
  ParamVector out = source_->zeros_like();
  for (std::size_t i = 0; i < order_.size(); ++i) out.view(order_[i]) = grads[i].value();
  return out;
}

// ---------------------------------------------------------------------------

Matrix grad_wrt_input(const InputFn& f, const Matrix& x, const Matrix& c, const ParamVector& params) {
  Tape tape;
  const Var xv = tape.variable(x);
  const Var cv = tape.constant(c);
  const ParamVars pv(tape, params, false);
  const Var out = f(tape, xv, cv, pv);
  if (out.cols() != 1 || (out.rows() != x.rows() && out.rows() != 1)) {
    throw Error(Errc::ShapeMismatch, "grad_wrt_input: function must return one value per row");
  }
  return tape.grad(sum(out), {xv}, false).front().value();
}

LossAndGrad grad_wrt_params(const LossFn& loss, const ParamVector& params) {
  Tape tape;
  const ParamVars pv(tape, params, true);
  const Var l = loss(tape, pv);
  if (l.order() > 1) throw Error(Errc::NestingTooDeep, "loss nests input gradients twice");
  LossAndGrad out;
  out.value = l.scalar();
  out.grad = pv.pack(tape.grad(l, pv.all(), false));
  return out;
}

double eval_loss(const LossFn& loss, const ParamVector& params) {
  Tape tape;
  const ParamVars pv(tape, params, false);
  return loss(tape, pv).scalar();
}

FdReport finite_diff_check(const std::function<double(const ParamVector&)>& loss,
                           const ParamVector& analytic, const ParamVector& params,
                           std::size_t n_probe, std::uint64_t seed) {
  if (!analytic.same_layout(params)) throw Error(Errc::ShapeMismatch, "gradient layout differs");
  FdReport report;
  const auto n = static_cast<std::size_t>(params.size());
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  if (n_probe < n) {
    Rng rng(seed);
    for (std::size_t i = 0; i < n_probe; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(n_probe);
  }
  report.probed = idx;
  ParamVector probe = params;
  for (const auto i : idx) {
    const double x0 = params.data()[i];
    const double h = 1e-5 * (1.0 + std::abs(x0));
    probe.data()[i] = x0 + h;
    const double up = loss(probe);
    probe.data()[i] = x0 - h;
    const double down = loss(probe);
    probe.data()[i] = x0;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic.data()[i];
    const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-3});
    if (err > report.max_rel_err || report.worst_coordinate < 0) {
      report.max_rel_err = std::max(report.max_rel_err, err);
      report.worst_coordinate = i;
    }
  }
  return report;
}

}  // namespace condot::ad
