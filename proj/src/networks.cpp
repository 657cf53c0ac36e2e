#include "condot/networks.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace condot {

using ad::Var;
using nlohmann::json;

std::string to_string(NetKind v) { return v == NetKind::Icnn ? "icnn" : "picnn"; }

std::string to_string(Activation v) {
  switch (v) {
    case Activation::Softplus: return "softplus";
    case Activation::Relu: return "relu";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Identity: return "identity";
  }
  return "?";
}

std::string to_string(ConstraintMode v) {
  switch (v) {
    case ConstraintMode::ReparamSoftplus: return "reparam-softplus";
    case ConstraintMode::Clamp: return "clamp";
    case ConstraintMode::Penalty: return "penalty";
  }
  return "?";
}

std::string to_string(InitMode v) {
  switch (v) {
    case InitMode::Vanilla: return "vanilla";
    case InitMode::Identity: return "identity";
    case InitMode::Gaussian: return "gaussian";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  if (s == "softplus") return Activation::Softplus;
  if (s == "relu") return Activation::Relu;
  if (s == "leaky_relu" || s == "leaky-relu") return Activation::LeakyRelu;
  if (s == "identity") return Activation::Identity;
  throw Error(Errc::UnsupportedPrimitive, "activation '" + s + "'");
}

ConstraintMode constraint_from_string(const std::string& s) {
  if (s == "reparam-softplus" || s == "reparam") return ConstraintMode::ReparamSoftplus;
  if (s == "clamp") return ConstraintMode::Clamp;
  if (s == "penalty") return ConstraintMode::Penalty;
  throw Error(Errc::ConfigError, "constraint mode '" + s + "'");
}

InitMode init_mode_from_string(const std::string& s) {
  if (s == "vanilla") return InitMode::Vanilla;
  if (s == "identity") return InitMode::Identity;
  if (s == "gaussian") return InitMode::Gaussian;
  throw Error(Errc::ConfigError, "init mode '" + s + "'");
}

NetKind net_kind_from_string(const std::string& s) {
  if (s == "icnn") return NetKind::Icnn;
  if (s == "picnn") return NetKind::Picnn;
  throw Error(Errc::ConfigError, "network kind '" + s + "'");
}

Eigen::Index NetSpec::width(std::size_t layer) const {
  return layer < hidden.size() ? hidden[layer] : 1;
}

Eigen::Index NetSpec::in_width(std::size_t layer) const {
  if (layer == 0) return n_quad;
  return hidden[layer - 1];
}

void NetSpec::validate() const {
  if (input_dim < 1) throw Error(Errc::ConfigError, "input_dim must be >= 1");
  for (auto w : hidden)
    if (w < 1) throw Error(Errc::ConfigError, "hidden widths must be >= 1");
  if (n_quad < 0) throw Error(Errc::ConfigError, "n_quad must be >= 0");
  if (kind == NetKind::Picnn) {
    if (context_dim < 1) throw Error(Errc::ConfigError, "PICNN needs context_dim >= 1");
    if (u_dim < 1) throw Error(Errc::ConfigError, "PICNN needs u_dim >= 1");
    if (!softmax_modulator && u_dim != context_dim) {
      throw Error(Errc::ConfigError, "without a modulator u_dim must equal context_dim");
    }
  }
}

json to_json(const NetSpec& s) {
  return json{{"kind", to_string(s.kind)},
              {"input_dim", s.input_dim},
              {"context_dim", s.context_dim},
              {"hidden", s.hidden},
              {"sigma", to_string(s.sigma)},
              {"tau", to_string(s.tau)},
              {"leaky_slope", s.leaky_slope},
              {"constraint", to_string(s.constraint)},
              {"n_quad", s.n_quad},
              {"softmax_modulator", s.softmax_modulator},
              {"u_dim", s.u_dim}};
}

NetSpec net_spec_from_json(const json& j) {
  NetSpec s;
  s.kind = net_kind_from_string(j.at("kind").get<std::string>());
  s.input_dim = j.at("input_dim").get<Eigen::Index>();
  s.context_dim = j.value("context_dim", Eigen::Index{0});
  s.hidden = j.at("hidden").get<std::vector<Eigen::Index>>();
  s.sigma = activation_from_string(j.value("sigma", std::string("softplus")));
  s.tau = activation_from_string(j.value("tau", std::string("leaky_relu")));
  s.leaky_slope = j.value("leaky_slope", 0.2);
  s.constraint = constraint_from_string(j.value("constraint", std::string("clamp")));
  s.n_quad = j.value("n_quad", Eigen::Index{0});
  s.softmax_modulator = j.value("softmax_modulator", false);
  s.u_dim = j.value("u_dim", Eigen::Index{0});
  s.validate();
  return s;
}

std::string wz_name(std::size_t layer) { return "L" + std::to_string(layer) + ".Wz"; }

namespace {

std::string pname(std::size_t layer, const char* what) {
  return "L" + std::to_string(layer) + "." + what;
}

std::string qname(Eigen::Index j, const char* what) {
  return "quad" + std::to_string(j) + "." + what;
}

Var activate(Activation a, double slope, const Var& v) {
  switch (a) {
    case Activation::Softplus: return ad::softplus(v);
    case Activation::Relu: return ad::relu(v);
    case Activation::LeakyRelu: return ad::leaky_relu(v, slope);
    case Activation::Identity: return v;
  }
  throw Error(Errc::UnsupportedPrimitive, "activation");
}

Var rows_like(const Var& v, Eigen::Index n) {
  return (v.rows() == 1 && n != 1) ? ad::broadcast_rows(v, n) : v;
}

Var effective(const NetSpec& spec, const Var& raw) {
  return spec.constraint == ConstraintMode::ReparamSoftplus ? ad::softplus(raw) : raw;
}

Var quad_stack(const NetSpec& spec, const ad::ParamVars& p, const Var& x) {
  std::vector<Var> cols;
  cols.reserve(static_cast<std::size_t>(spec.n_quad));
  for (Eigen::Index j = 0; j < spec.n_quad; ++j) {
    const Var diff = ad::sub(x, rows_like(p[qname(j, "m")], x.rows()));
    const Var r = ad::matmul(diff, ad::transpose(p[qname(j, "M")]));
    cols.push_back(ad::scale(ad::sum_cols(ad::square(r)), 0.5));
  }
  return cols.size() == 1 ? cols.front() : ad::concat_cols(cols);
}

}  // namespace

ad::ParamVector make_params(const NetSpec& spec) {
  spec.validate();
  ad::ParamVector p;
  const Eigen::Index d = spec.input_dim;
  for (Eigen::Index j = 0; j < spec.n_quad; ++j) {
    p.add(qname(j, "M"), d, d);
    p.add(qname(j, "m"), 1, d);
  }
  if (spec.kind == NetKind::Picnn && spec.softmax_modulator) {
    p.add("mod.W", spec.context_dim, spec.u_dim);
    p.add("mod.b", 1, spec.u_dim);
  }
  const std::size_t K = spec.n_layers();
  for (std::size_t k = 0; k < K; ++k) {
    const Eigen::Index in = spec.in_width(k);
    const Eigen::Index out = spec.width(k);
    // Weights are stored input-major (in x out) so a row batch multiplies on the left.
    if (spec.kind == NetKind::Icnn) {
      if (in > 0) p.add(pname(k, "Wz"), in, out);
      p.add(pname(k, "Wx"), d, out);
      p.add(pname(k, "b"), 1, out);
    } else {
      const Eigen::Index u = spec.u_dim;
      if (in > 0) {
        p.add(pname(k, "Wz"), in, out);
        p.add(pname(k, "Wzu"), u, in);
        p.add(pname(k, "bz"), 1, in);
      }
      p.add(pname(k, "Wx"), d, out);
      p.add(pname(k, "Wxu"), u, d);
      p.add(pname(k, "bx"), 1, d);
      p.add(pname(k, "Wu"), u, out);
      p.add(pname(k, "bu"), 1, out);
      if (k + 1 < K) {
        p.add(pname(k, "V"), u, u);
        p.add(pname(k, "v"), 1, u);
      }
    }
  }
  return p;
}

Var net_forward(const NetSpec& spec, const ad::ParamVars& p, const Var& x, const Var& c) {
  if (x.cols() != spec.input_dim) {
    throw Error(Errc::ShapeMismatch, "input has " + std::to_string(x.cols()) +
                                         " columns, network expects " +
                                         std::to_string(spec.input_dim));
  }
  const Eigen::Index n = x.rows();
  const std::size_t K = spec.n_layers();
  Var z;
  if (spec.n_quad > 0) z = quad_stack(spec, p, x);

  if (spec.kind == NetKind::Icnn) {
    for (std::size_t k = 0; k < K; ++k) {
      Var pre = ad::matmul(x, p[pname(k, "Wx")]);
      if (z.defined()) pre = ad::add(ad::matmul(z, effective(spec, p[pname(k, "Wz")])), pre);
      pre = ad::add_row(pre, p[pname(k, "b")]);
      z = (k + 1 < K) ? activate(spec.sigma, spec.leaky_slope, pre) : pre;
    }
    return z;
  }

  if (!c.defined() || c.cols() != spec.context_dim || (c.rows() != 1 && c.rows() != n)) {
    throw Error(Errc::ShapeMismatch, "context must be 1 x " + std::to_string(spec.context_dim) +
                                         " or one row per sample");
  }
  Var u = c;
  if (spec.softmax_modulator) {
    u = ad::softmax_rows(ad::add_row(ad::matmul(c, p["mod.W"]), p["mod.b"]));
  }
  for (std::size_t k = 0; k < K; ++k) {
    Var pre;
    if (z.defined()) {
      const Var gate = ad::relu(ad::add_row(ad::matmul(u, p[pname(k, "Wzu")]), p[pname(k, "bz")]));
      pre = ad::matmul(ad::mul(z, rows_like(gate, n)), effective(spec, p[pname(k, "Wz")]));
    }
    const Var xgate = ad::add_row(ad::matmul(u, p[pname(k, "Wxu")]), p[pname(k, "bx")]);
    const Var xterm = ad::matmul(ad::mul(x, rows_like(xgate, n)), p[pname(k, "Wx")]);
    pre = pre.defined() ? ad::add(pre, xterm) : xterm;
    const Var uterm = ad::add_row(ad::matmul(u, p[pname(k, "Wu")]), p[pname(k, "bu")]);
    pre = ad::add(pre, rows_like(uterm, n));
    z = (k + 1 < K) ? activate(spec.sigma, spec.leaky_slope, pre) : pre;
    if (k + 1 < K) {
      u = activate(spec.tau, spec.leaky_slope,
                   ad::add_row(ad::matmul(u, p[pname(k, "V")]), p[pname(k, "v")]));
    }
  }
  return z;
}

Var net_transport(const NetSpec& spec, const ad::ParamVars& p, const Var& x, const Var& c) {
  const Var out = net_forward(spec, p, x, c);
  return x.tape()->grad(ad::sum(out), {x}, true).front();
}

Var convexity_penalty(const NetSpec& spec, const ad::ParamVars& p, double lambda) {
  Var total;
  for (std::size_t k = 0; k < spec.n_layers(); ++k) {
    if (!p.contains(wz_name(k))) continue;
    const Var term = ad::squared_norm(ad::relu(ad::neg(p[wz_name(k)])));
    total = total.defined() ? ad::add(total, term) : term;
  }
  if (!total.defined()) return p.all().front().tape()->constant_scalar(0.0);
  return ad::scale(total, lambda);
}

namespace {

Matrix default_context(const ConvexNet& net, const Matrix& c) {
  if (net.kind() == NetKind::Icnn) return Matrix::Zero(1, std::max<Eigen::Index>(c.cols(), 1));
  if (c.size() == 0) throw Error(Errc::ShapeMismatch, "PICNN evaluation needs a context");
  return c;
}

}  // namespace

Vector forward_batch(const ConvexNet& net, const Matrix& x, const Matrix& c) {
  ad::Tape tape;
  const ad::ParamVars p(tape, net.params, false);
  const Var out = net_forward(net.spec, p, tape.constant(x), tape.constant(default_context(net, c)));
  return out.value().col(0);
}

Matrix transport(const ConvexNet& net, const Matrix& x, const Matrix& c) {
  const Matrix ctx = default_context(net, c);
  const NetSpec& spec = net.spec;
  return ad::grad_wrt_input(
      [&spec](ad::Tape&, const Var& xv, const Var& cv, const ad::ParamVars& p) {
        return net_forward(spec, p, xv, cv);
      },
      x, ctx, net.params);
}

double icnn_forward(const ConvexNet& net, const Vector& x) {
  if (net.kind() != NetKind::Icnn) throw Error(Errc::InvalidArgument, "icnn_forward on a PICNN");
  return forward_batch(net, x.transpose())(0);
}

double picnn_forward(const ConvexNet& net, const Vector& x, const Vector& c) {
  if (net.kind() != NetKind::Picnn) throw Error(Errc::InvalidArgument, "picnn_forward on an ICNN");
  return forward_batch(net, x.transpose(), c.transpose())(0);
}

Matrix effective_wz(const ConvexNet& net, std::size_t layer) {
  Matrix raw = net.params.view(wz_name(layer));
  if (net.spec.constraint == ConstraintMode::ReparamSoftplus) {
    return raw.unaryExpr([](double v) { return ad::softplus_value(v); });
  }
  return raw;
}

double convexity_penalty(const ConvexNet& net, double lambda) {
  double total = 0.0;
  for (std::size_t k = 0; k < net.spec.n_layers(); ++k) {
    if (!net.params.contains(wz_name(k))) continue;
    total += net.params.view(wz_name(k)).cwiseMin(0.0).squaredNorm();
  }
  return lambda * total;
}

void project_convex(ConvexNet& net) {
  if (net.spec.constraint == ConstraintMode::ReparamSoftplus) return;
  for (std::size_t k = 0; k < net.spec.n_layers(); ++k) {
    if (!net.params.contains(wz_name(k))) continue;
    auto w = net.params.view(wz_name(k));
    w = w.cwiseMax(0.0);
  }
}

// ---------------------------------------------------------------------------
// Initialisation

double resolved_bias_level(const NetSpec& spec, const InitOptions& options) {
  if (options.bias_level > 0.0) return options.bias_level;
  return spec.sigma == Activation::Softplus ? 10.0 : 1.0;
}

namespace {

/// U(-amp, amp) noise with every row centred, so that a uniform average over
/// the output units sees none of it.
Matrix centred_noise(Eigen::Index rows, Eigen::Index cols, double amp, Rng& rng) {
  Matrix e(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) e(i, j) = rng.uniform(-amp, amp);
  if (cols > 1) e.colwise() -= e.rowwise().mean();
  return e;
}

/// Fills a tensor with target + centred U(-a, a) noise, a = noise * scale.
void fill_near(ad::ParamVector& p, const std::string& name, double target, double scale,
               double noise, Rng& rng) {
  auto w = p.view(name);
  w = (centred_noise(w.rows(), w.cols(), noise * scale, rng).array() + target).matrix();
}

// Stored W^z values whose effective weight is `target`.
double stored_wz(const NetSpec& spec, double target) {
  if (spec.constraint != ConstraintMode::ReparamSoftplus) return target;
  // softplus^{-1}(t) = log(expm1(t))
  return std::log(std::expm1(std::max(target, 1e-12)));
}

void fill_uniform(ad::ParamVector& p, const std::string& name, double bound, Rng& rng,
                  bool nonneg = false) {
  auto w = p.view(name);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      const double v = rng.uniform(-bound, bound);
      w(i, j) = nonneg ? std::abs(v) : v;
    }
}

void set_quad(ad::ParamVector& p, Eigen::Index j, const QuadLayer& q) {
  p.view(qname(j, "M")) = q.M;
  p.view(qname(j, "m")) = q.m.transpose();
}

void fill_wz_near(const NetSpec& spec, ad::ParamVector& p, std::size_t k, double target,
                  double noise, Rng& rng) {
  auto w = p.view(wz_name(k));
  const Matrix e = centred_noise(w.rows(), w.cols(), noise * target, rng);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = stored_wz(spec, target + e(i, j));
}

}  // namespace

ConvexNet init_icnn(NetSpec spec, InitMode mode, const std::optional<GaussianPair>& moments,
                    std::uint64_t seed, const InitOptions& options) {
  spec.kind = NetKind::Icnn;
  spec.context_dim = 0;
  spec.softmax_modulator = false;
  spec.u_dim = 0;
  if (mode == InitMode::Gaussian && !moments) {
    throw Error(Errc::MissingMoments, "gaussian initialisation needs source/target moments");
  }
  spec.n_quad = mode == InitMode::Vanilla ? 0 : 1;
  ConvexNet net{spec, make_params(spec)};
  auto& p = net.params;
  Rng rng(seed);
  const Eigen::Index d = spec.input_dim;
  const std::size_t K = spec.n_layers();

  if (mode == InitMode::Vanilla) {
    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), W^z folded to be nonnegative.
    for (std::size_t k = 0; k < K; ++k) {
      const Eigen::Index in = spec.in_width(k);
      const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(in + d, 1)));
      if (in > 0) {
        fill_uniform(p, wz_name(k), bound, rng, true);
        if (spec.constraint == ConstraintMode::ReparamSoftplus) {
          auto w = p.view(wz_name(k));
          w = w.unaryExpr([&](double v) { return stored_wz(spec, v); });
        }
      }
      fill_uniform(p, pname(k, "Wx"), bound, rng);
      fill_uniform(p, pname(k, "b"), bound, rng);
    }
    return net;
  }

  const QuadLayer q = mode == InitMode::Identity
                          ? QuadLayer{Matrix::Identity(d, d), Vector::Zero(d)}
                          : quad_layer_from(gaussian_monge_map(moments->src, moments->dst));
  set_quad(p, 0, q);
  const double s = resolved_bias_level(spec, options);
  for (std::size_t k = 0; k < K; ++k) {
    const Eigen::Index in = spec.in_width(k);
    fill_wz_near(spec, p, k, 1.0 / static_cast<double>(in), options.noise, rng);
    // A single output unit has no symmetry to break.
    fill_near(p, pname(k, "Wx"), 0.0, 1.0 / static_cast<double>(d), k + 1 < K ? options.noise : 0.0,
              rng);
    // Hidden biases sit at s; the output bias removes the accumulated offset
    // so that the potential keeps its zero floor.
    p.view(pname(k, "b")).setConstant(k + 1 < K ? s : -s * static_cast<double>(K - 1));
  }
  // The perturbed weights leave a small constant; remove it so the minimum is 0 again.
  p.view(pname(K - 1, "b"))(0, 0) -= icnn_forward(net, q.m);
  return net;
}

ConvexNet init_picnn(NetSpec spec, const AnchorSet& anchors, InitMode mode, std::uint64_t seed,
                     const InitOptions& options) {
  spec.kind = NetKind::Picnn;
  Rng rng(seed);
  const Eigen::Index d = spec.input_dim;
  const std::size_t K = spec.n_layers();

  if (mode == InitMode::Vanilla) {
    spec.n_quad = 0;
    spec.softmax_modulator = false;
    spec.u_dim = spec.context_dim;
    ConvexNet net{spec, make_params(spec)};
    auto& p = net.params;
    const Eigen::Index u = spec.u_dim;
    for (std::size_t k = 0; k < K; ++k) {
      const Eigen::Index in = spec.in_width(k);
      const double bz = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(in, 1)));
      const double bu = 1.0 / std::sqrt(static_cast<double>(u));
      const double bx = 1.0 / std::sqrt(static_cast<double>(d));
      if (in > 0) {
        fill_uniform(p, wz_name(k), bz, rng, true);
        fill_uniform(p, pname(k, "Wzu"), bu, rng);
        fill_uniform(p, pname(k, "bz"), bu, rng);
      }
      fill_uniform(p, pname(k, "Wx"), bx, rng);
      fill_uniform(p, pname(k, "Wxu"), bu, rng);
      fill_uniform(p, pname(k, "bx"), bu, rng);
      fill_uniform(p, pname(k, "Wu"), bu, rng);
      fill_uniform(p, pname(k, "bu"), bu, rng);
      if (k + 1 < K) {
        fill_uniform(p, pname(k, "V"), bu, rng);
        fill_uniform(p, pname(k, "v"), bu, rng);
      }
    }
    return net;
  }

  if (anchors.empty()) throw Error(Errc::AnchorDimMismatch, "at least one anchor is required");
  const Eigen::Index cdim = anchors.front().context.size();
  for (const auto& a : anchors) {
    if (a.context.size() != cdim) {
      throw Error(Errc::AnchorDimMismatch, "anchor contexts have different dimensions");
    }
    if (mode == InitMode::Gaussian && a.map.dim() != d) {
      throw Error(Errc::AnchorDimMismatch, "anchor map dimension differs from input_dim");
    }
  }
  if (spec.context_dim != 0 && spec.context_dim != cdim) {
    throw Error(Errc::AnchorDimMismatch, "anchor context dimension differs from context_dim");
  }
  const auto J = static_cast<Eigen::Index>(anchors.size());
  spec.context_dim = cdim;
  spec.n_quad = J;
  spec.u_dim = J;
  spec.softmax_modulator = true;
  ConvexNet net{spec, make_params(spec)};
  auto& p = net.params;

  // Modulator: softmax(-beta ||c - c_j||^2) written as softmax(c W + b) with
  // W_j = 2 beta c_j and b_j = -beta ||c_j||^2; beta scales with the closest
  // pair of distinct anchors so each anchor dominates at its own context.
  double min_d2 = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < J; ++i)
    for (Eigen::Index j = i + 1; j < J; ++j) {
      const double d2 = (anchors[i].context - anchors[j].context).squaredNorm();
      if (d2 > 1e-12) min_d2 = std::min(min_d2, d2);
    }
  const double beta = std::isfinite(min_d2) ? options.anchor_sharpness / min_d2 : 1.0;
  auto mw = p.view("mod.W");
  auto mb = p.view("mod.b");
  for (Eigen::Index j = 0; j < J; ++j) {
    const Vector& cj = anchors[static_cast<std::size_t>(j)].context;
    mw.col(j) = 2.0 * beta * cj;
    mb(0, j) = -beta * cj.squaredNorm();
    const QuadLayer q = mode == InitMode::Identity
                            ? QuadLayer{Matrix::Identity(d, d), Vector::Zero(d)}
                            : quad_layer_from(anchors[static_cast<std::size_t>(j)].map);
    set_quad(p, j, q);
  }

  const double s = resolved_bias_level(spec, options);
  const double noise = options.noise;
  for (std::size_t k = 0; k < K; ++k) {
    const Eigen::Index in = spec.in_width(k);
    if (k == 0) {
      // u_0 gates the anchor potentials one-to-one; unit weights keep
      // sum_j u_j q_j as a convex combination of the anchor potentials.
      p.view(pname(k, "Wzu")).setIdentity();
      p.view(pname(k, "bz")).setZero();
      fill_wz_near(spec, p, k, 1.0, noise, rng);
    } else {
      fill_wz_near(spec, p, k, 1.0 / static_cast<double>(in), noise, rng);
      fill_near(p, pname(k, "Wzu"), 0.0, 1.0 / static_cast<double>(J), noise, rng);
      fill_near(p, pname(k, "bz"), 1.0, 1.0, noise, rng);
    }
    fill_near(p, pname(k, "Wx"), 0.0, 1.0 / static_cast<double>(d), k + 1 < K ? noise : 0.0, rng);
    fill_near(p, pname(k, "Wxu"), 0.0, 1.0 / static_cast<double>(J), noise, rng);
    fill_near(p, pname(k, "bx"), 1.0, 1.0, noise, rng);
    fill_near(p, pname(k, "Wu"), 0.0, 1.0 / static_cast<double>(J), noise, rng);
    p.view(pname(k, "bu")).setConstant(k + 1 < K ? s : -s * static_cast<double>(K - 1));
    if (k + 1 < K) {
      p.view(pname(k, "V")).setIdentity();
      p.view(pname(k, "v")).setZero();
    }
  }
  // Pin the floor: the potential at each anchor's minimiser is shifted to 0 on average.
  double offset = 0.0;
  for (const auto& a : anchors) {
    const Vector centre = mode == InitMode::Identity ? Vector::Zero(d) : a.map.omega;
    offset += picnn_forward(net, centre, a.context);
  }
  p.view(pname(K - 1, "bu"))(0, 0) -= offset / static_cast<double>(J);
  return net;
}

// ---------------------------------------------------------------------------
// Serialisation

namespace {

constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_index(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

}  // namespace

std::string base64_encode_f64(const Vector& v) {
  std::vector<unsigned char> bytes(static_cast<std::size_t>(v.size()) * 8);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::uint64_t bits = 0;
    const double x = v[i];
    std::memcpy(&bits, &x, 8);
    for (int b = 0; b < 8; ++b)
      bytes[static_cast<std::size_t>(i) * 8 + static_cast<std::size_t>(b)] =
          static_cast<unsigned char>((bits >> (8 * b)) & 0xff);
  }
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    const std::uint32_t n = (std::uint32_t(bytes[i]) << 16) |
                            (i + 1 < bytes.size() ? std::uint32_t(bytes[i + 1]) << 8 : 0) |
                            (i + 2 < bytes.size() ? std::uint32_t(bytes[i + 2]) : 0);
    out += kB64[(n >> 18) & 63];
    out += kB64[(n >> 12) & 63];
    out += i + 1 < bytes.size() ? kB64[(n >> 6) & 63] : '=';
    out += i + 2 < bytes.size() ? kB64[n & 63] : '=';
  }
  return out;
}

Vector base64_decode_f64(const std::string& s) {
  std::vector<unsigned char> bytes;
  bytes.reserve(s.size() / 4 * 3);
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : s) {
    if (c == '=') break;
    const int idx = b64_index(c);
    if (idx < 0) throw Error(Errc::IoError, "invalid base64 payload");
    acc = (acc << 6) | static_cast<std::uint32_t>(idx);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      bytes.push_back(static_cast<unsigned char>((acc >> bits) & 0xff));
    }
  }
  if (bytes.size() % 8 != 0) throw Error(Errc::IoError, "payload is not a float64 array");
  Vector v(static_cast<Eigen::Index>(bytes.size() / 8));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b)
      u |= std::uint64_t(bytes[static_cast<std::size_t>(i) * 8 + static_cast<std::size_t>(b)])
           << (8 * b);
    double x = 0.0;
    std::memcpy(&x, &u, 8);
    v[i] = x;
  }
  return v;
}

json params_to_json(const ad::ParamVector& params) {
  json layout = json::array();
  for (const auto& e : params.entries()) {
    layout.push_back({{"name", e.name}, {"rows", e.rows}, {"cols", e.cols}});
  }
  return json{{"layout", layout}, {"encoding", "base64-f64le"},
              {"data", base64_encode_f64(params.data())}};
}

ad::ParamVector params_from_json(const json& j) {
  if (j.value("encoding", std::string()) != "base64-f64le") {
    throw Error(Errc::IoError, "unsupported parameter encoding");
  }
  ad::ParamVector p;
  for (const auto& e : j.at("layout")) {
    p.add(e.at("name").get<std::string>(), e.at("rows").get<Eigen::Index>(),
          e.at("cols").get<Eigen::Index>());
  }
  Vector data = base64_decode_f64(j.at("data").get<std::string>());
  if (data.size() != p.size()) throw Error(Errc::IoError, "parameter payload size mismatch");
  p.data() = std::move(data);
  return p;
}

json net_to_json(const ConvexNet& net) {
  return json{{"format", "condot-net"}, {"version", 1}, {"spec", to_json(net.spec)},
              {"params", params_to_json(net.params)}};
}

ConvexNet net_from_json(const json& j) {
  if (j.value("format", std::string()) != "condot-net") {
    throw Error(Errc::IoError, "not a network checkpoint");
  }
  if (j.value("version", 0) != 1) throw Error(Errc::IoError, "unsupported checkpoint version");
  ConvexNet net;
  net.spec = net_spec_from_json(j.at("spec"));
  net.params = params_from_json(j.at("params"));
  if (!net.params.same_layout(make_params(net.spec))) {
    throw Error(Errc::IoError, "parameter layout does not match the network spec");
  }
  return net;
}

}  // namespace condot
