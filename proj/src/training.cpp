#include "condot/training.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "json_reader.hpp"

namespace condot {

using ad::Var;
using nlohmann::json;

std::string to_string(TrainMode m) { return m == TrainMode::Dual ? "dual" : "primal"; }

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "dual") return TrainMode::Dual;
  if (s == "primal") return TrainMode::Primal;
  throw Error(Errc::ConfigError, "mode: expected 'dual' or 'primal', got '" + s + "'");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(Errc::ConfigError, field + ": " + why);
  };
  if (!(lr_theta > 0.0)) fail("lr_theta", "must be > 0");
  if (!(lr_phi > 0.0)) fail("lr_phi", "must be > 0");
  if (!(lr_Phi > 0.0)) fail("lr_Phi", "must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail("adam_betas", "must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) fail("adam_eps", "must be > 0");
  if (!(lambda >= 0.0)) fail("lambda", "must be >= 0");
  if (train_freq_f < 1) fail("train_freq_f", "must be >= 1");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (steps < 0) fail("steps", "must be >= 0");
  if (!(eps > 0.0)) fail("eps", "must be > 0");
  if (sinkhorn_max_iters < 1) fail("sinkhorn_max_iters", "must be >= 1");
  if (!(sinkhorn_tol > 0.0)) fail("sinkhorn_tol", "must be > 0");
  if (checkpoint_every < 0) fail("checkpoint_every", "must be >= 0");
  if (net.hidden.empty()) fail("network.hidden", "needs at least one hidden layer");
  for (auto h : net.hidden) {
    if (h < 1) fail("network.hidden", "widths must be >= 1");
  }
}

SinkhornOptions TrainConfig::sinkhorn() const {
  SinkhornOptions o;
  o.eps = eps;
  o.max_iters = sinkhorn_max_iters;
  o.tol = sinkhorn_tol;
  return o;
}

json to_json(const TrainConfig& c) {
  return json{
      {"mode", to_string(c.mode)},
      {"lr_theta", c.lr_theta},
      {"lr_phi", c.lr_phi},
      {"lr_Phi", c.lr_Phi},
      {"adam_betas", {c.beta1, c.beta2}},
      {"adam_eps", c.adam_eps},
      {"lambda", c.lambda},
      {"train_freq_f", c.train_freq_f},
      {"batch_size", c.batch_size},
      {"steps", c.steps},
      {"seed", c.seed},
      {"eps", c.eps},
      {"sinkhorn_max_iters", c.sinkhorn_max_iters},
      {"sinkhorn_tol", c.sinkhorn_tol},
      {"checkpoint_every", c.checkpoint_every},
      {"network",
       {{"kind", to_string(c.net.kind)},
        {"hidden", c.net.hidden},
        {"sigma", to_string(c.net.sigma)},
        {"tau", to_string(c.net.tau)},
        {"init", to_string(c.net.init)},
        {"f_constraint", to_string(c.net.f_constraint)},
        {"g_constraint", to_string(c.net.g_constraint)}}},
      {"context",
       {{"embedding", to_string(c.embedding)},
        {"combinator", to_string(c.combinator)},
        {"trainable_embedding", c.trainable_embedding}}},
  };
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  ObjectReader r(j, "");
  r.get_enum("mode", c.mode, &train_mode_from_string);
  r.get("lr_theta", c.lr_theta);
  r.get("lr_phi", c.lr_phi);
  r.get("lr_Phi", c.lr_Phi);
  std::vector<double> betas{c.beta1, c.beta2};
  r.get("adam_betas", betas);
  if (betas.size() != 2) throw Error(Errc::ConfigError, "adam_betas: expected two numbers");
  c.beta1 = betas[0];
  c.beta2 = betas[1];
  r.get("adam_eps", c.adam_eps);
  r.get("lambda", c.lambda);
  r.get("train_freq_f", c.train_freq_f);
  r.get("batch_size", c.batch_size);
  r.get("steps", c.steps);
  r.get("seed", c.seed);
  r.get("eps", c.eps);
  r.get("sinkhorn_max_iters", c.sinkhorn_max_iters);
  r.get("sinkhorn_tol", c.sinkhorn_tol);
  r.get("checkpoint_every", c.checkpoint_every);
  if (const json* n = r.child("network")) {
    ObjectReader nr(*n, "network.");
    nr.get_enum("kind", c.net.kind, &net_kind_from_string);
    nr.get("hidden", c.net.hidden);
    nr.get_enum("sigma", c.net.sigma, &activation_from_string);
    nr.get_enum("tau", c.net.tau, &activation_from_string);
    nr.get_enum("init", c.net.init, &init_mode_from_string);
    nr.get_enum("f_constraint", c.net.f_constraint, &constraint_from_string);
    nr.get_enum("g_constraint", c.net.g_constraint, &constraint_from_string);
    nr.finish();
  }
  if (const json* ctx = r.child("context")) {
    ObjectReader cr(*ctx, "context.");
    cr.get_enum("embedding", c.embedding, &embedding_kind_from_string);
    cr.get_enum("combinator", c.combinator, &combinator_kind_from_string);
    cr.get("trainable_embedding", c.trainable_embedding);
    cr.finish();
  }
  r.finish();
  c.validate();
  return c;
}

void adam_step(Vector& theta, const Vector& grad, AdamState& s, double lr, double beta1,
               double beta2, double eps) {
  if (grad.size() != theta.size()) throw Error(Errc::ShapeMismatch, "adam: gradient size differs");
  if (s.m.size() != theta.size()) {
    s.m = Vector::Zero(theta.size());
    s.v = Vector::Zero(theta.size());
  }
  ++s.t;
  s.m = beta1 * s.m + (1.0 - beta1) * grad;
  s.v = beta2 * s.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(s.t));
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    theta[i] -= lr * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + eps);
  }
}

// ---------------------------------------------------------------------------
// Losses.

Var dual_f_loss(const NetSpec& f_spec, const ad::ParamVars& f, const NetSpec& g_spec,
                const ad::ParamVars& g, const Var& X, const Var& Y, const Var& c) {
  const Var T = ad::stop_gradient(net_transport(g_spec, g, X, c));
  return ad::sub(ad::mean(net_forward(f_spec, f, Y, c)), ad::mean(net_forward(f_spec, f, T, c)));
}

Var dual_g_loss(const NetSpec& f_spec, const ad::ParamVars& f, const NetSpec& g_spec,
                const ad::ParamVars& g, const Var& X, const Var& c, double lambda) {
  const Var T = net_transport(g_spec, g, X, c);
  const Var inner = ad::sub(ad::row_dot(X, T), net_forward(f_spec, f, T, c));
  Var loss = ad::neg(ad::mean(inner));
  if (g_spec.constraint == ConstraintMode::Penalty && lambda > 0.0) {
    loss = ad::add(loss, convexity_penalty(g_spec, g, lambda));
  }
  return loss;
}

namespace {

void check_batch(const Matrix& X, const Matrix& Y, Eigen::Index d) {
  if (X.rows() == 0 || Y.rows() == 0) throw Error(Errc::ShapeMismatch, "empty batch");
  if (X.cols() != d || Y.cols() != d) {
    throw Error(Errc::ShapeMismatch, "batch has " + std::to_string(X.cols()) + "/" +
                                         std::to_string(Y.cols()) + " columns, networks expect " +
                                         std::to_string(d));
  }
}

Matrix context_row(const ConvexNet& net, const Vector& c) {
  if (net.kind() == NetKind::Icnn) return Matrix::Zero(1, std::max<Eigen::Index>(c.size(), 1));
  if (c.size() != net.spec.context_dim) {
    throw Error(Errc::ShapeMismatch, "context has " + std::to_string(c.size()) +
                                         " entries, network expects " +
                                         std::to_string(net.spec.context_dim));
  }
  return c.transpose();
}

}  // namespace

DualLossValues dual_losses(const ConvexNet& f, const ConvexNet& g, const Matrix& X, const Matrix& Y,
                           const Vector& c, double lambda) {
  check_batch(X, Y, g.spec.input_dim);
  if (f.spec.input_dim != g.spec.input_dim) throw Error(Errc::ShapeMismatch, "f and g input dims differ");
  const Matrix cf = context_row(f, c);
  const Matrix cg = context_row(g, c);
  if (cf.cols() != cg.cols()) throw Error(Errc::ShapeMismatch, "f and g context dims differ");
  ad::Tape t;
  const ad::ParamVars pf(t, f.params, false);
  const ad::ParamVars pg(t, g.params, false);
  const Var cv = t.constant(cg);
  DualLossValues out;
  out.l_f = dual_f_loss(f.spec, pf, g.spec, pg, t.variable(X), t.constant(Y), cv).scalar();
  out.l_g = dual_g_loss(f.spec, pf, g.spec, pg, t.variable(X), cv, lambda).scalar();
  return out;
}

Var primal_surrogate(const NetSpec& spec, const ad::ParamVars& params, const Var& X,
                     const Matrix& Y, const Var& c, const SinkhornOptions& options, double* value) {
  const Var T = net_transport(spec, params, X, c);
  const Matrix& Tm = T.value();
  const auto r = sinkhorn(Tm, Y, options);
  if (value) *value = r.cost;
  // d/dT_i of <P, C(T)> with P fixed: 2 (rowsum_i(P) T_i - (P Y)_i).
  const Vector row_mass = r.P.rowwise().sum();
  const Matrix G = 2.0 * (row_mass.asDiagonal() * Tm - r.P * Y);
  return ad::sum(ad::mul(T, X.tape()->constant(G)));
}

double primal_loss(const ConvexNet& net, const Matrix& X, const Matrix& Y, const Vector& c,
                   const SinkhornOptions& options) {
  check_batch(X, Y, net.spec.input_dim);
  return sinkhorn(transport(net, X, context_row(net, c)), Y, options).cost;
}

// ---------------------------------------------------------------------------
// Training loop.

namespace {

NetSpec base_spec(const NetConfig& nc, Eigen::Index d, ConstraintMode constraint) {
  NetSpec s;
  s.kind = nc.kind;
  s.input_dim = d;
  s.hidden = nc.hidden;
  s.sigma = nc.sigma;
  s.tau = nc.tau;
  s.constraint = constraint;
  return s;
}

Matrix stack_rows(const std::vector<const Matrix*>& parts) {
  Eigen::Index rows = 0;
  for (const auto* p : parts) rows += p->rows();
  Matrix out(rows, parts.front()->cols());
  Eigen::Index r = 0;
  for (const auto* p : parts) {
    out.middleRows(r, p->rows()) = *p;
    r += p->rows();
  }
  return out;
}

// Networks for one direction. `forward` selects source -> target (g) or
// target -> source (f).
ConvexNet make_net(const std::vector<LabeledPair>& pairs, const TrainConfig& cfg,
                   const ContextEncoder& enc, ConstraintMode constraint, bool forward,
                   std::uint64_t seed) {
  const Eigen::Index d = pairs.front().source.cols();
  NetSpec spec = base_spec(cfg.net, d, constraint);
  const auto from = [&](const LabeledPair& p) -> const Matrix& { return forward ? p.source : p.target; };
  const auto to = [&](const LabeledPair& p) -> const Matrix& { return forward ? p.target : p.source; };

  if (cfg.net.kind == NetKind::Icnn) {
    std::optional<GaussianPair> moments;
    if (cfg.net.init == InitMode::Gaussian) {
      std::vector<const Matrix*> a, b;
      for (const auto& p : pairs) {
        a.push_back(&from(p));
        b.push_back(&to(p));
      }
      moments = GaussianPair{empirical_moments(stack_rows(a)), empirical_moments(stack_rows(b))};
    }
    return init_icnn(spec, cfg.net.init, moments, seed);
  }

  spec.context_dim = enc.output_dim();
  // One anchor per distinct training context, in order of first appearance.
  std::vector<std::string> keys;
  std::map<std::string, std::vector<const LabeledPair*>> groups;
  for (const auto& p : pairs) {
    const auto key = p.context.key();
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(&p);
  }
  AnchorSet anchors;
  for (const auto& key : keys) {
    const auto& members = groups.at(key);
    Anchor a;
    a.context = enc.encode(members.front()->context);
    if (cfg.net.init == InitMode::Gaussian) {
      std::vector<const Matrix*> src, dst;
      for (const auto* p : members) {
        src.push_back(&from(*p));
        dst.push_back(&to(*p));
      }
      a.map = gaussian_monge_map(empirical_moments(stack_rows(src)), empirical_moments(stack_rows(dst)));
    } else {
      a.map = AffineMongeMap::identity(d);
    }
    anchors.push_back(std::move(a));
  }
  return init_picnn(spec, anchors, cfg.net.init, seed);
}

void check_pairs(const std::vector<LabeledPair>& pairs) {
  if (pairs.empty()) throw Error(Errc::ConfigError, "training needs at least one pair");
  const auto d = pairs.front().source.cols();
  const auto kind = pairs.front().context.kind;
  for (const auto& p : pairs) {
    if (p.source.cols() != d || p.target.cols() != d) {
      throw Error(Errc::ShapeMismatch, "pair " + p.id + " has a different feature dimension");
    }
    if (p.source.rows() == 0 || p.target.rows() == 0) {
      throw Error(Errc::ShapeMismatch, "pair " + p.id + " is empty");
    }
    if (p.context.kind != kind) throw Error(Errc::ConfigError, "context kinds differ across pairs");
  }
}

Matrix sample_rows(const Matrix& m, Eigen::Index n, Rng& rng) {
  Matrix out(n, m.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.row(i) = m.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m.rows()))));
  }
  return out;
}

bool all_finite(const ad::ParamVector& p) { return p.data().allFinite(); }

struct StepResult {
  double value = 0.0;
  ad::ParamVector g_f, g_g, g_phi, g_Phi;
};

enum class Active { F, G, Primal };

StepResult compute_step(const TrainState& s, const LabeledPair& pair, const Matrix& X,
                        const Matrix& Y, Active active) {
  const auto& cfg = s.config;
  ad::Tape t;
  const bool train_f = active == Active::F;
  const bool train_g = !train_f;
  ad::ParamVars pf;
  if (s.f) pf = ad::ParamVars(t, s.f->params, train_f);
  const ad::ParamVars pg(t, s.g.params, train_g);
  const ad::ParamVars pphi(t, s.encoder.phi, true);
  const ad::ParamVars pPhi(t, s.encoder.Phi, true);
  const Var c = s.encoder.encode(t, pphi, pPhi, pair.context);
  const Var Xv = t.variable(X);

  StepResult r;
  Var loss;
  switch (active) {
    case Active::F:
      loss = dual_f_loss(s.f->spec, pf, s.g.spec, pg, Xv, t.constant(Y), c);
      break;
    case Active::G:
      loss = dual_g_loss(s.f->spec, pf, s.g.spec, pg, Xv, c, cfg.lambda);
      break;
    case Active::Primal:
      loss = primal_surrogate(s.g.spec, pg, Xv, Y, c, cfg.sinkhorn(), &r.value);
      if (s.g.spec.constraint == ConstraintMode::Penalty && cfg.lambda > 0.0) {
        loss = ad::add(loss, convexity_penalty(s.g.spec, pg, cfg.lambda));
      }
      break;
  }
  if (active != Active::Primal) r.value = loss.scalar();

  std::vector<Var> wrt;
  const auto net_vars = train_f ? pf.all() : pg.all();
  wrt.insert(wrt.end(), net_vars.begin(), net_vars.end());
  const auto phi_vars = pphi.all();
  const auto Phi_vars = pPhi.all();
  wrt.insert(wrt.end(), phi_vars.begin(), phi_vars.end());
  wrt.insert(wrt.end(), Phi_vars.begin(), Phi_vars.end());
  const auto grads = t.grad(loss, wrt, false);

  auto it = grads.begin();
  auto take = [&](std::size_t n) {
    std::vector<Var> part(it, it + static_cast<std::ptrdiff_t>(n));
    it += static_cast<std::ptrdiff_t>(n);
    return part;
  };
  if (train_f) {
    r.g_f = pf.pack(take(net_vars.size()));
  } else {
    r.g_g = pg.pack(take(net_vars.size()));
  }
  r.g_phi = pphi.pack(take(phi_vars.size()));
  r.g_Phi = pPhi.pack(take(Phi_vars.size()));
  return r;
}

}  // namespace

TrainState init_train_state(const std::vector<LabeledPair>& pairs, const TrainConfig& config,
                            const MoaEmbedding* moa) {
  config.validate();
  check_pairs(pairs);
  Rng seeder(config.seed);
  const std::uint64_t enc_seed = seeder.next_u64();
  const std::uint64_t g_seed = seeder.next_u64();
  const std::uint64_t f_seed = seeder.next_u64();
  const std::uint64_t loop_seed = seeder.next_u64();

  TrainState s;
  s.config = config;
  std::vector<Context> contexts;
  for (const auto& p : pairs) contexts.push_back(p.context);
  EncoderOptions eo;
  eo.embedding = config.embedding;
  eo.combinator = config.combinator;
  eo.trainable_embedding = config.trainable_embedding;
  eo.moa = moa;
  eo.seed = enc_seed;
  if (config.embedding == EmbeddingKind::Moa && !moa && contexts.front().kind != ContextKind::Scalar) {
    throw Error(Errc::ConfigError, "context.embedding: 'moa' needs a mode-of-action embedding");
  }
  s.encoder = make_encoder(contexts, eo);

  s.g = make_net(pairs, config, s.encoder, config.net.g_constraint, true, g_seed);
  if (config.mode == TrainMode::Dual) {
    s.f = make_net(pairs, config, s.encoder, config.net.f_constraint, false, f_seed);
  }
  s.rng = Rng(loop_seed);
  return s;
}

void train_steps(TrainState& s, const std::vector<LabeledPair>& pairs, std::int64_t n_steps,
                 const CheckpointSink& sink) {
  check_pairs(pairs);
  const auto& cfg = s.config;
  const Eigen::Index d = pairs.front().source.cols();
  if (d != s.g.spec.input_dim) {
    throw Error(Errc::ShapeMismatch, "dataset has " + std::to_string(d) +
                                         " features, checkpoint expects " +
                                         std::to_string(s.g.spec.input_dim));
  }
  for (std::int64_t k = 0; k < n_steps; ++k) {
    const std::int64_t step = s.step + 1;
    const Rng rng_before = s.rng;
    const auto& pair = pairs[static_cast<std::size_t>(s.rng.below(pairs.size()))];
    const Matrix X = sample_rows(pair.source, cfg.batch_size, s.rng);
    const Matrix Y = sample_rows(pair.target, cfg.batch_size, s.rng);

    Active active = Active::Primal;
    if (cfg.mode == TrainMode::Dual) active = step % cfg.train_freq_f == 0 ? Active::F : Active::G;
    const StepResult r = compute_step(s, pair, X, Y, active);

    const bool finite = std::isfinite(r.value) &&
                        (active == Active::F ? all_finite(r.g_f) : all_finite(r.g_g)) &&
                        all_finite(r.g_phi) && all_finite(r.g_Phi);
    if (!finite) {
      s.rng = rng_before;
      if (sink) sink(s);
      throw Error(Errc::NonFiniteLoss, "non-finite loss or gradient at step " + std::to_string(step) +
                                           " (pair " + pair.id + ")");
    }

    if (active == Active::F) {
      adam_step(s.f->params.data(), r.g_f.data(), s.adam_f, cfg.lr_theta, cfg.beta1, cfg.beta2, cfg.adam_eps);
      if (s.f->spec.constraint == ConstraintMode::Clamp) project_convex(*s.f);
    } else {
      adam_step(s.g.params.data(), r.g_g.data(), s.adam_g, cfg.lr_theta, cfg.beta1, cfg.beta2, cfg.adam_eps);
      if (s.g.spec.constraint == ConstraintMode::Clamp) project_convex(s.g);
    }
    if (s.encoder.phi.size() > 0) {
      adam_step(s.encoder.phi.data(), r.g_phi.data(), s.adam_phi, cfg.lr_phi, cfg.beta1, cfg.beta2, cfg.adam_eps);
    }
    if (s.encoder.Phi.size() > 0) {
      adam_step(s.encoder.Phi.data(), r.g_Phi.data(), s.adam_Phi, cfg.lr_Phi, cfg.beta1, cfg.beta2, cfg.adam_eps);
    }

    s.step = step;
    const char* name = active == Active::F ? "f" : active == Active::G ? "g" : "primal";
    s.history.push_back({step, pair.id, name, r.value});
    if (sink && cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0) sink(s);
  }
}

TrainState train(const std::vector<LabeledPair>& pairs, const TrainConfig& config,
                 const MoaEmbedding* moa, const CheckpointSink& sink) {
  TrainState s = init_train_state(pairs, config, moa);
  train_steps(s, pairs, config.steps, sink);
  return s;
}

Matrix predict(const TrainState& state, const Matrix& X, const Context& c) {
  return transport(state.g, X, context_row(state.g, state.encoder.encode(c)));
}

// ---------------------------------------------------------------------------
// Checkpoints.

namespace {

json adam_to_json(const AdamState& a) {
  return json{{"t", a.t}, {"m", base64_encode_f64(a.m)}, {"v", base64_encode_f64(a.v)}};
}

AdamState adam_from_json(const json& j) {
  AdamState a;
  a.t = j.at("t").get<std::int64_t>();
  a.m = base64_decode_f64(j.at("m").get<std::string>());
  a.v = base64_decode_f64(j.at("v").get<std::string>());
  return a;
}

}  // namespace

json checkpoint_to_json(const TrainState& s) {
  json j;
  j["format"] = "condot-checkpoint";
  j["version"] = 1;
  j["rng"] = Rng::kRngName;
  j["config"] = to_json(s.config);
  j["encoder"] = to_json(s.encoder);
  j["g"] = net_to_json(s.g);
  if (s.f) j["f"] = net_to_json(*s.f);
  j["adam"] = {{"f", adam_to_json(s.adam_f)},
               {"g", adam_to_json(s.adam_g)},
               {"phi", adam_to_json(s.adam_phi)},
               {"Phi", adam_to_json(s.adam_Phi)}};
  j["step"] = s.step;
  const auto st = s.rng.state();
  j["rng_state"] = std::vector<std::uint64_t>(st.begin(), st.end());
  j["rng_spare"] = {{"has", s.rng.has_spare()},
                    {"value", base64_encode_f64(Vector::Constant(1, s.rng.spare()))}};
  return j;
}

TrainState checkpoint_from_json(const json& j) {
  TrainState s;
  try {
    if (j.at("format").get<std::string>() != "condot-checkpoint") {
      throw Error(Errc::ConfigError, "not a checkpoint file");
    }
    if (j.at("rng").get<std::string>() != Rng::kRngName) {
      throw Error(Errc::ConfigError, "checkpoint uses a different random generator");
    }
    s.config = train_config_from_json(j.at("config"));
    s.encoder = encoder_from_json(j.at("encoder"));
    s.g = net_from_json(j.at("g"));
    if (j.contains("f")) s.f = net_from_json(j.at("f"));
    const auto& a = j.at("adam");
    s.adam_f = adam_from_json(a.at("f"));
    s.adam_g = adam_from_json(a.at("g"));
    s.adam_phi = adam_from_json(a.at("phi"));
    s.adam_Phi = adam_from_json(a.at("Phi"));
    s.step = j.at("step").get<std::int64_t>();
    const auto st = j.at("rng_state").get<std::vector<std::uint64_t>>();
    if (st.size() != 4) throw Error(Errc::ConfigError, "rng_state must have 4 words");
    s.rng.set_state({st[0], st[1], st[2], st[3]});
    const Vector spare = base64_decode_f64(j.at("rng_spare").at("value").get<std::string>());
    s.rng.set_spare(j.at("rng_spare").at("has").get<bool>(), spare.size() ? spare[0] : 0.0);
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, std::string("malformed checkpoint: ") + e.what());
  }
  return s;
}

std::string format_history_csv(const std::vector<HistoryRow>& rows) {
  std::ostringstream os;
  os << "step,pair_id,loss_name,value\n";
  for (const auto& r : rows) {
    os << r.step << ',' << r.pair_id << ',' << r.loss << ',' << format_double(r.value) << '\n';
  }
  return os.str();
}

std::vector<HistoryRow> parse_history_csv(const std::string& text) {
  std::vector<HistoryRow> rows;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    HistoryRow r;
    if (cells.size() != 4 || !parse_double(cells[3], r.value)) {
      throw Error(Errc::IoError, "history line " + std::to_string(line_no) + " is malformed");
    }
    try {
      r.step = std::stoll(cells[0]);
    } catch (const std::exception&) {
      throw Error(Errc::IoError, "history line " + std::to_string(line_no) + " has a bad step");
    }
    r.pair_id = cells[1];
    r.loss = cells[2];
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace condot
