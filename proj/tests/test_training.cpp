#include <algorithm>
#include <cmath>

#include "condot/training.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace condot;

namespace {

// psi(x) = 1/2 ||x||^2 exactly: one quadratic unit passed through identity layers.
ConvexNet half_norm_net(Eigen::Index d) {
  NetSpec s;
  s.kind = NetKind::Icnn;
  s.input_dim = d;
  s.hidden = {1};
  s.sigma = Activation::Identity;
  s.n_quad = 1;
  ConvexNet net{s, make_params(s)};
  net.params.view("quad0.M") = Matrix::Identity(d, d);
  net.params.view(wz_name(0)).setOnes();
  net.params.view(wz_name(1)).setOnes();
  return net;
}

std::vector<LabeledPair> gaussian_pair(Eigen::Index n, std::uint64_t seed, const GaussianMoments& src,
                                       const GaussianMoments& dst) {
  LabeledPair p;
  p.id = "p000";
  p.context = Context::scalar(0.0);
  p.source = sample_gaussian(src, n, seed);
  p.target = sample_gaussian(dst, n, seed + 1);
  return {p};
}

TrainConfig small_config() {
  TrainConfig c;
  c.net.hidden = {16, 16};
  c.batch_size = 64;
  c.steps = 40;
  c.seed = 5;
  c.train_freq_f = 4;
  return c;
}

std::vector<LabeledPair> small_action_pairs() {
  ActionTaskOptions o;
  o.n_actions = 3;
  o.n_combos = 2;
  o.n_per_pair = 100;
  return simulate_action_task(o).pairs;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("adam matches the reference recurrence") {
  Vector theta = Vector::Constant(1, 1.0);
  AdamState s;
  const double lr = 0.1, b1 = 0.5, b2 = 0.9, eps = 1e-8;
  adam_step(theta, Vector::Constant(1, 0.5), s, lr, b1, b2, eps);
  // m = 0.25, v = 0.025, m_hat = 0.5, v_hat = 0.25.
  const double after1 = 1.0 - 0.1 * 0.5 / (0.5 + 1e-8);
  CHECK(std::abs(theta[0] - after1) <= 1e-12);
  adam_step(theta, Vector::Constant(1, -0.2), s, lr, b1, b2, eps);
  // m = 0.025, v = 0.0265, m_hat = 0.025 / 0.75, v_hat = 0.0265 / 0.19.
  const double after2 = after1 - 0.1 * (0.025 / 0.75) / (std::sqrt(0.0265 / 0.19) + 1e-8);
  CHECK(std::abs(theta[0] - after2) <= 1e-12);
  CHECK(s.t == 2);
}

TEST_CASE("dual losses with half-norm potentials") {
  Rng rng(3);
  const auto net = half_norm_net(3);
  const Matrix X = random_matrix(50, 3, rng);
  const Matrix Y = random_matrix(40, 3, rng, 2.0);
  const auto v = dual_losses(net, net, X, Y, Vector());
  CHECK(v.l_g == doctest::Approx(-0.5 * X.rowwise().squaredNorm().mean()).epsilon(1e-12));
  CHECK(std::abs(dual_losses(net, net, X, X, Vector()).l_f) <= 1e-14);
  CHECK(v.l_f == doctest::Approx(0.5 * Y.rowwise().squaredNorm().mean() -
                                 0.5 * X.rowwise().squaredNorm().mean())
                     .epsilon(1e-12));
  CHECK_THROWS_AS(dual_losses(net, net, Matrix::Zero(0, 3), Y, Vector()), Error);
  CHECK_THROWS_AS(dual_losses(net, net, X, Matrix::Zero(4, 2), Vector()), Error);
}

TEST_CASE("dual and primal loss gradients match finite differences") {
  Rng rng(11);
  NetSpec spec;
  spec.kind = NetKind::Picnn;
  spec.input_dim = 2;
  spec.context_dim = 3;
  spec.u_dim = 3;
  spec.hidden = {8, 8};
  spec.constraint = ConstraintMode::Penalty;
  ConvexNet f = init_picnn(spec, {}, InitMode::Vanilla, 1);
  ConvexNet g = init_picnn(spec, {}, InitMode::Vanilla, 2);
  // Some negative W^z so the penalty is active.
  g.params.view(wz_name(1))(0, 0) = -0.3;
  const Matrix X = random_matrix(24, 2, rng);
  const Matrix Y = random_matrix(20, 2, rng, 1.5);
  const Matrix c = random_matrix(1, 3, rng);

  const ad::LossFn lf = [&](ad::Tape& t, const ad::ParamVars& pf) {
    const ad::ParamVars pg(t, g.params, false);
    return dual_f_loss(f.spec, pf, g.spec, pg, t.variable(X), t.constant(Y), t.constant(c));
  };
  const ad::LossFn lg = [&](ad::Tape& t, const ad::ParamVars& pg) {
    const ad::ParamVars pf(t, f.params, false);
    return dual_g_loss(f.spec, pf, g.spec, pg, t.variable(X), t.constant(c), 1.0);
  };
  const auto gf = ad::grad_wrt_params(lf, f.params);
  CHECK(ad::finite_diff_check([&](const ad::ParamVector& q) { return ad::eval_loss(lf, q); }, gf.grad,
                              f.params, 32, 1)
            .max_rel_err <= 1e-4);
  const auto gg = ad::grad_wrt_params(lg, g.params);
  CHECK(ad::finite_diff_check([&](const ad::ParamVector& q) { return ad::eval_loss(lg, q); }, gg.grad,
                              g.params, 32, 2)
            .max_rel_err <= 1e-4);

  SinkhornOptions so;
  so.tol = 1e-12;
  const ad::LossFn lp = [&](ad::Tape& t, const ad::ParamVars& pg) {
    return primal_surrogate(g.spec, pg, t.variable(X), Y, t.constant(c), so, nullptr);
  };
  const auto gp = ad::grad_wrt_params(lp, g.params);
  const auto primal_value = [&](const ad::ParamVector& q) {
    ConvexNet h{g.spec, q};
    return primal_loss(h, X, Y, c.transpose(), so);
  };
  CHECK(ad::finite_diff_check(primal_value, gp.grad, g.params, 32, 3).max_rel_err <= 1e-3);
}

TEST_CASE("primal loss examples") {
  Rng rng(2);
  const Matrix X = random_matrix(30, 2, rng);
  SinkhornOptions so;
  CHECK(primal_loss(half_norm_net(2), X, X, Vector(), so) == sinkhorn(X, X, so).cost);

  const GaussianPair pair{{Vector::Zero(1), Matrix::Identity(1, 1)},
                          {Vector::Constant(1, 3.0), Matrix::Constant(1, 1, 4.0)}};
  NetSpec spec;
  spec.input_dim = 1;
  const auto net = init_icnn(spec, InitMode::Gaussian, pair, 0);
  const Matrix x = sample_gaussian(pair.src, 300, 1);
  const Matrix y = sample_gaussian(pair.dst, 300, 2);
  const double reference = sinkhorn((2.0 * x).array() + 3.0, y, so).cost;
  CHECK(std::abs(primal_loss(net, x, y, Vector(), so) - reference) <= 0.1 * std::abs(reference));
}

TEST_CASE("train config JSON") {
  TrainConfig c = small_config();
  c.mode = TrainMode::Primal;
  c.net.kind = NetKind::Icnn;
  c.combinator = CombinatorKind::DeepSet;
  const auto back = train_config_from_json(nlohmann::json::parse(to_json(c).dump()));
  CHECK(to_json(back) == to_json(c));

  auto bad = to_json(c);
  bad["learning_rate"] = 1.0;
  CHECK_THROWS_AS(train_config_from_json(bad), Error);
  bad = to_json(c);
  bad["network"]["hidden"] = "wide";
  CHECK_THROWS_AS(train_config_from_json(bad), Error);
  bad = to_json(c);
  bad["lr_theta"] = 0.0;
  try {
    train_config_from_json(bad);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ConfigError);
    CHECK(std::string(e.what()).find("lr_theta") != std::string::npos);
  }
  bad = to_json(c);
  bad["train_freq_f"] = 0;
  CHECK_THROWS_AS(train_config_from_json(bad), Error);
  CHECK(train_config_from_json(nlohmann::json::object()).lr_theta == 1e-4);
}

TEST_CASE("dual training schedule and clamp invariant") {
  const auto pairs = small_action_pairs();
  TrainConfig c = small_config();
  c.checkpoint_every = 1;
  double worst = 0.0;
  std::int64_t calls = 0;
  const auto s = train(pairs, c, nullptr, [&](const TrainState& st) {
    ++calls;
    for (std::size_t k = 0; k < st.f->spec.n_layers(); ++k) {
      if (st.f->params.contains(wz_name(k))) worst = std::min(worst, st.f->params.view(wz_name(k)).minCoeff());
    }
  });
  CHECK(calls == c.steps);
  CHECK(worst >= 0.0);
  REQUIRE(s.history.size() == static_cast<std::size_t>(c.steps));
  for (const auto& row : s.history) {
    CHECK(row.loss == (row.step % c.train_freq_f == 0 ? "f" : "g"));
    CHECK(std::isfinite(row.value));
  }
  CHECK(s.history.front().step == 1);
  CHECK(s.adam_f.t == c.steps / c.train_freq_f);
  CHECK(s.adam_g.t == c.steps - c.steps / c.train_freq_f);
}

TEST_CASE("primal training records one loss per step") {
  TrainConfig c = small_config();
  c.mode = TrainMode::Primal;
  c.steps = 5;
  const auto s = train(small_action_pairs(), c);
  CHECK_FALSE(s.f.has_value());
  REQUIRE(s.history.size() == 5);
  for (const auto& row : s.history) CHECK(row.loss == "primal");
}

TEST_CASE("training is deterministic and resumable") {
  const auto pairs = small_action_pairs();
  TrainConfig c = small_config();
  c.combinator = CombinatorKind::DeepSet;
  c.trainable_embedding = true;
  const auto a = train(pairs, c);
  const auto b = train(pairs, c);
  CHECK(a.history == b.history);
  CHECK(checkpoint_to_json(a).dump() == checkpoint_to_json(b).dump());

  auto half = init_train_state(pairs, c);
  train_steps(half, pairs, c.steps / 2);
  auto resumed = checkpoint_from_json(nlohmann::json::parse(checkpoint_to_json(half).dump()));
  train_steps(resumed, pairs, c.steps - c.steps / 2);
  CHECK(resumed.history.front().step == c.steps / 2 + 1);
  CHECK(checkpoint_to_json(resumed).dump() == checkpoint_to_json(a).dump());
  std::vector<HistoryRow> joined = half.history;
  joined.insert(joined.end(), resumed.history.begin(), resumed.history.end());
  CHECK(joined == a.history);

  CHECK(parse_history_csv(format_history_csv(a.history)) == a.history);

  c.seed = 6;
  CHECK_FALSE(train(pairs, c).history == a.history);
}

TEST_CASE("embedding and combinator parameters receive updates") {
  const auto pairs = small_action_pairs();
  TrainConfig c = small_config();
  c.combinator = CombinatorKind::DeepSet;
  c.trainable_embedding = true;
  c.steps = 0;
  const auto init = init_train_state(pairs, c);
  auto s = init;
  train_steps(s, pairs, 3);
  CHECK((s.encoder.phi.data() - init.encoder.phi.data()).cwiseAbs().maxCoeff() > 0.0);
  CHECK((s.encoder.Phi.data() - init.encoder.Phi.data()).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("non-finite loss aborts with the last good state") {
  auto pairs = small_action_pairs();
  TrainConfig c = small_config();
  auto s = init_train_state(pairs, c);
  train_steps(s, pairs, 3);
  for (auto& p : pairs) p.source.setConstant(std::nan(""));
  std::int64_t saved_step = -1;
  try {
    train_steps(s, pairs, 5, [&](const TrainState& st) { saved_step = st.step; });
    FAIL("expected NonFiniteLoss");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonFiniteLoss);
  }
  CHECK(s.step == 3);
  CHECK(saved_step == 3);
}

TEST_CASE("identity init stays at the fixed point when source equals target") {
  const GaussianMoments m{Vector::Zero(2), Matrix::Identity(2, 2)};
  auto pairs = gaussian_pair(2000, 4, m, m);
  pairs[0].target = pairs[0].source;
  TrainConfig c = small_config();
  c.net.init = InitMode::Identity;
  c.net.kind = NetKind::Icnn;
  c.batch_size = 256;
  c.steps = 500;
  const auto s = train(pairs, c);
  const Matrix x = sample_gaussian(m, 1000, 9);
  const Matrix moved = predict(s, x, pairs[0].context) - x;
  CHECK(moved.rowwise().norm().maxCoeff() <= 0.05);
}

TEST_CASE("gaussian pair: evaluation loss trends down and the map is near optimal") {
  const GaussianMoments src{Vector::Zero(2), Matrix::Identity(2, 2)};
  GaussianMoments dst{(Vector(2) << 2.0, -1.0).finished(), Matrix::Zero(2, 2)};
  dst.cov << 2.0, 0.6, 0.6, 0.8;
  const auto pairs = gaussian_pair(20000, 3, src, dst);
  TrainConfig c;
  c.net.hidden = {32, 32};
  c.net.kind = NetKind::Icnn;
  c.seed = 2;
  c.steps = 0;
  auto s = init_train_state(pairs, c);
  const Matrix x_eval = sample_gaussian(src, 200, 50);
  const Matrix y_eval = sample_gaussian(dst, 200, 51);
  std::vector<double> curve;
  SinkhornOptions so;
  for (int k = 0; k < 100; ++k) {
    train_steps(s, pairs, 20);
    // Warm start from the previous evaluation; the fixed point is unchanged.
    const auto r = sinkhorn(predict(s, x_eval, pairs[0].context), y_eval, so);
    so.init_f = r.f;
    so.init_g = r.g;
    curve.push_back(r.cost);
  }
  const std::vector<double> first(curve.begin(), curve.begin() + 50);
  const std::vector<double> last(curve.end() - 50, curve.end());
  MESSAGE("median eval loss: first 50 " << median(first) << ", last 50 " << median(last));
  CHECK(median(last) < median(first));

  // Squared W2 of the Gaussian fitted to the pushforward versus the target,
  // and the transport cost versus the closed-form optimum.
  const Matrix x = sample_gaussian(src, 20000, 60);
  const Matrix pushed = predict(s, x, pairs[0].context);
  const double optimal = gelbrich_distance(src, dst);
  const double achieved = (pushed - x).rowwise().squaredNorm().mean();
  CHECK(std::abs(achieved - optimal) <= 0.15 * optimal);
  CHECK(gelbrich_distance(empirical_moments(pushed), dst) <= 0.15 * optimal);
}
