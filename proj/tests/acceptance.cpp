// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when everything passes).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "condot/cli.hpp"
#include "condot/context.hpp"
#include "condot/datasets.hpp"
#include "condot/gaussian_ot.hpp"
#include "condot/networks.hpp"
#include "condot/ot_metrics.hpp"
#include "condot/training.hpp"
#include "test_util.hpp"

using namespace condot;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kMomentRelErr = 0.02;
constexpr double kMomentSeconds = 10.0;
constexpr double kFloorLow = -1e-10;
constexpr double kFloorHigh = 1e-3;
constexpr double kFdRelErr = 1e-4;
constexpr double kFdSeconds = 60.0;
constexpr double kInitGaussianRel = 0.10;
constexpr double kInitVanillaFactor = 100.0;
constexpr double kMidpointSlack = 1e-9;
constexpr double kScalarMapErr = 0.1;
constexpr double kScalarSeconds = 15.0 * 60.0;
constexpr std::int64_t kScalarMaxSteps = 20000;
constexpr double kPsTol = 1e-12;
constexpr double kMarginalTol = 1e-6;
constexpr double kTriangleTol = 1e-3;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

NetSpec big_spec(NetKind kind) {
  NetSpec s;
  s.kind = kind;
  s.input_dim = 2;
  s.hidden = {64, 64, 64, 64};
  if (kind == NetKind::Picnn) {
    s.context_dim = 3;
    s.u_dim = 3;
  }
  return s;
}

// ---------------------------------------------------------------------------

Outcome gaussian_map_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    Rng rng(1000 + k);
    const Eigen::Index d = 1 + k % 8;
    const GaussianMoments src = random_moments(d, rng);
    const GaussianMoments dst = random_moments(d, rng);
    const AffineMongeMap T = gaussian_monge_map(src, dst);
    const Matrix Y = T.apply(sample_gaussian(src, 100000, 2000 + k));
    const GaussianMoments got = empirical_moments(Y);
    const double cov_err = (got.cov - dst.cov).norm() / dst.cov.norm();
    const double scale = std::sqrt(dst.mean.squaredNorm() + dst.cov.norm());
    const double mean_err = (got.mean - dst.mean).norm() / scale;
    worst = std::max({worst, cov_err, mean_err});
  }
  const double secs = seconds_since(t0);
  return {worst <= kMomentRelErr && secs < kMomentSeconds,
          "max relative moment error " + fmt("%.4f", worst) + ", " + fmt("%.1f", secs) + " s"};
}

Outcome potential_floor() {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  bool at_omega = true;
  for (int k = 0; k < 20; ++k) {
    Rng rng(3000 + k);
    const AffineMongeMap T = gaussian_monge_map(random_moments(2, rng), random_moments(2, rng));
    // 81 x 81 grid through omega with spacing 0.05.
    const double h = 0.05;
    double best = std::numeric_limits<double>::infinity();
    int bi = 0, bj = 0;
    for (int i = -40; i <= 40; ++i) {
      for (int j = -40; j <= 40; ++j) {
        Vector x = T.omega;
        x[0] += h * i;
        x[1] += h * j;
        const double v = brenier_potential(T, x);
        if (v < best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    }
    lo = std::min(lo, best);
    hi = std::max(hi, best);
    at_omega = at_omega && bi == 0 && bj == 0;
  }
  return {lo >= kFloorLow && hi <= kFloorHigh && at_omega,
          "grid minima in [" + fmt("%.3g", lo) + ", " + fmt("%.3g", hi) + "]" +
              (at_omega ? ", attained at omega" : ", minimiser away from omega")};
}

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(41);
  const Matrix X = random_matrix(32, 2, rng);
  const Matrix Y = random_matrix(32, 2, rng, 1.5).array() + 0.5;
  double worst = 0.0;
  std::string where;
  std::uint64_t probe_seed = 1;
  auto check = [&](const std::string& name, const ad::LossFn& loss, const ad::ParamVector& params,
                   const std::function<double(const ad::ParamVector&)>& value) {
    const auto g = ad::grad_wrt_params(loss, params);
    const auto rep = ad::finite_diff_check(value, g.grad, params, 32, probe_seed++);
    if (rep.max_rel_err >= worst) {
      worst = rep.max_rel_err;
      where = name;
    }
  };
  SinkhornOptions so;
  so.tol = 1e-13;
  so.max_iters = 20000;
  for (NetKind kind : {NetKind::Icnn, NetKind::Picnn}) {
    NetSpec spec = big_spec(kind);
    spec.constraint = ConstraintMode::Penalty;
    const Matrix c = kind == NetKind::Icnn ? Matrix::Zero(1, 1) : random_matrix(1, 3, rng);
    // Identity-initialised nets with every parameter perturbed: generic
    // parameters that keep transported points at the data's scale.
    const auto make = [&](std::uint64_t seed) {
      const AnchorSet anchors{{c.row(0).transpose(), AffineMongeMap::identity(2)}};
      ConvexNet net = kind == NetKind::Icnn ? init_icnn(spec, InitMode::Identity, std::nullopt, seed)
                                            : init_picnn(spec, anchors, InitMode::Identity, seed);
      for (auto& v : net.params.data()) v += 0.05 * rng.normal();
      return net;
    };
    const ConvexNet f = make(5);
    ConvexNet g = make(6);
    g.params.view(wz_name(2))(0, 0) = -0.25;
    const std::string tag = to_string(kind);

    const ad::LossFn lf = [&](ad::Tape& t, const ad::ParamVars& pf) {
      const ad::ParamVars pg(t, g.params, false);
      return dual_f_loss(f.spec, pf, g.spec, pg, t.variable(X), t.constant(Y), t.constant(c));
    };
    const ad::LossFn lg = [&](ad::Tape& t, const ad::ParamVars& pg) {
      const ad::ParamVars pf(t, f.params, false);
      return dual_g_loss(f.spec, pf, g.spec, pg, t.variable(X), t.constant(c), 1.0);
    };
    const ad::LossFn lp = [&](ad::Tape& t, const ad::ParamVars& pg) {
      return primal_surrogate(g.spec, pg, t.variable(X), Y, t.constant(c), so, nullptr);
    };
    check(tag + " dual f", lf, f.params, [&](const ad::ParamVector& q) { return ad::eval_loss(lf, q); });
    check(tag + " dual g", lg, g.params, [&](const ad::ParamVector& q) { return ad::eval_loss(lg, q); });
    check(tag + " primal", lp, g.params, [&](const ad::ParamVector& q) {
      const ConvexNet h{g.spec, q};
      return primal_loss(h, X, Y, c.transpose(), so);
    });
  }
  const double secs = seconds_since(t0);
  return {worst <= kFdRelErr && secs < kFdSeconds,
          "max relative error " + fmt("%.2e", worst) + " (" + where + "), " + fmt("%.1f", secs) + " s"};
}

Outcome initialization_experiment() {
  // Non-Gaussian target: a bent image of a Gaussian, centred near the origin.
  const Matrix X = sample_gaussian({Vector::Zero(2), Matrix::Identity(2, 2)}, 1000, 51);
  Matrix Y = sample_gaussian({Vector::Zero(2), Matrix::Identity(2, 2)}, 1000, 52);
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    const double a = Y(i, 0), b = Y(i, 1);
    Y(i, 0) = 1.5 * a;
    Y(i, 1) = 0.5 * b + 0.5 * (a * a - 1.0);
  }
  const GaussianPair moments{empirical_moments(X), empirical_moments(Y)};
  NetSpec spec = big_spec(NetKind::Icnn);
  const auto loss = [&](const ConvexNet& net) { return sinkhorn(transport(net, X), Y, 0.1).cost; };
  const double vanilla = loss(init_icnn(spec, InitMode::Vanilla, std::nullopt, 7));
  const double identity = loss(init_icnn(spec, InitMode::Identity, std::nullopt, 7));
  const double gaussian = loss(init_icnn(spec, InitMode::Gaussian, moments, 7));
  const double reference = sinkhorn(gaussian_monge_map(moments.src, moments.dst).apply(X), Y, 0.1).cost;

  const bool order = vanilla >= kInitVanillaFactor * std::abs(identity) && identity >= gaussian;
  const bool close = std::abs(gaussian - reference) <= kInitGaussianRel * std::abs(reference);
  const bool gap = vanilla >= kInitVanillaFactor * std::abs(gaussian);
  return {order && close && gap, "vanilla " + fmt("%.4g", vanilla) + ", identity " + fmt("%.4g", identity) +
                                     ", gaussian " + fmt("%.4g", gaussian) + ", closed-form map " +
                                     fmt("%.4g", reference)};
}

Outcome convexity_preservation() {
  ScalarTaskOptions o;
  o.n_per_pair = 1000;
  o.seed = 61;
  const Dataset ds = simulate_scalar_task(o);
  TrainConfig cfg;
  cfg.steps = 1000;
  cfg.seed = 62;
  cfg.lr_theta = 1e-3;
  cfg.net.f_constraint = ConstraintMode::Clamp;
  const TrainState s = train(ds.pairs, cfg);
  const ConvexNet& f = *s.f;
  double min_w = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < f.spec.n_layers(); ++k) {
    if (!f.params.contains(wz_name(k))) continue;
    min_w = std::min(min_w, f.params.view(wz_name(k)).minCoeff());
  }
  Rng rng(63);
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 1000; ++k) {
    const Vector x = random_vector(2, rng, 2.0);
    const Vector y = random_vector(2, rng, 2.0);
    const Vector c = s.encoder.encode(Context::scalar(rng.uniform(0.0, 1.0)));
    const double mid = picnn_forward(f, 0.5 * (x + y), c);
    const double avg = 0.5 * (picnn_forward(f, x, c) + picnn_forward(f, y, c));
    worst = std::max(worst, mid - avg);
  }
  return {min_w >= 0.0 && worst <= kMidpointSlack,
          "min W^z of f " + fmt("%.3g", min_w) + ", worst midpoint violation " + fmt("%.3g", worst)};
}

Outcome scalar_context_learning() {
  const auto t0 = std::chrono::steady_clock::now();
  ScalarTaskOptions o;
  o.n_per_pair = 2000;
  o.t_values = {0.0, 0.25, 0.5, 1.0};
  o.seed = 71;
  const Dataset ds = simulate_scalar_task(o);
  TrainConfig cfg;
  cfg.seed = 72;
  cfg.steps = 2000;
  TrainState s = init_train_state(ds.pairs, cfg);
  const Context held_out = Context::scalar(0.75);
  const Matrix X = sample_gaussian(empirical_moments(ds.pairs[0].source), 5000, 73);
  const Matrix truth = ds.oracle->for_context(held_out).apply(X);
  const auto error = [&] {
    return (predict(s, X, held_out) - truth).rowwise().squaredNorm().mean() / X.rowwise().squaredNorm().mean();
  };
  const double before = error();
  train_steps(s, ds.pairs, cfg.steps);
  const double after = error();
  const double secs = seconds_since(t0);
  return {after <= kScalarMapErr && s.step <= kScalarMaxSteps && secs < kScalarSeconds,
          "t = 0.75 relative map error " + fmt("%.4f", after) + " after " + std::to_string(s.step) +
              " steps (" + fmt("%.4f", before) + " at initialisation), " + fmt("%.0f", secs) + " s"};
}

Outcome combination_generalization() {
  double condot_sum = 0.0, icnn_sum = 0.0;
  std::string per_seed;
  for (std::uint64_t seed : {81u, 82u, 83u}) {
    ActionTaskOptions o;
    o.n_actions = 6;
    o.n_combos = 6;
    o.n_per_pair = 600;
    o.seed = seed;
    const Dataset ds = simulate_action_task(o);
    const SplitPlan split = make_splits(ds, 1, seed);
    if (split.test.size() != 2) return {false, "split holds out " + std::to_string(split.test.size()) + " combos"};
    std::vector<LabeledPair> train_pairs;
    for (const auto& id : split.train) train_pairs.push_back(ds.pair(id));

    const auto held_out_loss = [&](const TrainConfig& cfg) {
      const TrainState s = train(train_pairs, cfg);
      double total = 0.0;
      for (const auto& id : split.test) {
        const LabeledPair& p = ds.pair(id);
        total += sinkhorn(predict(s, p.source, p.context), p.target, 0.1).cost;
      }
      return total / static_cast<double>(split.test.size());
    };
    TrainConfig cfg;
    cfg.seed = seed * 10;
    cfg.steps = 1000;
    cfg.lr_theta = 1e-3;
    cfg.combinator = CombinatorKind::DeepSet;
    const double condot = held_out_loss(cfg);
    cfg.net.kind = NetKind::Icnn;
    const double icnn = held_out_loss(cfg);
    condot_sum += condot;
    icnn_sum += icnn;
    per_seed += " " + fmt("%.4f", condot) + "/" + fmt("%.4f", icnn);
  }
  const double condot = condot_sum / 3.0, icnn = icnn_sum / 3.0;
  return {condot < icnn, "held-out Sinkhorn, deep-set CondOT " + fmt("%.4f", condot) + " vs ICNN " +
                             fmt("%.4f", icnn) + " (per seed:" + per_seed + ")"};
}

Outcome sinkhorn_oracle_agreement() {
  const double eps = 1e-3;
  const double bound = eps * std::log(36.0) + 1e-3;
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    Rng rng(8000 + k);
    const Matrix X = random_matrix(6, 2, rng);
    const Matrix Y = random_matrix(6, 2, rng);
    worst = std::max(worst, std::abs(sinkhorn(X, Y, eps).cost - exact_ot_oracle(X, Y).cost));
  }
  return {worst <= bound, "max |sinkhorn - exact| " + fmt("%.3e", worst) + " (bound " + fmt("%.3e", bound) + ")"};
}

Outcome metric_sanity() {
  Rng rng(91);
  const RowVector atom = random_matrix(1, 3, rng);
  const Matrix A = atom.replicate(40, 1);
  const Matrix B = A;
  const double m = mmd(A, B);

  const Matrix src = random_matrix(100, 3, rng);
  const Matrix obs = random_matrix(120, 3, rng, 2.0);
  const Matrix pred = random_matrix(80, 3, rng, 0.5).array() + 1.0;
  const double ps = perturbation_signature_l2(src, obs, pred);
  const double direct = (obs.colwise().mean() - pred.colwise().mean()).norm();

  const Matrix X = random_matrix(60, 2, rng);
  const Matrix Y = random_matrix(50, 2, rng, 1.5);
  const CouplingResult r = sinkhorn(X, Y, 0.1);
  const Vector rows = r.P.rowwise().sum();
  const Vector cols = r.P.colwise().sum().transpose();
  const double marg = (rows.array() - 1.0 / 60).abs().sum() + (cols.array() - 1.0 / 50).abs().sum();

  return {m == 0.0 && std::abs(ps - direct) <= kPsTol && r.converged && marg <= kMarginalTol,
          "mmd on duplicated atoms " + fmt("%.3g", m) + ", |ps - direct| " + fmt("%.3g", std::abs(ps - direct)) +
              ", marginal L1 error " + fmt("%.3g", marg)};
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "condot_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto write = [&](const std::string& name, const nlohmann::json& j) {
    std::ofstream(dir / name) << j.dump(2);
  };
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  };
  const auto cli = [&](const std::string& cmd, const std::string& cfg, const std::string& out) {
    const std::string c = (dir / cfg).string(), o = (dir / out).string();
    const char* argv[] = {"condot", cmd.c_str(), "--config", c.c_str(), "--out", o.c_str()};
    std::ostringstream sink;
    return cli::run(6, argv, sink, sink);
  };
  write("sim.json", {{"task", "covariate"}, {"n_per_pair", 400}, {"seed", 101}});
  write("train.json",
        {{"dataset", "data/manifest.json"},
         {"train", {{"steps", 300}, {"batch_size", 128}, {"seed", 102}, {"network", {{"hidden", {32, 32}}}}}}});
  if (cli("simulate", "sim.json", "data") != 0) return {false, "simulate failed"};
  if (cli("train", "train.json", "run_a") != 0 || cli("train", "train.json", "run_b") != 0) {
    return {false, "train failed"};
  }
  const bool ck = slurp(dir / "run_a" / "checkpoint.json") == slurp(dir / "run_b" / "checkpoint.json");
  const bool hist = slurp(dir / "run_a" / "history.csv") == slurp(dir / "run_b" / "history.csv");
  const bool nonempty = !slurp(dir / "run_a" / "history.csv").empty();
  return {ck && hist && nonempty, std::string("checkpoints ") + (ck ? "identical" : "differ") + ", histories " +
                                      (hist ? "identical" : "differ")};
}

Outcome permutation_invariance() {
  int sets = 0, mismatches = 0;
  for (int k = 0; k < 10; ++k) {
    Rng rng(1100 + k);
    const Eigen::Index e = 5;
    std::vector<Vector> parts;
    for (int i = 0; i < 4; ++i) parts.push_back(random_vector(e, rng));
    const ad::ParamVector Phi = init_deepset({e, 16}, 1200 + k);
    std::vector<int> perm{0, 1, 2, 3};
    const Vector ds_ref = combine_deepset(Phi, parts);
    const Vector mh_ref = combine_multihot(parts);
    do {
      std::vector<Vector> p;
      for (int i : perm) p.push_back(parts[static_cast<std::size_t>(i)]);
      if (combine_deepset(Phi, p) != ds_ref) ++mismatches;
      if (combine_multihot(p) != mh_ref) ++mismatches;
    } while (std::next_permutation(perm.begin(), perm.end()));
    ++sets;
  }
  return {mismatches == 0, std::to_string(sets) + " sets x 24 permutations, " + std::to_string(mismatches) +
                               " non-identical outputs"};
}

Outcome smacof_checks() {
  int increases = 0;
  for (int k = 0; k < 20; ++k) {
    Rng rng(1300 + k);
    const Matrix P = random_matrix(12, 4, rng);
    Matrix D = sq_dist(P, P).cwiseMax(0.0).cwiseSqrt();
    D.diagonal().setZero();
    const SmacofResult r = smacof_from(D, random_matrix(12, 2, rng));
    for (std::size_t i = 1; i < r.history.size(); ++i) {
      if (r.history[i] > r.history[i - 1]) ++increases;
    }
  }
  Matrix T = Matrix::Ones(3, 3);
  T.diagonal().setZero();
  const SmacofResult tri = smacof(T, 2, 1301);
  double side_err = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) side_err = std::max(side_err, std::abs((tri.X.row(i) - tri.X.row(j)).norm() - 1.0));
  return {increases == 0 && side_err <= kTriangleTol, std::to_string(increases) +
                                                          " stress increases over 20 runs, triangle side error " +
                                                          fmt("%.2e", side_err)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gaussian map oracle", gaussian_map_oracle},
      {"potential floor", potential_floor},
      {"gradient correctness", gradient_correctness},
      {"initialization experiment", initialization_experiment},
      {"convexity preservation", convexity_preservation},
      {"scalar-context learning", scalar_context_learning},
      {"combination generalization", combination_generalization},
      {"sinkhorn/oracle agreement", sinkhorn_oracle_agreement},
      {"metric sanity", metric_sanity},
      {"determinism", determinism},
      {"permutation invariance", permutation_invariance},
      {"smacof", smacof_checks},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
