#include "condot/ot_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "condot/parallel.hpp"

namespace condot {

namespace {

void require_same_dim(const Matrix& X, const Matrix& Y) {
  if (X.cols() != Y.cols()) {
    throw Error(Errc::ShapeMismatch, "sample sets have " + std::to_string(X.cols()) + " and " +
                                         std::to_string(Y.cols()) + " columns");
  }
}

// out_i = -eps * log sum_j exp(log_w_j + (pot_j - C_ij) / eps), rows of C.
void soft_min_rows(const Matrix& C, const Vector& pot, double log_w, double eps, Vector& out) {
  parallel_for(
      C.rows(),
      [&](Eigen::Index begin, Eigen::Index end) {
        for (Eigen::Index i = begin; i < end; ++i) {
          const Eigen::ArrayXd z = (pot.array() - C.row(i).transpose().array()) / eps;
          const double mx = z.maxCoeff();
          out[i] = -eps * (log_w + mx + std::log((z - mx).exp().sum()));
        }
      },
      16);
}

constexpr double kScalingRatio = 1000.0;
constexpr int kScalingIters = 100;
constexpr Eigen::Index kNewtonMaxSize = 2000;
constexpr int kNewtonSteps = 30;
constexpr int kStallWindow = 200;

}  // namespace

Matrix sq_dist(const Matrix& X, const Matrix& Y) {
  require_same_dim(X, Y);
  Matrix C(X.rows(), Y.rows());
  parallel_for(X.rows(), [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index i = begin; i < end; ++i)
      for (Eigen::Index j = 0; j < Y.rows(); ++j) C(i, j) = (X.row(i) - Y.row(j)).squaredNorm();
  });
  return C;
}

CouplingResult sinkhorn(const Matrix& X, const Matrix& Y, double eps) {
  SinkhornOptions o;
  o.eps = eps;
  return sinkhorn(X, Y, o);
}

CouplingResult sinkhorn(const Matrix& X, const Matrix& Y, const SinkhornOptions& options) {
  if (X.rows() < 1 || Y.rows() < 1) throw Error(Errc::EmptySet, "sinkhorn needs nonempty sets");
  if (!(options.eps > 0.0)) throw Error(Errc::InvalidArgument, "eps must be positive");
  const Eigen::Index n = X.rows();
  const Eigen::Index m = Y.rows();
  const double eps = options.eps;
  const Matrix C = sq_dist(X, Y);
  const Matrix Ct = C.transpose();
  const double log_a = -std::log(static_cast<double>(n));
  const double log_b = -std::log(static_cast<double>(m));

  CouplingResult r;
  r.f = options.init_f.size() == n ? options.init_f : Vector::Zero(n);
  r.g = options.init_g.size() == m ? options.init_g : Vector::Zero(m);

  auto plan = [&](Matrix& P) {
    P = ((C.colwise() - r.f).rowwise() - r.g.transpose()) / (-eps);
    P = (P.array() + log_a + log_b).exp().matrix();
  };

  // Cold starts at small eps first solve a sequence of problems with eps
  // halving from the cost scale; each warm-starts the next.
  const double c_scale = C.maxCoeff();
  if (options.eps_scaling && options.init_f.size() != n && c_scale > kScalingRatio * eps) {
    for (double e = c_scale; e > eps; e *= 0.5) {
      for (int k = 0; k < kScalingIters; ++k) {
        soft_min_rows(C, r.g, log_b, e, r.f);
        soft_min_rows(Ct, r.f, log_a, e, r.g);
      }
    }
  }

  // Newton ascent on the semi-dual g -> <a, f(g)> + <b, g>, where f(g) makes
  // the row marginals exact. Used once plain iterations stall.
  const bool newton = options.newton && std::max(n, m) <= kNewtonMaxSize;
  auto newton_polish = [&] {
    Vector f(n);
    auto semi_dual = [&](const Vector& g) {
      soft_min_rows(C, g, log_b, eps, f);
      return f.mean() + g.mean();
    };
    double value = semi_dual(r.g);
    for (int k = 0; k < kNewtonSteps; ++k) {
      const Matrix Pk = (((C.colwise() - f).rowwise() - r.g.transpose()) / (-eps)).array().exp() *
                        std::exp(log_a + log_b);
      const Vector col = Pk.colwise().sum().transpose();
      const Vector grad = Vector::Constant(m, std::exp(log_b)) - col;
      if (grad.lpNorm<1>() <= 1e-3 * options.tol) break;
      // Hessian of the semi-dual is -(diag(col) - P^T diag(1/a) P) / eps; its
      // null space (constant shifts) is removed with a rank-one term.
      Matrix H = -(Pk.transpose() * Pk) * static_cast<double>(n);
      H.diagonal() += col;
      H.array() += col.mean() / static_cast<double>(m);
      const Vector step = eps * H.ldlt().solve(grad);
      if (!step.allFinite()) break;
      double t = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
        const Vector g_try = r.g + t * step;
        const double v = semi_dual(g_try);
        if (v >= value) {
          r.g = g_try;
          value = v;
          moved = true;
          break;
        }
      }
      if (!moved) break;
      soft_min_rows(C, r.g, log_b, eps, f);
    }
  };

  Matrix P;
  Vector f_next(n);
  soft_min_rows(C, r.g, log_b, eps, f_next);
  double err_checkpoint = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= options.max_iters; ++it) {
    r.f = f_next;
    soft_min_rows(Ct, r.f, log_a, eps, r.g);
    r.iterations = it;
    if (newton && it % kStallWindow == 0) {
      // Less than a halving of the error over the window counts as a stall.
      if (r.marginal_err > 0.5 * err_checkpoint) {
        newton_polish();
        soft_min_rows(C, r.g, log_b, eps, r.f);
        soft_min_rows(Ct, r.f, log_a, eps, r.g);
      }
      err_checkpoint = r.marginal_err;
    }
    // Column marginals are exact after the g-update. Row i carries
    // a_i exp((f_i - f'_i) / eps), with f' the next f-update.
    soft_min_rows(C, r.g, log_b, eps, f_next);
    const Eigen::ArrayXd rows = ((r.f - f_next).array() / eps + log_a).exp();
    r.marginal_err = (rows - std::exp(log_a)).abs().sum();
    if (options.record_dual) {
      const double dual = r.f.mean() + r.g.mean() + eps * (log_a + log_b) - eps * rows.sum();
      r.dual.push_back(dual);
    }
    if (r.marginal_err <= options.tol) {
      r.converged = true;
      break;
    }
  }
  plan(P);
  r.P = P;
  r.transport_cost = (P.array() * C.array()).sum();
  const Eigen::ArrayXXd pa = P.array();
  r.entropy = -(pa * ((pa > 0).select(pa.log(), 0.0) - 1.0)).sum();
  r.cost = r.transport_cost - eps * r.entropy;
  if (!r.converged && options.throw_on_fail) {
    throw Error(Errc::NotConverged, "sinkhorn did not converge in " +
                                        std::to_string(options.max_iters) +
                                        " iterations (marginal error " +
                                        std::to_string(r.marginal_err) + ")");
  }
  return r;
}

double sinkhorn_divergence(const Matrix& X, const Matrix& Y, const SinkhornOptions& options) {
  SinkhornOptions o = options;
  o.init_f.resize(0);
  o.init_g.resize(0);
  return sinkhorn(X, Y, o).cost - 0.5 * sinkhorn(X, X, o).cost - 0.5 * sinkhorn(Y, Y, o).cost;
}

Assignment exact_ot_oracle(const Matrix& X, const Matrix& Y) {
  require_same_dim(X, Y);
  if (X.rows() != Y.rows()) throw Error(Errc::ShapeMismatch, "exact OT needs n = m");
  if (X.rows() > 8) throw Error(Errc::TooLarge, "exact OT enumeration is limited to n <= 8");
  const int n = static_cast<int>(X.rows());
  if (n == 0) throw Error(Errc::EmptySet, "exact OT needs nonempty sets");
  const Matrix C = sq_dist(X, Y);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Assignment best;
  best.cost = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += C(i, perm[static_cast<std::size_t>(i)]);
    if (s < best.cost) {
      best.cost = s;
      best.perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  best.cost /= n;
  return best;
}

Assignment hungarian_ot(const Matrix& X, const Matrix& Y) {
  require_same_dim(X, Y);
  if (X.rows() != Y.rows()) throw Error(Errc::ShapeMismatch, "assignment needs n = m");
  const int n = static_cast<int>(X.rows());
  if (n == 0) throw Error(Errc::EmptySet, "assignment needs nonempty sets");
  const Matrix C = sq_dist(X, Y);
  // Shortest augmenting path formulation with potentials u, v (1-based).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = C(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Assignment a;
  a.perm.assign(static_cast<std::size_t>(n), 0);
  for (int j = 1; j <= n; ++j) a.perm[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  for (int i = 0; i < n; ++i) a.cost += C(i, a.perm[static_cast<std::size_t>(i)]);
  a.cost /= n;
  return a;
}

const std::vector<double>& mmd_scales() {
  static const std::vector<double> scales{2.0, 1.0, 0.5, 0.1, 0.01, 0.005};
  return scales;
}

double mmd(const Matrix& X, const Matrix& Y) { return mmd(X, Y, mmd_scales()); }

double mmd(const Matrix& X, const Matrix& Y, const std::vector<double>& gammas) {
  if (X.rows() < 2 || Y.rows() < 2) {
    throw Error(Errc::TooFewSamples, "mmd needs at least 2 samples per set");
  }
  if (gammas.empty()) throw Error(Errc::InvalidArgument, "mmd needs at least one scale");
  const Matrix dxx = sq_dist(X, X);
  const Matrix dyy = sq_dist(Y, Y);
  const Matrix dxy = sq_dist(X, Y);
  const auto n = static_cast<double>(X.rows());
  const auto m = static_cast<double>(Y.rows());
  double total = 0.0;
  for (double gamma : gammas) {
    // exp(0) = 1 on the diagonal is removed exactly.
    const double kxx = ((-gamma * dxx.array()).exp().sum() - n) / (n * (n - 1));
    const double kyy = ((-gamma * dyy.array()).exp().sum() - m) / (m * (m - 1));
    const double kxy = (-gamma * dxy.array()).exp().mean();
    total += kxx + kyy - 2.0 * kxy;
  }
  return total / static_cast<double>(gammas.size());
}

double perturbation_signature_l2(const Matrix& src, const Matrix& tgt_obs, const Matrix& tgt_pred) {
  if (src.rows() == 0 || tgt_obs.rows() == 0 || tgt_pred.rows() == 0) {
    throw Error(Errc::EmptySet, "perturbation signature needs nonempty sets");
  }
  require_same_dim(src, tgt_obs);
  require_same_dim(src, tgt_pred);
  const RowVector base = src.colwise().mean();
  const RowVector ps_obs = tgt_obs.colwise().mean() - base;
  const RowVector ps_pred = tgt_pred.colwise().mean() - base;
  return (ps_obs - ps_pred).norm();
}

}  // namespace condot
