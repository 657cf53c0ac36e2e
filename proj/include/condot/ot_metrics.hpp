#pragma once

#include <vector>

#include "condot/tensor.hpp"

namespace condot {

/// Pairwise squared Euclidean distances, rows of X against rows of Y.
Matrix sq_dist(const Matrix& X, const Matrix& Y);

struct SinkhornOptions {
  double eps = 0.1;
  int max_iters = 5000;
  /// Stop once the L1 error of the row marginals is at most this.
  double tol = 1e-6;
  /// Raise NotConverged instead of returning the last iterate with converged = false.
  bool throw_on_fail = false;
  /// Optional warm start for the dual potentials (sizes n and m).
  Vector init_f;
  Vector init_g;
  bool record_dual = false;
  /// Anneal eps down from the cost scale before the main loop when eps is
  /// below 1/1000 of the largest cost and no warm start is given.
  bool eps_scaling = true;
  /// Switch to Newton steps on the semi-dual when the marginal error stops
  /// halving over a window of iterations (sets of at most 2000 points).
  bool newton = true;
};

/// Entropic coupling between uniform weights on X and Y.
///
/// cost = <P, C> - eps H(P) with H(P) = -sum P (log P - 1). The plan is
/// P_ij = a_i b_j exp((f_i + g_j - C_ij) / eps).
struct CouplingResult {
  Matrix P;
  double cost = 0.0;
  double transport_cost = 0.0;
  double entropy = 0.0;
  int iterations = 0;
  double marginal_err = 0.0;
  bool converged = false;
  Vector f;
  Vector g;
  /// Dual objective after each iteration (only with record_dual); equals cost at the optimum.
  std::vector<double> dual;
};

CouplingResult sinkhorn(const Matrix& X, const Matrix& Y, const SinkhornOptions& options = {});
CouplingResult sinkhorn(const Matrix& X, const Matrix& Y, double eps);

/// Debiased divergence W(X,Y) - W(X,X)/2 - W(Y,Y)/2.
double sinkhorn_divergence(const Matrix& X, const Matrix& Y, const SinkhornOptions& options = {});

struct Assignment {
  double cost = 0.0;             // (1/n) sum_i C_{i, perm[i]}
  std::vector<int> perm;
};

/// Exhaustive search over permutations; n = m <= 8.
Assignment exact_ot_oracle(const Matrix& X, const Matrix& Y);
/// Hungarian algorithm (O(n^3)), any n = m.
Assignment hungarian_ot(const Matrix& X, const Matrix& Y);

/// Inverse bandwidths used by mmd().
const std::vector<double>& mmd_scales();
/// Mean over kernel scales of the unbiased squared MMD with k = exp(-gamma d^2).
double mmd(const Matrix& X, const Matrix& Y);
double mmd(const Matrix& X, const Matrix& Y, const std::vector<double>& gammas);

/// ||mean(tgt_obs) - mean(tgt_pred)||; src only fixes the reference and cancels.
double perturbation_signature_l2(const Matrix& src, const Matrix& tgt_obs, const Matrix& tgt_pred);

}  // namespace condot
