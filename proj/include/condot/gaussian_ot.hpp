#pragma once

#include "condot/tensor.hpp"

namespace condot {

/// Closed-form affine Monge map between two Gaussians, x -> A^T A x + b.
///
/// The potential is kept in the zero-floored form 1/2 ||A (x - omega)||^2,
/// i.e. 1/2 x^T A^T A x + b^T x + t with t = 1/2 b^T (A^T A)^{-1} b, whose
/// minimum value is exactly 0 (attained at omega).
struct AffineMongeMap {
  Matrix A;       // symmetric PSD factor; curvature is A^T A
  Vector b;       // offset
  Vector omega;   // m1 - (A^T A)^{-1} m2, the potential's minimiser
  double t = 0;   // constant term of the expanded potential

  Eigen::Index dim() const { return b.size(); }
  Matrix curvature() const { return A.transpose() * A; }
  /// Applies the map to every row of x.
  Matrix apply(const Matrix& x) const;

  static AffineMongeMap identity(Eigen::Index d);
};

struct GaussianPair {
  GaussianMoments src;
  GaussianMoments dst;
};

/// q_{M,m}(x) = 1/2 ||M (x - m)||^2.
struct QuadLayer {
  Matrix M;
  Vector m;
};

struct QuadEval {
  double value = 0.0;
  Vector grad;
};

AffineMongeMap gaussian_monge_map(const GaussianMoments& src, const GaussianMoments& dst);
double brenier_potential(const AffineMongeMap& map, const Vector& x);
QuadEval quad_layer_eval(const QuadLayer& q, const Vector& x);
QuadLayer quad_layer_from(const AffineMongeMap& map);

/// Squared 2-Wasserstein (Bures-Wasserstein) distance between Gaussians.
double gelbrich_distance(const GaussianMoments& a, const GaussianMoments& b);

/// Moments of the pushforward of `src` through x -> L x + b.
GaussianMoments push_moments(const GaussianMoments& src, const Matrix& linear, const Vector& offset);

}  // namespace condot
