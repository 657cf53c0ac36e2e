#include "condot/gaussian_ot.hpp"

#include <cmath>

namespace condot {

Matrix AffineMongeMap::apply(const Matrix& x) const {
  if (x.cols() != dim()) throw Error(Errc::ShapeMismatch, "map dimension differs from samples");
  Matrix out = x * curvature().transpose();
  out.rowwise() += b.transpose();
  return out;
}

AffineMongeMap AffineMongeMap::identity(Eigen::Index d) {
  AffineMongeMap map;
  map.A = Matrix::Identity(d, d);
  map.b = Vector::Zero(d);
  map.omega = Vector::Zero(d);
  map.t = 0.0;
  return map;
}

AffineMongeMap gaussian_monge_map(const GaussianMoments& src, const GaussianMoments& dst) {
  const Eigen::Index d = src.dim();
  if (dst.dim() != d || src.cov.rows() != d || dst.cov.rows() != d) {
    throw Error(Errc::ShapeMismatch, "moments have different dimensions");
  }
  const Matrix s1_half = spd_sqrt(src.cov);
  const Matrix s1_inv_half = spd_inv_sqrt(src.cov);
  const Matrix middle = spd_sqrt(symmetrize(s1_half * dst.cov * s1_half));
  // A^T A is the usual Bures map matrix; A is its symmetric square root.
  const Matrix curvature = symmetrize(s1_inv_half * middle * s1_inv_half);

  AffineMongeMap map;
  map.A = spd_sqrt(curvature);
  const Matrix ata = map.A.transpose() * map.A;
  map.b = dst.mean - ata * src.mean;
  const Vector ata_inv_b = spd_solve(ata, map.b);
  map.omega = -ata_inv_b;
  map.t = 0.5 * map.b.dot(ata_inv_b);
  return map;
}

double brenier_potential(const AffineMongeMap& map, const Vector& x) {
  if (x.size() != map.dim()) throw Error(Errc::ShapeMismatch, "point dimension differs from map");
  return 0.5 * (map.A * (x - map.omega)).squaredNorm();
}

QuadEval quad_layer_eval(const QuadLayer& q, const Vector& x) {
  if (x.size() != q.m.size() || q.M.cols() != x.size()) {
    throw Error(Errc::ShapeMismatch, "quadratic layer dimension differs from point");
  }
  const Vector r = q.M * (x - q.m);
  return {0.5 * r.squaredNorm(), q.M.transpose() * r};
}

QuadLayer quad_layer_from(const AffineMongeMap& map) { return {map.A, map.omega}; }

double gelbrich_distance(const GaussianMoments& a, const GaussianMoments& b) {
  if (a.dim() != b.dim()) throw Error(Errc::ShapeMismatch, "moments have different dimensions");
  const Matrix a_half = spd_sqrt(a.cov);
  const Matrix cross = spd_sqrt(symmetrize(a_half * b.cov * a_half));
  const double bures = a.cov.trace() + b.cov.trace() - 2.0 * cross.trace();
  return (a.mean - b.mean).squaredNorm() + std::max(bures, 0.0);
}

GaussianMoments push_moments(const GaussianMoments& src, const Matrix& linear, const Vector& offset) {
  GaussianMoments out;
  out.mean = linear * src.mean + offset;
  out.cov = symmetrize(linear * src.cov * linear.transpose());
  return out;
}

}  // namespace condot
