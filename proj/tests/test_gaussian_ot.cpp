#include <cmath>

#include "condot/autodiff.hpp"
#include "condot/gaussian_ot.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace condot;

namespace {

GaussianMoments scalar_gaussian(double mean, double var) {
  return {Vector::Constant(1, mean), Matrix::Constant(1, 1, var)};
}

}  // namespace

TEST_CASE("gaussian_monge_map: identity and 1-D cases") {
  const GaussianMoments std2{Vector::Zero(2), Matrix::Identity(2, 2)};
  const auto id = gaussian_monge_map(std2, std2);
  CHECK(max_abs_diff(id.A, Matrix::Identity(2, 2)) < 1e-12);
  CHECK(id.b.cwiseAbs().maxCoeff() < 1e-12);

  const auto m = gaussian_monge_map(scalar_gaussian(0, 1), scalar_gaussian(3, 4));
  CHECK(m.curvature()(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.b[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(m.omega[0] == doctest::Approx(-1.5).epsilon(1e-12));
  CHECK(m.t == doctest::Approx(2.25).epsilon(1e-12));
}

TEST_CASE("gaussian_monge_map: commuting covariances reduce elementwise") {
  GaussianMoments a{Vector::Zero(2), Matrix::Zero(2, 2)};
  GaussianMoments b{Vector::Zero(2), Matrix::Zero(2, 2)};
  a.cov.diagonal() << 1, 4;
  b.cov.diagonal() << 9, 1;
  const Matrix c = gaussian_monge_map(a, b).curvature();
  Matrix expected = Matrix::Zero(2, 2);
  expected.diagonal() << 3, 0.5;
  CHECK(max_abs_diff(c, expected) < 1e-12);
}

TEST_CASE("gaussian_monge_map pushes src onto dst") {
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(4));
    const auto src = random_moments(d, rng);
    const auto dst = random_moments(d, rng);
    const auto map = gaussian_monge_map(src, dst);
    // Analytic pushforward.
    const auto pushed = push_moments(src, map.curvature(), map.b);
    CHECK(max_abs_diff(pushed.mean, dst.mean) < 1e-9);
    CHECK((pushed.cov - dst.cov).norm() / dst.cov.norm() < 1e-9);
    // Empirical pushforward.
    const Matrix x = sample_gaussian(src, 100000, 100 + trial);
    const auto emp = empirical_moments(map.apply(x));
    CHECK((emp.cov - dst.cov).norm() / dst.cov.norm() < 0.02);
    CHECK((emp.mean - dst.mean).norm() < 0.02 * std::max(1.0, dst.mean.norm()) + 0.03);
  }
}

TEST_CASE("gaussian_monge_map(a, a) is the identity") {
  Rng rng(2);
  const auto a = random_moments(4, rng, 100.0);
  const auto m = gaussian_monge_map(a, a);
  CHECK(max_abs_diff(m.A, Matrix::Identity(4, 4)) < 1e-8);
  CHECK(m.b.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("brenier_potential examples and floor") {
  const Vector x = (Vector(3) << 1, -2, 0.5).finished();
  CHECK(brenier_potential(AffineMongeMap::identity(3), x) == doctest::Approx(0.5 * x.squaredNorm()));

  const auto m = gaussian_monge_map(scalar_gaussian(0, 1), scalar_gaussian(3, 4));
  CHECK(std::abs(brenier_potential(m, Vector::Constant(1, -1.5))) < 1e-14);
  CHECK(brenier_potential(m, Vector::Zero(1)) == doctest::Approx(2.25).epsilon(1e-12));

  Rng rng(4);
  const auto src = random_moments(2, rng);
  const auto dst = random_moments(2, rng);
  const auto map = gaussian_monge_map(src, dst);
  double lowest = 1e300;
  Vector argmin;
  for (int i = -100; i <= 100; ++i)
    for (int j = -100; j <= 100; ++j) {
      const Vector p = map.omega + (Vector(2) << i * 0.01, j * 0.01).finished();
      const double v = brenier_potential(map, p);
      if (v < lowest) {
        lowest = v;
        argmin = p;
      }
    }
  CHECK(lowest >= -1e-10);
  CHECK((argmin - map.omega).norm() < 1e-9);
}

TEST_CASE("brenier_potential gradient via autodiff equals the affine map") {
  Rng rng(6);
  const auto map = gaussian_monge_map(random_moments(3, rng), random_moments(3, rng));
  ad::ParamVector p;
  p.add("A", 3, 3);
  p.add("w", 1, 3);
  p.view("A") = map.A;
  p.view("w") = map.omega.transpose();
  const Matrix x = random_matrix(10, 3, rng);
  const Matrix g = ad::grad_wrt_input(
      [](ad::Tape&, const ad::Var& xv, const ad::Var&, const ad::ParamVars& pv) {
        const ad::Var r = ad::matmul(ad::sub(xv, ad::broadcast_rows(pv["w"], xv.rows())),
                                     ad::transpose(pv["A"]));
        return ad::scale(ad::sum_cols(ad::square(r)), 0.5);
      },
      x, Matrix::Zero(1, 1), p);
  CHECK(max_abs_diff(g, map.apply(x)) < 1e-10);
}

TEST_CASE("quad_layer_eval") {
  const QuadLayer id{Matrix::Identity(2, 2), Vector::Zero(2)};
  const auto r = quad_layer_eval(id, (Vector(2) << 1, 2).finished());
  CHECK(r.value == 2.5);
  CHECK(r.grad == (Vector(2) << 1, 2).finished());

  const auto m = gaussian_monge_map(scalar_gaussian(0, 1), scalar_gaussian(3, 4));
  CHECK(quad_layer_eval(quad_layer_from(m), Vector::Zero(1)).grad[0] == doctest::Approx(3.0));

  Rng rng(1);
  const QuadLayer q{random_matrix(3, 3, rng), random_vector(3, rng)};
  const auto at_center = quad_layer_eval(q, q.m);
  CHECK(at_center.value == 0.0);
  CHECK(at_center.grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gelbrich_distance") {
  Rng rng(12);
  const auto a = random_moments(3, rng);
  CHECK(std::abs(gelbrich_distance(a, a)) < 1e-10);
  CHECK(gelbrich_distance(scalar_gaussian(0, 1), scalar_gaussian(3, 4)) == doctest::Approx(10.0).epsilon(1e-12));
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_moments(4, rng);
    const auto y = random_moments(4, rng);
    const double dxy = gelbrich_distance(x, y);
    CHECK(dxy > 0.0);
    CHECK(dxy == doctest::Approx(gelbrich_distance(y, x)).epsilon(1e-9));
  }
}
