#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ccm/errors.hpp"
#include "ccm/geodesics.hpp"
#include "ccm/lie.hpp"
#include "ccm/manifold.hpp"

#include <cmath>
#include <numbers>

using namespace ccm;

namespace {

Matrix rot_z(double theta) {
  return rotation_exp(theta * skew({0.0, 0.0, 1.0}));
}

// Haar rotation with angle bounded away from the cut locus.
Matrix random_rotation_below(double max_angle, Rng& rng) {
  const auto m = make_so3();
  for (;;) {
    const Matrix r = unvec_rowmajor(random_point(m, rng), 3);
    const double angle =
        std::acos(std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0));
    if (angle <= max_angle) return r;
  }
}

}  // namespace

TEST_CASE("rotation log") {
  SUBCASE("identity maps to zero") {
    CHECK(rotation_log(Matrix::Identity(3, 3)).norm() == 0.0);
    CHECK(rotation_log(Matrix::Identity(2, 2)).norm() == 0.0);
  }

  SUBCASE("quarter turn about z") {
    const Matrix w = rotation_log(rot_z(std::numbers::pi / 2));
    Matrix expected(3, 3);
    expected << 0, -1, 0, 1, 0, 0, 0, 0, 0;
    expected *= std::numbers::pi / 2;
    CHECK((w - expected).norm() <= 1e-12);
  }

  SUBCASE("cut locus guard") {
    CHECK_THROWS_AS(rotation_log(rot_z(std::numbers::pi - 1e-8)),
                    CutLocusError);
    Matrix r2(2, 2);
    const double th = std::numbers::pi - 1e-8;
    r2 << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    CHECK_THROWS_AS(rotation_log(r2), CutLocusError);
  }

  SUBCASE("exp/log round trip on 1000 rotations") {
    Rng rng(61u);
    for (int i = 0; i < 1000; ++i) {
      const Matrix r = random_rotation_below(std::numbers::pi - 0.1, rng);
      CHECK((rotation_exp(rotation_log(r)) - r).norm() <= 1e-10);
    }
  }

  SUBCASE("small angles use the series branch") {
    const Matrix r = rot_z(1e-7);
    const Matrix w = rotation_log(r);
    CHECK((rotation_exp(w) - r).norm() <= 1e-14);
  }
}

TEST_CASE("group geodesic") {
  const auto so3 = make_so3();

  SUBCASE("coincident endpoints give the constant curve") {
    const Vector p = random_point(so3, 67u);
    const auto curve = group_geodesic(so3, p, p, 9);
    CHECK(curve.length == 0.0);
    for (const auto& pt : curve.points) CHECK((pt - p).norm() == 0.0);
  }

  SUBCASE("so3 quarter turn: midpoint and length") {
    const Vector p1 = vec_rowmajor(Matrix::Identity(3, 3));
    const Vector p2 = vec_rowmajor(rot_z(std::numbers::pi / 2));
    const auto curve = group_geodesic(so3, p1, p2, 3);
    CHECK(curve.length ==
          doctest::Approx(std::sqrt(2.0) * std::numbers::pi / 2)
              .epsilon(1e-12));
    CHECK((curve.points[1] - vec_rowmajor(rot_z(std::numbers::pi / 4))).norm()
          <= 1e-12);
  }

  SUBCASE("one-parameter-subgroup midpoint is exact by construction") {
    Rng rng(71u);
    const Matrix r1 = random_rotation_below(2.0, rng);
    const Matrix r2 = random_rotation_below(2.0, rng);
    const auto curve =
        group_geodesic(so3, vec_rowmajor(r1), vec_rowmajor(r2), 3);
    const Matrix mid =
        r1 * rotation_exp(0.5 * rotation_log(r1.transpose() * r2));
    CHECK((curve.points[1] - vec_rowmajor(mid)).norm() <= 1e-15);
  }

  SUBCASE("samples stay on the manifold and endpoints are pinned") {
    const auto se3 = make_se3();
    Rng rng(73u);
    const Vector p1 = random_point(se3, rng);
    const Vector p2 = random_point(se3, rng);
    const auto curve = group_geodesic(se3, p1, p2, 17);
    CHECK((curve.points.front() - p1).norm() <= 1e-10);
    CHECK((curve.points.back() - p2).norm() <= 1e-10);
    for (const auto& pt : curve.points) {
      CHECK(constraint_residual(se3, pt).norm() <= 1e-10);
    }
  }

  SUBCASE("component mismatch on o2xr") {
    const auto plus = make_o2xr();
    const auto minus = make_o2xr(true);
    const Vector p1 = random_point(plus, 79u);
    const Vector p2 = random_point(minus, 79u);
    CHECK_THROWS_AS(group_geodesic(plus, p1, p2, 5), ComponentError);
  }

  SUBCASE("distance symmetry and triangle inequality") {
    Rng rng(83u);
    for (int i = 0; i < 50; ++i) {
      const Vector a = random_point(so3, rng);
      const Vector b = random_point(so3, rng);
      const Vector c = random_point(so3, rng);
      double dab = 0.0, dba = 0.0, dac = 0.0, dbc = 0.0;
      try {
        dab = induced_distance(so3, a, b);
        dba = induced_distance(so3, b, a);
        dac = induced_distance(so3, a, c);
        dbc = induced_distance(so3, b, c);
      } catch (const CutLocusError&) {
        continue;
      }
      CHECK(std::abs(dab - dba) <= 1e-10);
      CHECK(dac <= dab + dbc + 1e-8);
    }
  }

  SUBCASE("single-axis length law") {
    for (double theta = 0.1; theta < std::numbers::pi; theta += 0.3) {
      const double d = induced_distance(so3, vec_rowmajor(Matrix::Identity(3, 3)),
                                        vec_rowmajor(rot_z(theta)));
      CHECK(d == doctest::Approx(std::sqrt(2.0) * theta).epsilon(1e-12));
    }
  }
}

TEST_CASE("curve energy") {
  SUBCASE("constant curve has zero energy") {
    const auto so3 = make_so3();
    const Vector p = random_point(so3, 89u);
    const auto curve = group_geodesic(so3, p, p, 9);
    CHECK(curve_energy(curve, induced_metric(so3)) == 0.0);
  }

  SUBCASE("straight line under the identity metric") {
    const auto rn = make_rn(3);
    Vector p1(3), p2(3);
    p1 << 0, 0, 0;
    p2 << 1, 2, -1;
    const auto curve = group_geodesic(rn, p1, p2, 21);
    const double energy = curve_energy(
        curve, [](const Vector&) { return Matrix::Identity(3, 3); });
    CHECK(energy == doctest::Approx((p2 - p1).squaredNorm()).epsilon(1e-12));
  }

  SUBCASE("uniform-speed sampling minimizes energy over reparameterizations") {
    const auto so3 = make_so3();
    const Vector p1 = vec_rowmajor(Matrix::Identity(3, 3));
    const Vector p2 = vec_rowmajor(rot_z(2.0));
    const int n = 33;
    const auto uniform = group_geodesic(so3, p1, p2, n);
    const double base = curve_energy(uniform, induced_metric(so3));
    for (const double power : {1.3, 1.7, 2.2}) {
      GeodesicCurve warped = uniform;
      for (int j = 0; j < n; ++j) {
        const double s = uniform.s[j];
        const Matrix r1 = unvec_rowmajor(p1, 3);
        const Matrix omega = rotation_log(
            r1.transpose() * unvec_rowmajor(p2, 3));
        warped.points[j] =
            vec_rowmajor(r1 * rotation_exp(std::pow(s, power) * omega));
      }
      CHECK(curve_energy(warped, induced_metric(so3)) >= base - 1e-12);
    }
  }
}

TEST_CASE("energy minimization") {
  const auto so3 = make_so3();

  SUBCASE("group geodesic is already optimal under the induced metric") {
    Rng rng(97u);
    for (int i = 0; i < 5; ++i) {
      const Matrix r1 = random_rotation_below(2.5, rng);
      const Matrix r2 = random_rotation_below(2.5, rng);
      const auto res = minimize_energy(so3, vec_rowmajor(r1), vec_rowmajor(r2),
                                       induced_metric(so3), 17, 100);
      CHECK(res.converged);
      CHECK(res.initial_energy - res.energy <= 1e-10);
      CHECK(res.iterations == 0);
    }
  }

  SUBCASE("constant-metric geodesics in the plane are straight") {
    const auto rn = make_rn(2);
    Vector p1(2), p2(2);
    p1 << 0, 0;
    p2 << 2, 1;
    Matrix metric(2, 2);
    metric << 2.0, 0.0, 0.0, 0.5;
    const auto res = minimize_energy(
        rn, p1, p2, [metric](const Vector&) { return metric; }, 15, 200);
    for (std::size_t j = 0; j < res.curve.points.size(); ++j) {
      const double s = res.curve.s[j];
      CHECK((res.curve.points[j] - (p1 + s * (p2 - p1))).norm() <= 1e-6);
    }
  }

  SUBCASE("descent under a weighted certificate-style metric") {
    Matrix w_inv(3, 3);
    w_inv.setZero();
    w_inv.diagonal() << 0.5, 1.0, 2.0;
    const MetricFn metric = [&, w_inv](const Vector& x) {
      const Matrix s = make_so3().frame(x);
      return Matrix(s * w_inv * s.transpose());
    };
    Rng rng(101u);
    const Matrix r1 = random_rotation_below(2.0, rng);
    const Matrix r2 = random_rotation_below(2.0, rng);
    const auto res = minimize_energy(so3, vec_rowmajor(r1), vec_rowmajor(r2),
                                     metric, 13, 200);
    CHECK(res.energy <= res.initial_energy + 1e-15);
    CHECK((res.curve.points.front() - vec_rowmajor(r1)).norm() == 0.0);
    CHECK((res.curve.points.back() - vec_rowmajor(r2)).norm() == 0.0);
    for (const auto& pt : res.curve.points) {
      CHECK(constraint_residual(so3, pt).norm() <= 1e-10);
    }
  }
}

TEST_CASE("lemma 1 sandwich") {
  const auto so3 = make_so3();
  const MetricFn g1 = induced_metric(so3);
  const MetricFn g4 = [g1](const Vector& x) { return Matrix(4.0 * g1(x)); };

  std::vector<std::pair<Vector, Vector>> pairs;
  Rng rng(103u);
  while (pairs.size() < 10) {
    const Matrix r1 = random_rotation_below(2.5, rng);
    const Matrix r2 = random_rotation_below(2.5, rng);
    pairs.emplace_back(vec_rowmajor(r1), vec_rowmajor(r2));
  }

  SUBCASE("uniform scaling doubles distances") {
    const auto rep = lemma1_check(so3, g1, g4, 4.0, 4.0, pairs);
    REQUIRE(rep.premise_ok);
    CHECK(rep.pass);
    for (int i = 0; i < rep.n_pairs; ++i) {
      CHECK(std::abs(rep.d2[i] - 2.0 * rep.d1[i]) <= 1e-8 * (1.0 + rep.d1[i]));
    }
  }

  SUBCASE("identical metrics give equality") {
    const auto rep = lemma1_check(so3, g1, g1, 1.0, 1.0, pairs);
    REQUIRE(rep.premise_ok);
    CHECK(rep.pass);
    for (int i = 0; i < rep.n_pairs; ++i) {
      CHECK(rep.d1[i] == rep.d2[i]);
    }
  }

  SUBCASE("violated premise is reported, not silently checked") {
    const auto rep = lemma1_check(so3, g1, g4, 1.0, 1.0, pairs);
    CHECK_FALSE(rep.premise_ok);
    CHECK_FALSE(rep.pass);
    CHECK(rep.worst_premise_violation > 1.0);
  }
}
