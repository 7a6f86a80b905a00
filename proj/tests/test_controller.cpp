#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ccm/controller.hpp"
#include "ccm/errors.hpp"
#include "ccm/lie.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace ccm;

namespace {

Vector se3_state(const Matrix& r, const Eigen::Vector3d& v) {
  Vector x(12);
  x.head(9) = vec_rowmajor(r);
  x.tail(3) = v;
  return x;
}

}  // namespace

TEST_CASE("rho gain") {
  SUBCASE("pinned examples") {
    CHECK(rho_gain(-1.0, 0.3) == 0.0);
    CHECK(rho_gain(3.0, 4.0) == 2.0);
    CHECK(rho_gain(0.0, 1.0) == 0.0);
  }

  SUBCASE("guards") {
    CHECK_THROWS_AS(rho_gain(1.0, 1e-13), CertificateViolationError);
    CHECK_THROWS_AS(rho_gain(1.0, -1.0), InvalidInputError);
    CHECK(rho_gain(-5.0, 0.0) == 0.0);
  }

  SUBCASE("closed-loop sign over 10^4 random draws") {
    Rng rng(7u);
    for (int i = 0; i < 10000; ++i) {
      // Log-uniform magnitudes with random signs; a is never exactly 0.
      const double a = std::copysign(std::exp(6.0 * rng.uniform() - 3.0),
                                     rng.uniform() - 0.5);
      const bool b_zero = rng.uniform() < 0.1;
      const double b =
          b_zero && a <= 0.0 ? 0.0 : std::exp(6.0 * rng.uniform() - 3.0);
      const double rho = rho_gain(a, b);
      CHECK(rho >= 0.0);
      const double closed = a - rho * b;
      if (a <= 0.0 && b == 0.0) {
        CHECK(closed == a);
      } else if (a > 0.0) {
        CHECK(closed <= -std::sqrt(a * a + b * b) + 1e-12);
      } else {
        CHECK(closed < 0.0);
      }
    }
  }
}

TEST_CASE("ab values") {
  SUBCASE("zero displacement gives (0, 0)") {
    const auto sys = builtin_system("se3-heading");
    const auto cert = testing::make_certificate(
        sys, 0.2, 0.1, 10.0, {Matrix::Identity(6, 6)}, 0.0);
    const Vector x = random_point(sys.manifold, 3u);
    const auto [a, b] = ab_values(cert, sys, x, Vector::Zero(12), 0.0);
    CHECK(a == 0.0);
    CHECK(b == 0.0);
  }

  SUBCASE("scalar-linear hand evaluation") {
    const auto sys = builtin_system("scalar-linear");
    const auto cert = testing::make_certificate(
        sys, 0.5, 0.1, 10.0, {Matrix::Identity(1, 1)}, 0.0);
    const auto [a, b] =
        ab_values(cert, sys, Vector::Constant(1, 1.7), Vector::Ones(1), 0.0);
    CHECK(a == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(b == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("b equals the quadratic form dx^T M B B^T M dx") {
    const auto sys = builtin_system("se3-heading");
    Rng rng(11u);
    Matrix g = rng.normal_matrix(6, 6);
    const Matrix w =
        Matrix(0.5 * (g + g.transpose())) + 5.0 * Matrix::Identity(6, 6);
    const auto cert = testing::make_certificate(sys, 0.2, 1e-3, 1e3, {w}, 0.0);
    for (int i = 0; i < 20; ++i) {
      const Vector x = random_point(sys.manifold, rng);
      const Vector dx = tangent_project(sys.manifold, x, rng.normal_vector(12));
      const auto [a, b] = ab_values(cert, sys, x, dx, 0.0);
      const Matrix metric = metric_at(cert, sys.manifold, x, 0.0);
      const Matrix bb = input_matrix(sys, x, 0.0);
      const double direct =
          dx.dot(metric * bb * bb.transpose() * metric * dx);
      CHECK(std::abs(b - direct) <= 1e-12 * (1.0 + std::abs(direct)));
    }
  }
}

TEST_CASE("open loop step") {
  SUBCASE("zero-length path stays collapsed with u = u_star") {
    const auto sys = builtin_system("se3-heading");
    const auto cert = testing::make_certificate(
        sys, 0.2, 0.1, 10.0, {Matrix::Identity(6, 6)}, 0.0);
    const Vector x = random_point(sys.manifold, 13u);
    DiscretizedPath path;
    path.t = 0.0;
    path.nodes.assign(9, x);
    path.controls.assign(9, Vector::Zero(3));
    Vector u_star(3);
    u_star << 0.3, -0.1, 0.2;
    open_loop_step(cert, sys, path, u_star, 1e-3);
    for (const auto& u : path.controls) CHECK((u - u_star).norm() == 0.0);
    for (const auto& node : path.nodes) {
      CHECK((node - path.nodes.front()).norm() == 0.0);
    }
  }

  SUBCASE("scalar-linear path energy contracts at twice the rate") {
    const auto sys = builtin_system("scalar-linear");
    const auto cert = testing::make_certificate(
        sys, 0.5, 0.1, 10.0, {Matrix::Identity(1, 1)}, 0.0);
    const auto geo = group_geodesic(sys.manifold, Vector::Zero(1),
                                    Vector::Ones(1), 17);
    DiscretizedPath path = path_from_geodesic(geo, 1, 0.0);
    const double e0 = path_energy(cert, sys, path);
    const double dt = 1e-3;
    open_loop_step(cert, sys, path, Vector::Zero(1), dt);
    const double e1 = path_energy(cert, sys, path);
    CHECK(e1 <= e0 * (1.0 - 2.0 * 0.5 * dt) + e0 * dt * dt);
  }

  SUBCASE("control refinement is Cauchy in the segment count") {
    // lambda above the drift rate makes a > 0, so the gain is active and
    // the cumulative control varies along s.
    const auto sys = builtin_system("scalar-linear");
    const auto cert = testing::make_certificate(
        sys, 2.0, 0.1, 10.0, {Matrix::Identity(1, 1)}, 0.0);
    auto u_final = [&](int n_segments) {
      const auto geo = group_geodesic(sys.manifold, Vector::Zero(1),
                                      Vector::Ones(1), n_segments + 1);
      DiscretizedPath path = path_from_geodesic(geo, 1, 0.0);
      for (int step = 0; step < 50; ++step) {
        open_loop_step(cert, sys, path, Vector::Zero(1), 0.01);
      }
      return path.controls.back()[0];
    };
    const double reference = u_final(256);
    double prev_err = HUGE_VAL;
    for (const int n : {4, 8, 16, 32, 64}) {
      const double err = std::abs(u_final(n) - reference);
      CHECK(err <= prev_err + 1e-12);
      CHECK(err <= 8.0 / n * std::max(std::abs(reference), 0.1));
      prev_err = err;
    }
  }
}

TEST_CASE("sampling period") {
  SUBCASE("limit toward k_target = 1 is ln 2 for a 2:1 bound ratio") {
    CHECK(sampling_period(1.0, 4.0, 1.0, 1.0, 1.0 - 1e-12) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-9));
  }

  SUBCASE("formula collapse at equal bounds") {
    CHECK(sampling_period(3.0, 3.0, 1.0, 1.0, std::exp(-1.0)) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("domain guards") {
    CHECK_THROWS_AS(sampling_period(1.0, 4.0, 1.0, 1.0, 1.0),
                    InvalidInputError);
    CHECK_THROWS_AS(sampling_period(1.0, 4.0, 1.0, 1.0, 0.0),
                    InvalidInputError);
    CHECK_THROWS_AS(sampling_period(1.0, 4.0, 0.5, 1.0, 0.5),
                    InvalidInputError);
  }
}

TEST_CASE("sampled-data runs") {
  SUBCASE("zero initial error stays at the reference") {
    const auto sys = builtin_system("scalar-linear");
    SynthesisOptions opt;
    opt.grid_size = 20;
    opt.seed = 3;
    const auto synth = synthesize(sys, 0.5, opt);
    REQUIRE(synth.feasible);
    const auto ref = make_reference_constant_u(sys, Vector::Constant(1, 0.4),
                                               Vector::Zero(1), 4.0, 1e-3);
    const auto trace = sampled_data_run(synth.certificate, sys,
                                        ref.x_star(0.0), ref, 1.0, 1e-3, 4.0,
                                        8);
    for (const double d : trace.d_induced) CHECK(d <= 1e-6);
    for (const double u : trace.h_residual) CHECK(u <= 1e-7);
  }

  SUBCASE("scalar-linear distance decays at least at 90% of lambda") {
    const auto sys = builtin_system("scalar-linear");
    SynthesisOptions opt;
    opt.grid_size = 20;
    opt.seed = 3;
    const auto synth = synthesize(sys, 0.5, opt);
    REQUIRE(synth.feasible);
    const auto ref = make_reference_constant_u(sys, Vector::Zero(1),
                                               Vector::Zero(1), 10.0, 1e-3);
    const double period = sampling_period(synth.certificate.a1,
                                          synth.certificate.a2, 1.0,
                                          synth.certificate.lambda, 0.5);
    const auto trace =
        sampled_data_run(synth.certificate, sys, Vector::Ones(1), ref, period,
                         1e-3, 10.0, 16);
    const auto fit = fitted_decay_rate(trace);
    REQUIRE(fit.valid);
    CHECK(fit.slope <= -0.45);
  }

  SUBCASE("se3-heading: decreasing sample-instant energy, adherence, decay") {
    const auto sys = builtin_system("se3-heading");
    SynthesisOptions opt;
    opt.grid_size = 100;
    opt.seed = 5;
    const auto synth = synthesize(sys, 0.2, opt);
    REQUIRE(synth.feasible);
    const auto& cert = synth.certificate;

    Vector ref0 = se3_state(Matrix::Identity(3, 3), {0.2, 0.0, -0.1});
    Vector u_star(3);
    u_star << 0.0, 0.0, 0.25;
    const auto ref = make_reference_constant_u(sys, ref0, u_star, 8.0, 2e-3);

    const Matrix r0 =
        rotation_exp(0.8 * skew(Eigen::Vector3d(1.0, 1.0, 0.0).normalized()));
    const Vector x0 = se3_state(r0, {0.7, -0.3, 0.4});

    const auto trace =
        sampled_data_run(cert, sys, x0, ref, 2.0, 2e-3, 8.0, 16);

    // Time stamps must be monotone, energies nonnegative.
    for (std::size_t i = 1; i < trace.t.size(); ++i) {
      CHECK(trace.t[i] > trace.t[i - 1]);
    }
    for (const double e : trace.path_energy) CHECK(e >= 0.0);

    // Energy at the sampling instants strictly decreases.
    std::vector<double> sample_energy;
    for (std::size_t i = 0; i < trace.t.size(); ++i) {
      const long step = std::lround(trace.t[i] / 2e-3);
      if (step % trace.steps_per_period == 0 &&
          i + 1 < trace.t.size()) {
        sample_energy.push_back(trace.path_energy[i]);
      }
    }
    REQUIRE(sample_energy.size() >= 4);
    for (std::size_t i = 1; i < sample_energy.size(); ++i) {
      CHECK(sample_energy[i] < sample_energy[i - 1]);
    }

    // Retraction keeps every logged state on the manifold.
    for (const double h : trace.h_residual) CHECK(h <= 1e-7);

    const auto fit = fitted_decay_rate(trace);
    REQUIRE(fit.valid);
    CHECK(fit.slope <= -0.9 * cert.lambda);

    CHECK(trace.K_estimate >= 1.0);
  }

  SUBCASE("per-step energy inequality with a fitted quadratic constant") {
    const auto sys = builtin_system("scalar-linear");
    SynthesisOptions opt;
    opt.grid_size = 20;
    opt.seed = 3;
    const auto synth = synthesize(sys, 0.5, opt);
    REQUIRE(synth.feasible);
    const double dt = 1e-3;
    const auto ref = make_reference_constant_u(sys, Vector::Zero(1),
                                               Vector::Zero(1), 4.0, dt);
    const auto trace = sampled_data_run(synth.certificate, sys,
                                        Vector::Ones(1), ref, 1.0, dt, 4.0, 16);
    const double lambda = synth.certificate.lambda;
    // Fit c on the first half, check the bound on the second half.
    double c_fit = 0.0;
    std::vector<double> viol;
    for (std::size_t i = 0; i + 1 < trace.t.size(); ++i) {
      const long next_step = std::lround(trace.t[i + 1] / dt);
      if (next_step % trace.steps_per_period == 0) continue;  // rebuild row
      const double v = trace.path_energy[i + 1] -
                       trace.path_energy[i] * (1.0 - 2.0 * lambda * dt);
      viol.push_back(v);
      if (trace.t[i] < 2.0) c_fit = std::max(c_fit, v / (dt * dt));
    }
    const double c_bound =
        std::max(1.5 * c_fit, 1e-9 * trace.path_energy.front());
    for (std::size_t i = 0; i + 1 < trace.t.size(); ++i) {
      const long next_step = std::lround(trace.t[i + 1] / dt);
      if (next_step % trace.steps_per_period == 0) continue;
      if (trace.t[i] < 2.0) continue;
      const double v = trace.path_energy[i + 1] -
                       trace.path_energy[i] * (1.0 - 2.0 * lambda * dt);
      CHECK(v <= c_bound * dt * dt);
    }
  }
}
