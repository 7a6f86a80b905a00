#include "ccm/controller.hpp"

#include "ccm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ccm {

double rho_gain(double a, double b) {
  if (b < 0.0) {
    throw InvalidInputError("rho_gain: b must be nonnegative");
  }
  if (a <= 0.0) return 0.0;
  if (b < kRhoGainEpsB) {
    std::ostringstream msg;
    msg << "rho_gain: a = " << a << " > 0 with b = " << b << " below "
        << kRhoGainEpsB
        << "; the certificate implication fails at this point";
    throw CertificateViolationError(msg.str());
  }
  return (a + std::sqrt(a * a + b * b)) / b;
}

std::pair<double, double> ab_values(const ContractionCertificate& cert,
                                    const ControlAffineSystem& sys,
                                    const Vector& x, const Vector& dx,
                                    double t) {
  const EmbeddedManifold& m = sys.manifold;
  const Vector delta = tangent_project(m, x, dx);
  if (delta.squaredNorm() == 0.0) return {0.0, 0.0};

  const Matrix metric = metric_at(cert, m, x, t);
  // dM/dt vanishes for the stored time-invariant parameterization.
  Matrix df_m = Matrix::Zero(m.n_amb, m.n_amb);
  const Vector f = sys.f(x, t);
  const double speed = f.norm();
  if (speed > 1e-14) {
    const Vector dir = f / speed;
    const Matrix hi = metric_at(cert, m, retract(m, x + kFrameFdStep * dir), t);
    const Matrix lo = metric_at(cert, m, retract(m, x - kFrameFdStep * dir), t);
    df_m = speed * (hi - lo) / (2.0 * kFrameFdStep);
  }
  const Matrix jf = drift_jacobian(sys, x, t);
  const double a =
      delta.dot((df_m + metric * jf + jf.transpose() * metric +
                 2.0 * cert.lambda * metric) *
                delta);
  const Matrix b_mat = input_matrix(sys, x, t);
  const double b = (b_mat.transpose() * metric * delta).squaredNorm();
  return {a, b};
}

DiscretizedPath path_from_geodesic(const GeodesicCurve& curve, int m_inputs,
                                   double t) {
  DiscretizedPath path;
  path.t = t;
  path.nodes = curve.points;
  path.controls.assign(curve.points.size(), Vector::Zero(m_inputs));
  return path;
}

Vector rk4_step(const ControlAffineSystem& sys, const Vector& x,
                const Vector& u, double t, double dt) {
  const Vector k1 = rhs(sys, x, u, t);
  const Vector k2 = rhs(sys, x + 0.5 * dt * k1, u, t + 0.5 * dt);
  const Vector k3 = rhs(sys, x + 0.5 * dt * k2, u, t + 0.5 * dt);
  const Vector k4 = rhs(sys, x + dt * k3, u, t + dt);
  return retract(sys.manifold,
                 x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

namespace {

// Phase one of the controller step: the forward cumulative sum of
// du/ds = -1/2 rho B^T M dx/ds along the path, with u(0) = u_star.
// Segment quantities are evaluated at retracted chord midpoints.
void compute_controls(const ContractionCertificate& cert,
                      const ControlAffineSystem& sys, DiscretizedPath& path,
                      const Vector& u_star) {
  const EmbeddedManifold& m = sys.manifold;
  const int n_seg = path.segments();
  const double ds = 1.0 / n_seg;
  const double t = path.t;

  path.controls[0] = u_star;
  for (int j = 0; j < n_seg; ++j) {
    const Vector mid = retract(m, 0.5 * (path.nodes[j] + path.nodes[j + 1]));
    const Vector delta =
        tangent_project(m, mid, (path.nodes[j + 1] - path.nodes[j]) / ds);
    const auto [a, b] = ab_values(cert, sys, mid, delta, t);
    const double rho = rho_gain(a, b);
    Vector du = Vector::Zero(sys.m);
    if (rho != 0.0) {
      const Matrix metric = metric_at(cert, m, mid, t);
      const Matrix b_mat = input_matrix(sys, mid, t);
      du = -0.5 * rho * (b_mat.transpose() * (metric * delta)) * ds;
    }
    path.controls[j + 1] = path.controls[j] + du;
  }
}

}  // namespace

void open_loop_step(const ContractionCertificate& cert,
                    const ControlAffineSystem& sys, DiscretizedPath& path,
                    const Vector& u_star, double dt) {
  if (path.segments() < 1) {
    throw InvalidInputError("open_loop_step: path needs at least one segment");
  }
  if (u_star.size() != sys.m) {
    throw InvalidInputError("open_loop_step: u_star dimension mismatch");
  }
  compute_controls(cert, sys, path, u_star);
  const double t = path.t;
  for (int j = 0; j <= path.segments(); ++j) {
    path.nodes[j] = rk4_step(sys, path.nodes[j], path.controls[j], t, dt);
  }
  path.t = t + dt;
}

double path_energy(const ContractionCertificate& cert,
                   const ControlAffineSystem& sys,
                   const DiscretizedPath& path) {
  GeodesicCurve curve;
  const int n = static_cast<int>(path.nodes.size());
  curve.points = path.nodes;
  curve.s.resize(n);
  for (int j = 0; j < n; ++j) curve.s[j] = static_cast<double>(j) / (n - 1);
  const double t = path.t;
  return curve_energy(curve, [&](const Vector& x) {
    return metric_at(cert, sys.manifold, x, t);
  });
}

double sampling_period(double a1, double a2, double K, double lambda,
                       double k_target) {
  if (!(k_target > 0.0) || !(k_target < 1.0)) {
    throw InvalidInputError("sampling_period: k_target must lie in (0, 1)");
  }
  if (K < 1.0) {
    throw InvalidInputError("sampling_period: K must be >= 1");
  }
  if (!(a1 > 0.0) || !(a2 >= a1) || !(lambda > 0.0)) {
    throw InvalidInputError(
        "sampling_period: requires a2 >= a1 > 0 and lambda > 0");
  }
  return std::log(K * std::sqrt(a2 / a1) / k_target) / lambda;
}

TrackingTrace sampled_data_run(const ContractionCertificate& cert,
                               const ControlAffineSystem& sys,
                               const Vector& x0,
                               const ReferenceTrajectory& ref, double period,
                               double dt, double t_end, int n_segments) {
  const EmbeddedManifold& m = sys.manifold;
  if (!(dt > 0.0) || !(t_end > 0.0) || !(period > 0.0)) {
    throw InvalidInputError("sampled_data_run: dt, period, t_end must be > 0");
  }
  if (n_segments < 1) {
    throw InvalidInputError("sampled_data_run: need at least one segment");
  }
  if (!on_manifold(m, x0, 1e-8)) {
    throw PreconditionError("sampled_data_run: x0 is off-manifold");
  }
  check_reference_feasible(sys, ref, t_end, dt);

  TrackingTrace trace;
  trace.steps_per_period = std::max<int>(1, std::llround(period / dt));
  trace.period = trace.steps_per_period * dt;

  const int n_steps = static_cast<int>(std::llround(t_end / dt));
  Vector x = x0;
  DiscretizedPath path;

  for (int step = 0; step < n_steps; ++step) {
    const double t = step * dt;
    if (step % trace.steps_per_period == 0) {
      path = path_from_geodesic(group_geodesic(m, ref.x_star(t), x,
                                               n_segments + 1),
                                sys.m, t);
    }
    // Row at time t: pre-step state with the controls chosen at t.
    const Vector x_pre = x;
    const Vector xs = ref.x_star(t);
    const double energy_pre = path_energy(cert, sys, path);
    open_loop_step(cert, sys, path, ref.u_star(t), dt);
    x = path.nodes[n_segments];

    trace.t.push_back(t);
    trace.x.push_back(x_pre);
    trace.x_star.push_back(xs);
    trace.u.push_back(path.controls[n_segments]);
    trace.d_induced.push_back(induced_distance(m, xs, x_pre));
    trace.path_energy.push_back(energy_pre);
    trace.h_residual.push_back(m.h(x_pre).norm());
  }
  {
    const double t = n_steps * dt;
    const Vector xs = ref.x_star(t);
    trace.t.push_back(t);
    trace.x.push_back(x);
    trace.x_star.push_back(xs);
    trace.u.push_back(trace.u.empty() ? Vector::Zero(sys.m) : trace.u.back());
    trace.d_induced.push_back(induced_distance(m, xs, x));
    trace.path_energy.push_back(path_energy(cert, sys, path));
    trace.h_residual.push_back(m.h(x).norm());
  }

  // Overshoot estimate from the first sampling interval.
  if (!trace.d_induced.empty() && trace.d_induced.front() > 0.0) {
    const double d0 = trace.d_induced.front();
    double k_est = 1.0;
    for (std::size_t i = 0;
         i < trace.t.size() && trace.t[i] <= trace.period + 0.5 * dt; ++i) {
      k_est = std::max(k_est, trace.d_induced[i] *
                                  std::exp(cert.lambda * trace.t[i]) / d0);
    }
    trace.K_estimate = k_est;
  }
  return trace;
}

DecayFit fitted_decay_rate(const TrackingTrace& trace) {
  DecayFit fit;
  if (trace.t.size() < 4) return fit;
  const double t_mid =
      trace.t.front() + 0.5 * (trace.t.back() - trace.t.front());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < trace.t.size(); ++i) {
    if (trace.t[i] < t_mid) continue;
    if (!(trace.d_induced[i] > 0.0)) continue;
    const double xi = trace.t[i];
    const double yi = std::log(trace.d_induced[i]);
    sx += xi;
    sy += yi;
    sxx += xi * xi;
    sxy += xi * yi;
    ++n;
  }
  if (n < 2) return fit;
  const double denom = n * sxx - sx * sx;
  if (denom <= 0.0) return fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.valid = true;
  return fit;
}

}  // namespace ccm
