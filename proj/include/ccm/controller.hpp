#pragma once

#include "ccm/geodesics.hpp"
#include "ccm/synthesis.hpp"
#include "ccm/system.hpp"

#include <vector>

namespace ccm {

/// Guard against dividing by a vanishing b in rho_gain.
inline constexpr double kRhoGainEpsB = 1e-12;

/// Feedback gain: 0 when a <= 0, else (a + sqrt(a^2 + b^2)) / b, which
/// yields a - rho b <= -sqrt(a^2 + b^2) < 0. Requires b >= 0; a > 0 with
/// b below kRhoGainEpsB means the certificate's feasibility implication
/// failed at this point.
double rho_gain(double a, double b);

/// a = dx^T (dM/dt + D_f M + M df/dx + df/dx^T M + 2 lambda M) dx and
/// b = |B^T M dx|^2, with D_f M by central differences along f through the
/// retraction. dx is projected onto the tangent space first.
std::pair<double, double> ab_values(const ContractionCertificate& cert,
                                    const ControlAffineSystem& sys,
                                    const Vector& x, const Vector& dx,
                                    double t);

/// The s-discretized curve carried by the path-integral controller.
/// nodes[0] tracks the reference, nodes[N] tracks the plant.
struct DiscretizedPath {
  double t = 0.0;
  std::vector<Vector> nodes;
  std::vector<Vector> controls;
  int segments() const { return static_cast<int>(nodes.size()) - 1; }
};

DiscretizedPath path_from_geodesic(const GeodesicCurve& curve, int m_inputs,
                                   double t);

/// One controller step: rebuild the cumulative control along s from
/// u_0 = u_star, advance every node by an RK4 step of the closed-loop
/// dynamics over dt, retract. After the call path.controls holds the
/// controls that were applied.
void open_loop_step(const ContractionCertificate& cert,
                    const ControlAffineSystem& sys, DiscretizedPath& path,
                    const Vector& u_star, double dt);

/// Path energy of the current discretized curve under the certificate
/// metric (trapezoidal, symmetric-difference tangents).
double path_energy(const ContractionCertificate& cert,
                   const ControlAffineSystem& sys, const DiscretizedPath& path);

/// T = (1/lambda) ln(K sqrt(a2/a1) / k_target), the largest period with
/// per-period contraction factor k_target.
double sampling_period(double a1, double a2, double K, double lambda,
                       double k_target);

struct ReferenceTrajectory {
  int n_amb = 0;
  int m = 0;
  std::function<Vector(double)> x_star;
  std::function<Vector(double)> u_star;
};

struct TrackingTrace {
  std::vector<double> t;
  std::vector<Vector> x;
  std::vector<Vector> x_star;
  std::vector<Vector> u;
  std::vector<double> d_induced;
  std::vector<double> path_energy;
  std::vector<double> h_residual;
  double period = 0.0;
  int steps_per_period = 0;
  /// Empirical overshoot constant from the first sampling interval.
  double K_estimate = 1.0;
};

/// Sampled-data loop: at each sampling instant rebuild the path from the
/// induced-metric geodesic joining x_star(t_i) to the plant state, then
/// integrate the open-loop controller until the next instant. The period
/// is rounded to a whole number of dt steps. Rows are logged every dt.
TrackingTrace sampled_data_run(const ContractionCertificate& cert,
                               const ControlAffineSystem& sys,
                               const Vector& x0,
                               const ReferenceTrajectory& ref, double period,
                               double dt, double t_end, int n_segments);

struct DecayFit {
  double slope = 0.0;
  bool valid = false;
};

/// Least-squares slope of ln d_induced over the second half of the trace.
DecayFit fitted_decay_rate(const TrackingTrace& trace);

// Reference builders (controller External Interfaces).

/// Integrates the system under a constant control from x_star0 with the
/// same stepper the simulation uses; queries interpolate linearly and
/// retract.
ReferenceTrajectory make_reference_constant_u(const ControlAffineSystem& sys,
                                              const Vector& x_star0,
                                              const Vector& u_const,
                                              double t_end, double dt);

/// CSV reference with columns t, x[0..n_amb), u[0..m); linear
/// interpolation between rows, states retracted after interpolation.
ReferenceTrajectory make_reference_from_csv(const std::string& path,
                                            const EmbeddedManifold& m,
                                            int m_inputs);

/// Probes |xdot_star - f - B u_star| by finite differences; throws
/// InvalidInputError beyond tol.
void check_reference_feasible(const ControlAffineSystem& sys,
                              const ReferenceTrajectory& ref, double t_end,
                              double dt, double tol = 1e-6);

/// One RK4 step of xdot = f + B u with the control frozen, followed by
/// retraction.
Vector rk4_step(const ControlAffineSystem& sys, const Vector& x,
                const Vector& u, double t, double dt);

}  // namespace ccm
