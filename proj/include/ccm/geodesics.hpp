#pragma once

#include "ccm/manifold.hpp"
#include "ccm/types.hpp"

#include <utility>
#include <vector>

namespace ccm {

/// A curve sampled at parameters s in [0, 1].
struct GeodesicCurve {
  std::vector<double> s;
  std::vector<Vector> points;
  /// group_geodesic: closed-form induced length sqrt(|log(R1^T R2)|_F^2 +
  /// |x2 - x1|^2). minimize_energy: sqrt of the minimized discrete energy.
  double length = 0.0;
};

/// Per-factor geodesic under the induced ambient metric: one-parameter
/// subgroups on rotation blocks, straight lines on vector blocks.
/// Endpoints must lie on the manifold, in the same component, with every
/// rotation factor off the cut locus.
GeodesicCurve group_geodesic(const EmbeddedManifold& m, const Vector& p1,
                             const Vector& p2, int n_samples);

/// Induced-metric distance between two points (closed form).
double induced_distance(const EmbeddedManifold& m, const Vector& p1,
                        const Vector& p2);

/// The induced ambient metric restricted to the manifold: the orthogonal
/// projector onto T_x M.
MetricFn induced_metric(const EmbeddedManifold& m);

/// Trapezoidal estimate of int_0^1 g'(s)^T M(g(s)) g'(s) ds with
/// symmetric-difference tangents (one-sided at the endpoints).
double curve_energy(const GeodesicCurve& curve, const MetricFn& metric);

struct MinimizeResult {
  GeodesicCurve curve;
  double energy = 0.0;
  double initial_energy = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Discrete-energy descent over the interior nodes, initialized from the
/// group geodesic, with tangent-projected gradients and retraction after
/// every step. Terminates when the projected gradient norm drops below
/// 1e-8 (or after max_iters, returning the best iterate with
/// converged = false).
MinimizeResult minimize_energy(const EmbeddedManifold& m, const Vector& p1,
                               const Vector& p2, const MetricFn& metric,
                               int n_samples, int max_iters);

struct Lemma1Report {
  bool premise_ok = true;
  double worst_premise_violation = 0.0;
  int n_pairs = 0;
  std::vector<double> d1, d2;
  /// Positive entries mean the corresponding bound failed beyond slack.
  double worst_lower_violation = 0.0;
  double worst_upper_violation = 0.0;
  bool pass = false;
};

/// Checks sqrt(a1) d1 <= d2 <= sqrt(a2) d1 over the given point pairs,
/// with distances from minimize_energy and slack 1e-6 (1 + d1). The
/// metric sandwich a1 g1 <= g2 <= a2 g1 is verified pointwise on tangent
/// spaces first; if it fails, the report marks the premise and skips the
/// distance check.
Lemma1Report lemma1_check(const EmbeddedManifold& m, const MetricFn& g1,
                          const MetricFn& g2, double a1, double a2,
                          const std::vector<std::pair<Vector, Vector>>& pairs,
                          int n_samples = 13, int max_iters = 300);

}  // namespace ccm
