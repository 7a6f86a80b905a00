#include "ccm/geodesics.hpp"

#include "ccm/errors.hpp"
#include "ccm/lie.hpp"

#include <algorithm>
#include <cmath>

namespace ccm {
namespace {

struct FactorGeodesic {
  // One log per rotation factor, one difference per vector factor, in
  // factor order.
  std::vector<Matrix> logs;
  std::vector<Vector> deltas;
  double length = 0.0;
};

FactorGeodesic factor_geodesic(const EmbeddedManifold& m, const Vector& p1,
                               const Vector& p2) {
  FactorGeodesic g;
  double sq = 0.0;
  for (const auto& f : m.factors) {
    if (f.kind == FactorSpec::Kind::kRotation) {
      const Matrix r1 = unvec_rowmajor(p1.segment(f.offset, f.dim * f.dim), f.dim);
      const Matrix r2 = unvec_rowmajor(p2.segment(f.offset, f.dim * f.dim), f.dim);
      if (r1.determinant() * r2.determinant() < 0.0) {
        throw ComponentError(
            "group_geodesic: endpoints lie in different components");
      }
      const Matrix omega = rotation_log(r1.transpose() * r2);
      sq += omega.squaredNorm();
      g.logs.push_back(omega);
    } else {
      const Vector d = p2.segment(f.offset, f.dim) - p1.segment(f.offset, f.dim);
      sq += d.squaredNorm();
      g.deltas.push_back(d);
    }
  }
  g.length = std::sqrt(sq);
  return g;
}

Vector evaluate(const EmbeddedManifold& m, const Vector& p1,
                const FactorGeodesic& g, double s) {
  Vector x = p1;
  std::size_t ri = 0, vi = 0;
  for (const auto& f : m.factors) {
    if (f.kind == FactorSpec::Kind::kRotation) {
      const Matrix r1 = unvec_rowmajor(p1.segment(f.offset, f.dim * f.dim), f.dim);
      x.segment(f.offset, f.dim * f.dim) =
          vec_rowmajor(r1 * rotation_exp(s * g.logs[ri]));
      ++ri;
    } else {
      x.segment(f.offset, f.dim) += s * g.deltas[vi];
      ++vi;
    }
  }
  return x;
}

void require_on_manifold(const EmbeddedManifold& m, const Vector& p,
                         const char* op) {
  if (!on_manifold(m, p)) {
    throw PreconditionError(std::string(op) + ": endpoint is off-manifold");
  }
}

}  // namespace

GeodesicCurve group_geodesic(const EmbeddedManifold& m, const Vector& p1,
                             const Vector& p2, int n_samples) {
  if (n_samples < 2) {
    throw InvalidInputError("group_geodesic: need at least 2 samples");
  }
  require_on_manifold(m, p1, "group_geodesic");
  require_on_manifold(m, p2, "group_geodesic");
  const FactorGeodesic g = factor_geodesic(m, p1, p2);
  GeodesicCurve curve;
  curve.length = g.length;
  curve.s.resize(n_samples);
  curve.points.reserve(n_samples);
  for (int j = 0; j < n_samples; ++j) {
    const double s = static_cast<double>(j) / (n_samples - 1);
    curve.s[j] = s;
    curve.points.push_back(evaluate(m, p1, g, s));
  }
  // Pin the endpoints exactly.
  curve.points.front() = p1;
  curve.points.back() = p2;
  return curve;
}

double induced_distance(const EmbeddedManifold& m, const Vector& p1,
                        const Vector& p2) {
  require_on_manifold(m, p1, "induced_distance");
  require_on_manifold(m, p2, "induced_distance");
  return factor_geodesic(m, p1, p2).length;
}

MetricFn induced_metric(const EmbeddedManifold& m) {
  return [m](const Vector& x) { return tangent_projector(m, x); };
}

double curve_energy(const GeodesicCurve& curve, const MetricFn& metric) {
  const int n = static_cast<int>(curve.points.size());
  if (n < 2) return 0.0;
  double energy = 0.0;
  for (int j = 0; j < n; ++j) {
    Vector tangent;
    if (j == 0) {
      tangent = (curve.points[1] - curve.points[0]) / (curve.s[1] - curve.s[0]);
    } else if (j == n - 1) {
      tangent = (curve.points[j] - curve.points[j - 1]) /
                (curve.s[j] - curve.s[j - 1]);
    } else {
      tangent = (curve.points[j + 1] - curve.points[j - 1]) /
                (curve.s[j + 1] - curve.s[j - 1]);
    }
    const double w = (j == 0)       ? (curve.s[1] - curve.s[0]) / 2.0
                     : (j == n - 1) ? (curve.s[j] - curve.s[j - 1]) / 2.0
                                    : (curve.s[j + 1] - curve.s[j - 1]) / 2.0;
    energy += w * tangent.dot(metric(curve.points[j]) * tangent);
  }
  return energy;
}

namespace {

// Segment-midpoint discrete energy. Chords of one-parameter subgroups are
// exactly tangent at their retracted midpoints, so sampled group geodesics
// are stationary points of this functional under the induced metric.
class DiscreteEnergy {
 public:
  DiscreteEnergy(const EmbeddedManifold& m, const MetricFn& metric,
                 const std::vector<double>& s)
      : m_(m), metric_(metric), s_(s) {}

  double segment(const Vector& a, const Vector& b, int j) const {
    const Vector mid = retract(m_, 0.5 * (a + b));
    const Vector d = b - a;
    return d.dot(metric_(mid) * d) / (s_[j + 1] - s_[j]);
  }

  double total(const std::vector<Vector>& pts) const {
    double e = 0.0;
    for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
      e += segment(pts[j], pts[j + 1], static_cast<int>(j));
    }
    return e;
  }

  // Tangent-projected gradient with respect to the interior nodes.
  std::vector<Vector> gradient(const std::vector<Vector>& pts) const {
    constexpr double kStep = 1e-5;
    const int n = static_cast<int>(pts.size());
    std::vector<Vector> grad(n, Vector::Zero(m_.n_amb));
    for (int j = 1; j + 1 < n; ++j) {
      Vector g(m_.n_amb);
      Vector node = pts[j];
      for (int i = 0; i < m_.n_amb; ++i) {
        const double saved = node[i];
        node[i] = saved + kStep;
        const double hi =
            segment(pts[j - 1], node, j - 1) + segment(node, pts[j + 1], j);
        node[i] = saved - kStep;
        const double lo =
            segment(pts[j - 1], node, j - 1) + segment(node, pts[j + 1], j);
        node[i] = saved;
        g[i] = (hi - lo) / (2.0 * kStep);
      }
      grad[j] = tangent_project(m_, pts[j], g);
    }
    return grad;
  }

 private:
  const EmbeddedManifold& m_;
  const MetricFn& metric_;
  const std::vector<double>& s_;
};

double stacked_norm(const std::vector<Vector>& vs) {
  double sq = 0.0;
  for (const auto& v : vs) sq += v.squaredNorm();
  return std::sqrt(sq);
}

}  // namespace

MinimizeResult minimize_energy(const EmbeddedManifold& m, const Vector& p1,
                               const Vector& p2, const MetricFn& metric,
                               int n_samples, int max_iters) {
  GeodesicCurve curve = group_geodesic(m, p1, p2, n_samples);
  DiscreteEnergy energy(m, metric, curve.s);

  MinimizeResult result;
  result.initial_energy = energy.total(curve.points);
  double e = result.initial_energy;

  double step = 0.1;
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    const std::vector<Vector> grad = energy.gradient(curve.points);
    const double gnorm = stacked_norm(grad);
    if (gnorm <= 1e-8) {
      result.converged = true;
      break;
    }
    bool accepted = false;
    for (int halving = 0; halving < 50; ++halving) {
      std::vector<Vector> trial = curve.points;
      for (std::size_t j = 1; j + 1 < trial.size(); ++j) {
        trial[j] = retract(m, trial[j] - step * grad[j]);
      }
      const double e_trial = energy.total(trial);
      if (e_trial <= e - 1e-4 * step * gnorm * gnorm) {
        curve.points = std::move(trial);
        e = e_trial;
        step = std::min(step * 1.5, 1e3);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent at machine-level steps
  }

  result.iterations = iter;
  result.energy = e;
  curve.length = std::sqrt(std::max(e, 0.0));
  result.curve = std::move(curve);
  return result;
}

Lemma1Report lemma1_check(const EmbeddedManifold& m, const MetricFn& g1,
                          const MetricFn& g2, double a1, double a2,
                          const std::vector<std::pair<Vector, Vector>>& pairs,
                          int n_samples, int max_iters) {
  Lemma1Report rep;
  rep.n_pairs = static_cast<int>(pairs.size());

  // Premise: a1 g1 <= g2 <= a2 g1 on the tangent spaces at the endpoints.
  for (const auto& [p, q] : pairs) {
    for (const Vector* x : {&p, &q}) {
      const Matrix s = frame(m, *x);
      const Matrix m1 = s.transpose() * g1(*x) * s;
      const Matrix m2 = s.transpose() * g2(*x) * s;
      const double scale = 1.0 + m1.norm();
      Eigen::SelfAdjointEigenSolver<Matrix> lo(m2 - a1 * m1);
      Eigen::SelfAdjointEigenSolver<Matrix> hi(a2 * m1 - m2);
      const double viol =
          std::max(-lo.eigenvalues().minCoeff(), -hi.eigenvalues().minCoeff());
      rep.worst_premise_violation = std::max(rep.worst_premise_violation, viol);
      if (viol > 1e-9 * scale) rep.premise_ok = false;
    }
  }
  if (!rep.premise_ok) {
    rep.pass = false;
    return rep;
  }

  rep.worst_lower_violation = -HUGE_VAL;
  rep.worst_upper_violation = -HUGE_VAL;
  for (const auto& [p, q] : pairs) {
    const double d1 =
        std::sqrt(std::max(
            minimize_energy(m, p, q, g1, n_samples, max_iters).energy, 0.0));
    const double d2 =
        std::sqrt(std::max(
            minimize_energy(m, p, q, g2, n_samples, max_iters).energy, 0.0));
    rep.d1.push_back(d1);
    rep.d2.push_back(d2);
    const double slack = 1e-6 * (1.0 + d1);
    rep.worst_lower_violation =
        std::max(rep.worst_lower_violation, std::sqrt(a1) * d1 - d2 - slack);
    rep.worst_upper_violation =
        std::max(rep.worst_upper_violation, d2 - std::sqrt(a2) * d1 - slack);
  }
  rep.pass =
      rep.worst_lower_violation <= 0.0 && rep.worst_upper_violation <= 0.0;
  return rep;
}

}  // namespace ccm
