#include "ccm/synthesis.hpp"

#include "ccm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ccm {

MonomialBasis MonomialBasis::build(int n_amb, int degree) {
  if (degree < 0 || degree > 2) {
    throw InvalidInputError("MonomialBasis: degree must be in {0, 1, 2}");
  }
  MonomialBasis basis;
  basis.n_amb = n_amb;
  basis.degree = degree;
  basis.exponents.emplace_back(n_amb, 0);
  if (degree >= 1) {
    for (int i = 0; i < n_amb; ++i) {
      std::vector<int> e(n_amb, 0);
      e[i] = 1;
      basis.exponents.push_back(std::move(e));
    }
  }
  if (degree >= 2) {
    for (int i = 0; i < n_amb; ++i) {
      for (int j = i; j < n_amb; ++j) {
        std::vector<int> e(n_amb, 0);
        e[i] += 1;
        e[j] += 1;
        basis.exponents.push_back(std::move(e));
      }
    }
  }
  return basis;
}

Vector MonomialBasis::values(const Vector& x) const {
  Vector out(size());
  for (int k = 0; k < size(); ++k) {
    double v = 1.0;
    for (int i = 0; i < n_amb; ++i) {
      for (int p = 0; p < exponents[k][i]; ++p) v *= x[i];
    }
    out[k] = v;
  }
  return out;
}

Vector MonomialBasis::directional(const Vector& x, const Vector& dir) const {
  Vector out = Vector::Zero(size());
  for (int k = 0; k < size(); ++k) {
    for (int i = 0; i < n_amb; ++i) {
      const int a = exponents[k][i];
      if (a == 0) continue;
      double term = a * dir[i];
      for (int j = 0; j < n_amb; ++j) {
        const int p = exponents[k][j] - (j == i ? 1 : 0);
        for (int q = 0; q < p; ++q) term *= x[j];
      }
      out[k] += term;
    }
  }
  return out;
}

Matrix MetricParameterization::W_at(const Vector& x) const {
  const Vector phi = basis.values(x);
  Matrix w = Matrix::Zero(n_dim, n_dim);
  for (int k = 0; k < basis.size(); ++k) w += phi[k] * coeffs[k];
  return w;
}

Matrix MetricParameterization::W_directional(const Vector& x,
                                             const Vector& dir) const {
  const Vector dphi = basis.directional(x, dir);
  Matrix dw = Matrix::Zero(n_dim, n_dim);
  for (int k = 0; k < basis.size(); ++k) dw += dphi[k] * coeffs[k];
  return dw;
}

double MetricParameterization::rho_at(const Vector& x) const {
  if (!rho_enabled) return 0.0;
  const double p = basis.values(x).dot(rho_coeffs);
  return p * p;
}

std::string VerificationReport::worst_condition(double eps_margin,
                                                double eps_kill) const {
  const double margins[] = {worst_r1 + eps_margin, worst_r0_lo, worst_r0_hi,
                            worst_kill - eps_kill};
  const char* names[] = {"R1", "R0_lo", "R0_hi", "killing"};
  int worst = 0;
  for (int i = 1; i < 4; ++i) {
    if (margins[i] > margins[worst]) worst = i;
  }
  return names[worst];
}

void ContractionCertificate::validate() const {
  if (!(a1 > 0.0) || !(a2 >= a1)) {
    throw InvalidInputError("certificate: requires a2 >= a1 > 0");
  }
  if (!(lambda > 0.0)) {
    throw InvalidInputError("certificate: requires lambda > 0");
  }
  if (static_cast<int>(param.coeffs.size()) != param.basis.size()) {
    throw InvalidInputError("certificate: coefficient/basis size mismatch");
  }
  for (const Matrix& w : param.coeffs) {
    if (w.rows() != param.n_dim || w.cols() != param.n_dim) {
      throw InvalidInputError("certificate: coefficient shape mismatch");
    }
  }
  if (param.rho_coeffs.size() != param.basis.size()) {
    throw InvalidInputError("certificate: rho coefficient size mismatch");
  }
}

LmiResiduals lmi_residuals(const ContractionCertificate& cert,
                           const ControlAffineSystem& sys, const Vector& x,
                           double t) {
  const int q = cert.param.n_dim;
  const Matrix eye = Matrix::Identity(q, q);
  const Matrix w = cert.param.W_at(x);

  LmiResiduals res;
  res.r0_lo = eye / cert.a2 - w;
  res.r0_hi = w - eye / cert.a1;

  const Matrix s_f = reduced_drift(sys, x, t);
  const Matrix e = factor_E(sys, x, t);
  // The parameterization is time-invariant, so dW/dt contributes nothing.
  const Matrix df_w = cert.param.W_directional(x, sys.f(x, t));
  res.r1 = -df_w + w * s_f.transpose() + s_f * w + 2.0 * cert.lambda * w -
           cert.param.rho_at(x) * (e * e.transpose());
  res.r1 = 0.5 * (res.r1 + res.r1.transpose()).eval();

  for (int i = 0; i < sys.m; ++i) {
    const Matrix s_b = reduced_input(sys, x, t, i);
    const Matrix db_w = cert.param.W_directional(x, sys.b[i](x, t));
    Matrix r2 = -db_w + w * s_b.transpose() + s_b * w;
    res.r2.push_back(0.5 * (r2 + r2.transpose()));
  }
  return res;
}

namespace {

// Decision variables are the symmetric coefficient matrices of W plus the
// rho coefficients. Everything that does not depend on them is frozen per
// grid point before the descent starts.
struct PointData {
  Vector x;
  Matrix s_f;
  std::vector<Matrix> s_b;
  Matrix ee_t;
  Vector e_sq;  // cached |E^T v|^2 helper storage unused; E kept for r1
  Matrix e;
  Vector phi;
  Vector dphi_f;
  std::vector<Vector> dphi_b;
};

struct PointWorst {
  double r1 = -HUGE_VAL;
  double r0_lo = -HUGE_VAL;
  double r0_hi = -HUGE_VAL;
  double kill = 0.0;
};

struct Objective {
  double value = 0.0;
  PointWorst worst;
  int worst_r1_index = 0;
  int worst_kill_index = 0;
};

double relu(double v) { return v > 0.0 ? v : 0.0; }

class SynthesisProblem {
 public:
  SynthesisProblem(const ControlAffineSystem& sys, double lambda,
                   const SynthesisOptions& opt)
      : sys_(sys), lambda_(lambda), opt_(opt) {
    n_dim_ = sys.manifold.n_dim;
    basis_ = MonomialBasis::build(sys.manifold.n_amb, opt.degree);
    margin_target_ = opt.margin_target > 0.0
                         ? opt.margin_target
                         : std::max(10.0 * opt.eps_margin, 1e-3 * lambda);
    const auto grid = sample_points(sys.manifold, opt.grid_size, opt.seed);
    points_.reserve(grid.size());
    for (const Vector& x : grid) points_.push_back(freeze(x));
  }

  void add_point(const Vector& x) { points_.push_back(freeze(x)); }

  PointData freeze(const Vector& x) const {
    PointData p;
    p.x = x;
    p.s_f = reduced_drift(sys_, x, 0.0);
    p.e = factor_E(sys_, x, 0.0);
    p.ee_t = p.e * p.e.transpose();
    p.phi = basis_.values(x);
    p.dphi_f = basis_.directional(x, sys_.f(x, 0.0));
    for (int i = 0; i < sys_.m; ++i) {
      p.s_b.push_back(reduced_input(sys_, x, 0.0, i));
      p.dphi_b.push_back(basis_.directional(x, sys_.b[i](x, 0.0)));
    }
    return p;
  }

  int n_basis() const { return basis_.size(); }
  const MonomialBasis& basis() const { return basis_; }
  double margin_target() const { return margin_target_; }
  const std::vector<PointData>& points() const { return points_; }

  Objective evaluate(const std::vector<Matrix>& w_coeffs, const Vector& rho,
                     std::vector<Matrix>* grad_w, Vector* grad_rho) const {
    return evaluate_on(points_, w_coeffs, rho, grad_w, grad_rho);
  }

  // Objective and (optionally) its gradient with respect to the W
  // coefficients and rho coefficients, over an arbitrary point set.
  // per_point_r1, when given, receives lambda_max(R1) for every point.
  Objective evaluate_on(const std::vector<PointData>& pts,
                        const std::vector<Matrix>& w_coeffs, const Vector& rho,
                        std::vector<Matrix>* grad_w, Vector* grad_rho,
                        std::vector<double>* per_point_r1 = nullptr) const {
    Objective obj;
    if (grad_w) {
      grad_w->assign(n_basis(), Matrix::Zero(n_dim_, n_dim_));
      grad_rho->setZero(n_basis());
    }
    for (int pi = 0; pi < static_cast<int>(pts.size()); ++pi) {
      const PointData& p = pts[pi];
      Matrix w = Matrix::Zero(n_dim_, n_dim_);
      Matrix df_w = Matrix::Zero(n_dim_, n_dim_);
      for (int k = 0; k < n_basis(); ++k) {
        w += p.phi[k] * w_coeffs[k];
        df_w += p.dphi_f[k] * w_coeffs[k];
      }
      const double rho_lin = opt_.rho_enabled ? p.phi.dot(rho) : 0.0;
      const double rho_val = rho_lin * rho_lin;

      Matrix r1 = -df_w + w * p.s_f.transpose() + p.s_f * w +
                  2.0 * lambda_ * w - rho_val * p.ee_t;
      r1 = 0.5 * (r1 + r1.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Matrix> eig_r1(r1);
      const double lam1 = eig_r1.eigenvalues().maxCoeff();
      if (per_point_r1) per_point_r1->push_back(lam1);
      if (lam1 > obj.worst.r1) {
        obj.worst.r1 = lam1;
        obj.worst_r1_index = pi;
      }

      Eigen::SelfAdjointEigenSolver<Matrix> eig_w(w);
      const double w_min = eig_w.eigenvalues().minCoeff();
      const double w_max = eig_w.eigenvalues().maxCoeff();
      const double lo_val = 1.0 / opt_.a2 - w_min;
      const double hi_val = w_max - 1.0 / opt_.a1;
      obj.worst.r0_lo = std::max(obj.worst.r0_lo, lo_val);
      obj.worst.r0_hi = std::max(obj.worst.r0_hi, hi_val);

      const double t1 = relu(lam1 + margin_target_);
      const double t_lo = relu(lo_val + kBoundShift);
      const double t_hi = relu(hi_val + kBoundShift);
      obj.value += t1 * t1 + t_lo * t_lo + t_hi * t_hi;

      if (grad_w) {
        if (t1 > 0.0) {
          const Vector v = eig_r1.eigenvectors().col(n_dim_ - 1);
          const Vector sv = p.s_f.transpose() * v;
          for (int k = 0; k < n_basis(); ++k) {
            (*grad_w)[k] +=
                2.0 * t1 *
                ((2.0 * lambda_ * p.phi[k] - p.dphi_f[k]) * (v * v.transpose()) +
                 p.phi[k] * (sv * v.transpose() + v * sv.transpose()));
          }
          if (opt_.rho_enabled) {
            const double de = -(p.e.transpose() * v).squaredNorm();
            *grad_rho += 2.0 * t1 * de * 2.0 * rho_lin * p.phi;
          }
        }
        if (t_lo > 0.0) {
          const Vector v = eig_w.eigenvectors().col(0);
          for (int k = 0; k < n_basis(); ++k) {
            (*grad_w)[k] += 2.0 * t_lo * (-p.phi[k]) * (v * v.transpose());
          }
        }
        if (t_hi > 0.0) {
          const Vector v = eig_w.eigenvectors().col(n_dim_ - 1);
          for (int k = 0; k < n_basis(); ++k) {
            (*grad_w)[k] += 2.0 * t_hi * p.phi[k] * (v * v.transpose());
          }
        }
      }

      for (int i = 0; i < sys_.m; ++i) {
        Matrix db_w = Matrix::Zero(n_dim_, n_dim_);
        for (int k = 0; k < n_basis(); ++k) db_w += p.dphi_b[i][k] * w_coeffs[k];
        Matrix r2 = -db_w + w * p.s_b[i].transpose() + p.s_b[i] * w;
        r2 = 0.5 * (r2 + r2.transpose()).eval();
        const double kill = r2.norm();
        if (kill > obj.worst.kill) {
          obj.worst.kill = kill;
          obj.worst_kill_index = pi;
        }
        obj.value += r2.squaredNorm();
        if (grad_w) {
          for (int k = 0; k < n_basis(); ++k) {
            (*grad_w)[k] += 2.0 * (-p.dphi_b[i][k] * r2 +
                                   p.phi[k] * (r2 * p.s_b[i] +
                                               p.s_b[i].transpose() * r2));
          }
        }
      }
    }
    return obj;
  }

  bool grid_feasible(const PointWorst& w) const {
    return w.r1 <= -margin_target_ && w.r0_lo <= -kBoundShift &&
           w.r0_hi <= -kBoundShift && w.kill <= 0.25 * opt_.eps_kill;
  }

  static constexpr double kBoundShift = 1e-9;

 private:
  const ControlAffineSystem& sys_;
  double lambda_ = 0.0;
  SynthesisOptions opt_;
  int n_dim_ = 0;
  MonomialBasis basis_;
  double margin_target_ = 0.0;
  std::vector<PointData> points_;
};

ContractionCertificate assemble_certificate(const ControlAffineSystem& sys,
                                            double lambda,
                                            const SynthesisOptions& opt,
                                            const MonomialBasis& basis,
                                            std::vector<Matrix> w_coeffs,
                                            Vector rho) {
  ContractionCertificate cert;
  cert.system_name = sys.name;
  cert.system_params = sys.params;
  cert.lambda = lambda;
  cert.a1 = opt.a1;
  cert.a2 = opt.a2;
  cert.eps_margin = opt.eps_margin;
  cert.eps_kill = opt.eps_kill;
  cert.param.n_dim = sys.manifold.n_dim;
  cert.param.degree = opt.degree;
  cert.param.basis = basis;
  cert.param.coeffs = std::move(w_coeffs);
  cert.param.rho_coeffs = std::move(rho);
  cert.param.rho_enabled = opt.rho_enabled;
  cert.grid_seed = opt.seed;
  cert.grid_size = opt.grid_size;
  return cert;
}

std::string describe_worst(const PointWorst& w, int index) {
  std::ostringstream out;
  out << "worst lambda_max(R1) = " << w.r1 << " (grid point " << index << ")"
      << ", worst R0_lo margin = " << w.r0_lo
      << ", worst R0_hi margin = " << w.r0_hi
      << ", worst Killing residual = " << w.kill;
  return out.str();
}

}  // namespace

SynthesisResult synthesize(const ControlAffineSystem& sys, double lambda,
                           const SynthesisOptions& options) {
  if (lambda <= 0.0) {
    throw InvalidInputError("synthesize: lambda must be positive");
  }
  if (!(options.a1 > 0.0) || !(options.a2 >= options.a1)) {
    throw InvalidInputError("synthesize: requires a2 >= a1 > 0");
  }
  if (options.grid_size < 1) {
    throw InvalidInputError("synthesize: grid_size must be positive");
  }
  {
    const auto probe = sample_points(sys.manifold, 16, options.seed);
    const auto trans = transversality_check(sys, probe);
    if (!trans.pass) {
      throw NotTangentError("synthesize: " + trans.summary());
    }
  }

  SynthesisProblem problem(sys, lambda, options);
  const int nb = problem.n_basis();
  const int q = sys.manifold.n_dim;

  std::vector<Matrix> w_coeffs(nb, Matrix::Zero(q, q));
  w_coeffs[0] = 0.5 * (1.0 / options.a1 + 1.0 / options.a2) *
                Matrix::Identity(q, q);
  Vector rho = Vector::Zero(nb);
  if (options.rho_enabled) rho[0] = 1.0;

  std::vector<Matrix> grad_w;
  Vector grad_rho;
  Objective obj = problem.evaluate(w_coeffs, rho, &grad_w, &grad_rho);

  // Backtracking spectral descent over the current grid. Returns false
  // when no descent step is possible any more.
  int total_iters = 0;
  double step = 1e-2;
  auto descend = [&]() {
    for (; total_iters < options.max_iters &&
           !problem.grid_feasible(obj.worst);
         ++total_iters) {
      double gnorm_sq = grad_rho.squaredNorm();
      for (const Matrix& g : grad_w) gnorm_sq += g.squaredNorm();
      if (gnorm_sq < 1e-30) return;  // stationary
      bool accepted = false;
      for (int halving = 0; halving < 60; ++halving) {
        std::vector<Matrix> w_trial(nb);
        for (int k = 0; k < nb; ++k) {
          w_trial[k] = w_coeffs[k] - step * grad_w[k];
        }
        Vector rho_trial = rho - step * grad_rho;
        const Objective trial =
            problem.evaluate(w_trial, rho_trial, nullptr, nullptr);
        if (trial.value <= obj.value - 1e-4 * step * gnorm_sq ||
            problem.grid_feasible(trial.worst)) {
          w_coeffs = std::move(w_trial);
          rho = std::move(rho_trial);
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) return;
      obj = problem.evaluate(w_coeffs, rho, &grad_w, &grad_rho);
      step = std::min(step * 1.3, 10.0);
    }
  };

  SynthesisResult result;

  // Scenario refinement: after the grid becomes feasible, probe a dense
  // fresh sample; as long as it finds materially worse points, fold the
  // worst of them into the grid and keep descending. This keeps the grid
  // maximum an honest estimate of the manifold maximum.
  constexpr int kMaxRounds = 12;
  constexpr int kAugmentPerRound = 8;
  int augmented = 0;
  bool accepted = false;
  for (int round = 0; round <= kMaxRounds; ++round) {
    descend();
    if (!problem.grid_feasible(obj.worst)) {
      result.feasible = false;
      result.iterations = total_iters;
      result.final_objective = obj.value;
      result.certificate =
          assemble_certificate(sys, lambda, options, problem.basis(),
                               std::move(w_coeffs), std::move(rho));
      result.certificate.status = "infeasible";
      result.certificate.grid_worst_r1 = obj.worst.r1;
      result.diagnostics =
          "grid residuals not feasible after " + std::to_string(total_iters) +
          " iterations (not a proof of infeasibility): " +
          describe_worst(obj.worst, obj.worst_r1_index);
      return result;
    }
    if (round == kMaxRounds) break;

    const std::uint64_t probe_seed =
        options.seed * 2654435761ull + 10007ull * (round + 1);
    const auto dense_pts =
        sample_points(sys.manifold, 10 * options.grid_size, probe_seed);
    std::vector<PointData> dense;
    dense.reserve(dense_pts.size());
    for (const Vector& x : dense_pts) dense.push_back(problem.freeze(x));
    std::vector<double> r1_values;
    r1_values.reserve(dense.size());
    const Objective probe = problem.evaluate_on(dense, w_coeffs, rho, nullptr,
                                                nullptr, &r1_values);
    const bool dense_ok = probe.worst.r1 <= -options.eps_margin &&
                          probe.worst.r0_lo <= 0.0 &&
                          probe.worst.r0_hi <= 0.0 &&
                          probe.worst.kill <= options.eps_kill;
    const double gap = probe.worst.r1 - obj.worst.r1;
    if (dense_ok && gap <= 0.25 * options.eps_margin) {
      accepted = true;
      break;
    }
    // Fold in the worst fresh points by contraction residual, plus the
    // worst Killing point when it is the binding condition.
    std::vector<int> order(dense.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::partial_sort(order.begin(),
                      order.begin() +
                          std::min<std::size_t>(kAugmentPerRound, order.size()),
                      order.end(), [&](int a, int b) {
                        return r1_values[a] > r1_values[b];
                      });
    for (int i = 0;
         i < std::min<int>(kAugmentPerRound, static_cast<int>(order.size()));
         ++i) {
      problem.add_point(dense_pts[order[i]]);
      ++augmented;
    }
    if (probe.worst.kill > 0.5 * options.eps_kill) {
      problem.add_point(dense_pts[probe.worst_kill_index]);
      ++augmented;
    }
    obj = problem.evaluate(w_coeffs, rho, &grad_w, &grad_rho);
  }

  result.iterations = total_iters;
  result.final_objective = obj.value;
  result.certificate = assemble_certificate(
      sys, lambda, options, problem.basis(), std::move(w_coeffs),
      std::move(rho));
  result.certificate.grid_worst_r1 = obj.worst.r1;

  const std::uint64_t verify_seed = options.seed * 2654435761ull + 104729ull;
  const VerificationReport report =
      verify(result.certificate, sys, 10 * options.grid_size, verify_seed);
  result.certificate.report = report;
  if (report.pass && accepted) {
    result.feasible = true;
    result.certificate.status = "verified";
    if (augmented > 0) {
      result.diagnostics = "grid augmented with " + std::to_string(augmented) +
                           " adversarial samples during refinement";
    }
  } else {
    result.feasible = false;
    result.certificate.status = "infeasible";
    result.diagnostics =
        report.pass
            ? "scenario refinement did not close the grid/dense gap within "
              "its round budget"
            : "grid residuals feasible but the dense fresh sample failed on " +
                  report.worst_condition(options.eps_margin, options.eps_kill);
  }
  return result;
}

VerificationReport verify(const ContractionCertificate& cert,
                          const ControlAffineSystem& sys, int n_samples,
                          std::uint64_t seed) {
  cert.validate();
  VerificationReport rep;
  rep.n_samples = n_samples;
  rep.seed = seed;
  rep.worst_r1 = -HUGE_VAL;
  rep.worst_r0_lo = -HUGE_VAL;
  rep.worst_r0_hi = -HUGE_VAL;
  rep.worst_kill = 0.0;
  Rng rng(seed);
  for (int i = 0; i < n_samples; ++i) {
    const Vector x = random_point(sys.manifold, rng);
    const LmiResiduals res = lmi_residuals(cert, sys, x, 0.0);
    rep.worst_r1 = std::max(
        rep.worst_r1,
        Eigen::SelfAdjointEigenSolver<Matrix>(res.r1).eigenvalues().maxCoeff());
    rep.worst_r0_lo =
        std::max(rep.worst_r0_lo, Eigen::SelfAdjointEigenSolver<Matrix>(
                                      res.r0_lo).eigenvalues().maxCoeff());
    rep.worst_r0_hi =
        std::max(rep.worst_r0_hi, Eigen::SelfAdjointEigenSolver<Matrix>(
                                      res.r0_hi).eigenvalues().maxCoeff());
    for (const Matrix& r2 : res.r2) {
      rep.worst_kill = std::max(rep.worst_kill, r2.norm());
    }
  }
  rep.pass = rep.worst_r1 <= -cert.eps_margin && rep.worst_r0_lo <= 0.0 &&
             rep.worst_r0_hi <= 0.0 && rep.worst_kill <= cert.eps_kill;
  return rep;
}

Matrix metric_at(const ContractionCertificate& cert, const EmbeddedManifold& m,
                 const Vector& x, double t) {
  (void)t;  // the stored parameterization is time-invariant
  if (!on_manifold(m, x)) {
    throw PreconditionError("metric_at: point is off-manifold");
  }
  const Matrix w = cert.param.W_at(x);
  Eigen::LDLT<Matrix> ldlt(w);
  if (ldlt.info() != Eigen::Success ||
      ldlt.vectorD().minCoeff() < 1e-12 * std::max(1.0, w.norm())) {
    throw CertificateDegenerateError(
        "metric_at: W(x) is numerically singular");
  }
  const Matrix w_inv = ldlt.solve(Matrix::Identity(w.rows(), w.cols()));
  const Matrix p = projector(m, x);
  Matrix metric = p * w_inv * p.transpose();
  return 0.5 * (metric + metric.transpose());
}

}  // namespace ccm
