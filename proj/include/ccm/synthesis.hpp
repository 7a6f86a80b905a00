#pragma once

#include "ccm/system.hpp"
#include "ccm/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ccm {

/// Monomials in the ambient coordinates up to a total degree bound; the
/// first element is the constant monomial.
struct MonomialBasis {
  int n_amb = 0;
  int degree = 0;
  std::vector<std::vector<int>> exponents;

  static MonomialBasis build(int n_amb, int degree);
  int size() const { return static_cast<int>(exponents.size()); }
  /// phi_k(x) for all k.
  Vector values(const Vector& x) const;
  /// grad phi_k(x) . dir for all k.
  Vector directional(const Vector& x, const Vector& dir) const;
};

/// W(x) = sum_k phi_k(x) W_k with symmetric coefficient matrices, and
/// rho(x) = (sum_k phi_k(x) r_k)^2 so the multiplier is nonnegative by
/// construction.
struct MetricParameterization {
  int n_dim = 0;
  int degree = 0;
  MonomialBasis basis;
  std::vector<Matrix> coeffs;
  Vector rho_coeffs;
  bool rho_enabled = true;

  Matrix W_at(const Vector& x) const;
  /// D_dir W(x), analytic from the monomial gradients.
  Matrix W_directional(const Vector& x, const Vector& dir) const;
  double rho_at(const Vector& x) const;
};

struct VerificationReport {
  int n_samples = 0;
  std::uint64_t seed = 0;
  double worst_r1 = 0.0;     // max over samples of lambda_max(R1)
  double worst_r0_lo = 0.0;  // max lambda_max((1/a2) I - W)
  double worst_r0_hi = 0.0;  // max lambda_max(W - (1/a1) I)
  double worst_kill = 0.0;   // max Frobenius norm of R2[i]
  bool pass = false;
  /// Name of the condition with the least margin ("R1", "R0_lo", "R0_hi",
  /// "killing"); used by failure messages.
  std::string worst_condition(double eps_margin, double eps_kill) const;
};

struct ContractionCertificate {
  std::string system_name;
  std::vector<double> system_params;
  double lambda = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double eps_margin = 1e-6;
  double eps_kill = 1e-8;
  MetricParameterization param;
  std::uint64_t grid_seed = 0;
  int grid_size = 0;
  /// Worst lambda_max(R1) over the solver's final (augmented) grid; the
  /// dense report degrading little past this is the smoothness safeguard.
  double grid_worst_r1 = 0.0;
  std::string status;  // "verified" or "infeasible"
  VerificationReport report;

  void validate() const;  // a2 >= a1 > 0, lambda > 0, shapes consistent
};

/// Residuals of the convexified conditions at one point. Feasibility
/// requires r0_lo, r0_hi negative semidefinite, r1 < -eps_margin I, and
/// |r2[i]|_F <= eps_kill.
struct LmiResiduals {
  Matrix r0_lo;
  Matrix r0_hi;
  Matrix r1;
  std::vector<Matrix> r2;
};

LmiResiduals lmi_residuals(const ContractionCertificate& cert,
                           const ControlAffineSystem& sys, const Vector& x,
                           double t);

struct SynthesisOptions {
  int degree = 0;
  int grid_size = 100;
  std::uint64_t seed = 1;
  double a1 = 0.1;
  double a2 = 10.0;
  double eps_margin = 1e-6;
  double eps_kill = 1e-8;
  int max_iters = 5000;
  bool rho_enabled = true;
  /// Internal feasibility target for lambda_max(R1) on the grid; stricter
  /// than eps_margin so the dense verification sample passes with room.
  /// Nonpositive selects max(10 eps_margin, 1e-3 lambda).
  double margin_target = 0.0;
};

struct SynthesisResult {
  bool feasible = false;
  ContractionCertificate certificate;
  std::string diagnostics;
  int iterations = 0;
  double final_objective = 0.0;
};

/// Penalized spectral-descent feasibility search for W and rho on a
/// seeded manifold grid, followed by verification on a 10x denser fresh
/// sample. An infeasible result is a diagnosis, not a proof.
SynthesisResult synthesize(const ControlAffineSystem& sys, double lambda,
                           const SynthesisOptions& options);

/// Re-evaluates the residuals at fresh random samples.
VerificationReport verify(const ContractionCertificate& cert,
                          const ControlAffineSystem& sys, int n_samples,
                          std::uint64_t seed);

/// M(x, t) = P_S W^{-1} P_S^T.
Matrix metric_at(const ContractionCertificate& cert, const EmbeddedManifold& m,
                 const Vector& x, double t);

/// Writes the sampled degree-0 feasibility problem in SDPA sparse format:
/// one R1 block per grid point, two bound blocks for W, and paired
/// eps_kill-relaxed blocks per point and input when any S_{b_i} is
/// nonzero. Variables are the upper triangle of W (row-wise) followed by
/// rho.
void export_sdpa(const ControlAffineSystem& sys, double lambda,
                 const std::vector<Vector>& grid,
                 const SynthesisOptions& options, const std::string& path);

}  // namespace ccm
