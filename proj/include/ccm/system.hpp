#pragma once

#include "ccm/manifold.hpp"
#include "ccm/types.hpp"

#include <string>
#include <vector>

namespace ccm {

/// Finite-difference step for Jacobians of f and b_i when no analytic map
/// is supplied.
inline constexpr double kJacFdStep = 1e-5;

/// Finite-difference step for directional derivatives of P_S^T along a
/// vector field (perturbed points are retracted back onto the manifold).
inline constexpr double kFrameFdStep = 1e-5;

/// Control-affine system xdot = f(x,t) + B(x,t) u restricted to an
/// embedded manifold. Missing Jacobians fall back to central finite
/// differences.
struct ControlAffineSystem {
  std::string name;
  EmbeddedManifold manifold;
  int m = 0;
  bool autonomous = true;
  /// Builtin parameters, persisted alongside certificates.
  std::vector<double> params;
  VectorField f;
  std::vector<VectorField> b;
  MatrixField jac_f;               // empty -> finite differences
  std::vector<MatrixField> jac_b;  // empty entries -> finite differences
};

/// B(x,t) = [b_1 ... b_m].
Matrix input_matrix(const ControlAffineSystem& sys, const Vector& x, double t);

Vector rhs(const ControlAffineSystem& sys, const Vector& x, const Vector& u,
           double t);

Matrix drift_jacobian(const ControlAffineSystem& sys, const Vector& x,
                      double t);
Matrix input_jacobian(const ControlAffineSystem& sys, const Vector& x,
                      double t, int i);

/// A(x,u,t) = df/dx + sum_i u_i db_i/dx.
Matrix variational_matrix(const ControlAffineSystem& sys, const Vector& x,
                          const Vector& u, double t);

/// E with B = S E, computed as (S^T S)^{-1} S^T B. Throws NotTangentError
/// when the factorization residual exceeds tolerance.
Matrix factor_E(const ControlAffineSystem& sys, const Vector& x, double t,
                double tol = 1e-8);

/// S_f = D_f(P_S^T) S + P_S^T df/dx S.
Matrix reduced_drift(const ControlAffineSystem& sys, const Vector& x, double t);

/// S_{b_i} = D_{b_i}(P_S^T) S + P_S^T db_i/dx S.
Matrix reduced_input(const ControlAffineSystem& sys, const Vector& x, double t,
                     int i);

struct TransversalityReport {
  double max_drift_residual = 0.0;
  std::vector<double> max_input_residual;
  int worst_input = -1;  // -1: drift (or nothing sampled)
  double tol = 0.0;
  bool pass = true;
  std::string summary() const;
};

/// Max of |jac_h f| and |jac_h b_i| over the samples; pass iff <= tol.
TransversalityReport transversality_check(const ControlAffineSystem& sys,
                                          const std::vector<Vector>& samples,
                                          double t = 0.0, double tol = 1e-9);

/// Builtins: "se3-heading" (params {k, e1, e2, e3}), "o2xr-toy",
/// "scalar-linear".
ControlAffineSystem builtin_system(const std::string& name,
                                   const std::vector<double>& params = {});

}  // namespace ccm
