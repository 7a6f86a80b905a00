#pragma once

#include "ccm/rng.hpp"
#include "ccm/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ccm {

/// Tolerance for accepting a point as on-manifold in checked operations.
inline constexpr double kOnManifoldTol = 1e-6;

/// One factor of a product-group embedding. Rotation factors occupy
/// dim*dim ambient coordinates (row-major matrix entries); vector factors
/// occupy dim coordinates.
struct FactorSpec {
  enum class Kind { kRotation, kVector };
  Kind kind = Kind::kVector;
  int offset = 0;
  int dim = 0;
  /// Rotation factors only: sample from (and live in) the det = -1
  /// component of O(dim) instead of the identity component.
  bool negative_det = false;
};

/// A matrix Lie group (possibly times a vector space) embedded in R^n_amb
/// as the zero set of the constraint map h. The frame S(x) spans the
/// tangent space at x; its columns are ordered vector factors first, then
/// rotation factors, matching the built-in reduced-operator conventions.
struct EmbeddedManifold {
  std::string name;
  int n_amb = 0;
  int n_con = 0;
  int n_dim = 0;
  std::vector<FactorSpec> factors;
  std::function<Vector(const Vector&)> h;
  std::function<Matrix(const Vector&)> jac_h;
  std::function<Matrix(const Vector&)> frame;
};

// Group catalog.
EmbeddedManifold make_rn(int n);
EmbeddedManifold make_o2xr(bool negative_component = false);
EmbeddedManifold make_so3();
EmbeddedManifold make_se3();

/// Lookup by the config/CLI name: "rn", "o2xr", "so3", "se3".
EmbeddedManifold manifold_by_name(const std::string& name, int rn_dim = 1);

/// h(x). Throws InvalidInputError on dimension mismatch.
Vector constraint_residual(const EmbeddedManifold& m, const Vector& x);

bool on_manifold(const EmbeddedManifold& m, const Vector& x,
                 double tol = kOnManifoldTol);

/// S(x) with an on-manifold precondition check.
Matrix frame(const EmbeddedManifold& m, const Vector& x);

/// P_S = S (S^T S)^{-1}.
Matrix projector(const EmbeddedManifold& m, const Vector& x);

/// Orthogonal projector onto T_x M: P_S S^T.
Matrix tangent_projector(const EmbeddedManifold& m, const Vector& x);

/// Projection of an ambient vector onto T_x M.
Vector tangent_project(const EmbeddedManifold& m, const Vector& x,
                       const Vector& v);

/// Nearest-point projection back onto the manifold: polar factor on
/// rotation blocks, identity on vector blocks.
Vector retract(const EmbeddedManifold& m, const Vector& y);

/// Deterministic sample: Haar-uniform rotation factors (orthonormalized
/// Gaussian with determinant correction), standard normal vector factors.
Vector random_point(const EmbeddedManifold& m, Rng& rng);
Vector random_point(const EmbeddedManifold& m, std::uint64_t seed);

std::vector<Vector> sample_points(const EmbeddedManifold& m, int n,
                                  std::uint64_t seed);

/// c_S: max over samples of the spectral norm of S (S^T S)^{-1}.
double frame_bound(const EmbeddedManifold& m, int n_samples,
                   std::uint64_t seed);

}  // namespace ccm
