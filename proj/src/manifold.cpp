#include "ccm/manifold.hpp"

#include "ccm/errors.hpp"
#include "ccm/lie.hpp"

#include <cmath>
#include <sstream>

namespace ccm {
namespace {

// Constraint rows for one rotation factor: the independent entries of
// R^T R - I, diagonal entries first, then the upper off-diagonal pairs in
// lexicographic order. For O(2) this reproduces the displayed h.
std::vector<std::pair<int, int>> constraint_pairs(int dim) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < dim; ++i) pairs.emplace_back(i, i);
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) pairs.emplace_back(i, j);
  return pairs;
}

Vector factor_h(const FactorSpec& f, const Vector& x) {
  const int d = f.dim;
  Vector out(d * (d + 1) / 2);
  int row = 0;
  for (const auto& [i, j] : constraint_pairs(d)) {
    double dot = 0.0;
    for (int a = 0; a < d; ++a)
      dot += x[f.offset + a * d + i] * x[f.offset + a * d + j];
    out[row++] = dot - (i == j ? 1.0 : 0.0);
  }
  return out;
}

Matrix factor_jac_h(const FactorSpec& f, const Vector& x, int n_amb) {
  const int d = f.dim;
  Matrix jac = Matrix::Zero(d * (d + 1) / 2, n_amb);
  int row = 0;
  for (const auto& [i, j] : constraint_pairs(d)) {
    for (int a = 0; a < d; ++a) {
      jac(row, f.offset + a * d + i) += x[f.offset + a * d + j];
      jac(row, f.offset + a * d + j) += x[f.offset + a * d + i];
    }
    ++row;
  }
  return jac;
}

EmbeddedManifold from_factors(std::string name,
                              std::vector<FactorSpec> factors) {
  EmbeddedManifold m;
  m.name = std::move(name);
  m.factors = std::move(factors);
  for (const auto& f : m.factors) {
    if (f.kind == FactorSpec::Kind::kRotation) {
      m.n_amb += f.dim * f.dim;
      m.n_con += f.dim * (f.dim + 1) / 2;
      m.n_dim += f.dim * (f.dim - 1) / 2;
    } else {
      m.n_amb += f.dim;
      m.n_dim += f.dim;
    }
  }
  const auto factors_copy = m.factors;
  const int n_amb = m.n_amb;
  const int n_con = m.n_con;
  const int n_dim = m.n_dim;

  m.h = [factors_copy, n_con](const Vector& x) {
    Vector out(n_con);
    int row = 0;
    for (const auto& f : factors_copy) {
      if (f.kind != FactorSpec::Kind::kRotation) continue;
      const Vector hf = factor_h(f, x);
      out.segment(row, hf.size()) = hf;
      row += static_cast<int>(hf.size());
    }
    return out;
  };

  m.jac_h = [factors_copy, n_amb, n_con](const Vector& x) {
    Matrix jac = Matrix::Zero(n_con, n_amb);
    int row = 0;
    for (const auto& f : factors_copy) {
      if (f.kind != FactorSpec::Kind::kRotation) continue;
      const Matrix jf = factor_jac_h(f, x, n_amb);
      jac.middleRows(row, jf.rows()) = jf;
      row += static_cast<int>(jf.rows());
    }
    return jac;
  };

  // Vector-factor columns first, then rotation-factor columns vec(R E_k).
  m.frame = [factors_copy, n_amb, n_dim](const Vector& x) {
    Matrix s = Matrix::Zero(n_amb, n_dim);
    int col = 0;
    for (const auto& f : factors_copy) {
      if (f.kind != FactorSpec::Kind::kVector) continue;
      for (int i = 0; i < f.dim; ++i) s(f.offset + i, col++) = 1.0;
    }
    for (const auto& f : factors_copy) {
      if (f.kind != FactorSpec::Kind::kRotation) continue;
      const Matrix r = unvec_rowmajor(x.segment(f.offset, f.dim * f.dim), f.dim);
      for (const Matrix& e : so_basis(f.dim)) {
        s.col(col++).segment(f.offset, f.dim * f.dim) = vec_rowmajor(r * e);
      }
    }
    return s;
  };
  return m;
}

void check_dim(const EmbeddedManifold& m, const Vector& x, const char* op) {
  if (x.size() != m.n_amb) {
    std::ostringstream msg;
    msg << op << ": expected ambient dimension " << m.n_amb << ", got "
        << x.size();
    throw InvalidInputError(msg.str());
  }
}

}  // namespace

EmbeddedManifold make_rn(int n) {
  if (n < 1) throw InvalidInputError("make_rn: dimension must be positive");
  auto m = from_factors("rn" + std::to_string(n),
                        {{FactorSpec::Kind::kVector, 0, n, false}});
  m.name = "rn";
  return m;
}

EmbeddedManifold make_o2xr(bool negative_component) {
  return from_factors("o2xr",
                      {{FactorSpec::Kind::kRotation, 0, 2, negative_component},
                       {FactorSpec::Kind::kVector, 4, 1, false}});
}

EmbeddedManifold make_so3() {
  return from_factors("so3", {{FactorSpec::Kind::kRotation, 0, 3, false}});
}

EmbeddedManifold make_se3() {
  return from_factors("se3", {{FactorSpec::Kind::kRotation, 0, 3, false},
                              {FactorSpec::Kind::kVector, 9, 3, false}});
}

EmbeddedManifold manifold_by_name(const std::string& name, int rn_dim) {
  if (name == "rn") return make_rn(rn_dim);
  if (name == "o2xr") return make_o2xr();
  if (name == "so3") return make_so3();
  if (name == "se3") return make_se3();
  throw InvalidInputError("unknown group name: " + name);
}

Vector constraint_residual(const EmbeddedManifold& m, const Vector& x) {
  check_dim(m, x, "constraint_residual");
  return m.h(x);
}

bool on_manifold(const EmbeddedManifold& m, const Vector& x, double tol) {
  if (x.size() != m.n_amb) return false;
  return m.h(x).norm() <= tol;
}

Matrix frame(const EmbeddedManifold& m, const Vector& x) {
  check_dim(m, x, "frame");
  const double res = m.h(x).norm();
  if (res > kOnManifoldTol) {
    std::ostringstream msg;
    msg << "frame: point is off-manifold, |h(x)| = " << res;
    throw PreconditionError(msg.str());
  }
  return m.frame(x);
}

Matrix projector(const EmbeddedManifold& m, const Vector& x) {
  const Matrix s = frame(m, x);
  const Matrix gram = s.transpose() * s;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success ||
      ldlt.vectorD().minCoeff() < 1e-12 * std::max(1.0, gram.norm())) {
    throw NumericalRankError("projector: frame is numerically rank-deficient");
  }
  return ldlt.solve(s.transpose()).transpose();
}

Matrix tangent_projector(const EmbeddedManifold& m, const Vector& x) {
  const Matrix s = frame(m, x);
  return projector(m, x) * s.transpose();
}

Vector tangent_project(const EmbeddedManifold& m, const Vector& x,
                       const Vector& v) {
  return tangent_projector(m, x) * v;
}

Vector retract(const EmbeddedManifold& m, const Vector& y) {
  check_dim(m, y, "retract");
  Vector x = y;
  for (const auto& f : m.factors) {
    if (f.kind != FactorSpec::Kind::kRotation) continue;
    const Matrix block = unvec_rowmajor(y.segment(f.offset, f.dim * f.dim), f.dim);
    x.segment(f.offset, f.dim * f.dim) = vec_rowmajor(polar_factor(block));
  }
  return x;
}

namespace {

Matrix haar_rotation(int dim, bool negative_det, Rng& rng) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    Matrix g = rng.normal_matrix(dim, dim);
    // Modified Gram-Schmidt; positive normalization makes the result Haar.
    bool ok = true;
    for (int j = 0; j < dim && ok; ++j) {
      for (int i = 0; i < j; ++i) g.col(j) -= g.col(i).dot(g.col(j)) * g.col(i);
      const double nrm = g.col(j).norm();
      if (nrm < 1e-9) {
        ok = false;
        break;
      }
      g.col(j) /= nrm;
    }
    if (!ok) continue;
    if (g.determinant() < 0.0) g.col(dim - 1) *= -1.0;
    if (negative_det) g.col(0) *= -1.0;
    return g;
  }
  throw MethodError("haar_rotation: repeated Gram-Schmidt breakdown");
}

}  // namespace

Vector random_point(const EmbeddedManifold& m, Rng& rng) {
  Vector x(m.n_amb);
  for (const auto& f : m.factors) {
    if (f.kind == FactorSpec::Kind::kRotation) {
      x.segment(f.offset, f.dim * f.dim) =
          vec_rowmajor(haar_rotation(f.dim, f.negative_det, rng));
    } else {
      x.segment(f.offset, f.dim) = rng.normal_vector(f.dim);
    }
  }
  return x;
}

Vector random_point(const EmbeddedManifold& m, std::uint64_t seed) {
  Rng rng(seed);
  return random_point(m, rng);
}

std::vector<Vector> sample_points(const EmbeddedManifold& m, int n,
                                  std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vector> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) pts.push_back(random_point(m, rng));
  return pts;
}

double frame_bound(const EmbeddedManifold& m, int n_samples,
                   std::uint64_t seed) {
  Rng rng(seed);
  double c_s = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const Vector x = random_point(m, rng);
    const Matrix p = projector(m, x);
    c_s = std::max(c_s, p.jacobiSvd().singularValues()(0));
  }
  return c_s;
}

}  // namespace ccm
