#pragma once

#include "ccm/errors.hpp"
#include "ccm/types.hpp"

#include <cmath>
#include <vector>

namespace ccm {

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return s;
}

inline Eigen::Vector3d unskew(const Eigen::Matrix3d& s) {
  return {s(2, 1), s(0, 2), s(1, 0)};
}

/// Row-major flattening of a square matrix block.
inline Vector vec_rowmajor(const Matrix& a) {
  Vector v(a.rows() * a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) v[i * a.cols() + j] = a(i, j);
  return v;
}

inline Matrix unvec_rowmajor(const Eigen::Ref<const Vector>& v, int dim) {
  Matrix a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = v[i * dim + j];
  return a;
}

/// Orthonormal basis of so(dim) under the Frobenius inner product, ordered
/// so that the columns of the built-in tangent frames are vec(R * E_k).
/// dim 2: E = [[0, 1], [-1, 0]] / sqrt(2).
/// dim 3: E_1 = skew(0,0,-1)/sqrt(2), E_2 = skew(0,1,0)/sqrt(2),
///        E_3 = skew(-1,0,0)/sqrt(2).
inline std::vector<Matrix> so_basis(int dim) {
  const double c = 1.0 / std::sqrt(2.0);
  std::vector<Matrix> basis;
  if (dim == 2) {
    Matrix e(2, 2);
    e << 0.0, c, -c, 0.0;
    basis.push_back(e);
  } else if (dim == 3) {
    basis.push_back(c * skew({0.0, 0.0, -1.0}));
    basis.push_back(c * skew({0.0, 1.0, 0.0}));
    basis.push_back(c * skew({-1.0, 0.0, 0.0}));
  } else {
    throw NotImplementedError("so_basis: only dim 2 and 3 are supported");
  }
  return basis;
}

/// Matrix exponential of a skew matrix, closed form for dim 2 and 3.
inline Matrix rotation_exp(const Matrix& omega) {
  if (omega.rows() == 2 && omega.cols() == 2) {
    const double theta = omega(1, 0);
    Matrix r(2, 2);
    r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return r;
  }
  if (omega.rows() == 3 && omega.cols() == 3) {
    const Eigen::Vector3d w = unskew(omega);
    const double theta = w.norm();
    const Eigen::Matrix3d k = skew(w);
    if (theta < 1e-12) {
      return Eigen::Matrix3d::Identity() + k + 0.5 * k * k;
    }
    const double s = std::sin(theta) / theta;
    const double c = (1.0 - std::cos(theta)) / (theta * theta);
    return Eigen::Matrix3d::Identity() + s * k + c * (k * k);
  }
  throw NotImplementedError("rotation_exp: only 2x2 and 3x3 blocks supported");
}

inline constexpr double kCutLocusMargin = 1e-6;

/// Principal matrix logarithm on SO(2) / SO(3). The rotation angle must be
/// below pi - kCutLocusMargin; at the cut locus the minimizing geodesic is
/// not unique.
inline Matrix rotation_log(const Matrix& r) {
  if (r.rows() == 2 && r.cols() == 2) {
    const double theta = std::atan2(r(1, 0), r(0, 0));
    if (std::abs(theta) > std::numbers::pi - kCutLocusMargin) {
      throw CutLocusError("rotation_log: angle within 1e-6 of pi (cut locus)");
    }
    Matrix w(2, 2);
    w << 0.0, -theta, theta, 0.0;
    return w;
  }
  if (r.rows() == 3 && r.cols() == 3) {
    const double cos_theta = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
    const double theta = std::acos(cos_theta);
    if (theta > std::numbers::pi - kCutLocusMargin) {
      throw CutLocusError("rotation_log: angle within 1e-6 of pi (cut locus)");
    }
    // log R = c (R - R^T) with c = theta / (2 sin theta); series near 0.
    double c = 0.0;
    if (theta < 1e-5) {
      c = 0.5 + theta * theta / 12.0 + 7.0 * std::pow(theta, 4) / 720.0;
    } else {
      c = theta / (2.0 * std::sin(theta));
    }
    return c * (r - r.transpose());
  }
  throw NotImplementedError("rotation_log: only 2x2 and 3x3 blocks supported");
}

/// Nearest orthogonal matrix (polar factor). Lands in whichever component
/// of O(n) the input is close to.
inline Matrix polar_factor(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues().minCoeff() < 1e-8) {
    throw DegenerateInputError(
        "polar_factor: rotation block has a near-zero singular value");
  }
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace ccm
