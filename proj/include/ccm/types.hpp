#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

namespace ccm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Time-dependent vector field (x, t) -> R^n.
using VectorField = std::function<Vector(const Vector&, double)>;

/// Time-dependent matrix field (x, t) -> R^{n x n}, typically a Jacobian.
using MatrixField = std::function<Matrix(const Vector&, double)>;

/// Position-dependent symmetric matrix, e.g. a Riemannian metric in
/// ambient coordinates.
using MetricFn = std::function<Matrix(const Vector&)>;

}  // namespace ccm
