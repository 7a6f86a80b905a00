#include "ccm/system.hpp"

#include "ccm/errors.hpp"
#include "ccm/lie.hpp"

#include <cmath>
#include <sstream>

namespace ccm {
namespace {

Matrix fd_jacobian(const VectorField& g, const Vector& x, double t,
                   double step) {
  const int n = static_cast<int>(x.size());
  const int rows = static_cast<int>(g(x, t).size());
  Matrix jac(rows, n);
  Vector xp = x;
  for (int i = 0; i < n; ++i) {
    xp[i] = x[i] + step;
    const Vector hi = g(xp, t);
    xp[i] = x[i] - step;
    const Vector lo = g(xp, t);
    xp[i] = x[i];
    jac.col(i) = (hi - lo) / (2.0 * step);
  }
  return jac;
}

Matrix block_diag(const Matrix& a, int copies, int n) {
  Matrix out = Matrix::Zero(n, n);
  for (int c = 0; c < copies; ++c)
    out.block(c * a.rows(), c * a.cols(), a.rows(), a.cols()) = a;
  return out;
}

}  // namespace

Matrix input_matrix(const ControlAffineSystem& sys, const Vector& x, double t) {
  Matrix b(sys.manifold.n_amb, sys.m);
  for (int i = 0; i < sys.m; ++i) b.col(i) = sys.b[i](x, t);
  return b;
}

Vector rhs(const ControlAffineSystem& sys, const Vector& x, const Vector& u,
           double t) {
  if (u.size() != sys.m) {
    throw InvalidInputError("rhs: control dimension mismatch");
  }
  Vector out = sys.f(x, t);
  for (int i = 0; i < sys.m; ++i) out += u[i] * sys.b[i](x, t);
  return out;
}

Matrix drift_jacobian(const ControlAffineSystem& sys, const Vector& x,
                      double t) {
  if (sys.jac_f) return sys.jac_f(x, t);
  return fd_jacobian(sys.f, x, t, kJacFdStep);
}

Matrix input_jacobian(const ControlAffineSystem& sys, const Vector& x,
                      double t, int i) {
  if (i < 0 || i >= sys.m) throw InvalidInputError("input_jacobian: bad index");
  if (i < static_cast<int>(sys.jac_b.size()) && sys.jac_b[i]) {
    return sys.jac_b[i](x, t);
  }
  return fd_jacobian(sys.b[i], x, t, kJacFdStep);
}

Matrix variational_matrix(const ControlAffineSystem& sys, const Vector& x,
                          const Vector& u, double t) {
  if (u.size() != sys.m) {
    throw InvalidInputError("variational_matrix: control dimension mismatch");
  }
  Matrix a = drift_jacobian(sys, x, t);
  for (int i = 0; i < sys.m; ++i) {
    if (u[i] != 0.0) a += u[i] * input_jacobian(sys, x, t, i);
  }
  return a;
}

Matrix factor_E(const ControlAffineSystem& sys, const Vector& x, double t,
                double tol) {
  const Matrix s = frame(sys.manifold, x);
  const Matrix b = input_matrix(sys, x, t);
  const Matrix e =
      (s.transpose() * s).ldlt().solve(s.transpose() * b);
  const double res = (s * e - b).norm();
  if (res > tol) {
    std::ostringstream msg;
    msg << "factor_E: |S E - B| = " << res
        << "; input fields are not tangent to the manifold";
    throw NotTangentError(msg.str());
  }
  return e;
}

namespace {

// D_v(P_S^T) S + P_S^T J S for a field value v and its Jacobian J.
Matrix reduced_operator(const ControlAffineSystem& sys, const Vector& x,
                        const Vector& v, const Matrix& jac) {
  const EmbeddedManifold& m = sys.manifold;
  const Matrix s = frame(m, x);
  const Matrix p = projector(m, x);
  Matrix out = p.transpose() * jac * s;
  const double speed = v.norm();
  if (speed > 1e-14) {
    const Vector dir = v / speed;
    const Matrix p_hi = projector(m, retract(m, x + kFrameFdStep * dir));
    const Matrix p_lo = projector(m, retract(m, x - kFrameFdStep * dir));
    out += speed * (p_hi - p_lo).transpose() / (2.0 * kFrameFdStep) * s;
  }
  return out;
}

}  // namespace

Matrix reduced_drift(const ControlAffineSystem& sys, const Vector& x,
                     double t) {
  return reduced_operator(sys, x, sys.f(x, t), drift_jacobian(sys, x, t));
}

Matrix reduced_input(const ControlAffineSystem& sys, const Vector& x, double t,
                     int i) {
  if (i < 0 || i >= sys.m) throw InvalidInputError("reduced_input: bad index");
  return reduced_operator(sys, x, sys.b[i](x, t), input_jacobian(sys, x, t, i));
}

std::string TransversalityReport::summary() const {
  std::ostringstream out;
  out << (pass ? "pass" : "fail") << ": max |jac_h f| = " << max_drift_residual;
  for (std::size_t i = 0; i < max_input_residual.size(); ++i) {
    out << ", max |jac_h b_" << i + 1 << "| = " << max_input_residual[i];
  }
  if (!pass) {
    out << "; worst field: "
        << (worst_input < 0 ? std::string("f")
                            : "b_" + std::to_string(worst_input + 1));
  }
  return out.str();
}

TransversalityReport transversality_check(const ControlAffineSystem& sys,
                                          const std::vector<Vector>& samples,
                                          double t, double tol) {
  TransversalityReport rep;
  rep.tol = tol;
  rep.max_input_residual.assign(sys.m, 0.0);
  double worst = 0.0;
  for (const Vector& x : samples) {
    const Matrix jh = sys.manifold.jac_h(x);
    const double rf = (jh * sys.f(x, t)).norm();
    if (rf > rep.max_drift_residual) rep.max_drift_residual = rf;
    if (rf > worst) {
      worst = rf;
      rep.worst_input = -1;
    }
    for (int i = 0; i < sys.m; ++i) {
      const double rb = (jh * sys.b[i](x, t)).norm();
      if (rb > rep.max_input_residual[i]) rep.max_input_residual[i] = rb;
      if (rb > worst) {
        worst = rb;
        rep.worst_input = i;
      }
    }
  }
  rep.pass = worst <= tol;
  return rep;
}

namespace {

ControlAffineSystem make_scalar_linear() {
  ControlAffineSystem sys;
  sys.name = "scalar-linear";
  sys.manifold = make_rn(1);
  sys.m = 1;
  sys.f = [](const Vector& x, double) { return Vector(-x); };
  sys.b = {[](const Vector&, double) { return Vector::Ones(1); }};
  sys.jac_f = [](const Vector&, double) { return -Matrix::Identity(1, 1); };
  sys.jac_b = {[](const Vector&, double) { return Matrix::Zero(1, 1); }};
  return sys;
}

ControlAffineSystem make_o2xr_toy() {
  ControlAffineSystem sys;
  sys.name = "o2xr-toy";
  sys.manifold = make_o2xr();
  sys.m = 1;
  sys.f = [](const Vector& x, double) {
    Vector out = Vector::Zero(5);
    out[4] = -x[4] + x[0];
    return out;
  };
  sys.jac_f = [](const Vector&, double) {
    Matrix jac = Matrix::Zero(5, 5);
    jac(4, 0) = 1.0;
    jac(4, 4) = -1.0;
    return jac;
  };
  const Matrix e2 = so_basis(2)[0];
  sys.b = {[e2](const Vector& x, double) {
    const Matrix r = unvec_rowmajor(x.head(4), 2);
    Vector out = Vector::Zero(5);
    out.head(4) = vec_rowmajor(r * e2);
    return out;
  }};
  sys.jac_b = {[e2](const Vector&, double) {
    Matrix jac = Matrix::Zero(5, 5);
    jac.topLeftCorner(4, 4) = block_diag(e2.transpose(), 2, 4);
    return jac;
  }};
  return sys;
}

// Rotation directly driven through the left-invariant frame fields,
// velocity relaxing toward the heading direction R e.
ControlAffineSystem make_se3_heading(const std::vector<double>& params) {
  double k = 1.0;
  Eigen::Vector3d e(0.0, 0.0, 1.0);
  if (!params.empty()) {
    if (params.size() != 4) {
      throw InvalidInputError(
          "se3-heading expects params {k, e1, e2, e3} (or none)");
    }
    k = params[0];
    e = Eigen::Vector3d(params[1], params[2], params[3]);
  }
  if (k <= 0.0) throw InvalidInputError("se3-heading: k must be positive");
  if (std::abs(e.norm() - 1.0) > 1e-9) {
    throw InvalidInputError("se3-heading: e must be a unit vector");
  }

  ControlAffineSystem sys;
  sys.name = "se3-heading";
  sys.manifold = make_se3();
  sys.m = 3;
  sys.params = {k, e.x(), e.y(), e.z()};
  sys.f = [k, e](const Vector& x, double) {
    const Matrix r = unvec_rowmajor(x.head(9), 3);
    Vector out = Vector::Zero(12);
    out.tail(3) = -k * x.tail(3) + r * e;
    return out;
  };
  sys.jac_f = [k, e](const Vector&, double) {
    Matrix jac = Matrix::Zero(12, 12);
    for (int i = 0; i < 3; ++i) jac.row(9 + i).segment(3 * i, 3) = e.transpose();
    jac.bottomRightCorner(3, 3) = -k * Matrix::Identity(3, 3);
    return jac;
  };
  for (const Matrix& gen : so_basis(3)) {
    sys.b.push_back([gen](const Vector& x, double) {
      const Matrix r = unvec_rowmajor(x.head(9), 3);
      Vector out = Vector::Zero(12);
      out.head(9) = vec_rowmajor(r * gen);
      return out;
    });
    sys.jac_b.push_back([gen](const Vector&, double) {
      Matrix jac = Matrix::Zero(12, 12);
      jac.topLeftCorner(9, 9) = block_diag(gen.transpose(), 3, 9);
      return jac;
    });
  }
  return sys;
}

}  // namespace

ControlAffineSystem builtin_system(const std::string& name,
                                   const std::vector<double>& params) {
  if (name == "scalar-linear") return make_scalar_linear();
  if (name == "o2xr-toy") return make_o2xr_toy();
  if (name == "se3-heading") return make_se3_heading(params);
  throw InvalidInputError("unknown system name: " + name);
}

}  // namespace ccm
