#include "ccm/controller.hpp"
#include "ccm/errors.hpp"
#include "ccm/io.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

namespace ccm {
namespace {

struct Table {
  std::vector<double> t;
  std::vector<Vector> x;
  std::vector<Vector> u;

  // Linear interpolation; exact grid hits return the stored row so that a
  // zero-error simulation reproduces the reference bit for bit.
  std::pair<int, double> locate(double query) const {
    if (query <= t.front()) return {0, 0.0};
    if (query >= t.back()) return {static_cast<int>(t.size()) - 2, 1.0};
    const auto it = std::upper_bound(t.begin(), t.end(), query);
    const int k = static_cast<int>(it - t.begin()) - 1;
    const double span = t[k + 1] - t[k];
    double alpha = span > 0.0 ? (query - t[k]) / span : 0.0;
    if (std::abs(query - t[k]) < 1e-12 * std::max(1.0, std::abs(query))) {
      alpha = 0.0;
    } else if (std::abs(query - t[k + 1]) <
               1e-12 * std::max(1.0, std::abs(query))) {
      alpha = 1.0;
    }
    return {k, alpha};
  }
};

ReferenceTrajectory from_table(std::shared_ptr<Table> table,
                               const EmbeddedManifold& m, int m_inputs) {
  ReferenceTrajectory ref;
  ref.n_amb = m.n_amb;
  ref.m = m_inputs;
  ref.x_star = [table, m](double t) {
    const auto [k, alpha] = table->locate(t);
    if (alpha == 0.0) return table->x[k];
    if (alpha == 1.0) return table->x[k + 1];
    return retract(m, (1.0 - alpha) * table->x[k] + alpha * table->x[k + 1]);
  };
  ref.u_star = [table](double t) {
    const auto [k, alpha] = table->locate(t);
    if (alpha == 0.0) return table->u[k];
    if (alpha == 1.0) return table->u[k + 1];
    return Vector((1.0 - alpha) * table->u[k] + alpha * table->u[k + 1]);
  };
  return ref;
}

}  // namespace

ReferenceTrajectory make_reference_constant_u(const ControlAffineSystem& sys,
                                              const Vector& x_star0,
                                              const Vector& u_const,
                                              double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end > 0.0)) {
    throw InvalidInputError("make_reference_constant_u: dt, t_end must be > 0");
  }
  if (u_const.size() != sys.m) {
    throw InvalidInputError("make_reference_constant_u: control dimension");
  }
  const Vector x0 = retract(sys.manifold, x_star0);
  if (!on_manifold(sys.manifold, x0, 1e-8)) {
    throw PreconditionError("make_reference_constant_u: x_star0 off-manifold");
  }
  auto table = std::make_shared<Table>();
  const int n_steps = static_cast<int>(std::llround(t_end / dt)) + 1;
  table->t.reserve(n_steps + 1);
  table->x.reserve(n_steps + 1);
  Vector x = x0;
  for (int k = 0; k <= n_steps; ++k) {
    table->t.push_back(k * dt);
    table->x.push_back(x);
    table->u.push_back(u_const);
    x = rk4_step(sys, x, u_const, k * dt, dt);
  }
  return from_table(std::move(table), sys.manifold, sys.m);
}

ReferenceTrajectory make_reference_from_csv(const std::string& path,
                                            const EmbeddedManifold& m,
                                            int m_inputs) {
  const std::string text = read_text_file(path);
  auto table = std::make_shared<Table>();
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(cells, cell, ',')) {
      try {
        row.push_back(parse_double(cell));
      } catch (const InvalidInputError&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (lineno == 1) continue;  // header row
      throw InvalidInputError("reference csv line " + std::to_string(lineno) +
                              ": malformed number");
    }
    if (static_cast<int>(row.size()) != 1 + m.n_amb + m_inputs) {
      throw InvalidInputError(
          "reference csv line " + std::to_string(lineno) + ": expected " +
          std::to_string(1 + m.n_amb + m_inputs) + " columns");
    }
    table->t.push_back(row[0]);
    table->x.push_back(
        Eigen::Map<const Vector>(row.data() + 1, m.n_amb));
    table->u.push_back(
        Eigen::Map<const Vector>(row.data() + 1 + m.n_amb, m_inputs));
  }
  if (table->t.size() < 2) {
    throw InvalidInputError("reference csv: need at least two rows");
  }
  for (std::size_t i = 1; i < table->t.size(); ++i) {
    if (table->t[i] <= table->t[i - 1]) {
      throw InvalidInputError("reference csv: time stamps must increase");
    }
  }
  return from_table(std::move(table), m, m_inputs);
}

void check_reference_feasible(const ControlAffineSystem& sys,
                              const ReferenceTrajectory& ref, double t_end,
                              double dt, double tol) {
  const int n_probes = 8;
  const double h = 0.5 * dt;
  double worst = 0.0;
  double worst_t = 0.0;
  for (int i = 0; i < n_probes; ++i) {
    // Probe at grid midpoints, away from the table endpoints.
    const double t =
        (std::floor((i + 0.5) / n_probes * (t_end / dt - 1.0)) + 0.5) * dt;
    if (t - h < 0.0 || t + h > t_end) continue;
    const Vector xdot = (ref.x_star(t + h) - ref.x_star(t - h)) / (2.0 * h);
    const double res = (xdot - rhs(sys, ref.x_star(t), ref.u_star(t), t)).norm();
    if (res > worst) {
      worst = res;
      worst_t = t;
    }
  }
  if (worst > tol) {
    std::ostringstream msg;
    msg << "reference pair is infeasible: |xdot_star - f - B u_star| = "
        << worst << " at t = " << worst_t << " (tol " << tol << ")";
    throw InvalidInputError(msg.str());
  }
}

}  // namespace ccm
