#include "ccm/config.hpp"

#include "ccm/errors.hpp"
#include "ccm/io.hpp"
#include "ccm/lie.hpp"

namespace ccm {

RunConfig parse_run_config(const std::string& path) {
  const KvFile kv = parse_kv_file(path);
  RunConfig cfg;

  if (!kv.has("system.name")) {
    throw InvalidInputError("config: missing system.name");
  }
  cfg.system.name = kv.get("system.name");
  if (cfg.system.name == "se3-heading") {
    const double k = kv.get_double_or("system.k", 1.0);
    std::vector<double> e = {0.0, 0.0, 1.0};
    if (kv.has("system.e")) e = kv.get_array("system.e");
    if (e.size() != 3) {
      throw InvalidInputError("config: system.e must have 3 entries");
    }
    cfg.system.params = {k, e[0], e[1], e[2]};
  }

  auto& syn = cfg.synthesis;
  syn.lambda = kv.get_double_or("synthesis.lambda", 0.5);
  syn.options.degree = static_cast<int>(kv.get_int_or("synthesis.degree", 0));
  syn.options.grid_size =
      static_cast<int>(kv.get_int_or("synthesis.grid_size", 100));
  syn.options.seed =
      static_cast<std::uint64_t>(kv.get_int_or("synthesis.seed", 1));
  syn.options.a1 = kv.get_double_or("synthesis.a1", 0.1);
  syn.options.a2 = kv.get_double_or("synthesis.a2", 10.0);
  syn.options.eps_margin = kv.get_double_or("synthesis.eps_margin", 1e-6);
  syn.options.eps_kill = kv.get_double_or("synthesis.eps_kill", 1e-8);
  syn.options.max_iters =
      static_cast<int>(kv.get_int_or("synthesis.max_iters", 5000));
  syn.options.rho_enabled = kv.get_bool_or("synthesis.rho_enabled", true);

  auto& sim = cfg.simulation;
  sim.t_end = kv.get_double_or("simulation.t_end", 10.0);
  sim.dt = kv.get_double_or("simulation.dt", 1e-3);
  if (kv.has("simulation.period")) {
    const std::string& p = kv.get("simulation.period");
    if (p == "auto") {
      sim.auto_period = true;
    } else {
      sim.auto_period = false;
      sim.period = parse_double(p);
    }
  }
  sim.path_segments =
      static_cast<int>(kv.get_int_or("simulation.path_segments", 16));
  sim.reference = kv.get_or("simulation.reference", "builtin");
  if (kv.has("simulation.ref_x0")) sim.ref_x0 = kv.get_array("simulation.ref_x0");
  if (kv.has("simulation.ref_u")) sim.ref_u = kv.get_array("simulation.ref_u");
  if (kv.has("simulation.x0")) {
    const std::string& x0 = kv.get("simulation.x0");
    if (x0 == "ref") {
      sim.x0_is_ref = true;
    } else {
      sim.x0 = parse_number_array(x0);
    }
  } else {
    sim.x0_is_ref = true;
  }
  sim.k_target = kv.get_double_or("simulation.k_target", 0.5);

  cfg.output.certificate = kv.get_or("output.certificate", "certificate.txt");
  cfg.output.trace = kv.get_or("output.trace", "trace.csv");
  cfg.output.summary = kv.get_or("output.summary", "summary.txt");

  // Invariants shared by every subcommand.
  for (const auto& [name, value] :
       {std::pair<const char*, double>{"synthesis.a1", syn.options.a1},
        {"synthesis.a2", syn.options.a2},
        {"synthesis.eps_margin", syn.options.eps_margin},
        {"synthesis.eps_kill", syn.options.eps_kill}}) {
    if (!(value > 0.0)) {
      throw InvalidInputError(std::string("config: ") + name +
                              " must be positive");
    }
  }
  if (!(sim.t_end > 0.0)) {
    throw InvalidInputError("config: simulation.t_end must be positive");
  }
  if (!(sim.dt > 0.0)) {
    throw InvalidInputError("config: simulation.dt must be positive");
  }
  if (!sim.auto_period && !(sim.dt < sim.period)) {
    throw InvalidInputError("config: simulation.dt must be below the period");
  }
  if (!(sim.k_target > 0.0) || !(sim.k_target < 1.0)) {
    throw InvalidInputError("config: simulation.k_target must lie in (0, 1)");
  }
  return cfg;
}

ControlAffineSystem system_from_config(const RunConfig& config) {
  return builtin_system(config.system.name, config.system.params);
}

Vector default_state(const EmbeddedManifold& m) {
  Vector x = Vector::Zero(m.n_amb);
  for (const auto& f : m.factors) {
    if (f.kind != FactorSpec::Kind::kRotation) continue;
    x.segment(f.offset, f.dim * f.dim) =
        vec_rowmajor(Matrix::Identity(f.dim, f.dim));
  }
  return x;
}

}  // namespace ccm
