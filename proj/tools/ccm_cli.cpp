// Command-line front end: certificate synthesis, verification, tracking
// simulation, geodesic queries, and SDPA export.

#include <CLI11.hpp>

#include "ccm/certificate_io.hpp"
#include "ccm/config.hpp"
#include "ccm/controller.hpp"
#include "ccm/errors.hpp"
#include "ccm/geodesics.hpp"
#include "ccm/io.hpp"
#include "ccm/synthesis.hpp"

#include <cstdio>
#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMethodFailure = 2;
constexpr int kExitInputError = 3;

int cmd_synthesize(const std::string& config_path) {
  const ccm::RunConfig cfg = ccm::parse_run_config(config_path);
  const ccm::ControlAffineSystem sys = ccm::system_from_config(cfg);
  const ccm::SynthesisResult result =
      ccm::synthesize(sys, cfg.synthesis.lambda, cfg.synthesis.options);
  ccm::write_certificate(result.certificate, cfg.output.certificate);
  if (!result.feasible) {
    std::cerr << "synthesis failed: " << result.diagnostics << "\n";
    return kExitMethodFailure;
  }
  std::cout << "certificate written to " << cfg.output.certificate
            << " (worst R1 margin "
            << ccm::format_double(result.certificate.report.worst_r1) << ")\n";
  return kExitOk;
}

int cmd_verify(const std::string& cert_path, int samples, std::uint64_t seed,
               const std::string& out_path) {
  const ccm::ContractionCertificate cert = ccm::read_certificate(cert_path);
  const ccm::ControlAffineSystem sys =
      ccm::builtin_system(cert.system_name, cert.system_params);
  const ccm::VerificationReport rep = ccm::verify(cert, sys, samples, seed);

  std::ostringstream out;
  out << "ccm-verify-report-v1\n";
  out << "samples = " << rep.n_samples << "\n";
  out << "seed = " << rep.seed << "\n";
  out << "r1_worst = " << ccm::format_double(rep.worst_r1) << "\n";
  out << "r0_lo_worst = " << ccm::format_double(rep.worst_r0_lo) << "\n";
  out << "r0_hi_worst = " << ccm::format_double(rep.worst_r0_hi) << "\n";
  out << "kill_worst = " << ccm::format_double(rep.worst_kill) << "\n";
  out << "pass = " << (rep.pass ? "true" : "false") << "\n";
  out << "worst_condition = "
      << rep.worst_condition(cert.eps_margin, cert.eps_kill) << "\n";
  if (!out_path.empty()) ccm::write_text_file(out_path, out.str());
  std::cout << out.str();
  return rep.pass ? kExitOk : kExitMethodFailure;
}

int cmd_simulate(const std::string& config_path, const std::string& cert_path) {
  const ccm::RunConfig cfg = ccm::parse_run_config(config_path);
  const ccm::ContractionCertificate cert = ccm::read_certificate(cert_path);
  if (cert.system_name != cfg.system.name ||
      cert.system_params != cfg.system.params) {
    throw ccm::InvalidInputError(
        "simulate: certificate system does not match the config system");
  }
  const ccm::ControlAffineSystem sys = ccm::system_from_config(cfg);
  const auto& sim = cfg.simulation;

  ccm::ReferenceTrajectory ref;
  if (sim.reference == "builtin") {
    ccm::Vector x_star0 = sim.ref_x0.empty()
                              ? ccm::default_state(sys.manifold)
                              : ccm::Vector(Eigen::Map<const ccm::Vector>(
                                    sim.ref_x0.data(),
                                    static_cast<int>(sim.ref_x0.size())));
    if (x_star0.size() != sys.manifold.n_amb) {
      throw ccm::InvalidInputError("simulate: ref_x0 dimension mismatch");
    }
    ccm::Vector u_star = sim.ref_u.empty()
                             ? ccm::Vector(ccm::Vector::Zero(sys.m))
                             : ccm::Vector(Eigen::Map<const ccm::Vector>(
                                   sim.ref_u.data(),
                                   static_cast<int>(sim.ref_u.size())));
    if (u_star.size() != sys.m) {
      throw ccm::InvalidInputError("simulate: ref_u dimension mismatch");
    }
    ref = ccm::make_reference_constant_u(sys, x_star0, u_star, sim.t_end,
                                         sim.dt);
  } else {
    ref = ccm::make_reference_from_csv(sim.reference, sys.manifold, sys.m);
  }

  ccm::Vector x0;
  if (sim.x0_is_ref) {
    x0 = ref.x_star(0.0);
  } else {
    if (static_cast<int>(sim.x0.size()) != sys.manifold.n_amb) {
      throw ccm::InvalidInputError("simulate: x0 dimension mismatch");
    }
    x0 = ccm::retract(sys.manifold,
                      Eigen::Map<const ccm::Vector>(
                          sim.x0.data(), static_cast<int>(sim.x0.size())));
  }

  double period = sim.period;
  if (sim.auto_period) {
    period = ccm::sampling_period(cert.a1, cert.a2, 1.0, cert.lambda,
                                  sim.k_target);
  }
  if (!(sim.dt < period)) {
    throw ccm::InvalidInputError("simulate: dt must be below the period");
  }

  const ccm::TrackingTrace trace = ccm::sampled_data_run(
      cert, sys, x0, ref, period, sim.dt, sim.t_end, sim.path_segments);
  ccm::write_trace_csv(trace, sys.manifold.n_amb, sys.m, cfg.output.trace);
  const ccm::RunSummary summary = ccm::summarize_run(trace, cert.lambda);
  ccm::write_summary(summary, cfg.output.summary);
  std::cout << ccm::summary_to_text(summary);
  return kExitOk;
}

int cmd_geodesic(const std::string& group, const std::vector<double>& from,
                 const std::vector<double>& to, int nodes,
                 const std::string& out_path) {
  const ccm::EmbeddedManifold m =
      ccm::manifold_by_name(group, static_cast<int>(from.size()));
  if (static_cast<int>(from.size()) != m.n_amb ||
      static_cast<int>(to.size()) != m.n_amb) {
    throw ccm::InvalidInputError("geodesic: endpoint dimension mismatch");
  }
  const ccm::Vector p1 =
      Eigen::Map<const ccm::Vector>(from.data(), static_cast<int>(from.size()));
  const ccm::Vector p2 =
      Eigen::Map<const ccm::Vector>(to.data(), static_cast<int>(to.size()));
  if (!ccm::on_manifold(m, p1) || !ccm::on_manifold(m, p2)) {
    throw ccm::InvalidInputError("geodesic: endpoints do not lie on the group");
  }
  const ccm::GeodesicCurve curve = ccm::group_geodesic(m, p1, p2, nodes);
  if (!out_path.empty()) ccm::write_curve_csv(m, curve, out_path);
  std::cout << "length = " << ccm::format_double(curve.length) << "\n";
  return kExitOk;
}

int cmd_export_sdpa(const std::string& config_path, const std::string& out) {
  const ccm::RunConfig cfg = ccm::parse_run_config(config_path);
  const ccm::ControlAffineSystem sys = ccm::system_from_config(cfg);
  const auto grid = ccm::sample_points(
      sys.manifold, cfg.synthesis.options.grid_size, cfg.synthesis.options.seed);
  ccm::export_sdpa(sys, cfg.synthesis.lambda, grid, cfg.synthesis.options, out);
  std::cout << "sdpa problem written to " << out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"control contraction metrics on embedded Lie groups"};
  app.require_subcommand(1);

  std::string config_path, cert_path, out_path, group;
  std::vector<double> from, to;
  int samples = 1000;
  std::uint64_t seed = 1;
  int nodes = 33;

  auto* synth = app.add_subcommand("synthesize", "search for a certificate");
  synth->add_option("--config", config_path, "run configuration")->required();

  auto* verify = app.add_subcommand("verify", "re-check a certificate");
  verify->add_option("--cert", cert_path, "certificate file")->required();
  verify->add_option("--samples", samples, "fresh sample count");
  verify->add_option("--seed", seed, "sample seed");
  verify->add_option("--out", out_path, "report file");

  auto* simulate = app.add_subcommand("simulate", "sampled-data tracking run");
  simulate->add_option("--config", config_path, "run configuration")
      ->required();
  simulate->add_option("--cert", cert_path, "certificate file")->required();

  auto* geod = app.add_subcommand("geodesic", "induced-metric geodesic");
  geod->add_option("--group", group, "group name")->required();
  geod->add_option("--from", from, "start point (comma separated)")
      ->required()
      ->delimiter(',');
  geod->add_option("--to", to, "end point (comma separated)")
      ->required()
      ->delimiter(',');
  geod->add_option("--nodes", nodes, "sample count");
  geod->add_option("--out", out_path, "curve CSV path");

  auto* sdpa = app.add_subcommand("export-sdpa", "write the sampled LMI "
                                                 "feasibility problem");
  sdpa->add_option("--config", config_path, "run configuration")->required();
  sdpa->add_option("--out", out_path, "output .dat-s path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (synth->parsed()) return cmd_synthesize(config_path);
    if (verify->parsed()) return cmd_verify(cert_path, samples, seed, out_path);
    if (simulate->parsed()) return cmd_simulate(config_path, cert_path);
    if (geod->parsed()) return cmd_geodesic(group, from, to, nodes, out_path);
    if (sdpa->parsed()) return cmd_export_sdpa(config_path, out_path);
  } catch (const ccm::MethodError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMethodFailure;
  } catch (const ccm::InvalidInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}
