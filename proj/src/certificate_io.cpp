#include "ccm/certificate_io.hpp"

#include "ccm/errors.hpp"
#include "ccm/io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ccm {
namespace {

constexpr const char* kCertMagic = "ccm-certificate-v1";

std::string matrix_row_major(const Matrix& m) {
  std::vector<double> flat;
  flat.reserve(m.size());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  return format_array(flat);
}

}  // namespace

std::string certificate_to_text(const ContractionCertificate& cert) {
  std::ostringstream out;
  out << kCertMagic << "\n";
  out << "system = " << cert.system_name << "\n";
  out << "system_params = " << format_array(cert.system_params) << "\n";
  out << "lambda = " << format_double(cert.lambda) << "\n";
  out << "a1 = " << format_double(cert.a1) << "\n";
  out << "a2 = " << format_double(cert.a2) << "\n";
  out << "eps_margin = " << format_double(cert.eps_margin) << "\n";
  out << "eps_kill = " << format_double(cert.eps_kill) << "\n";
  out << "degree = " << cert.param.degree << "\n";
  out << "n_dim = " << cert.param.n_dim << "\n";
  out << "n_amb = " << cert.param.basis.n_amb << "\n";
  out << "rho_enabled = " << (cert.param.rho_enabled ? "true" : "false")
      << "\n";
  out << "basis = [";
  for (int k = 0; k < cert.param.basis.size(); ++k) {
    if (k) out << ", ";
    out << format_int_array(cert.param.basis.exponents[k]);
  }
  out << "]\n";
  out << "coeffs = [";
  for (std::size_t k = 0; k < cert.param.coeffs.size(); ++k) {
    if (k) out << ", ";
    out << matrix_row_major(cert.param.coeffs[k]);
  }
  out << "]\n";
  out << "rho_coeffs = " << format_array(cert.param.rho_coeffs) << "\n";
  out << "grid_seed = " << cert.grid_seed << "\n";
  out << "grid_size = " << cert.grid_size << "\n";
  out << "grid_r1_worst = " << format_double(cert.grid_worst_r1) << "\n";
  out << "status = " << cert.status << "\n";
  out << "report_samples = " << cert.report.n_samples << "\n";
  out << "report_seed = " << cert.report.seed << "\n";
  out << "report_r1_worst = " << format_double(cert.report.worst_r1) << "\n";
  out << "report_r0_lo_worst = " << format_double(cert.report.worst_r0_lo)
      << "\n";
  out << "report_r0_hi_worst = " << format_double(cert.report.worst_r0_hi)
      << "\n";
  out << "report_kill_worst = " << format_double(cert.report.worst_kill)
      << "\n";
  out << "report_pass = " << (cert.report.pass ? "true" : "false") << "\n";
  return out.str();
}

void write_certificate(const ContractionCertificate& cert,
                       const std::string& path) {
  write_text_file(path, certificate_to_text(cert));
}

ContractionCertificate certificate_from_text(const std::string& text) {
  const auto nl = text.find('\n');
  if (nl == std::string::npos || text.substr(0, nl) != kCertMagic) {
    throw InvalidInputError("certificate: missing ccm-certificate-v1 header");
  }
  const KvFile kv = parse_kv_text(text.substr(nl + 1));

  ContractionCertificate cert;
  cert.system_name = kv.get("system");
  cert.system_params = kv.get_array("system_params");
  cert.lambda = kv.get_double("lambda");
  cert.a1 = kv.get_double("a1");
  cert.a2 = kv.get_double("a2");
  cert.eps_margin = kv.get_double("eps_margin");
  cert.eps_kill = kv.get_double("eps_kill");
  cert.param.degree = static_cast<int>(kv.get_int("degree"));
  cert.param.n_dim = static_cast<int>(kv.get_int("n_dim"));
  const int n_amb = static_cast<int>(kv.get_int("n_amb"));
  cert.param.rho_enabled = kv.get_bool_or("rho_enabled", true);

  cert.param.basis.n_amb = n_amb;
  cert.param.basis.degree = cert.param.degree;
  for (const auto& row : parse_nested_array(kv.get("basis"))) {
    if (static_cast<int>(row.size()) != n_amb) {
      throw InvalidInputError("certificate: basis exponent row size mismatch");
    }
    std::vector<int> exps;
    for (double v : row) {
      const int e = static_cast<int>(v);
      if (static_cast<double>(e) != v || e < 0) {
        throw InvalidInputError("certificate: basis exponents must be "
                                "nonnegative integers");
      }
      exps.push_back(e);
    }
    cert.param.basis.exponents.push_back(std::move(exps));
  }

  const int q = cert.param.n_dim;
  for (const auto& row : parse_nested_array(kv.get("coeffs"))) {
    if (static_cast<int>(row.size()) != q * q) {
      throw InvalidInputError("certificate: coefficient block size mismatch");
    }
    Matrix w(q, q);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) w(i, j) = row[i * q + j];
    cert.param.coeffs.push_back(std::move(w));
  }

  const auto rho = kv.get_array("rho_coeffs");
  cert.param.rho_coeffs =
      Eigen::Map<const Vector>(rho.data(), static_cast<int>(rho.size()));
  cert.grid_seed = static_cast<std::uint64_t>(kv.get_int("grid_seed"));
  cert.grid_size = static_cast<int>(kv.get_int("grid_size"));
  cert.grid_worst_r1 = kv.get_double_or("grid_r1_worst", 0.0);
  cert.status = kv.get("status");
  cert.report.n_samples = static_cast<int>(kv.get_int("report_samples"));
  cert.report.seed = static_cast<std::uint64_t>(kv.get_int("report_seed"));
  cert.report.worst_r1 = kv.get_double("report_r1_worst");
  cert.report.worst_r0_lo = kv.get_double("report_r0_lo_worst");
  cert.report.worst_r0_hi = kv.get_double("report_r0_hi_worst");
  cert.report.worst_kill = kv.get_double("report_kill_worst");
  cert.report.pass = kv.get_bool_or("report_pass", false);

  cert.validate();
  return cert;
}

ContractionCertificate read_certificate(const std::string& path) {
  return certificate_from_text(read_text_file(path));
}

std::string trace_to_csv(const TrackingTrace& trace, int n_amb, int m_inputs) {
  std::ostringstream out;
  out << "t";
  for (int i = 0; i < n_amb; ++i) out << ",x" << i;
  for (int i = 0; i < n_amb; ++i) out << ",xstar" << i;
  for (int i = 0; i < m_inputs; ++i) out << ",u" << i;
  out << ",d_induced,path_energy,h_residual\n";
  for (std::size_t r = 0; r < trace.t.size(); ++r) {
    std::vector<double> row;
    row.reserve(1 + 2 * n_amb + m_inputs + 3);
    row.push_back(trace.t[r]);
    for (int i = 0; i < n_amb; ++i) row.push_back(trace.x[r][i]);
    for (int i = 0; i < n_amb; ++i) row.push_back(trace.x_star[r][i]);
    for (int i = 0; i < m_inputs; ++i) row.push_back(trace.u[r][i]);
    row.push_back(trace.d_induced[r]);
    row.push_back(trace.path_energy[r]);
    row.push_back(trace.h_residual[r]);
    out << csv_row(row);
  }
  return out.str();
}

void write_trace_csv(const TrackingTrace& trace, int n_amb, int m_inputs,
                     const std::string& path) {
  write_text_file(path, trace_to_csv(trace, n_amb, m_inputs));
}

std::string curve_to_csv(const EmbeddedManifold& m,
                         const GeodesicCurve& curve) {
  std::ostringstream out;
  out << "s";
  for (int i = 0; i < m.n_amb; ++i) out << ",x" << i;
  out << ",cum_length\n";
  double cum = 0.0;
  for (std::size_t j = 0; j < curve.points.size(); ++j) {
    if (j > 0) cum += induced_distance(m, curve.points[j - 1], curve.points[j]);
    std::vector<double> row;
    row.push_back(curve.s[j]);
    for (int i = 0; i < m.n_amb; ++i) row.push_back(curve.points[j][i]);
    row.push_back(cum);
    out << csv_row(row);
  }
  return out.str();
}

void write_curve_csv(const EmbeddedManifold& m, const GeodesicCurve& curve,
                     const std::string& path) {
  write_text_file(path, curve_to_csv(m, curve));
}

RunSummary summarize_run(const TrackingTrace& trace, double lambda) {
  RunSummary s;
  s.period = trace.period;
  s.steps_per_period = trace.steps_per_period;
  s.lambda = lambda;
  s.K_estimate = trace.K_estimate;
  s.final_distance = trace.d_induced.empty() ? 0.0 : trace.d_induced.back();
  s.max_h_residual =
      trace.h_residual.empty()
          ? 0.0
          : *std::max_element(trace.h_residual.begin(), trace.h_residual.end());
  const DecayFit fit = fitted_decay_rate(trace);
  s.fit_valid = fit.valid;
  s.fitted_rate = fit.valid ? -fit.slope : 0.0;
  if (fit.valid) {
    s.rate_ok = s.fitted_rate >= 0.9 * lambda;
  } else {
    // Nothing to fit: accept only if the error never left the noise floor.
    const double max_d =
        trace.d_induced.empty()
            ? 0.0
            : *std::max_element(trace.d_induced.begin(), trace.d_induced.end());
    s.rate_ok = max_d <= 1e-6;
  }
  return s;
}

std::string summary_to_text(const RunSummary& s) {
  std::ostringstream out;
  out << "ccm-summary-v1\n";
  out << "period = " << format_double(s.period) << "\n";
  out << "steps_per_period = " << s.steps_per_period << "\n";
  out << "lambda = " << format_double(s.lambda) << "\n";
  out << "fitted_rate = " << format_double(s.fitted_rate) << "\n";
  out << "fit_valid = " << (s.fit_valid ? "true" : "false") << "\n";
  out << "rate_ok = " << (s.rate_ok ? "true" : "false") << "\n";
  out << "K_estimate = " << format_double(s.K_estimate) << "\n";
  out << "final_distance = " << format_double(s.final_distance) << "\n";
  out << "max_h_residual = " << format_double(s.max_h_residual) << "\n";
  return out.str();
}

void write_summary(const RunSummary& summary, const std::string& path) {
  write_text_file(path, summary_to_text(summary));
}

}  // namespace ccm
