#pragma once

#include "ccm/controller.hpp"
#include "ccm/geodesics.hpp"
#include "ccm/synthesis.hpp"

#include <string>

namespace ccm {

/// Serializes a certificate as key = value structured text. Writing the
/// same certificate twice produces identical bytes; write -> read ->
/// write is a fixed point.
std::string certificate_to_text(const ContractionCertificate& cert);
void write_certificate(const ContractionCertificate& cert,
                       const std::string& path);
ContractionCertificate certificate_from_text(const std::string& text);
ContractionCertificate read_certificate(const std::string& path);

/// Trace CSV: t, x[..], x_star[..], u[..], d_induced, path_energy,
/// h_residual; header row, 17 significant digits.
std::string trace_to_csv(const TrackingTrace& trace, int n_amb, int m_inputs);
void write_trace_csv(const TrackingTrace& trace, int n_amb, int m_inputs,
                     const std::string& path);

/// Sampled curve CSV: s, point coordinates, cumulative induced length.
std::string curve_to_csv(const EmbeddedManifold& m, const GeodesicCurve& curve);
void write_curve_csv(const EmbeddedManifold& m, const GeodesicCurve& curve,
                     const std::string& path);

struct RunSummary {
  double period = 0.0;
  int steps_per_period = 0;
  double lambda = 0.0;
  double fitted_rate = 0.0;  // decay rate, nonnegative when converging
  bool fit_valid = false;
  bool rate_ok = false;  // fitted rate >= 0.9 lambda
  double K_estimate = 1.0;
  double final_distance = 0.0;
  double max_h_residual = 0.0;
};

RunSummary summarize_run(const TrackingTrace& trace, double lambda);
std::string summary_to_text(const RunSummary& summary);
void write_summary(const RunSummary& summary, const std::string& path);

}  // namespace ccm
