#pragma once

#include "ccm/synthesis.hpp"
#include "ccm/system.hpp"

#include <string>
#include <vector>

namespace ccm {

/// Parsed run configuration ([system] / [synthesis] / [simulation] /
/// [output] sections, key = value lines, bracketed arrays).
struct RunConfig {
  struct SystemBlock {
    std::string name;
    std::vector<double> params;  // builtin parameters, e.g. {k, e1, e2, e3}
  };
  struct SynthesisBlock {
    double lambda = 0.0;
    SynthesisOptions options;
  };
  struct SimulationBlock {
    double t_end = 10.0;
    double dt = 1e-3;
    bool auto_period = true;
    double period = 0.0;  // explicit period when auto_period is false
    int path_segments = 16;
    std::string reference = "builtin";  // "builtin" or a CSV path
    std::vector<double> ref_x0;  // empty: group identity element
    std::vector<double> ref_u;   // empty: zeros
    bool x0_is_ref = false;
    std::vector<double> x0;
    double k_target = 0.5;  // contraction factor for the auto period
  };
  struct OutputBlock {
    std::string certificate = "certificate.txt";
    std::string trace = "trace.csv";
    std::string summary = "summary.txt";
  };

  SystemBlock system;
  SynthesisBlock synthesis;
  SimulationBlock simulation;
  OutputBlock output;
};

RunConfig parse_run_config(const std::string& path);

ControlAffineSystem system_from_config(const RunConfig& config);

/// Identity element of the embedding: identity rotation blocks, zero
/// vector blocks.
Vector default_state(const EmbeddedManifold& m);

}  // namespace ccm
