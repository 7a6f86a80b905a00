#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ccm/certificate_io.hpp"
#include "ccm/config.hpp"
#include "ccm/errors.hpp"
#include "ccm/io.hpp"
#include "ccm/synthesis.hpp"
#include "test_support.hpp"

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

using namespace ccm;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(CCM_CLI_PATH) + " " + args + " > cli_tmp/stdout.txt 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

const char* kScalarConfig = R"(# scalar tracking demo
[system]
name = scalar-linear

[synthesis]
lambda = 0.5
degree = 0
grid_size = 20
seed = 3
a1 = 0.1
a2 = 10

[simulation]
t_end = 4
dt = 0.001
period = 1.0
path_segments = 8
reference = builtin
ref_x0 = [0]
ref_u = [0]
x0 = ref

[output]
certificate = cli_tmp/scalar_cert.txt
trace = cli_tmp/scalar_trace.csv
summary = cli_tmp/scalar_summary.txt
)";

std::string last_csv_value(const std::string& path) {
  const std::string text = read_text_file(path);
  const auto last_nl = text.find_last_of('\n', text.size() - 2);
  const std::string row = text.substr(last_nl + 1);
  const auto comma = row.find_last_of(',');
  std::string cell = row.substr(comma + 1);
  if (!cell.empty() && cell.back() == '\n') cell.pop_back();
  return cell;
}

}  // namespace

TEST_CASE("formatting and parsing primitives") {
  SUBCASE("doubles survive a text round trip exactly") {
    Rng rng(3u);
    for (int i = 0; i < 200; ++i) {
      const double v = rng.normal() * std::exp(20.0 * (rng.uniform() - 0.5));
      CHECK(parse_double(format_double(v)) == v);
    }
  }

  SUBCASE("kv parsing flattens sections and anchors errors to lines") {
    const auto kv = parse_kv_text("[a]\nx = 1\n# comment\n[b]\ny = [1, 2]\n");
    CHECK(kv.get_double("a.x") == 1.0);
    CHECK(kv.get_array("b.y").size() == 2);
    CHECK_THROWS_WITH_AS(parse_kv_text("x = 1\nbroken\n"),
                         doctest::Contains("line 2"), InvalidInputError);
  }

  SUBCASE("nested arrays") {
    const auto rows = parse_nested_array("[[1, 2], [3], []]");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].size() == 2);
    CHECK(rows[1][0] == 3.0);
    CHECK(rows[2].empty());
    CHECK_THROWS_AS(parse_nested_array("[1, 2]"), InvalidInputError);
  }
}

TEST_CASE("run configuration") {
  std::filesystem::create_directories("cli_tmp");

  SUBCASE("full file parses") {
    write_text_file("cli_tmp/cfg.txt", kScalarConfig);
    const auto cfg = parse_run_config("cli_tmp/cfg.txt");
    CHECK(cfg.system.name == "scalar-linear");
    CHECK(cfg.synthesis.lambda == 0.5);
    CHECK(cfg.simulation.period == 1.0);
    CHECK_FALSE(cfg.simulation.auto_period);
    CHECK(cfg.simulation.x0_is_ref);
    CHECK(cfg.output.trace == "cli_tmp/scalar_trace.csv");
  }

  SUBCASE("missing system name is rejected") {
    write_text_file("cli_tmp/bad.txt", "[synthesis]\nlambda = 0.5\n");
    CHECK_THROWS_WITH_AS(parse_run_config("cli_tmp/bad.txt"),
                         doctest::Contains("system.name"), InvalidInputError);
  }

  SUBCASE("dt must stay below an explicit period") {
    write_text_file("cli_tmp/bad2.txt",
                    "[system]\nname = scalar-linear\n[simulation]\ndt = "
                    "2\nperiod = 1\n");
    CHECK_THROWS_AS(parse_run_config("cli_tmp/bad2.txt"), InvalidInputError);
  }

  SUBCASE("tolerances must be positive") {
    write_text_file("cli_tmp/bad3.txt",
                    "[system]\nname = scalar-linear\n[synthesis]\na1 = -1\n");
    CHECK_THROWS_AS(parse_run_config("cli_tmp/bad3.txt"), InvalidInputError);
  }
}

TEST_CASE("certificate round trip") {
  std::filesystem::create_directories("cli_tmp");
  const auto sys = builtin_system("se3-heading");
  SynthesisOptions opt;
  opt.grid_size = 30;
  opt.seed = 11;
  const auto synth = synthesize(sys, 0.2, opt);
  REQUIRE(synth.feasible);

  const std::string text = certificate_to_text(synth.certificate);
  const auto parsed = certificate_from_text(text);
  CHECK(certificate_to_text(parsed) == text);
  CHECK(parsed.system_name == "se3-heading");
  CHECK(parsed.param.coeffs.size() == 1);
  CHECK((parsed.param.coeffs[0] - synth.certificate.param.coeffs[0]).norm() ==
        0.0);
  CHECK(parsed.report.pass == synth.certificate.report.pass);

  SUBCASE("truncated text is an input error") {
    CHECK_THROWS_AS(certificate_from_text(text.substr(0, text.size() / 2)),
                    InvalidInputError);
    CHECK_THROWS_AS(certificate_from_text("not a certificate\n"),
                    InvalidInputError);
  }
}

TEST_CASE("cli synthesize / verify / simulate") {
  std::filesystem::create_directories("cli_tmp");
  write_text_file("cli_tmp/scalar.cfg", kScalarConfig);

  SUBCASE("end-to-end happy path") {
    CHECK(run_cli("synthesize --config cli_tmp/scalar.cfg") == 0);
    CHECK(std::filesystem::exists("cli_tmp/scalar_cert.txt"));
    CHECK(run_cli("verify --cert cli_tmp/scalar_cert.txt --samples 400 "
                  "--seed 7 --out cli_tmp/verify_report.txt") == 0);
    const std::string report = read_text_file("cli_tmp/verify_report.txt");
    CHECK(report.find("pass = true") != std::string::npos);

    CHECK(run_cli("simulate --config cli_tmp/scalar.cfg --cert "
                  "cli_tmp/scalar_cert.txt") == 0);
    const std::string trace = read_text_file("cli_tmp/scalar_trace.csv");
    CHECK(trace.find("t,x0,xstar0,u0,d_induced,path_energy,h_residual") == 0);
    // Zero-initial-error run: every distance stays at the noise floor.
    std::istringstream rows(trace);
    std::string row;
    std::getline(rows, row);  // header
    while (std::getline(rows, row)) {
      std::vector<std::string> cells;
      std::istringstream cs(row);
      std::string cell;
      while (std::getline(cs, cell, ',')) cells.push_back(cell);
      REQUIRE(cells.size() == 7);
      CHECK(parse_double(cells[cells.size() - 3]) <= 1e-6);
    }
    const std::string summary = read_text_file("cli_tmp/scalar_summary.txt");
    CHECK(summary.find("rate_ok = true") != std::string::npos);
  }

  SUBCASE("infeasible synthesis exits 2 but still writes the report") {
    std::string cfg = kScalarConfig;
    cfg.replace(cfg.find("lambda = 0.5"), 12, "lambda = 1e6");
    cfg.replace(cfg.find("seed = 3"), 8,
                "seed = 3\nrho_enabled = false\nmax_iters = 300");
    cfg.replace(cfg.find("cli_tmp/scalar_cert.txt"), 23,
                "cli_tmp/infeasible.txt");
    write_text_file("cli_tmp/infeasible.cfg", cfg);
    CHECK(run_cli("synthesize --config cli_tmp/infeasible.cfg") == 2);
    const auto cert = read_certificate("cli_tmp/infeasible.txt");
    CHECK(cert.status == "infeasible");
  }

  SUBCASE("bad config exits 3") {
    write_text_file("cli_tmp/broken.cfg", "[synthesis]\nlambda = 0.5\n");
    CHECK(run_cli("synthesize --config cli_tmp/broken.cfg") == 3);
    CHECK(run_cli("synthesize --config cli_tmp/missing.cfg") == 3);
    CHECK(run_cli("synthesize") == 3);
  }

  SUBCASE("tampered certificate fails verification naming the bound") {
    REQUIRE(run_cli("synthesize --config cli_tmp/scalar.cfg") == 0);
    auto cert = read_certificate("cli_tmp/scalar_cert.txt");
    cert.param.coeffs[0] *= 100.0;  // pushes W past 1/a1
    write_certificate(cert, "cli_tmp/tampered_cert.txt");
    CHECK(run_cli("verify --cert cli_tmp/tampered_cert.txt --out "
                  "cli_tmp/tampered_report.txt") == 2);
    const std::string report = read_text_file("cli_tmp/tampered_report.txt");
    CHECK(report.find("worst_condition = R0_hi") != std::string::npos);
  }

  SUBCASE("unreadable certificate exits 3") {
    write_text_file("cli_tmp/garbage_cert.txt", "ccm-certificate-v1\nsys");
    CHECK(run_cli("verify --cert cli_tmp/garbage_cert.txt") == 3);
  }

  SUBCASE("certificate/config system mismatch exits 3") {
    REQUIRE(run_cli("synthesize --config cli_tmp/scalar.cfg") == 0);
    std::string cfg = kScalarConfig;
    cfg.replace(cfg.find("name = scalar-linear"), 20, "name = se3-heading");
    write_text_file("cli_tmp/se3.cfg", cfg);
    CHECK(run_cli("simulate --config cli_tmp/se3.cfg --cert "
                  "cli_tmp/scalar_cert.txt") == 3);
  }

  SUBCASE("repeated runs are byte-identical") {
    REQUIRE(run_cli("synthesize --config cli_tmp/scalar.cfg") == 0);
    const std::string cert_a = read_text_file("cli_tmp/scalar_cert.txt");
    REQUIRE(run_cli("synthesize --config cli_tmp/scalar.cfg") == 0);
    CHECK(read_text_file("cli_tmp/scalar_cert.txt") == cert_a);

    REQUIRE(run_cli("simulate --config cli_tmp/scalar.cfg --cert "
                    "cli_tmp/scalar_cert.txt") == 0);
    const std::string trace_a = read_text_file("cli_tmp/scalar_trace.csv");
    REQUIRE(run_cli("simulate --config cli_tmp/scalar.cfg --cert "
                    "cli_tmp/scalar_cert.txt") == 0);
    CHECK(read_text_file("cli_tmp/scalar_trace.csv") == trace_a);
  }
}

TEST_CASE("cli geodesic and sdpa export") {
  std::filesystem::create_directories("cli_tmp");

  SUBCASE("identical endpoints give a zero-length curve") {
    CHECK(run_cli("geodesic --group so3 "
                  "--from 1,0,0,0,1,0,0,0,1 --to 1,0,0,0,1,0,0,0,1 "
                  "--nodes 5 --out cli_tmp/geo_zero.csv") == 0);
    CHECK(parse_double(last_csv_value("cli_tmp/geo_zero.csv")) == 0.0);
  }

  SUBCASE("so3 quarter turn length") {
    CHECK(run_cli("geodesic --group so3 "
                  "--from 1,0,0,0,1,0,0,0,1 --to 0,-1,0,1,0,0,0,0,1 "
                  "--nodes 9 --out cli_tmp/geo_quarter.csv") == 0);
    const double length = parse_double(last_csv_value("cli_tmp/geo_quarter.csv"));
    CHECK(length == doctest::Approx(2.2214414690791831).epsilon(1e-8));
  }

  SUBCASE("component mismatch exits 2") {
    CHECK(run_cli("geodesic --group o2xr --from 1,0,0,1,0 "
                  "--to 1,0,0,-1,0 --nodes 5 --out cli_tmp/geo_bad.csv") == 2);
  }

  SUBCASE("off-group endpoint exits 3") {
    CHECK(run_cli("geodesic --group so3 "
                  "--from 2,0,0,0,1,0,0,0,1 --to 1,0,0,0,1,0,0,0,1 "
                  "--nodes 5") == 3);
  }

  SUBCASE("sdpa export writes a parseable file") {
    write_text_file("cli_tmp/scalar.cfg", kScalarConfig);
    CHECK(run_cli("export-sdpa --config cli_tmp/scalar.cfg --out "
                  "cli_tmp/problem.dat-s") == 0);
    const std::string text = read_text_file("cli_tmp/problem.dat-s");
    CHECK(text.find("* CCM sampled feasibility export") == 0);
  }
}
