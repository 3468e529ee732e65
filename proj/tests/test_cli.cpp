#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "helpers.hpp"

using nlohmann::json;
using testutil::contains;
using testutil::run_cli;

namespace {

struct ScratchFile {
  std::string path;
  ScratchFile(const std::string& name, const std::string& content)
      : path(name) {
    std::ofstream out(path, std::ios::binary);
    out << content;
  }
  ~ScratchFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("analyze: reports and formats") {
  SECTION("table output carries the headline constants") {
    auto r = run_cli({"analyze", testutil::fixture_path("ex1.csv")});
    REQUIRE(r.exit_code == 0);
    REQUIRE(contains(r.out, "kappa: 0.7"));
    REQUIRE(contains(r.out, "r(Vhat): 0.3"));
    REQUIRE(contains(r.out, "markov-dobrushin"));
    REQUIRE(contains(r.out, "coupling-operator"));
  }
  SECTION("the operator rate beats the contraction rate where expected") {
    auto r = run_cli({"analyze", testutil::fixture_path("ex5.json")});
    REQUIRE(r.exit_code == 0);
    REQUIRE(contains(r.out, "kappa: 0"));
    REQUIRE(contains(r.out, "r(Vhat): 0.853112887"));
  }
  SECTION("CSV format") {
    auto r = run_cli({"analyze", testutil::fixture_path("ex2.csv"),
                      "--format", "csv", "--n-max", "8"});
    REQUIRE(r.exit_code == 0);
    REQUIRE(contains(r.out, "k,exact,markov-dobrushin"));
    REQUIRE(contains(r.out, "\n0,2,2"));
  }
  SECTION("JSON output round-trips for every fixture") {
    for (const std::string& name : testutil::matrix_fixture_names()) {
      INFO("fixture " << name);
      auto r = run_cli({"analyze", testutil::fixture_path(name), "--format",
                        "json", "--n-max", "12"});
      REQUIRE(r.exit_code == 0);
      const json parsed = json::parse(r.out);
      REQUIRE(parsed.at("type") == "bounds-report");
      mixbound::BoundsReport rep = mixbound::report_from_json(parsed);
      REQUIRE(mixbound::report_to_json(rep).dump() == parsed.dump());
    }
  }
}

TEST_CASE("analyze: rejection paths write nothing to stdout") {
  SECTION("kernel files belong to the nonhom command") {
    auto r = run_cli({"analyze", testutil::fixture_path("periodic2.json")});
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.out.empty());
    REQUIRE(contains(r.err, "InputMismatch"));
  }
  SECTION("row sums are validated") {
    ScratchFile f("tmp_cli_rowsum.csv", "0.5,0.6\n0.5,0.5\n");
    auto r = run_cli({"analyze", f.path});
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.out.empty());
    REQUIRE(contains(r.err, "RowSumViolation"));
  }
  SECTION("missing file") {
    auto r = run_cli({"analyze", "no_such_file.csv"});
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.out.empty());
    REQUIRE(contains(r.err, "FileNotFound"));
  }
  SECTION("unknown format value") {
    auto r = run_cli({"analyze", testutil::fixture_path("ex1.csv"),
                      "--format", "bogus"});
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.out.empty());
  }
  SECTION("a zero cross-check tolerance trips the numerical exit code") {
    auto r = run_cli({"analyze", testutil::fixture_path("ex7.json"),
                      "--cross-check-tol", "0"});
    REQUIRE(r.exit_code == 3);
    REQUIRE(r.out.empty());
    REQUIRE(contains(r.err, "CrossCheckMismatch"));
  }
}

TEST_CASE("simulate: coupling runs") {
  const std::string ex1 = testutil::fixture_path("ex1.csv");
  SECTION("seeded runs are bit-reproducible") {
    std::vector<std::string> args{"simulate", ex1,      "--trials", "2000",
                                  "--horizon", "8",     "--seed",   "42"};
    auto a = run_cli(args);
    auto b = run_cli(args);
    REQUIRE(a.exit_code == 0);
    REQUIRE(a.out == b.out);
    REQUIRE(contains(a.out, "domination verdict: PASS"));
  }
  SECTION("equal initial states couple immediately") {
    auto r = run_cli({"simulate", ex1, "--init", "0", "0", "--trials", "500",
                      "--horizon", "5", "--seed", "7"});
    REQUIRE(r.exit_code == 0);
    REQUIRE(contains(r.out, "never-coupled trials: 0"));
    REQUIRE(contains(r.out, "domination verdict: PASS"));
  }
  SECTION("JSON output exposes the exact overlay and verdict") {
    auto r = run_cli({"simulate", ex1, "--trials", "2000", "--horizon", "4",
                      "--seed", "42", "--format", "json"});
    REQUIRE(r.exit_code == 0);
    const json j = json::parse(r.out);
    REQUIRE(j.at("verdict") == "PASS");
    REQUIRE(j.at("trials") == 2000);
    REQUIRE(j.at("exact_bound").size() == 5);
    REQUIRE(j.at("exact_bound")[0].get<double>() == 1.0);
    REQUIRE(j.at("exact_bound")[1].get<double>() ==
            Catch::Approx(0.3).margin(1e-12));
  }
  SECTION("zero trials are rejected before any output") {
    auto r = run_cli({"simulate", ex1, "--trials", "0"});
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.out.empty());
    REQUIRE(contains(r.err, "InvalidTrialCount"));
  }
  SECTION("initial states must exist") {
    auto r = run_cli({"simulate", ex1, "--init", "0", "5"});
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.out.empty());
    REQUIRE(contains(r.err, "IndexOutOfRange"));
  }
}

TEST_CASE("nonhom: time-varying reports") {
  const std::string periodic2 = testutil::fixture_path("periodic2.json");
  SECTION("periodic kernel shows all three asymptotic routes") {
    auto r = run_cli({"nonhom", periodic2});
    REQUIRE(r.exit_code == 0);
    REQUIRE(contains(r.out, "periodic: yes"));
    REQUIRE(contains(r.out, "periodic-operator"));
    REQUIRE(contains(r.out, "0.131761569"));
  }
  SECTION("the periodic route can be disabled without losing the rate") {
    auto r = run_cli({"nonhom", periodic2, "--no-periodic"});
    REQUIRE(r.exit_code == 0);
    REQUIRE_FALSE(contains(r.out, "periodic-operator"));
    REQUIRE(contains(r.out, "0.131761569"));  // product-curve per-step rate
  }
  SECTION("matrix files are accepted as homogeneous kernels") {
    auto r = run_cli({"nonhom", testutil::fixture_path("ex1.csv")});
    REQUIRE(r.exit_code == 0);
    REQUIRE(contains(r.out, "time-varying kernel report"));
  }
  SECTION("JSON report round-trips") {
    auto r = run_cli({"nonhom", periodic2, "--format", "json", "--n-max",
                      "10"});
    REQUIRE(r.exit_code == 0);
    const json parsed = json::parse(r.out);
    mixbound::BoundsReport rep = mixbound::report_from_json(parsed);
    REQUIRE(mixbound::report_to_json(rep).dump() == parsed.dump());
  }
}

TEST_CASE("nonhom: perturbation fits against a base") {
  SECTION("documented two-slice perturbation of the symmetric chain") {
    ScratchFile kernel("tmp_cli_pert.json",
                       R"({"slices": [{"rows": [[0.66, 0.34], [0.34, 0.66]]},
                                      {"rows": [[0.64, 0.36], [0.36, 0.64]]}],
                           "periodic": true})");
    auto r = run_cli({"nonhom", kernel.path, "--base",
                      testutil::fixture_path("ex1.csv"), "--n-max", "10"});
    REQUIRE(r.exit_code == 0);
    REQUIRE(contains(r.out, "feasible: yes"));
    REQUIRE(contains(r.out, "epsilon: 0.0666666667"));
    REQUIRE(contains(r.out, "binding constraint: damping-ratio"));
    REQUIRE(contains(r.out, "sense1 (operator rate < 1): yes"));
    REQUIRE(contains(r.out, "perturbed-coupling"));
  }
  SECTION("zero-versus-positive entries make the fit infeasible, not an error") {
    ScratchFile base("tmp_cli_base.csv", "1,0\n0.5,0.5\n");
    ScratchFile kernel("tmp_cli_zvp.json",
                       R"({"slices": [{"rows": [[0.9, 0.1], [0.5, 0.5]]}],
                           "periodic": true})");
    auto r = run_cli({"nonhom", kernel.path, "--base", base.path});
    REQUIRE(r.exit_code == 0);
    REQUIRE(contains(r.out, "feasible: no"));
    REQUIRE(contains(r.out, "row-ratio"));
    REQUIRE_FALSE(contains(r.out, "perturbed-coupling"));
  }
  SECTION("JSON carries report, fit, and transfer curves") {
    ScratchFile kernel("tmp_cli_pert2.json",
                       R"({"slices": [{"rows": [[0.66, 0.34], [0.34, 0.66]]},
                                      {"rows": [[0.64, 0.36], [0.36, 0.64]]}],
                           "periodic": true})");
    auto r = run_cli({"nonhom", kernel.path, "--base",
                      testutil::fixture_path("ex1.csv"), "--format", "json",
                      "--n-max", "10"});
    REQUIRE(r.exit_code == 0);
    const json j = json::parse(r.out);
    REQUIRE(j.at("report").at("type") == "bounds-report");
    REQUIRE(j.at("fit").at("feasible") == true);
    REQUIRE(j.at("fit").at("epsilon").get<double>() ==
            Catch::Approx(1.0 / 15.0).margin(1e-12));
    REQUIRE(j.at("perturbation_curves").size() == 3);
  }
}

TEST_CASE("random: seeded ensembles") {
  SECTION("two-state chains satisfy the ordering on every draw") {
    auto r = run_cli({"random", "--n", "2", "--count", "8", "--seed", "3",
                      "--format", "csv", "--n-max", "10"});
    REQUIRE(r.exit_code == 0);
    REQUIRE(contains(r.out, "# states=2 count=8 seed=3"));
    REQUIRE(contains(r.out, "ordering_violations=0"));
    REQUIRE_FALSE(contains(r.out, ",no\n"));
  }
  SECTION("an empty ensemble is a header-only success") {
    auto r = run_cli({"random", "--count", "0"});
    REQUIRE(r.exit_code == 0);
    REQUIRE(contains(r.out, "count: 0"));
    REQUIRE(contains(r.out, "ordering violations: 0"));
  }
  SECTION("identical seeds give identical ensembles") {
    auto a = run_cli({"random", "--n", "4", "--count", "3", "--seed", "11"});
    auto b = run_cli({"random", "--n", "4", "--count", "3", "--seed", "11"});
    REQUIRE(a.exit_code == 0);
    REQUIRE(a.out == b.out);
  }
}

TEST_CASE("top-level usage errors") {
  SECTION("a subcommand is required") {
    auto r = run_cli("");
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.out.empty());
  }
  SECTION("help succeeds") {
    auto r = run_cli("--help");
    REQUIRE(r.exit_code == 0);
    REQUIRE(contains(r.out, "analyze"));
    REQUIRE(contains(r.out, "simulate"));
  }
  SECTION("unknown options are parse errors") {
    auto r = run_cli({"analyze", testutil::fixture_path("ex1.csv"),
                      "--definitely-not-a-flag"});
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.out.empty());
  }
}
