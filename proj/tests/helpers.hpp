// Shared test utilities: fixture access, independently coded oracles for the
// coupling recursion and pairwise TV curves, and a subprocess runner for the
// CLI.  The oracles deliberately avoid the library's operator/matrix-power
// code paths so that agreement is a genuine cross-check.
#pragma once

#include <sys/wait.h>

#include <Eigen/Dense>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <mixbound/mixbound.hpp>

#ifndef MIXBOUND_FIXTURES_DIR
#error "MIXBOUND_FIXTURES_DIR must be defined by the build"
#endif
#ifndef MIXBOUND_CLI_PATH
#error "MIXBOUND_CLI_PATH must be defined by the build"
#endif

namespace testutil {

inline std::string fixture_path(const std::string& name) {
  return std::string(MIXBOUND_FIXTURES_DIR) + "/" + name;
}

inline mixbound::StochasticMatrix fixture_matrix(const std::string& name) {
  mixbound::ParsedInput in = mixbound::load_input(fixture_path(name));
  if (!in.matrix) throw std::runtime_error(name + " is not a matrix fixture");
  return *in.matrix;
}

inline mixbound::TimeVaryingKernel fixture_kernel(const std::string& name) {
  mixbound::ParsedInput in = mixbound::load_input(fixture_path(name));
  if (!in.kernel) throw std::runtime_error(name + " is not a kernel fixture");
  return *in.kernel;
}

inline const std::vector<std::string>& matrix_fixture_names() {
  static const std::vector<std::string> names{
      "ex1.csv",  "ex2.csv",  "ex3.json", "ex4.json", "ex5.json",
      "ex6.json", "ex7.json", "ex8.json", "ex9.json"};
  return names;
}

inline Eigen::MatrixXd make_matrix(
    std::initializer_list<std::initializer_list<double>> rows) {
  const int n = static_cast<int>(rows.size());
  const int m = static_cast<int>(rows.begin()->size());
  Eigen::MatrixXd out(n, m);
  int i = 0;
  for (const auto& row : rows) {
    int j = 0;
    for (double v : row) out(i, j++) = v;
    ++i;
  }
  return out;
}

inline mixbound::StochasticMatrix make_chain(
    std::initializer_list<std::initializer_list<double>> rows) {
  return mixbound::StochasticMatrix(make_matrix(rows));
}

// ---------------------------------------------------------------------------
// Oracle 1: non-coupling probability by direct mass propagation over ordered
// state pairs.  Recomputes overlaps and residuals from scratch each step and
// never forms the pair-space operator, so it exercises none of the library's
// coupling code.
// ---------------------------------------------------------------------------

inline double oracle_noncoupling(const Eigen::MatrixXd& p, int i0, int j0,
                                 int steps) {
  const int n = static_cast<int>(p.rows());
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(n, n);
  if (i0 == j0) return 0.0;
  mass(i0, j0) = 1.0;
  for (int s = 0; s < steps; ++s) {
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        if (a == b || mass(a, b) == 0.0) continue;
        double overlap = 0.0;
        for (int u = 0; u < n; ++u) overlap += std::min(p(a, u), p(b, u));
        const double damp = 1.0 - overlap;
        if (damp <= 1e-12) continue;  // row coupled up to the residual floor
        for (int u = 0; u < n; ++u) {
          const double r1 = p(a, u) - std::min(p(a, u), p(b, u));
          if (r1 <= 0.0) continue;
          for (int v = 0; v < n; ++v) {
            if (u == v) continue;
            const double r2 = p(b, v) - std::min(p(a, v), p(b, v));
            if (r2 <= 0.0) continue;
            next(u, v) += mass(a, b) * r1 * r2 / damp;
          }
        }
      }
    }
    mass = next;
  }
  return mass.sum();
}

// ---------------------------------------------------------------------------
// Oracle 2: full-convention TV distance of P^k rows for one ordered pair,
// propagated as a signed vector d <- P^T d.  Never builds matrix powers.
// ---------------------------------------------------------------------------

inline std::vector<double> oracle_pair_tv(const Eigen::MatrixXd& p, int i,
                                          int j, int k_max) {
  const int n = static_cast<int>(p.rows());
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  d(i) += 1.0;
  d(j) -= 1.0;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(k_max) + 1);
  out.push_back(d.lpNorm<1>());
  for (int k = 1; k <= k_max; ++k) {
    d = p.transpose() * d;
    out.push_back(d.lpNorm<1>());
  }
  return out;
}

// Envelope of oracle_pair_tv over all ordered pairs.
inline std::vector<double> oracle_tv_envelope(const Eigen::MatrixXd& p,
                                              int k_max) {
  const int n = static_cast<int>(p.rows());
  std::vector<double> env(static_cast<std::size_t>(k_max) + 1, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const std::vector<double> c = oracle_pair_tv(p, i, j, k_max);
      for (std::size_t k = 0; k < c.size(); ++k)
        env[k] = std::max(env[k], c[k]);
    }
  return env;
}

// ---------------------------------------------------------------------------
// Subprocess runner for CLI tests.
// ---------------------------------------------------------------------------

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const std::string tag = std::to_string(++counter);
  const std::string out_path = "cli_out_" + tag + ".tmp";
  const std::string err_path = "cli_err_" + tag + ".tmp";
  const std::string cmd = std::string(MIXBOUND_CLI_PATH) + " " + args + " > " +
                          out_path + " 2> " + err_path;
  const int status = std::system(cmd.c_str());
  CliResult r;
  if (status == -1)
    r.exit_code = -1;
  else if (WIFEXITED(status))
    r.exit_code = WEXITSTATUS(status);
  else
    r.exit_code = 128;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  std::remove(out_path.c_str());
  std::remove(err_path.c_str());
  return r;
}

inline CliResult run_cli(const std::vector<std::string>& args) {
  std::string joined;
  for (const std::string& a : args) {
    if (!joined.empty()) joined += ' ';
    joined += a;
  }
  return run_cli(joined);
}

// Braced argument lists would otherwise be ambiguous: a two-element list of
// string literals also matches std::string's iterator-pair constructor.
inline CliResult run_cli(std::initializer_list<std::string> args) {
  return run_cli(std::vector<std::string>(args));
}

inline bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace testutil
