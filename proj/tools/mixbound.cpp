// mixbound: convergence-rate certificates for finite-state Markov chains.
//
// Subcommands:
//   analyze   bound-comparison report for a single transition matrix
//   simulate  Monte Carlo coupling run with the exact non-coupling overlay
//   nonhom    report for a time-varying kernel (optionally vs. a base matrix)
//   random    seeded random ensemble with ordering-violation count
//
// Exit codes: 0 success, 2 validation/usage error, 3 numerical cross-check
// failure.  Nothing is written to stdout on a nonzero exit.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <mixbound/mixbound.hpp>

namespace {

using nlohmann::json;

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string path;
  int m_max = mixbound::config::kDefaultMMax;
  int n_max = mixbound::config::kDefaultHorizon;
  std::string format = "table";
  std::uint64_t seed = 0;  // accepted for interface uniformity; unused
  int max_n_guard = mixbound::config::kPairSpaceGuard;
  double cross_check_tol = mixbound::config::kCrossCheckTol;
};

std::string run_analyze(const AnalyzeArgs& a) {
  mixbound::ParsedInput in = mixbound::load_input(a.path);
  if (!in.matrix)
    throw mixbound::ValidationError(
        "InputMismatch",
        "analyze expects a single transition matrix; use the nonhom command "
        "for time-varying kernel files");
  mixbound::CompareOptions opt;
  opt.m_max = a.m_max;
  opt.n_max = a.n_max;
  opt.max_n_guard = a.max_n_guard;
  opt.spectral.cross_check_tol = a.cross_check_tol;
  mixbound::BoundsReport rep = mixbound::compare_report(*in.matrix, opt);
  if (a.format == "json") return dump_json(mixbound::report_to_json(rep));
  if (a.format == "csv") return mixbound::render_report_csv(rep);
  return mixbound::render_report_table(rep);
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string path;
  std::vector<int> init{0, 1};
  long long trials = 10000;
  int horizon = 20;
  std::uint64_t seed = 1;
  std::string format = "table";
  int max_n_guard = mixbound::config::kPairSpaceGuard;
};

std::string run_simulate(const SimulateArgs& a) {
  mixbound::ParsedInput in = mixbound::load_input(a.path);
  mixbound::TimeVaryingKernel kernel =
      in.kernel ? *in.kernel
                : mixbound::TimeVaryingKernel::homogeneous(*in.matrix);
  const int n = kernel.size();
  for (int s : a.init)
    if (s < 0 || s >= n)
      throw mixbound::ValidationError(
          "IndexOutOfRange", "initial state " + std::to_string(s) +
                                 " outside [0, " + std::to_string(n) + ")");

  mixbound::SimConfig cfg{kernel,
                          mixbound::Distribution::point(n, a.init[0]),
                          mixbound::Distribution::point(n, a.init[1]),
                          a.horizon,
                          a.trials,
                          a.seed};
  mixbound::SimResult res = mixbound::simulate(cfg);

  // Exact non-coupling probability for this initial pair: the coupling
  // operator applied to the all-ones vector.  Equal initial states couple at
  // time zero, so the exact curve is identically zero there.
  std::vector<double> bound(static_cast<std::size_t>(a.horizon) + 1, 0.0);
  if (a.init[0] != a.init[1] && n >= 2) {
    Eigen::MatrixXd w =
        mixbound::product_bound_vector(kernel, a.horizon, a.max_n_guard);
    mixbound::PairIndex index(n);
    const int pair = index.encode(a.init[0], a.init[1]);
    for (int k = 0; k <= a.horizon; ++k)
      bound[static_cast<std::size_t>(k)] = w(pair, k);
  }

  // The empirical curve estimates the exact curve itself, so it should sit
  // within a few half-widths of it; three 95% half-widths makes a failure
  // under correct coupling vanishingly rare while still catching bugs.
  bool pass = true;
  for (std::size_t k = 0; k < res.p_not_coupled.size(); ++k)
    if (res.p_not_coupled[k] > bound[k] + 3.0 * res.ci_half[k]) pass = false;

  if (a.format == "json") {
    json j = mixbound::sim_to_json(res);
    j["exact_bound"] = bound;
    j["verdict"] = pass ? "PASS" : "FAIL";
    return dump_json(j);
  }
  if (a.format == "csv") return mixbound::render_sim_csv(res, bound, pass);
  return mixbound::render_sim_table(res, bound, pass);
}

// ---------------------------------------------------------------------------
// nonhom
// ---------------------------------------------------------------------------

struct NonhomArgs {
  std::string path;
  std::string base_path;  // empty = no perturbation fit
  int n_max = mixbound::config::kDefaultHorizon;
  bool periodic_rate = true;
  std::string format = "table";
  int max_n_guard = mixbound::config::kPairSpaceGuard;
  double cross_check_tol = mixbound::config::kCrossCheckTol;
};

std::string render_curves_table(const std::vector<mixbound::BoundCurve>& cs) {
  std::ostringstream os;
  std::vector<std::string> headers;
  std::vector<const std::vector<double>*> columns;
  for (const mixbound::BoundCurve& c : cs) {
    os << "  curve " << c.label << ": rate " << mixbound::fmt_g9(c.rate);
    if (!c.note.empty()) os << " (" << c.note << ")";
    os << "\n";
    headers.push_back(c.label);
    columns.push_back(&c.values);
  }
  os << mixbound::detail::value_table(headers, columns);
  return os.str();
}

std::string render_curves_csv(const std::vector<mixbound::BoundCurve>& cs) {
  std::ostringstream os;
  os << "k";
  for (const mixbound::BoundCurve& c : cs) os << "," << c.label;
  os << "\n";
  std::size_t rows = 0;
  for (const mixbound::BoundCurve& c : cs)
    rows = std::max(rows, c.values.size());
  for (std::size_t k = 0; k < rows; ++k) {
    os << k;
    for (const mixbound::BoundCurve& c : cs)
      os << ","
         << (k < c.values.size() ? mixbound::fmt_g9(c.values[k]) : "");
    os << "\n";
  }
  return os.str();
}

std::string run_nonhom(const NonhomArgs& a) {
  mixbound::ParsedInput in = mixbound::load_input(a.path);
  mixbound::TimeVaryingKernel kernel =
      in.kernel ? *in.kernel
                : mixbound::TimeVaryingKernel::homogeneous(*in.matrix);

  mixbound::CompareOptions opt;
  opt.n_max = a.n_max;
  opt.periodic_rate_enabled = a.periodic_rate;
  opt.max_n_guard = a.max_n_guard;
  opt.spectral.cross_check_tol = a.cross_check_tol;
  mixbound::BoundsReport rep = mixbound::compare_report(kernel, opt);

  if (a.base_path.empty()) {
    if (a.format == "json") return dump_json(mixbound::report_to_json(rep));
    if (a.format == "csv") return mixbound::render_report_csv(rep);
    return mixbound::render_report_table(rep);
  }

  mixbound::ParsedInput base_in = mixbound::load_input(a.base_path);
  if (!base_in.matrix)
    throw mixbound::ValidationError(
        "InputMismatch", "--base expects a single transition matrix file");
  mixbound::PerturbationFit fit =
      mixbound::fit_perturbation(*base_in.matrix, kernel);
  std::vector<mixbound::BoundCurve> curves;
  if (fit.feasible)
    curves = mixbound::perturbation_bounds(fit, *base_in.matrix, rep.horizon);

  if (a.format == "json") {
    json j;
    j["report"] = mixbound::report_to_json(rep);
    j["fit"] = mixbound::fit_to_json(fit);
    json cj = json::array();
    for (const mixbound::BoundCurve& c : curves)
      cj.push_back(mixbound::curve_to_json(c));
    j["perturbation_curves"] = std::move(cj);
    return dump_json(j);
  }
  if (a.format == "csv") {
    std::ostringstream os;
    os << mixbound::render_report_csv(rep);
    os << "# fit feasible=" << (fit.feasible ? "yes" : "no");
    if (fit.feasible)
      os << " epsilon=" << mixbound::fmt_g9(fit.epsilon)
         << " delta=" << mixbound::fmt_g9(fit.delta);
    else
      os << " constraint=" << fit.witness.constraint << " t=" << fit.witness.t
         << " i=" << fit.witness.i << " j=" << fit.witness.j
         << " state=" << fit.witness.state;
    os << "\n";
    if (!curves.empty()) os << render_curves_csv(curves);
    return os.str();
  }
  std::ostringstream os;
  os << mixbound::render_report_table(rep);
  os << mixbound::render_fit_table(fit);
  if (!curves.empty()) os << render_curves_table(curves);
  return os.str();
}

// ---------------------------------------------------------------------------
// random
// ---------------------------------------------------------------------------

struct RandomArgs {
  int n = 3;
  int count = 10;
  std::uint64_t seed = 1;
  double sparsity = 0.0;
  std::string format = "table";
  int n_max = mixbound::config::kDefaultHorizon;
  int max_n_guard = mixbound::config::kPairSpaceGuard;
};

struct EnsembleRow {
  int index = 0;
  double kappa = 0.0;
  double one_minus_kappa = 0.0;
  double r_vhat = 0.0;
  double lambda2 = 0.0;
  bool ordered = true;  // |lambda2| <= r <= 1 - kappa (tolerance-flagged)
};

std::string run_random(const RandomArgs& a) {
  mixbound::Xoshiro256StarStar rng(a.seed);
  std::vector<EnsembleRow> rows;
  int violations = 0;
  for (int i = 0; i < a.count; ++i) {
    mixbound::StochasticMatrix p =
        mixbound::random_stochastic_matrix(a.n, rng, a.sparsity);
    mixbound::CompareOptions opt;
    opt.n_max = a.n_max;
    opt.max_n_guard = a.max_n_guard;
    opt.spectral.fast = true;  // power iteration first; eigensolver fallback
    mixbound::BoundsReport rep = mixbound::compare_report(p, opt);
    EnsembleRow row;
    row.index = i;
    row.kappa = rep.kappa_profiles.front().scalar;
    row.one_minus_kappa = rep.one_minus_kappa;
    row.r_vhat = rep.r_vhat;
    row.lambda2 = rep.lambda2;
    row.ordered = rep.flags.lambda2_le_r && rep.flags.r_le_one_minus_kappa;
    if (!row.ordered) ++violations;
    rows.push_back(row);
  }

  if (a.format == "json") {
    json jr = json::array();
    for (const EnsembleRow& r : rows)
      jr.push_back(json{{"index", r.index},
                        {"kappa", r.kappa},
                        {"one_minus_kappa", r.one_minus_kappa},
                        {"r_vhat", r.r_vhat},
                        {"lambda2", r.lambda2},
                        {"ordered", r.ordered}});
    return dump_json(json{{"type", "random-ensemble"},
                          {"states", a.n},
                          {"count", a.count},
                          {"seed", a.seed},
                          {"sparsity", a.sparsity},
                          {"rows", std::move(jr)},
                          {"ordering_violations", violations}});
  }
  if (a.format == "csv") {
    std::ostringstream os;
    os << "# states=" << a.n << " count=" << a.count << " seed=" << a.seed
       << " sparsity=" << mixbound::fmt_g9(a.sparsity)
       << " ordering_violations=" << violations << "\n";
    os << "index,kappa,one_minus_kappa,r_vhat,lambda2,ordered\n";
    for (const EnsembleRow& r : rows)
      os << r.index << "," << mixbound::fmt_g9(r.kappa) << ","
         << mixbound::fmt_g9(r.one_minus_kappa) << ","
         << mixbound::fmt_g9(r.r_vhat) << "," << mixbound::fmt_g9(r.lambda2)
         << "," << (r.ordered ? "yes" : "no") << "\n";
    return os.str();
  }
  std::ostringstream os;
  os << "random ensemble\n";
  os << "  states: " << a.n << "  count: " << a.count << "  seed: " << a.seed
     << "  sparsity: " << mixbound::fmt_g9(a.sparsity) << "\n";
  os << "  index         kappa       1-kappa       r(Vhat)      |lambda2|"
        "  ordered\n";
  for (const EnsembleRow& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %5d  %12s  %12s  %12s  %13s  %7s\n",
                  r.index, mixbound::fmt_g9(r.kappa).c_str(),
                  mixbound::fmt_g9(r.one_minus_kappa).c_str(),
                  mixbound::fmt_g9(r.r_vhat).c_str(),
                  mixbound::fmt_g9(r.lambda2).c_str(),
                  r.ordered ? "yes" : "no");
    os << buf;
  }
  os << "  ordering violations: " << violations << "\n";
  return os.str();
}

void add_format_flag(CLI::App* cmd, std::string& target) {
  cmd->add_option("--format", target, "output format")
      ->check(CLI::IsMember({"table", "json", "csv"}))
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "mixbound: rigorous convergence-rate certificates for finite-state "
      "Markov chains"};
  app.require_subcommand(1);

  AnalyzeArgs an;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "bound-comparison report for one transition matrix");
  analyze->add_option("path", an.path, "matrix file (CSV or JSON)")
      ->required();
  analyze->add_option("--m-max", an.m_max, "largest multi-step window")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  analyze->add_option("--n-max", an.n_max, "horizon for bound curves")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_format_flag(analyze, an.format);
  analyze->add_option("--seed", an.seed,
                      "accepted for interface uniformity (analyze is "
                      "deterministic)");
  analyze
      ->add_option("--max-n-guard", an.max_n_guard,
                   "largest state count for pair-operator construction")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  analyze
      ->add_option("--cross-check-tol", an.cross_check_tol,
                   "relative tolerance between spectral-radius routes")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Monte Carlo coupling run with the exact overlay");
  simulate->add_option("path", sim.path, "matrix or kernel file")->required();
  simulate
      ->add_option("--init", sim.init,
                   "initial states for the two copies (two indices)")
      ->expected(2);
  simulate->add_option("--trials", sim.trials, "independent trajectories")
      ->capture_default_str();
  simulate->add_option("--horizon", sim.horizon, "steps per trajectory")
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();
  add_format_flag(simulate, sim.format);
  simulate
      ->add_option("--max-n-guard", sim.max_n_guard,
                   "largest state count for the exact overlay")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  NonhomArgs nh;
  CLI::App* nonhom = app.add_subcommand(
      "nonhom", "report for a time-varying kernel");
  nonhom->add_option("path", nh.path, "kernel file (or matrix, treated as "
                                      "a homogeneous kernel)")
      ->required();
  nonhom->add_option("--n-max", nh.n_max, "horizon for bound curves")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  nonhom->add_flag("--periodic,!--no-periodic", nh.periodic_rate,
                   "compute the period-operator rate for periodic kernels");
  nonhom->add_option("--base", nh.base_path,
                     "base transition matrix for a perturbation fit");
  add_format_flag(nonhom, nh.format);
  nonhom
      ->add_option("--max-n-guard", nh.max_n_guard,
                   "largest state count for pair-operator construction")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  nonhom
      ->add_option("--cross-check-tol", nh.cross_check_tol,
                   "relative tolerance between spectral-radius routes")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  RandomArgs rnd;
  CLI::App* random = app.add_subcommand(
      "random", "seeded random ensemble with ordering summary");
  random->add_option("--n", rnd.n, "state count")
      ->check(CLI::Range(2, 1000000))
      ->capture_default_str();
  random->add_option("--count", rnd.count, "number of matrices")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  random->add_option("--seed", rnd.seed, "RNG seed")->capture_default_str();
  random->add_option("--sparsity", rnd.sparsity,
                     "probability of zeroing each off-pivot entry")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  add_format_flag(random, rnd.format);
  random->add_option("--n-max", rnd.n_max, "horizon for each report")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  random
      ->add_option("--max-n-guard", rnd.max_n_guard,
                   "largest state count for pair-operator construction")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the usage message to stderr
    return 2;
  }

  try {
    std::string out;
    if (*analyze)
      out = run_analyze(an);
    else if (*simulate)
      out = run_simulate(sim);
    else if (*nonhom)
      out = run_nonhom(nh);
    else
      out = run_random(rnd);
    std::cout << out;
    return 0;
  } catch (const mixbound::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const mixbound::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
