#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mixbound/chain.hpp"
#include "mixbound/coupling.hpp"
#include "mixbound/errors.hpp"
#include "mixbound/rng.hpp"

namespace mixbound {

namespace config {
constexpr double kWilson95Z = 1.959963984540054;   // 97.5% normal quantile
constexpr double kWilson99Z = 2.5758293035489004;  // 99.5% normal quantile
}  // namespace config

// Four-component coupling state.  zeta = 1 means the two trajectories have
// not met yet and live in (eta1, eta2); once they couple (zeta = 0) both
// outputs read the common component xi and zeta stays 0 forever.
struct CouplingState {
  int eta1 = 0;
  int eta2 = 0;
  int xi = 0;    // never read while zeta = 1 (placeholder)
  int zeta = 1;  // 1 = not yet coupled

  int x1() const { return zeta == 1 ? eta1 : xi; }
  int x2() const { return zeta == 1 ? eta2 : xi; }
};

struct SimConfig {
  TimeVaryingKernel kernel;  // homogeneous chains via TimeVaryingKernel::homogeneous
  Distribution init1;        // initial law of the first copy
  Distribution init2;        // initial law of the second copy
  int horizon = 0;           // steps to simulate (>= 1)
  long long trials = 0;      // independent trajectories (>= 1)
  std::uint64_t seed = 0;
};

struct SimResult {
  long long trials = 0;
  int horizon = 0;
  int states = 0;
  std::vector<long long> not_coupled_counts;  // index n = 0..horizon
  std::vector<double> p_not_coupled;          // empirical P(zeta_n = 1)
  std::vector<double> ci_half;                // 95% Wilson half-widths
  // Index n = trials that coupled exactly at time n (0 = at the initial
  // draw); the final extra bucket counts trajectories that never coupled.
  std::vector<long long> coupling_time_histogram;
  Eigen::MatrixXd marginal_counts1;  // (horizon+1) x states occupancy counts
  Eigen::MatrixXd marginal_counts2;
};

// Wilson score interval for a binomial proportion.
inline double wilson_half_width(long long successes, long long trials,
                                double z = config::kWilson95Z) {
  if (trials < 1)
    throw ValidationError("InvalidTrialCount", "trials must be >= 1");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  return (z / denom) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
}

inline std::pair<double, double> wilson_interval(
    long long successes, long long trials, double z = config::kWilson95Z) {
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = wilson_half_width(successes, trials, z);
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace detail {

// Inverse-CDF draw from nonnegative (possibly unnormalized) weights with the
// given total mass.  The fallback to the last positive index absorbs the
// rounding gap between the running sum and the nominal total.
inline int draw_index(const Eigen::VectorXd& weights, double total,
                      double u01) {
  const double threshold = u01 * total;
  double cum = 0.0;
  int last_positive = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    const double w = weights(i);
    if (w <= 0.0) continue;
    last_positive = static_cast<int>(i);
    cum += w;
    if (threshold < cum) return last_positive;
  }
  return last_positive;
}

}  // namespace detail

struct CoupledDraw {
  int x1 = 0;
  int x2 = 0;
  bool coupled = false;
};

// Maximal-coupling draw of a pair (x1, x2) with marginals p1 and p2: with
// probability q = sum of min(p1, p2) both variables take a common value drawn
// from the overlap, otherwise they are drawn independently from the
// normalized residuals.  q = 1 and q = 0 need no special-casing: u in [0,1)
// lands in the right branch surely.
inline CoupledDraw sample_coupled_pair(const Distribution& p1,
                                       const Distribution& p2,
                                       Xoshiro256StarStar& rng) {
  if (p1.size() != p2.size()) {
    std::ostringstream os;
    os << "distributions have sizes " << p1.size() << " and " << p2.size();
    throw ValidationError("LengthMismatch", os.str());
  }
  const int n = p1.size();
  Eigen::VectorXd overlap(n);
  double q = 0.0;
  for (int i = 0; i < n; ++i) {
    overlap(i) = std::min(p1[i], p2[i]);
    q += overlap(i);
  }
  const double u = rng.uniform();
  if (u < q) {
    const int x = detail::draw_index(overlap, q, rng.uniform());
    return {x, x, true};
  }
  Eigen::VectorXd r1 = p1.vector() - overlap;
  Eigen::VectorXd r2 = p2.vector() - overlap;
  const double t1 = r1.sum();
  const double t2 = r2.sum();
  if (t1 <= 0.0 || t2 <= 0.0) {
    // Residual mass lost to rounding (q within one ulp of 1): treat as the
    // coupled branch, which carries essentially all the probability.
    const int x = detail::draw_index(overlap, q, rng.uniform());
    return {x, x, true};
  }
  const int x1 = detail::draw_index(r1, t1, rng.uniform());
  const int x2 = detail::draw_index(r2, t2, rng.uniform());
  return {x1, x2, false};
}

// One transition of the coupling construction under kernel p.  Coupled states
// move the common component only; uncoupled pairs couple with probability
// kappa(eta1, eta2) (drawing the common landing state from the normalized
// overlap) and otherwise move independently by the residual densities.  After
// coupling the eta components are frozen: no output reads them.
inline CouplingState step(const CouplingState& s, const StochasticMatrix& p,
                          Xoshiro256StarStar& rng) {
  CouplingState out = s;
  if (s.zeta == 0) {
    out.xi = detail::draw_index(p.row(s.xi), 1.0, rng.uniform());
    return out;
  }
  p.check_state(s.eta1);
  p.check_state(s.eta2);
  const int n = p.size();
  const double kap = kappa_pair(p, s.eta1, s.eta2);
  const double u = rng.uniform();
  if (u < kap) {
    Eigen::VectorXd overlap(n);
    for (int i = 0; i < n; ++i)
      overlap(i) = std::min(p(s.eta1, i), p(s.eta2, i));
    out.xi = detail::draw_index(overlap, kap, rng.uniform());
    out.zeta = 0;
    return out;
  }
  const ResidualPair rp = residual_pair(p, s.eta1, s.eta2);
  out.eta1 = detail::draw_index(rp.phi1, 1.0, rng.uniform());
  out.eta2 = detail::draw_index(rp.phi2, 1.0, rng.uniform());
  return out;
}

// Seeded Monte Carlo over independent trajectories.  Each trial consumes its
// own generator stream derived as seed XOR trial index, so the result is
// bit-reproducible and independent of evaluation order; aggregation is a
// plain sum.
inline SimResult simulate(const SimConfig& cfg) {
  if (cfg.trials < 1)
    throw ValidationError("InvalidTrialCount", "trials must be >= 1");
  if (cfg.horizon < 1)
    throw ValidationError("InvalidHorizon", "horizon must be >= 1");
  const int n_states = cfg.kernel.slice(0).size();
  if (cfg.init1.size() != n_states || cfg.init2.size() != n_states) {
    std::ostringstream os;
    os << "initial distributions have sizes " << cfg.init1.size() << " and "
       << cfg.init2.size() << ", kernel has " << n_states << " states";
    throw ValidationError("LengthMismatch", os.str());
  }
  if (!cfg.kernel.periodic() && cfg.horizon > cfg.kernel.slice_count()) {
    std::ostringstream os;
    os << "horizon " << cfg.horizon << " exceeds the kernel length "
       << cfg.kernel.slice_count();
    throw ValidationError("HorizonExceeded", os.str());
  }

  SimResult res;
  res.trials = cfg.trials;
  res.horizon = cfg.horizon;
  res.states = n_states;
  res.not_coupled_counts.assign(static_cast<std::size_t>(cfg.horizon) + 1, 0);
  res.coupling_time_histogram.assign(static_cast<std::size_t>(cfg.horizon) + 2,
                                     0);
  res.marginal_counts1 = Eigen::MatrixXd::Zero(cfg.horizon + 1, n_states);
  res.marginal_counts2 = Eigen::MatrixXd::Zero(cfg.horizon + 1, n_states);

  for (long long trial = 0; trial < cfg.trials; ++trial) {
    Xoshiro256StarStar rng =
        trial_stream(cfg.seed, static_cast<std::uint64_t>(trial));
    const CoupledDraw d = sample_coupled_pair(cfg.init1, cfg.init2, rng);
    CouplingState st;
    if (d.coupled) {
      st.zeta = 0;
      st.xi = d.x1;
      st.eta1 = d.x1;
      st.eta2 = d.x1;
    } else {
      st.zeta = 1;
      st.eta1 = d.x1;
      st.eta2 = d.x2;
      st.xi = d.x1;  // placeholder, never read while zeta = 1
    }
    int coupling_time = st.zeta == 0 ? 0 : -1;
    res.not_coupled_counts[0] += st.zeta;
    res.marginal_counts1(0, st.x1()) += 1.0;
    res.marginal_counts2(0, st.x2()) += 1.0;
    for (int t = 0; t < cfg.horizon; ++t) {
      st = step(st, cfg.kernel.slice(t), rng);
      res.not_coupled_counts[static_cast<std::size_t>(t) + 1] += st.zeta;
      if (st.zeta == 0 && coupling_time < 0) coupling_time = t + 1;
      res.marginal_counts1(t + 1, st.x1()) += 1.0;
      res.marginal_counts2(t + 1, st.x2()) += 1.0;
    }
    res.coupling_time_histogram[static_cast<std::size_t>(
        coupling_time < 0 ? cfg.horizon + 1 : coupling_time)] += 1;
  }

  res.p_not_coupled.resize(res.not_coupled_counts.size());
  res.ci_half.resize(res.not_coupled_counts.size());
  for (std::size_t i = 0; i < res.not_coupled_counts.size(); ++i) {
    res.p_not_coupled[i] = static_cast<double>(res.not_coupled_counts[i]) /
                           static_cast<double>(cfg.trials);
    res.ci_half[i] = wilson_half_width(res.not_coupled_counts[i], cfg.trials);
  }
  return res;
}

struct MarginalTimeStat {
  int time = 0;
  double sup_error1 = 0.0;  // max abs frequency error, first copy
  double sup_error2 = 0.0;
  double chi2_1 = 0.0;
  double chi2_2 = 0.0;
  int dof = 0;       // positive-probability states minus one
  double z1 = 0.0;   // (chi2 - dof) / sqrt(2 dof), a p-value-like deviation
  double z2 = 0.0;
};

struct MarginalsReport {
  std::vector<MarginalTimeStat> stats;
  double max_sup_error = 0.0;
};

// Compare the simulated occupancy counts of both coupled copies against the
// exactly propagated marginals mu·P_0···P_(t-1) for t = 0..n.
inline MarginalsReport empirical_marginals_check(const SimResult& result,
                                                 const TimeVaryingKernel& kernel,
                                                 const Distribution& mu1,
                                                 const Distribution& mu2,
                                                 int n) {
  if (n < 0 || n > result.horizon)
    throw ValidationError("IndexOutOfRange",
                          "n must lie within the simulated horizon");
  const int states = result.states;
  if (mu1.size() != states || mu2.size() != states)
    throw ValidationError("LengthMismatch",
                          "initial distributions do not match the result");

  MarginalsReport report;
  const double trials = static_cast<double>(result.trials);
  Eigen::VectorXd m1 = mu1.vector();
  Eigen::VectorXd m2 = mu2.vector();
  for (int t = 0; t <= n; ++t) {
    if (t > 0) {
      const Eigen::MatrixXd& pt = kernel.slice(t - 1).matrix();
      m1 = (m1.transpose() * pt).transpose();
      m2 = (m2.transpose() * pt).transpose();
    }
    MarginalTimeStat st;
    st.time = t;
    int positive = 0;
    for (int s = 0; s < states; ++s) {
      const double f1 = result.marginal_counts1(t, s) / trials;
      const double f2 = result.marginal_counts2(t, s) / trials;
      st.sup_error1 = std::max(st.sup_error1, std::abs(f1 - m1(s)));
      st.sup_error2 = std::max(st.sup_error2, std::abs(f2 - m2(s)));
      if (m1(s) > 0.0) {
        const double e = trials * m1(s);
        st.chi2_1 += (result.marginal_counts1(t, s) - e) *
                     (result.marginal_counts1(t, s) - e) / e;
        ++positive;
      }
      if (m2(s) > 0.0) {
        const double e = trials * m2(s);
        st.chi2_2 += (result.marginal_counts2(t, s) - e) *
                     (result.marginal_counts2(t, s) - e) / e;
      }
    }
    st.dof = std::max(1, positive - 1);
    st.z1 = (st.chi2_1 - st.dof) / std::sqrt(2.0 * st.dof);
    st.z2 = (st.chi2_2 - st.dof) / std::sqrt(2.0 * st.dof);
    report.max_sup_error =
        std::max({report.max_sup_error, st.sup_error1, st.sup_error2});
    report.stats.push_back(st);
  }
  return report;
}

}  // namespace mixbound
