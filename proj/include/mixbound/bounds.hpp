#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mixbound/chain.hpp"
#include "mixbound/coupling.hpp"
#include "mixbound/errors.hpp"
#include "mixbound/spectral.hpp"

namespace mixbound {

namespace config {
constexpr int kDefaultHorizon = 50;
constexpr int kDefaultMMax = 3;
constexpr double kDominationTol = 1e-9;  // oracle <= curve slack
}  // namespace config

// One comparable per-step bound: values b(0..n), an asymptotic per-step rate,
// and (for pure-geometric curves) the leading constant.  All values use the
// full total-variation convention (sum of absolute differences, range [0,2]);
// where a half-convention reading exists it is recorded in metadata/note.
struct BoundCurve {
  std::string label;
  std::vector<double> values;
  double rate = 0.0;
  std::optional<double> constant;
  std::map<std::string, double> metadata;
  std::string note;
};

namespace detail {

inline void check_horizon_arg(int n) {
  if (n < 1) throw ValidationError("IndexOutOfRange", "horizon n must be >= 1");
}

inline BoundCurve geometric_curve(std::string label, double constant,
                                  double rate, int n) {
  BoundCurve c;
  c.label = std::move(label);
  c.rate = rate;
  c.constant = constant;
  c.values.resize(static_cast<std::size_t>(n) + 1);
  c.values[0] = constant;
  for (int k = 1; k <= n; ++k)
    c.values[static_cast<std::size_t>(k)] =
        c.values[static_cast<std::size_t>(k - 1)] * rate;
  return c;
}

}  // namespace detail

// Classical contraction bound b(k) = 2·(1−κ)^k.  The same curve with
// constant 1 bounds the half-convention distance; that reading is recorded as
// metadata rather than emitted twice.
inline BoundCurve md_curve(const KappaProfile& kp, int n) {
  detail::check_horizon_arg(n);
  BoundCurve c = detail::geometric_curve("markov-dobrushin", 2.0,
                                         1.0 - kp.scalar, n);
  c.metadata["kappa"] = kp.scalar;
  c.metadata["half_tv_constant"] = 1.0;
  return c;
}

// m-step refinement b(k) = 2·(1−κ^(m))^⌊k/m⌋·(1−κ)^(k mod m).  The coarser
// block-only variant drops the trailing factor; it is reconstructible from
// metadata (m, kappa_m).
inline BoundCurve md_m_curve(const StochasticMatrix& p, int m, int n) {
  detail::check_horizon_arg(n);
  if (m < 1) throw ValidationError("IndexOutOfRange", "block length m must be >= 1");
  const double kappa_1 = kappa(p, 1).scalar;
  const double kappa_m = kappa(p, m).scalar;
  const double block = 1.0 - kappa_m;
  const double step = 1.0 - kappa_1;

  std::vector<double> pow_block(static_cast<std::size_t>(n / m) + 1, 1.0);
  for (std::size_t j = 1; j < pow_block.size(); ++j)
    pow_block[j] = pow_block[j - 1] * block;
  std::vector<double> pow_step(static_cast<std::size_t>(m), 1.0);
  for (std::size_t j = 1; j < pow_step.size(); ++j)
    pow_step[j] = pow_step[j - 1] * step;

  BoundCurve c;
  c.label = "markov-dobrushin-m" + std::to_string(m);
  c.constant = 2.0;
  c.rate = std::pow(block, 1.0 / static_cast<double>(m));
  c.values.resize(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k)
    c.values[static_cast<std::size_t>(k)] =
        2.0 * (pow_block[static_cast<std::size_t>(k / m)] *
               pow_step[static_cast<std::size_t>(k % m)]);
  c.metadata["m"] = static_cast<double>(m);
  c.metadata["kappa"] = kappa_1;
  c.metadata["kappa_m"] = kappa_m;
  return c;
}

namespace detail {

struct SpectralBoundDetail {
  BoundCurve curve;
  CouplingOperator op;
  SpectralSummary spectral;
};

// Exact curve b(k) = 2·max over ordered pairs of (V̂^k·1), plus r(V̂) as the
// asymptotic rate.  The curve is exact (not C·r^k); no constant is invented
// for the asymptotic form.
inline SpectralBoundDetail spectral_bound_full(const StochasticMatrix& p, int n,
                                               const SpectralOptions& opts = {},
                                               int max_n = config::kPairSpaceGuard) {
  check_horizon_arg(n);
  SpectralBoundDetail out;
  out.curve.label = "coupling-operator";
  out.curve.values.assign(static_cast<std::size_t>(n) + 1, 0.0);
  if (p.size() == 1) {
    out.curve.note = "single-state chain: pair space is empty, curve is zero";
    return out;
  }
  out.op = build_vhat(p, max_n);
  out.spectral = spectral_radius(out.op.matrix, opts);
  out.curve.rate = out.spectral.radius;
  const Eigen::MatrixXd w = bound_vector(out.op, n);
  for (int k = 0; k <= n; ++k)
    out.curve.values[static_cast<std::size_t>(k)] = 2.0 * w.col(k).maxCoeff();
  out.curve.metadata["r_vhat"] = out.spectral.radius;
  out.curve.note = "values are exact non-coupling bounds; rate is asymptotic";
  return out;
}

}  // namespace detail

inline BoundCurve spectral_bound(const StochasticMatrix& p, int n,
                                 const SpectralOptions& opts = {}) {
  return detail::spectral_bound_full(p, n, opts).curve;
}

// Reversible-chain bound b(k) = sqrt((1−π_i)/(2π_i))·γ^k with γ the second
// eigenvalue modulus.  The formula is emitted verbatim; it certifies the
// half-convention distance from state i to stationarity (see note).
inline BoundCurve ds_bound(const StochasticMatrix& p, int i, int n) {
  detail::check_horizon_arg(n);
  p.check_state(i);
  const Eigen::VectorXd pi = stationary_distribution(p);
  if (!is_reversible(p, pi))
    throw ValidationError("NotReversible",
                          "the chain is not reversible w.r.t. its stationary "
                          "distribution; the eigenvalue bound does not apply");
  const double gamma = second_modulus(p);
  const double constant = std::sqrt((1.0 - pi(i)) / (2.0 * pi(i)));
  BoundCurve c = detail::geometric_curve("diaconis-stroock-s" + std::to_string(i),
                                         constant, gamma, n);
  c.metadata["state"] = static_cast<double>(i);
  c.metadata["pi_i"] = pi(i);
  c.metadata["gamma"] = gamma;
  c.note =
      "certifies the half-convention distance to stationarity from the given "
      "state; compared against the full-convention envelope it may sit below "
      "(flagged, not failed)";
  return c;
}

namespace detail {

// Scalar contraction coefficient of the m-step product starting at slice t.
inline double block_kappa(const TimeVaryingKernel& k, int t, int m) {
  Eigen::MatrixXd prod = k.slice(t).matrix();
  for (int j = 1; j < m; ++j) prod = prod * k.slice(t + j).matrix();
  return kappa(StochasticMatrix(prod), 1).scalar;
}

}  // namespace detail

// Product bound b(k) = 2·∏_{t=0}^{⌊(k−1)/m⌋}(1−κ^(m)_{tm}); for m = 1 this is
// the plain running product 2·∏_{t<k}(1−κ_t).
inline BoundCurve nonhom_product_curve(const TimeVaryingKernel& k, int n,
                                       int m = 1) {
  detail::check_horizon_arg(n);
  if (m < 1) throw ValidationError("IndexOutOfRange", "block length m must be >= 1");
  const int blocks = (n - 1) / m + 1;  // block factors consumed by b(n)
  if (!k.periodic() && blocks * m > k.slice_count()) {
    std::ostringstream os;
    os << "bound at n=" << n << " with block length " << m << " needs "
       << blocks * m << " slices, kernel has " << k.slice_count();
    throw ValidationError("HorizonExceeded", os.str());
  }

  std::vector<double> factors(static_cast<std::size_t>(blocks));
  for (int t = 0; t < blocks; ++t)
    factors[static_cast<std::size_t>(t)] =
        1.0 - detail::block_kappa(k, t * m, m);

  BoundCurve c;
  c.label = m == 1 ? "nonhom-product" : "nonhom-product-m" + std::to_string(m);
  c.constant = 2.0;
  c.values.resize(static_cast<std::size_t>(n) + 1);
  c.values[0] = 2.0;
  double prod = 1.0;
  for (int kk = 1; kk <= n; ++kk) {
    if ((kk - 1) % m == 0)
      prod *= factors[static_cast<std::size_t>((kk - 1) / m)];
    c.values[static_cast<std::size_t>(kk)] = 2.0 * prod;
  }

  if (m == 1 && k.periodic()) {
    // Per-step asymptotic rate: geometric mean over one full period.
    double per_period = 1.0;
    for (int t = 0; t < k.slice_count(); ++t)
      per_period *= 1.0 - detail::block_kappa(k, t, 1);
    c.rate = std::pow(per_period, 1.0 / static_cast<double>(k.slice_count()));
  } else {
    c.rate = c.values.back() > 0.0
                 ? std::pow(c.values.back() / 2.0, 1.0 / static_cast<double>(n))
                 : 0.0;
  }
  if (m == 1) {
    double weakened = 0.0;
    for (const double f : factors) weakened = std::max(weakened, f);
    // Constant-factor weakening: replacing every factor by the worst one
    // gives the coarser geometric curve with this rate.
    c.metadata["weakened_max_factor"] = weakened;
  }
  c.metadata["m"] = static_cast<double>(m);
  return c;
}

// Coupling bound for arbitrary initial laws: b(k) = 2·Σ_{a≠b} μ₁(a)μ₂(b)·
// (V̂_0···V̂_{k−1}·1)(a,b).  Diagonal mass μ₁⊗μ₂ contributes nothing, which
// realizes the initial-overlap discount.
inline BoundCurve nonhom_coupling_curve(const TimeVaryingKernel& k,
                                        const Distribution& mu1,
                                        const Distribution& mu2, int n) {
  detail::check_horizon_arg(n);
  const int states = k.slice(0).size();
  if (mu1.size() != states || mu2.size() != states) {
    std::ostringstream os;
    os << "initial distributions have sizes " << mu1.size() << " and "
       << mu2.size() << ", kernel has " << states << " states";
    throw ValidationError("LengthMismatch", os.str());
  }

  BoundCurve c;
  c.label = "nonhom-coupling";
  c.values.assign(static_cast<std::size_t>(n) + 1, 0.0);
  if (states == 1) {
    c.note = "single-state chain: pair space is empty, curve is zero";
    return c;
  }

  const Eigen::MatrixXd w = product_bound_vector(k, n);
  const PairIndex index(states);
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(index.pairs());
  for (int a = 0; a < states; ++a)
    for (int b = 0; b < states; ++b)
      if (a != b) weight(index.encode(a, b)) = mu1[a] * mu2[b];
  for (int kk = 0; kk <= n; ++kk)
    c.values[static_cast<std::size_t>(kk)] = 2.0 * weight.dot(w.col(kk));

  const double b0 = c.values.front();
  const double bn = c.values.back();
  c.rate = (b0 > 0.0 && bn > 0.0)
               ? std::pow(bn / b0, 1.0 / static_cast<double>(n))
               : 0.0;
  c.constant = b0;
  c.metadata["initial_offdiagonal_mass"] = b0 / 2.0;
  return c;
}

struct PeriodicRate {
  double rate = 0.0;       // per-step: r(V̂_0···V̂_{T−1})^(1/T)
  BoundCurve curve;        // exact envelope 2·max (V̂_0···V̂_{k−1}·1)
  SpectralSummary spectral;  // of the one-period product operator
};

// Periodic-kernel asymptotics through the one-period product operator.
inline PeriodicRate periodic_rate(const TimeVaryingKernel& k,
                                  int n = config::kDefaultHorizon,
                                  const SpectralOptions& opts = {},
                                  int max_n = config::kPairSpaceGuard) {
  detail::check_horizon_arg(n);
  if (!k.periodic())
    throw ValidationError("NotPeriodic",
                          "periodic rate requires a periodic kernel");
  PeriodicRate out;
  out.curve.label = "periodic-operator";
  out.curve.values.assign(static_cast<std::size_t>(n) + 1, 0.0);
  if (k.slice(0).size() == 1) {
    out.curve.note = "single-state chain: pair space is empty, curve is zero";
    return out;
  }
  const CouplingOperator period_op = build_period_operator(k, max_n);
  out.spectral = spectral_radius(period_op.matrix, opts);
  out.rate = std::pow(out.spectral.radius,
                      1.0 / static_cast<double>(k.slice_count()));
  const Eigen::MatrixXd w = product_bound_vector(k, n, max_n);
  for (int kk = 0; kk <= n; ++kk)
    out.curve.values[static_cast<std::size_t>(kk)] = 2.0 * w.col(kk).maxCoeff();
  out.curve.rate = out.rate;
  out.curve.metadata["period"] = static_cast<double>(k.slice_count());
  out.curve.metadata["period_operator_radius"] = out.spectral.radius;
  return out;
}

// ---------------------------------------------------------------------------
// Perturbation machinery: fit the smallest uniform distortion ε between a
// time-varying kernel and a homogeneous base, then transfer the base rates.
// ---------------------------------------------------------------------------

struct PerturbationWitness {
  int t = -1;      // slice index
  int i = -1;      // pair member (or row for row-ratio constraints)
  int j = -1;      // pair member (-1 when not a pair constraint)
  int state = -1;  // target state u (-1 for scalar constraints)
  std::string constraint;  // which family: kappa-ratio, damping-ratio,
                           // residual-ratio, row-ratio, min-ratio
};

struct PerturbationFit {
  bool feasible = false;
  double epsilon = std::numeric_limits<double>::infinity();
  double delta = std::numeric_limits<double>::infinity();  // (1+ε)²−1
  double kappa_bar = std::numeric_limits<double>::quiet_NaN();
  double r_base = std::numeric_limits<double>::quiet_NaN();  // r(V̄)
  double rate_md = std::numeric_limits<double>::quiet_NaN();      // 1−(1+ε)⁻¹κ̄
  double rate_md_alt = std::numeric_limits<double>::quiet_NaN();  // (1+ε)(1−κ̄)
  double rate_spectral = std::numeric_limits<double>::quiet_NaN();  // (1+δ)r(V̄)
  bool sense1 = false;  // rate_spectral < 1
  bool sense2 = false;  // rate_spectral < rate_md
  double domination_max_ratio = std::numeric_limits<double>::quiet_NaN();
  PerturbationWitness witness;  // binding constraint (feasible) or violation
};

namespace detail {

// Pair transition kernel on states×states for the ordered pair (x1,x2):
// diagonal carries the coupled mass min(p(x1,u), p(x2,u)), off-diagonal the
// residual product mass; coupled rows (x1 == x2) move together.
inline Eigen::MatrixXd pair_kernel_row(const StochasticMatrix& p, int x1,
                                       int x2) {
  const int n = p.size();
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
  if (x1 == x2) {
    for (int u = 0; u < n; ++u) e(u, u) = p(x1, u);
    return e;
  }
  const ResidualPair rp = residual_pair(p, x1, x2);
  for (int u = 0; u < n; ++u) e(u, u) = std::min(p(x1, u), p(x2, u));
  if (rp.degenerate != Degenerate::kappa_one) {
    const double damp = 1.0 - rp.kappa;
    for (int u = 0; u < n; ++u) {
      if (rp.phi1(u) == 0.0) continue;
      for (int v = 0; v < n; ++v) {
        if (u == v || rp.phi2(v) == 0.0) continue;
        e(u, v) = damp * rp.phi1(u) * rp.phi2(v);
      }
    }
  }
  return e;
}

struct ConstraintTracker {
  double epsilon = 0.0;
  bool feasible = true;
  PerturbationWitness witness;

  // Ratio convention: 0/0 leaves the constraint inactive, positive/0 makes
  // the fit infeasible, otherwise ε must be at least value/base − 1.
  void require_ratio(double value, double base, const char* constraint, int t,
                     int i, int j, int state) {
    if (!feasible) return;
    if (base == 0.0) {
      if (value == 0.0) return;  // inactive
      feasible = false;
      epsilon = std::numeric_limits<double>::infinity();
      witness = PerturbationWitness{t, i, j, state, constraint};
      return;
    }
    const double need = value / base - 1.0;
    if (need > epsilon) {
      epsilon = need;
      witness = PerturbationWitness{t, i, j, state, constraint};
    }
  }
};

}  // namespace detail

// Smallest ε ≥ 0 such that every slice of the kernel is an ε-perturbation of
// the base: contraction coefficients, damping factors, residual densities,
// raw rows, and normalized coupled mass all within a (1+ε) factor.
// Infeasibility (ε would be infinite) is reported through the feasible flag
// and witness, not an exception.
inline PerturbationFit fit_perturbation(const StochasticMatrix& base,
                                        const TimeVaryingKernel& k) {
  const int n = base.size();
  if (k.slice(0).size() != n) {
    std::ostringstream os;
    os << "base has " << n << " states, kernel slices have "
       << k.slice(0).size();
    throw ValidationError("LengthMismatch", os.str());
  }

  PerturbationFit fit;
  fit.kappa_bar = kappa(base, 1).scalar;
  if (n >= 2)
    fit.r_base = spectral_radius(build_vhat(base).matrix).radius;
  else
    fit.r_base = 0.0;

  detail::ConstraintTracker tracker;
  tracker.witness.constraint = "none";
  const int slices = k.slice_count();
  for (int t = 0; t < slices && tracker.feasible; ++t) {
    const StochasticMatrix& pt = k.slice(t);
    // Raw row ratios p_t(x,u) <= (1+ε)·p̄(x,u).
    for (int x = 0; x < n; ++x)
      for (int u = 0; u < n; ++u)
        tracker.require_ratio(pt(x, u), base(x, u), "row-ratio", t, x, -1, u);
    // Pairwise constraints; ordered pairs so both residual sides are covered.
    for (int i = 0; i < n && tracker.feasible; ++i) {
      for (int j = 0; j < n && tracker.feasible; ++j) {
        if (i == j) continue;
        const double kt = kappa_pair(pt, i, j);
        const double kb = kappa_pair(base, i, j);
        // Contraction ratio: (1+ε)⁻¹ <= κ_t/κ̄, i.e. κ̄ <= (1+ε)·κ_t.
        tracker.require_ratio(kb, kt, "kappa-ratio", t, i, j, -1);
        // Damping ratio: (1−κ_t) <= (1+ε)·(1−κ̄).
        tracker.require_ratio(1.0 - kt, 1.0 - kb, "damping-ratio", t, i, j, -1);
        if (!tracker.feasible) break;
        // Residual density ratios, skipped when either side has no residual
        // mass to normalize (coupling is already complete there).
        const ResidualPair rt = residual_pair(pt, i, j);
        const ResidualPair rb = residual_pair(base, i, j);
        if (rt.degenerate != Degenerate::kappa_one &&
            rb.degenerate != Degenerate::kappa_one) {
          for (int u = 0; u < n; ++u)
            tracker.require_ratio(rt.phi1(u), rb.phi1(u), "residual-ratio", t,
                                  i, j, u);
        }
        // Normalized coupled-mass ratios, defined only where both κ > 0.
        if (kt > 0.0 && kb > 0.0) {
          for (int u = 0; u < n; ++u)
            tracker.require_ratio(std::min(pt(i, u), pt(j, u)) / kt,
                                  std::min(base(i, u), base(j, u)) / kb,
                                  "min-ratio", t, i, j, u);
        }
      }
    }
  }

  fit.feasible = tracker.feasible;
  fit.witness = tracker.witness;
  if (!fit.feasible) return fit;

  fit.epsilon = tracker.epsilon;
  fit.delta = (1.0 + fit.epsilon) * (1.0 + fit.epsilon) - 1.0;
  fit.rate_md = 1.0 - fit.kappa_bar / (1.0 + fit.epsilon);
  fit.rate_md_alt = (1.0 + fit.epsilon) * (1.0 - fit.kappa_bar);
  fit.rate_spectral = (1.0 + fit.delta) * fit.r_base;
  fit.sense1 = fit.rate_spectral < 1.0;
  fit.sense2 = fit.rate_spectral < fit.rate_md;

  // Pair-kernel domination: max over slices, pairs (coupled rows included),
  // and targets of P_t / P̄ entrywise.  Feasibility makes every ratio finite.
  double max_ratio = 0.0;
  for (int t = 0; t < slices; ++t) {
    const StochasticMatrix& pt = k.slice(t);
    for (int x1 = 0; x1 < n; ++x1) {
      for (int x2 = 0; x2 < n; ++x2) {
        const Eigen::MatrixXd et = detail::pair_kernel_row(pt, x1, x2);
        const Eigen::MatrixXd eb = detail::pair_kernel_row(base, x1, x2);
        for (int u = 0; u < n; ++u)
          for (int v = 0; v < n; ++v) {
            if (eb(u, v) == 0.0) {
              if (et(u, v) > 0.0)
                max_ratio = std::numeric_limits<double>::infinity();
              continue;
            }
            max_ratio = std::max(max_ratio, et(u, v) / eb(u, v));
          }
      }
    }
  }
  fit.domination_max_ratio = max_ratio;
  return fit;
}

// Transfer of the base-chain rates under a feasible ε-fit: contraction rate
// 1−(1+ε)⁻¹κ̄, damping rate (1+ε)(1−κ̄), and the operator rate (1+δ)·r(V̄)
// with the exact (1+δ)^k-weighted non-coupling envelope as values.
inline std::vector<BoundCurve> perturbation_bounds(const PerturbationFit& fit,
                                                   const StochasticMatrix& base,
                                                   int n) {
  detail::check_horizon_arg(n);
  if (!fit.feasible) {
    std::ostringstream os;
    os << "perturbation fit is infeasible (constraint "
       << fit.witness.constraint << " at slice " << fit.witness.t << ", pair ("
       << fit.witness.i << "," << fit.witness.j << "), state "
       << fit.witness.state << ")";
    throw ValidationError("InfeasibleFit", os.str());
  }

  std::vector<BoundCurve> curves;
  BoundCurve md = detail::geometric_curve("perturbed-md", 2.0, fit.rate_md, n);
  BoundCurve alt =
      detail::geometric_curve("perturbed-md-alt", 2.0, fit.rate_md_alt, n);

  BoundCurve sp;
  sp.label = "perturbed-coupling";
  sp.rate = fit.rate_spectral;
  sp.values.assign(static_cast<std::size_t>(n) + 1, 0.0);
  if (base.size() >= 2) {
    const Eigen::MatrixXd w = bound_vector(build_vhat(base), n);
    double scale = 1.0;
    for (int kk = 0; kk <= n; ++kk) {
      sp.values[static_cast<std::size_t>(kk)] =
          2.0 * scale * w.col(kk).maxCoeff();
      scale *= 1.0 + fit.delta;
    }
  } else {
    sp.note = "single-state chain: pair space is empty, curve is zero; ";
  }

  const bool dominated =
      fit.domination_max_ratio <= 1.0 + fit.delta + 1e-12;
  {
    std::ostringstream os;
    os << "pair-kernel domination max ratio " << fit.domination_max_ratio
       << (dominated ? " <= " : " EXCEEDS ") << "(1+delta) = "
       << 1.0 + fit.delta;
    sp.note += os.str();
  }

  for (BoundCurve* c : {&md, &alt, &sp}) {
    c->metadata["epsilon"] = fit.epsilon;
    c->metadata["delta"] = fit.delta;
    c->metadata["kappa_bar"] = fit.kappa_bar;
    c->metadata["sense1"] = fit.sense1 ? 1.0 : 0.0;
    c->metadata["sense2"] = fit.sense2 ? 1.0 : 0.0;
  }
  sp.metadata["r_base"] = fit.r_base;
  sp.metadata["domination_max_ratio"] = fit.domination_max_ratio;

  curves.push_back(std::move(md));
  curves.push_back(std::move(alt));
  curves.push_back(std::move(sp));
  return curves;
}

// ---------------------------------------------------------------------------
// Report assembly
// ---------------------------------------------------------------------------

struct CompareOptions {
  int m_max = config::kDefaultMMax;
  int n_max = config::kDefaultHorizon;
  bool periodic_rate_enabled = true;  // emit the period-operator rate
  SpectralOptions spectral;
  double domination_tol = config::kDominationTol;
  int max_n_guard = config::kPairSpaceGuard;  // refuse pair spaces beyond this
};

struct OrderingFlags {
  bool lambda2_le_r = true;          // |λ₂| ≤ r(V̂) + 1e−6
  bool r_le_one_minus_kappa = true;  // r(V̂) ≤ 1−κ + 1e−12
  bool oracle_dominated = true;      // every curve ≥ oracle (asserted)
  bool ds_half_dominates = true;     // DS curves ≥ half-convention per-state oracle
  bool ds_full_flagged = false;      // full-convention oracle exceeded some DS curve
};

struct PairId {
  int i = -1;
  int j = -1;
};

struct BoundsReport {
  bool time_varying = false;
  bool periodic = false;
  int states = 0;
  int horizon = 0;  // n actually used (may be clamped to a finite kernel)
  int m_max = 1;
  std::vector<KappaProfile> kappa_profiles;  // homogeneous: index m−1
  std::vector<double> slice_kappas;          // time-varying: κ_t per slice
  double r_vhat = std::numeric_limits<double>::quiet_NaN();
  double lambda2 = std::numeric_limits<double>::quiet_NaN();
  double one_minus_kappa = std::numeric_limits<double>::quiet_NaN();
  bool reversible = false;
  Eigen::VectorXd stationary;        // empty when unavailable
  std::vector<double> ds_constants;  // per state, reversible case only
  std::vector<BoundCurve> curves;    // checked against the oracle
  std::vector<BoundCurve> ds_curves;  // checked against the per-state oracle
  std::vector<double> oracle;        // exact envelope, full convention
  Eigen::MatrixXd oracle_to_stationary;  // reversible: state × (n+1), full conv.
  OrderingFlags flags;
  PairId worst_oracle_pair;  // argmax pairwise distance at k = 1
  PairId worst_kappa_pair;   // argmin pairwise contraction coefficient
  SpectralSummary spectral;  // of V̂ (or the period product operator)
  std::vector<std::string> notes;
};

namespace detail {

inline double max_pairwise_row_distance(const Eigen::MatrixXd& m, PairId* arg) {
  double best = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = i + 1; j < m.rows(); ++j) {
      const double d = (m.row(i) - m.row(j)).cwiseAbs().sum();
      if (d > best) {
        best = d;
        if (arg) *arg = PairId{i, j};
      }
    }
  return best;
}

inline PairId argmin_pair_kappa(const KappaProfile& kp) {
  PairId out;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kp.pairwise.rows(); ++i)
    for (int j = i + 1; j < kp.pairwise.cols(); ++j)
      if (kp.pairwise(i, j) < best) {
        best = kp.pairwise(i, j);
        out = PairId{i, j};
      }
  return out;
}

inline void check_domination(const std::vector<BoundCurve>& curves,
                             const std::vector<double>& oracle, double tol) {
  for (const BoundCurve& c : curves) {
    const std::size_t upto = std::min(c.values.size(), oracle.size());
    for (std::size_t k = 0; k < upto; ++k) {
      if (c.values[k] + tol < oracle[k]) {
        std::ostringstream os;
        os << "curve '" << c.label << "' falls below the exact distance at k="
           << k << ": " << c.values[k] << " < " << oracle[k];
        throw NumericalError("DominationViolation", os.str());
      }
    }
  }
}

inline BoundsReport trivial_single_state_report(int n, bool time_varying,
                                                bool periodic) {
  BoundsReport r;
  r.time_varying = time_varying;
  r.periodic = periodic;
  r.states = 1;
  r.horizon = n;
  r.r_vhat = 0.0;
  r.lambda2 = 0.0;
  r.one_minus_kappa = 0.0;
  r.oracle.assign(static_cast<std::size_t>(n) + 1, 0.0);
  r.notes.push_back("single-state chain: all distances are identically zero");
  return r;
}

}  // namespace detail

// Full homogeneous report: contraction profiles, one-step/m-step curves, the
// operator curve and rate, eigenvalue gap, reversible-case curves, the exact
// worst-pair envelope, and the ordering/domination flags.  The domination
// check (every curve ≥ oracle pointwise) is the central correctness assertion
// and throws on violation rather than flagging.
inline BoundsReport compare_report(const StochasticMatrix& p,
                                   const CompareOptions& options = {}) {
  detail::check_horizon_arg(options.n_max);
  if (options.m_max < 1)
    throw ValidationError("IndexOutOfRange", "m_max must be >= 1");
  const int n_states = p.size();
  const int n = options.n_max;
  if (n_states == 1) return detail::trivial_single_state_report(n, false, false);

  BoundsReport r;
  r.states = n_states;
  r.horizon = n;
  r.m_max = options.m_max;

  for (int m = 1; m <= options.m_max; ++m)
    r.kappa_profiles.push_back(kappa(p, m));
  r.one_minus_kappa = 1.0 - r.kappa_profiles.front().scalar;
  r.worst_kappa_pair = detail::argmin_pair_kappa(r.kappa_profiles.front());

  // Operator route.
  detail::SpectralBoundDetail sb = detail::spectral_bound_full(
      p, n, options.spectral, options.max_n_guard);
  r.spectral = sb.spectral;
  r.r_vhat = sb.spectral.radius;
  r.lambda2 = second_modulus(p);

  r.curves.push_back(md_curve(r.kappa_profiles.front(), n));
  for (int m = 2; m <= options.m_max; ++m)
    r.curves.push_back(md_m_curve(p, m, n));
  r.curves.push_back(std::move(sb.curve));

  // Operator for the m-step chain vs the m-th power of the one-step operator
  // (computed, never assumed equal).
  for (int m = 2; m <= options.m_max; ++m) {
    const Eigen::MatrixXd direct = build_vhat_m(p, m, options.max_n_guard).matrix;
    const Eigen::MatrixXd powered = matrix_power(sb.op.matrix, m);
    std::ostringstream os;
    os << "m-step operator (m=" << m
       << ") vs one-step operator power: max entry difference "
       << (direct - powered).cwiseAbs().maxCoeff();
    r.notes.push_back(os.str());
  }

  // Stationary structure (absent for reducible/periodic chains).
  bool have_pi = false;
  Eigen::VectorXd pi;
  try {
    pi = stationary_distribution(p);
    have_pi = true;
  } catch (const Error& e) {
    if (e.code() != "Reducible" && e.code() != "Periodic" &&
        e.code() != "NoConvergence")
      throw;
    r.notes.push_back("stationary distribution unavailable: " +
                      std::string(e.what()));
  }
  if (have_pi) {
    r.stationary = pi;
    r.reversible = is_reversible(p, pi);
  }

  // Exact envelope (and the per-state distance to stationarity when needed).
  r.oracle.resize(static_cast<std::size_t>(n) + 1);
  if (r.reversible)
    r.oracle_to_stationary.resize(n_states, n + 1);
  Eigen::MatrixXd mk = Eigen::MatrixXd::Identity(n_states, n_states);
  for (int k = 0; k <= n; ++k) {
    if (k > 0) mk = mk * p.matrix();
    r.oracle[static_cast<std::size_t>(k)] = detail::max_pairwise_row_distance(
        mk, k == 1 ? &r.worst_oracle_pair : nullptr);
    if (r.reversible)
      for (int i = 0; i < n_states; ++i)
        r.oracle_to_stationary(i, k) =
            (mk.row(i).transpose() - pi).cwiseAbs().sum();
  }

  // Reversible-case curves, checked against the per-state half-convention
  // distance (their native guarantee) and flagged against the full one.
  if (r.reversible) {
    const double gamma = r.lambda2;
    r.ds_constants.resize(static_cast<std::size_t>(n_states));
    for (int i = 0; i < n_states; ++i) {
      const double constant = std::sqrt((1.0 - pi(i)) / (2.0 * pi(i)));
      r.ds_constants[static_cast<std::size_t>(i)] = constant;
      BoundCurve c = detail::geometric_curve(
          "diaconis-stroock-s" + std::to_string(i), constant, gamma, n);
      c.metadata["state"] = static_cast<double>(i);
      c.metadata["pi_i"] = pi(i);
      c.metadata["gamma"] = gamma;
      for (int k = 0; k <= n; ++k) {
        const double half = 0.5 * r.oracle_to_stationary(i, k);
        const double full = r.oracle_to_stationary(i, k);
        if (c.values[static_cast<std::size_t>(k)] + options.domination_tol <
            half)
          r.flags.ds_half_dominates = false;
        if (full >
            c.values[static_cast<std::size_t>(k)] + options.domination_tol)
          r.flags.ds_full_flagged = true;
      }
      r.ds_curves.push_back(std::move(c));
    }
    if (r.flags.ds_full_flagged)
      r.notes.push_back(
          "eigenvalue curves certify the half-convention distance; the "
          "full-convention distance exceeds them somewhere (expected)");
  }

  // Ordering flags and the central domination assertion.
  r.flags.lambda2_le_r = r.lambda2 <= r.r_vhat + 1e-6;
  r.flags.r_le_one_minus_kappa = r.r_vhat <= r.one_minus_kappa + 1e-12;
  detail::check_domination(r.curves, r.oracle, options.domination_tol);
  r.flags.oracle_dominated = true;
  return r;
}

// Time-varying report: per-slice contraction coefficients, product and
// coupling curves, the period-operator rate for periodic kernels, the exact
// envelope through the slices, and the same domination assertion.
inline BoundsReport compare_report(const TimeVaryingKernel& k,
                                   const CompareOptions& options = {}) {
  detail::check_horizon_arg(options.n_max);
  const int n_states = k.slice(0).size();
  if (n_states == 1)
    return detail::trivial_single_state_report(
        std::min(options.n_max,
                 k.periodic() ? options.n_max : k.slice_count()),
        true, k.periodic());

  BoundsReport r;
  r.time_varying = true;
  r.periodic = k.periodic();
  r.states = n_states;
  r.m_max = 1;

  int n = options.n_max;
  if (!k.periodic() && n > k.slice_count()) {
    n = k.slice_count();
    std::ostringstream os;
    os << "horizon clamped to the kernel length " << n;
    r.notes.push_back(os.str());
  }
  r.horizon = n;

  for (int t = 0; t < k.slice_count(); ++t)
    r.slice_kappas.push_back(kappa(k.slice(t), 1).scalar);
  r.kappa_profiles.push_back(kappa(k.slice(0), 1));
  r.worst_kappa_pair = detail::argmin_pair_kappa(r.kappa_profiles.front());

  r.curves.push_back(nonhom_product_curve(k, n, 1));

  // Worst-pair coupling envelope 2·max over pairs of the product bound.
  {
    const Eigen::MatrixXd w = product_bound_vector(k, n, options.max_n_guard);
    BoundCurve c;
    c.label = "nonhom-coupling";
    c.values.resize(static_cast<std::size_t>(n) + 1);
    for (int kk = 0; kk <= n; ++kk)
      c.values[static_cast<std::size_t>(kk)] = 2.0 * w.col(kk).maxCoeff();
    c.note = "worst initial pair (point masses)";
    r.curves.push_back(std::move(c));
  }

  if (k.periodic() && options.periodic_rate_enabled) {
    PeriodicRate pr = periodic_rate(k, n, options.spectral, options.max_n_guard);
    r.spectral = pr.spectral;
    r.r_vhat = pr.rate;
    r.curves.back().rate = pr.rate;  // envelope shares the periodic rate
    pr.curve.note += (pr.curve.note.empty() ? "" : "; ");
    pr.curve.note += "per-period operator rate applied per step";
    r.curves.push_back(std::move(pr.curve));

    // Eigenvalue gap of the one-period state-space product, per step.
    Eigen::MatrixXd prod = k.slice(0).matrix();
    for (int t = 1; t < k.slice_count(); ++t) prod = prod * k.slice(t).matrix();
    r.lambda2 = std::pow(second_modulus(StochasticMatrix(prod)),
                         1.0 / static_cast<double>(k.slice_count()));
    r.flags.lambda2_le_r = r.lambda2 <= r.r_vhat + 1e-6;
  }

  // Exact envelope through the slices.
  r.oracle.resize(static_cast<std::size_t>(n) + 1);
  Eigen::MatrixXd mk = Eigen::MatrixXd::Identity(n_states, n_states);
  for (int kk = 0; kk <= n; ++kk) {
    if (kk > 0) mk = mk * k.slice(kk - 1).matrix();
    r.oracle[static_cast<std::size_t>(kk)] = detail::max_pairwise_row_distance(
        mk, kk == 1 ? &r.worst_oracle_pair : nullptr);
  }

  detail::check_domination(r.curves, r.oracle, options.domination_tol);
  r.flags.oracle_dominated = true;
  return r;
}

}  // namespace mixbound
