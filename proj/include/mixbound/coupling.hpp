#pragma once

#include <Eigen/Dense>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mixbound/chain.hpp"
#include "mixbound/errors.hpp"

namespace mixbound {

namespace config {
// Pair-space matrices are n(n-1) square; the guard keeps accidental huge
// allocations out.  Overridable through every builder's max_n argument.
constexpr int kPairSpaceGuard = 200;
}  // namespace config

// ===== Pair space =====

// Bijection between ordered off-diagonal pairs (i, j), i != j, and indices
// 0 .. n(n-1)-1: row-major with the diagonal removed, so for n = 3 the order
// is (0,1), (0,2), (1,0), (1,2), (2,0), (2,1).
class PairIndex {
 public:
  PairIndex() = default;
  explicit PairIndex(int n) : n_(n) {
    if (n < 2)
      throw ValidationError("NonSquare", "pair space needs at least 2 states");
  }

  int states() const { return n_; }
  int pairs() const { return n_ * (n_ - 1); }

  int encode(int i, int j) const {
    check(i);
    check(j);
    if (i == j) {
      std::ostringstream os;
      os << "(" << i << "," << j << ") is on the diagonal";
      throw ValidationError("DiagonalPair", os.str());
    }
    return i * (n_ - 1) + (j < i ? j : j - 1);
  }

  std::pair<int, int> decode(int idx) const {
    if (idx < 0 || idx >= pairs()) {
      std::ostringstream os;
      os << "pair index " << idx << " outside [0," << pairs() << ")";
      throw ValidationError("IndexOutOfRange", os.str());
    }
    const int i = idx / (n_ - 1);
    const int r = idx % (n_ - 1);
    return {i, r < i ? r : r + 1};
  }

 private:
  void check(int s) const {
    if (s < 0 || s >= n_) {
      std::ostringstream os;
      os << "state " << s << " outside [0," << n_ << ")";
      throw ValidationError("IndexOutOfRange", os.str());
    }
  }

  int n_ = 0;
};

// ===== Residual densities =====

enum class Degenerate { none, kappa_zero, kappa_one };

// Decomposition of one row pair: overlap kappa plus the normalized leftovers
// phi1 = (row_i - min)/(1-kappa), phi2 = (row_j - min)/(1-kappa).  For
// kappa = 0 the leftovers are the rows themselves; for kappa = 1 there is no
// leftover and both phis fall back to row_i.
struct ResidualPair {
  double kappa = 0.0;
  Degenerate degenerate = Degenerate::none;
  Eigen::VectorXd phi1, phi2;
};

inline ResidualPair residual_pair(const StochasticMatrix& p, int i, int j) {
  p.check_state(i);
  p.check_state(j);
  if (i == j) {
    std::ostringstream os;
    os << "(" << i << "," << j << ") has no residual decomposition";
    throw ValidationError("DiagonalPair", os.str());
  }
  const int n = p.size();
  Eigen::VectorXd r1(n), r2(n);
  double kap = 0.0;
  for (int k = 0; k < n; ++k) {
    const double m = std::min(p(i, k), p(j, k));
    kap += m;
    r1(k) = p(i, k) - m;
    r2(k) = p(j, k) - m;
  }
  ResidualPair rp;
  rp.kappa = kap;
  if (kap == 0.0) {
    // Disjoint supports: the residuals are the rows themselves.
    rp.degenerate = Degenerate::kappa_zero;
    rp.phi1 = p.row(i);
    rp.phi2 = p.row(j);
    return rp;
  }
  const double s1 = r1.sum();
  const double s2 = r2.sum();
  if (s1 <= config::kResidualMassFloor || s2 <= config::kResidualMassFloor) {
    // Identical rows: coupling succeeds surely, the residuals are never used.
    rp.degenerate = Degenerate::kappa_one;
    rp.phi1 = p.row(i);
    rp.phi2 = p.row(i);
    return rp;
  }
  // Normalizing by the actual residual mass (= 1-kappa for exact row sums)
  // keeps phi sums at 1 to machine precision.
  rp.phi1 = r1 / s1;
  rp.phi2 = r2 / s2;
  return rp;
}

// ===== Coupling operator =====

// One-step operator of the coupled pair process restricted to not-yet-coupled
// pairs: entry [(i,j),(k,l)] = (1-kappa(i,j)) * phi1(k) * phi2(l).  Row sums
// equal the damping factors 1-kappa(pair); rows of fully-coupled pairs are
// zero.  For period products, damping holds the row-sum vector (a product row
// has no single 1-kappa).
struct CouplingOperator {
  int states = 0;
  PairIndex index;
  Eigen::MatrixXd matrix;
  Eigen::VectorXd damping;
  std::string provenance;
};

namespace detail {

inline CouplingOperator build_pair_operator(const StochasticMatrix& p,
                                            std::string provenance, int max_n) {
  const int n = p.size();
  if (n < 2)
    throw ValidationError("NonSquare", "pair space needs at least 2 states");
  if (n > max_n) {
    std::ostringstream os;
    os << "state count " << n << " exceeds the pair-space guard " << max_n
       << " (raise max_n to override)";
    throw ValidationError("IndexOutOfRange", os.str());
  }
  PairIndex idx(n);
  const int np = idx.pairs();
  CouplingOperator op;
  op.states = n;
  op.index = idx;
  op.matrix = Eigen::MatrixXd::Zero(np, np);
  op.damping = Eigen::VectorXd::Zero(np);
  op.provenance = std::move(provenance);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const int x = idx.encode(i, j);
      const ResidualPair rp = residual_pair(p, i, j);
      op.damping(x) = 1.0 - rp.kappa;
      if (rp.degenerate == Degenerate::kappa_one) continue;  // all-zero row
      for (int k = 0; k < n; ++k) {
        if (rp.phi1(k) <= 0.0) continue;
        for (int l = 0; l < n; ++l) {
          if (l == k || rp.phi2(l) <= 0.0) continue;
          op.matrix(x, idx.encode(k, l)) =
              op.damping(x) * rp.phi1(k) * rp.phi2(l);
        }
      }
    }
  }
  return op;
}

}  // namespace detail

inline CouplingOperator build_vhat(const StochasticMatrix& p,
                                   int max_n = config::kPairSpaceGuard) {
  return detail::build_pair_operator(p, "one-step", max_n);
}

// Operator of the m-step kernel P^m.  Note this is built on the matrix power,
// not the m-th power of the one-step operator; the two need not agree
// entrywise.
inline CouplingOperator build_vhat_m(const StochasticMatrix& p, int m,
                                     int max_n = config::kPairSpaceGuard) {
  if (m < 1)
    throw ValidationError("IndexOutOfRange", "step count m must be >= 1");
  std::ostringstream os;
  os << "m-step(" << m << ")";
  if (m == 1) return detail::build_pair_operator(p, os.str(), max_n);
  StochasticMatrix pm(matrix_power(p.matrix(), m));
  return detail::build_pair_operator(pm, os.str(), max_n);
}

inline CouplingOperator build_vhat_slice(const TimeVaryingKernel& k, int t,
                                         int max_n = config::kPairSpaceGuard) {
  std::ostringstream os;
  os << "slice(" << t << ")";
  return detail::build_pair_operator(k.slice(t), os.str(), max_n);
}

// Product of the slice operators over one period, in time order.
inline CouplingOperator build_period_operator(
    const TimeVaryingKernel& k, int max_n = config::kPairSpaceGuard) {
  if (!k.periodic())
    throw ValidationError("NotPeriodic",
                          "period operator requires a periodic kernel");
  const int T = k.slice_count();
  CouplingOperator op = build_vhat_slice(k, 0, max_n);
  for (int t = 1; t < T; ++t)
    op.matrix = op.matrix * build_vhat_slice(k, t, max_n).matrix;
  op.damping = op.matrix.rowwise().sum();
  std::ostringstream os;
  os << "period-product(" << T << ")";
  op.provenance = os.str();
  return op;
}

// ===== Non-coupling bound vectors =====

// Column k holds V^k 1: the exact probability that the coupled pair starting
// at each off-diagonal pair is still uncoupled after k steps.
inline Eigen::MatrixXd bound_vector(const CouplingOperator& v, int n) {
  if (n < 0) throw ValidationError("IndexOutOfRange", "n must be >= 0");
  const int np = static_cast<int>(v.matrix.rows());
  Eigen::MatrixXd out(np, n + 1);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(np);
  out.col(0) = w;
  for (int k = 1; k <= n; ++k) {
    w = v.matrix * w;
    out.col(k) = w;
  }
  return out;
}

// Column k holds V_0 V_1 ... V_{k-1} 1 for the time-varying slices.
inline Eigen::MatrixXd product_bound_vector(
    const TimeVaryingKernel& k, int n, int max_n = config::kPairSpaceGuard) {
  if (n < 0) throw ValidationError("IndexOutOfRange", "n must be >= 0");
  if (!k.periodic() && n > k.slice_count()) {
    std::ostringstream os;
    os << "product to step " << n << " needs " << n << " slices, kernel has "
       << k.slice_count();
    throw ValidationError("HorizonExceeded", os.str());
  }
  const int needed = k.periodic() ? std::min(k.slice_count(), std::max(1, n))
                                  : std::max(1, n);
  std::vector<CouplingOperator> ops;
  ops.reserve(static_cast<std::size_t>(needed));
  for (int t = 0; t < needed; ++t) ops.push_back(build_vhat_slice(k, t, max_n));
  const int wrap = static_cast<int>(ops.size());
  const int np = static_cast<int>(ops.front().matrix.rows());
  Eigen::MatrixXd out(np, n + 1);
  for (int col = 0; col <= n; ++col) {
    Eigen::VectorXd w = Eigen::VectorXd::Ones(np);
    for (int t = col - 1; t >= 0; --t)
      w = ops[static_cast<std::size_t>(k.periodic() ? t % wrap : t)].matrix * w;
    out.col(col) = w;
  }
  return out;
}

}  // namespace mixbound
