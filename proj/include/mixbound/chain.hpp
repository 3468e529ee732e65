#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mixbound/errors.hpp"
#include "mixbound/rng.hpp"

namespace mixbound {

namespace config {
constexpr double kRowSumTol = 1e-9;       // accepted drift of a row sum from 1
constexpr double kStationaryTol = 1e-12;  // residual bound for stationary solves
constexpr double kReversibleTol = 1e-12;  // detailed-balance slack
constexpr double kResidualMassFloor = 1e-12;  // residual mass treated as zero
constexpr int kDirectSolveMaxStates = 2000;   // above this, power iteration only
}  // namespace config

// ===== Validated inputs =====

// Row-stochastic transition matrix.  Construction validates shape, sign, and
// row sums; with renormalize=true each row is divided by its sum instead.
class StochasticMatrix {
 public:
  explicit StochasticMatrix(Eigen::MatrixXd raw,
                            double tol = config::kRowSumTol,
                            bool renormalize = false)
      : p_(std::move(raw)) {
    if (p_.rows() < 1 || p_.rows() != p_.cols()) {
      std::ostringstream os;
      os << "expected a square matrix, got " << p_.rows() << "x" << p_.cols();
      throw ValidationError("NonSquare", os.str());
    }
    const int n = static_cast<int>(p_.rows());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (!(p_(i, j) >= 0.0)) {  // also catches NaN
          std::ostringstream os;
          os << "entry (" << i << "," << j << ") = " << p_(i, j);
          throw ValidationError("NegativeEntry", os.str());
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      const double sum = p_.row(i).sum();
      if (renormalize) {
        if (sum <= 0.0) {
          std::ostringstream os;
          os << "row " << i << " sums to " << sum << " and cannot be renormalized";
          throw ValidationError("RowSumViolation", os.str());
        }
        p_.row(i) /= sum;
      } else if (std::abs(sum - 1.0) > tol) {
        std::ostringstream os;
        os << "row " << i << " sums to " << sum << " (tolerance " << tol << ")";
        throw ValidationError("RowSumViolation", os.str());
      }
    }
  }

  int size() const { return static_cast<int>(p_.rows()); }
  const Eigen::MatrixXd& matrix() const { return p_; }
  double operator()(int i, int j) const { return p_(i, j); }

  Eigen::VectorXd row(int i) const {
    check_state(i);
    return p_.row(i).transpose();
  }

  void check_state(int i) const {
    if (i < 0 || i >= size()) {
      std::ostringstream os;
      os << "state " << i << " outside [0," << size() << ")";
      throw ValidationError("IndexOutOfRange", os.str());
    }
  }

 private:
  Eigen::MatrixXd p_;
};

inline StochasticMatrix validate_stochastic(const Eigen::MatrixXd& raw,
                                            double tol = config::kRowSumTol,
                                            bool renormalize = false) {
  return StochasticMatrix(raw, tol, renormalize);
}

// Probability vector.  Default-constructed instances are empty placeholders;
// validated instances come from the explicit constructor or point().
class Distribution {
 public:
  Distribution() = default;

  explicit Distribution(Eigen::VectorXd raw, double tol = config::kRowSumTol,
                        bool renormalize = false)
      : w_(std::move(raw)) {
    if (w_.size() < 1)
      throw ValidationError("LengthMismatch", "distribution must be non-empty");
    for (int i = 0; i < w_.size(); ++i) {
      if (!(w_(i) >= 0.0)) {
        std::ostringstream os;
        os << "weight " << i << " = " << w_(i);
        throw ValidationError("NegativeEntry", os.str());
      }
    }
    const double sum = w_.sum();
    if (renormalize) {
      if (sum <= 0.0)
        throw ValidationError("RowSumViolation", "distribution has zero mass");
      w_ /= sum;
    } else if (std::abs(sum - 1.0) > tol) {
      std::ostringstream os;
      os << "weights sum to " << sum << " (tolerance " << tol << ")";
      throw ValidationError("RowSumViolation", os.str());
    }
  }

  static Distribution point(int n, int i) {
    if (n < 1 || i < 0 || i >= n)
      throw ValidationError("IndexOutOfRange", "point mass outside state space");
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    w(i) = 1.0;
    return Distribution(std::move(w));
  }

  bool empty() const { return w_.size() == 0; }
  int size() const { return static_cast<int>(w_.size()); }
  const Eigen::VectorXd& vector() const { return w_; }
  double operator[](int i) const { return w_(i); }

 private:
  Eigen::VectorXd w_;
};

// Time-varying sequence of transition matrices P_0, P_1, ....  Periodic
// kernels repeat their slices forever; finite kernels define transitions only
// for t = 0 .. slice_count()-1.
class TimeVaryingKernel {
 public:
  TimeVaryingKernel(std::vector<StochasticMatrix> slices, bool periodic)
      : slices_(std::move(slices)), periodic_(periodic) {
    if (slices_.empty())
      throw ValidationError("LengthMismatch", "kernel needs at least one slice");
    for (const auto& s : slices_) {
      if (s.size() != slices_.front().size())
        throw ValidationError("LengthMismatch",
                              "kernel slices have mixed state counts");
    }
  }

  static TimeVaryingKernel homogeneous(StochasticMatrix p) {
    std::vector<StochasticMatrix> one;
    one.push_back(std::move(p));
    return TimeVaryingKernel(std::move(one), true);
  }

  int size() const { return slices_.front().size(); }
  int slice_count() const { return static_cast<int>(slices_.size()); }
  bool periodic() const { return periodic_; }

  const StochasticMatrix& slice(int t) const {
    if (t < 0) throw ValidationError("IndexOutOfRange", "negative time index");
    if (periodic_) return slices_[t % slices_.size()];
    if (t >= slice_count()) {
      std::ostringstream os;
      os << "time " << t << " beyond finite horizon " << slice_count();
      throw ValidationError("HorizonExceeded", os.str());
    }
    return slices_[t];
  }

 private:
  std::vector<StochasticMatrix> slices_;
  bool periodic_ = false;
};

// Pairwise overlap coefficients of the m-step kernel, plus their minimum.
struct KappaProfile {
  int step_count = 1;        // m
  Eigen::MatrixXd pairwise;  // overlap per ordered pair; 1 on the diagonal
  double scalar = 0.0;       // min over off-diagonal pairs
};

// ===== Overlap coefficients =====

// Overlap of the transition rows from states i and j:
// sum_k min(p(i,k), p(j,k)).  Equals 1 on the diagonal.
inline double kappa_pair(const StochasticMatrix& p, int i, int j) {
  p.check_state(i);
  p.check_state(j);
  if (i == j) return 1.0;
  double s = 0.0;
  for (int k = 0; k < p.size(); ++k) s += std::min(p(i, k), p(j, k));
  return s;
}

// A^m by binary exponentiation (m >= 0).
inline Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& a, int m) {
  if (m < 0) throw ValidationError("IndexOutOfRange", "negative matrix power");
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd base = a;
  int e = m;
  while (e > 0) {
    if (e & 1) result = result * base;
    e >>= 1;
    if (e > 0) base = base * base;
  }
  return result;
}

// Full overlap profile of the m-step kernel P^m.
inline KappaProfile kappa(const StochasticMatrix& p, int m = 1) {
  if (m < 1)
    throw ValidationError("IndexOutOfRange", "step count m must be >= 1");
  const int n = p.size();
  const Eigen::MatrixXd pm =
      (m == 1) ? p.matrix() : matrix_power(p.matrix(), m);
  KappaProfile prof;
  prof.step_count = m;
  prof.pairwise = Eigen::MatrixXd::Ones(n, n);
  double scalar = 1.0;  // min over an empty pair set (n = 1) is the coupled value
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += std::min(pm(i, k), pm(j, k));
      prof.pairwise(i, j) = s;
      scalar = std::min(scalar, s);
    }
  }
  prof.scalar = scalar;
  return prof;
}

// Same overlap computed through densities against the reference measure
// Lambda = (row_i + row_j)/2.  Independent representation used to cross-check
// kappa_pair; the two agree to machine precision.
inline double kappa_pair_via_reference(const StochasticMatrix& p, int i, int j) {
  p.check_state(i);
  p.check_state(j);
  if (i == j) return 1.0;
  double s = 0.0;
  for (int k = 0; k < p.size(); ++k) {
    const double lambda = 0.5 * (p(i, k) + p(j, k));
    if (lambda > 0.0)
      s += std::min(p(i, k) / lambda, p(j, k) / lambda) * lambda;
  }
  return s;
}

// ===== Structure checks =====

namespace detail {

inline std::vector<char> reachable_from(const Eigen::MatrixXd& p, int start,
                                        bool reverse_edges) {
  const int n = static_cast<int>(p.rows());
  std::vector<char> seen(n, 0);
  std::vector<int> queue{start};
  seen[start] = 1;
  while (!queue.empty()) {
    const int u = queue.back();
    queue.pop_back();
    for (int v = 0; v < n; ++v) {
      const double w = reverse_edges ? p(v, u) : p(u, v);
      if (w > 0.0 && !seen[v]) {
        seen[v] = 1;
        queue.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace detail

inline bool is_irreducible(const StochasticMatrix& p) {
  const auto fwd = detail::reachable_from(p.matrix(), 0, false);
  const auto bwd = detail::reachable_from(p.matrix(), 0, true);
  for (int v = 0; v < p.size(); ++v)
    if (!fwd[v] || !bwd[v]) return false;
  return true;
}

// Period of an irreducible chain: gcd over all support edges (u,v) of
// level(u) + 1 - level(v), with levels from a BFS layering.
inline int chain_period(const StochasticMatrix& p) {
  const int n = p.size();
  const Eigen::MatrixXd& m = p.matrix();
  std::vector<int> level(n, -1);
  std::vector<int> queue{0};
  level[0] = 0;
  std::size_t head = 0;
  while (head < queue.size()) {
    const int u = queue[head++];
    for (int v = 0; v < n; ++v) {
      if (m(u, v) > 0.0 && level[v] < 0) {
        level[v] = level[u] + 1;
        queue.push_back(v);
      }
    }
  }
  int g = 0;
  for (int u = 0; u < n; ++u) {
    if (level[u] < 0) continue;  // unreachable: caller checks irreducibility
    for (int v = 0; v < n; ++v) {
      if (m(u, v) > 0.0 && level[v] >= 0)
        g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
    }
  }
  return g == 0 ? 1 : g;
}

// ===== Stationary distribution =====

namespace detail {

inline double stationary_residual(const Eigen::MatrixXd& p,
                                  const Eigen::VectorXd& pi) {
  return (p.transpose() * pi - pi).cwiseAbs().maxCoeff();
}

}  // namespace detail

// Unique stationary distribution of an irreducible aperiodic chain.  Direct
// linear solve up to kDirectSolveMaxStates states, power iteration beyond or
// as fallback; the returned vector satisfies ||pi P - pi||_inf <= tol.
inline Eigen::VectorXd stationary_distribution(
    const StochasticMatrix& p, double tol = config::kStationaryTol) {
  const int n = p.size();
  if (!is_irreducible(p))
    throw ValidationError("Reducible", "chain is not irreducible");
  if (chain_period(p) != 1) {
    std::ostringstream os;
    os << "chain has period " << chain_period(p);
    throw ValidationError("Periodic", os.str());
  }

  Eigen::VectorXd pi;
  if (n <= config::kDirectSolveMaxStates) {
    // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    Eigen::MatrixXd a =
        p.matrix().transpose() - Eigen::MatrixXd::Identity(n, n);
    a.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    pi = a.partialPivLu().solve(b);
    pi = pi.cwiseMax(0.0);
    const double sum = pi.sum();
    if (sum > 0.0) {
      pi /= sum;
      if (detail::stationary_residual(p.matrix(), pi) <= tol) return pi;
    }
  }

  // Power iteration on the transpose (aperiodicity guarantees convergence).
  pi = Eigen::VectorXd::Constant(n, 1.0 / n);
  constexpr int kMaxIterations = 200000;
  for (int it = 0; it < kMaxIterations; ++it) {
    Eigen::VectorXd next = p.matrix().transpose() * pi;
    next /= next.sum();
    pi = next;
    if (detail::stationary_residual(p.matrix(), pi) <= tol) return pi;
  }
  std::ostringstream os;
  os << "stationary residual above " << tol << " after " << kMaxIterations
     << " iterations";
  throw NumericalError("NoConvergence", os.str());
}

// ===== Total variation =====

// Full-variation convention: sum of absolute differences, in [0, 2].
inline double tv_distance(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu) {
  if (mu.size() != nu.size())
    throw ValidationError("LengthMismatch", "distributions differ in length");
  return (mu - nu).cwiseAbs().sum();
}

inline double tv_distance(const Distribution& mu, const Distribution& nu) {
  return tv_distance(mu.vector(), nu.vector());
}

// Exact TV distance between the two propagated laws at every step 0..n_max.
inline std::vector<double> exact_tv_curve(const TimeVaryingKernel& k,
                                          const Distribution& mu1,
                                          const Distribution& mu2, int n_max) {
  if (mu1.size() != k.size() || mu2.size() != k.size())
    throw ValidationError("LengthMismatch",
                          "initial laws do not match the kernel state count");
  if (n_max < 0)
    throw ValidationError("IndexOutOfRange", "n_max must be >= 0");
  if (!k.periodic() && n_max > k.slice_count()) {
    std::ostringstream os;
    os << "curve to step " << n_max << " needs " << n_max
       << " slices, kernel has " << k.slice_count();
    throw ValidationError("HorizonExceeded", os.str());
  }
  std::vector<double> curve(static_cast<std::size_t>(n_max) + 1);
  Eigen::VectorXd v1 = mu1.vector();
  Eigen::VectorXd v2 = mu2.vector();
  curve[0] = tv_distance(v1, v2);
  for (int t = 0; t < n_max; ++t) {
    const Eigen::MatrixXd& pt = k.slice(t).matrix();
    v1 = pt.transpose() * v1;
    v2 = pt.transpose() * v2;
    curve[static_cast<std::size_t>(t) + 1] = tv_distance(v1, v2);
  }
  return curve;
}

inline std::vector<double> exact_tv_curve(const StochasticMatrix& p,
                                          const Distribution& mu1,
                                          const Distribution& mu2, int n_max) {
  return exact_tv_curve(TimeVaryingKernel::homogeneous(p), mu1, mu2, n_max);
}

// Detailed balance: pi_i p(i,j) == pi_j p(j,i) within tol.
inline bool is_reversible(const StochasticMatrix& p, const Eigen::VectorXd& pi,
                          double tol = config::kReversibleTol) {
  if (pi.size() != p.size())
    throw ValidationError("LengthMismatch",
                          "pi does not match the state count");
  for (int i = 0; i < p.size(); ++i)
    for (int j = i + 1; j < p.size(); ++j)
      if (std::abs(pi(i) * p(i, j) - pi(j) * p(j, i)) > tol) return false;
  return true;
}

inline bool is_reversible(const StochasticMatrix& p, const Distribution& pi,
                          double tol = config::kReversibleTol) {
  return is_reversible(p, pi.vector(), tol);
}

// ===== Random ensembles =====

// Seeded random chain: rows drawn entrywise uniform on [0,1) and renormalized.
// With sparsity > 0 each entry is zeroed with that probability first (the
// row's largest entry is restored if a row is wiped out).  Draw order per row:
// n values, then n coins; fixed so ensembles are reproducible bit-exactly.
inline StochasticMatrix random_stochastic_matrix(int n, Xoshiro256StarStar& rng,
                                                 double sparsity = 0.0) {
  if (n < 1)
    throw ValidationError("NonSquare", "state count must be positive");
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    int argmax = 0;
    double maxval = -1.0;
    for (int j = 0; j < n; ++j) {
      m(i, j) = rng.uniform();
      if (m(i, j) > maxval) {
        maxval = m(i, j);
        argmax = j;
      }
    }
    if (sparsity > 0.0) {
      for (int j = 0; j < n; ++j)
        if (rng.uniform() < sparsity) m(i, j) = 0.0;
      if (m.row(i).sum() <= 0.0) m(i, argmax) = maxval;
    }
  }
  return StochasticMatrix(std::move(m), config::kRowSumTol, true);
}

}  // namespace mixbound
