#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "mixbound/chain.hpp"
#include "mixbound/errors.hpp"

namespace mixbound {

namespace config {
constexpr double kCrossCheckTol = 1e-6;   // eigensolver vs Gelfand vs power
constexpr int kGelfandMaxSquarings = 30;  // matrix power up to 2^30
constexpr double kGelfandStopTol = 1e-9;  // early stop once the sequence settles
constexpr int kPowerMaxIterations = 20000;
constexpr double kPowerTol = 1e-12;
constexpr double kFastPowerResidual = 1e-9;  // acceptance gate for fast mode
}  // namespace config

struct PowerIterationResult {
  double radius = 0.0;
  int iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
};

struct SpectralOptions {
  double cross_check_tol = config::kCrossCheckTol;
  int gelfand_max_squarings = config::kGelfandMaxSquarings;
  double gelfand_stop_tol = config::kGelfandStopTol;
  int power_max_iterations = config::kPowerMaxIterations;
  double power_tol = config::kPowerTol;
  // Fast mode: power iteration accepted only with a validated residual and a
  // norm sanity bound, dense eigensolver fallback otherwise, no Gelfand
  // route.  Meant for bulk random ensembles; the default full mode is the
  // authoritative path and cross-checks all routes against each other.
  bool fast = false;
};

struct SpectralSummary {
  std::vector<std::complex<double>> eigenvalues;  // by modulus, descending
  double radius = 0.0;
  double gelfand_tail = std::numeric_limits<double>::quiet_NaN();
  PowerIterationResult power;
  double eigen_residual = std::numeric_limits<double>::quiet_NaN();
  std::string method;
  std::vector<std::string> notes;
};

namespace detail {

inline void check_square(const Eigen::MatrixXd& a) {
  if (a.rows() < 1 || a.rows() != a.cols()) {
    std::ostringstream os;
    os << "expected a square matrix, got " << a.rows() << "x" << a.cols();
    throw ValidationError("NonSquare", os.str());
  }
}

inline double inf_norm(const Eigen::MatrixXd& a) {
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

inline void sort_by_modulus(std::vector<std::complex<double>>& evs) {
  std::sort(evs.begin(), evs.end(),
            [](const std::complex<double>& a, const std::complex<double>& b) {
              const double ma = std::abs(a), mb = std::abs(b);
              if (ma != mb) return ma > mb;
              if (a.real() != b.real()) return a.real() > b.real();
              return a.imag() > b.imag();
            });
}

}  // namespace detail

// Full spectrum via the dense QR eigensolver, sorted by modulus (descending,
// ties by real then imaginary part for deterministic output).
inline std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& a) {
  detail::check_square(a);
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw NumericalError("NoConvergence", "QR iteration did not converge");
  std::vector<std::complex<double>> evs(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    evs[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
  detail::sort_by_modulus(evs);
  return evs;
}

// Largest modulus among the eigenvalues of P other than one copy of the
// Perron eigenvalue 1 (the copy closest to 1 is removed).
inline double second_modulus(const StochasticMatrix& p) {
  const auto evs = eigenvalues(p.matrix());
  std::size_t drop = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < evs.size(); ++i) {
    const double d = std::abs(evs[i] - std::complex<double>(1.0, 0.0));
    if (d < best) {
      best = d;
      drop = i;
    }
  }
  double second = 0.0;
  for (std::size_t i = 0; i < evs.size(); ++i)
    if (i != drop) second = std::max(second, std::abs(evs[i]));
  return second;
}

// Power iteration from the all-ones vector.  Intended for nonnegative
// matrices (coupling operators); estimates through the infinity norm.  Never
// throws on non-convergence: oscillating spectra (e.g. a +-r pair) simply
// come back with converged = false.
inline PowerIterationResult spectral_radius_power(
    const Eigen::MatrixXd& a, double tol = config::kPowerTol,
    int max_iterations = config::kPowerMaxIterations) {
  detail::check_square(a);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(a.rows());
  PowerIterationResult res;
  for (int it = 1; it <= max_iterations; ++it) {
    Eigen::VectorXd w = a * v;
    res.iterations = it;
    const double lambda = w.cwiseAbs().maxCoeff();
    if (lambda == 0.0) {
      // A maps a positive vector to zero; for nonnegative A the radius is 0.
      res.radius = 0.0;
      res.residual = 0.0;
      res.converged = true;
      return res;
    }
    res.radius = lambda;
    res.residual = (w - lambda * v).cwiseAbs().maxCoeff();
    v = w / lambda;
    if (res.residual <= tol * std::max(1.0, lambda)) {
      res.converged = true;
      return res;
    }
  }
  res.converged = false;
  return res;
}

// Norm sequence g(k) = ||A^(2^k)||_inf^(1/2^k) by repeated squaring.  The
// iterate is renormalized each squaring and the scale tracked in log space,
// so the sequence survives spectra far outside double range.
inline std::vector<double> gelfand_sequence(const Eigen::MatrixXd& a, int k_max) {
  detail::check_square(a);
  if (k_max < 0)
    throw ValidationError("IndexOutOfRange", "k_max must be >= 0");
  std::vector<double> g(static_cast<std::size_t>(k_max) + 1, 0.0);
  double norm = detail::inf_norm(a);
  g[0] = norm;
  if (norm == 0.0) return g;  // zero matrix: the whole sequence is zero
  Eigen::MatrixXd c = a / norm;
  double log_scale = std::log(norm);  // A^(2^k) = exp(log_scale) * c
  for (int k = 1; k <= k_max; ++k) {
    c = c * c;
    norm = detail::inf_norm(c);
    if (norm == 0.0) return g;  // nilpotent: zeros from here on
    log_scale = 2.0 * log_scale + std::log(norm);
    c /= norm;
    g[static_cast<std::size_t>(k)] = std::exp(log_scale / std::ldexp(1.0, k));
  }
  return g;
}

namespace detail {

struct GelfandTail {
  double tail = 0.0;
  int squarings = 0;
  bool settled = false;
};

inline GelfandTail gelfand_tail(const Eigen::MatrixXd& a, int max_squarings,
                                double stop_tol) {
  GelfandTail out;
  double norm = inf_norm(a);
  out.tail = norm;
  if (norm == 0.0) {
    out.settled = true;
    return out;
  }
  Eigen::MatrixXd c = a / norm;
  double log_scale = std::log(norm);
  for (int k = 1; k <= max_squarings; ++k) {
    c = c * c;
    norm = inf_norm(c);
    out.squarings = k;
    if (norm == 0.0) {
      out.tail = 0.0;
      out.settled = true;
      return out;
    }
    log_scale = 2.0 * log_scale + std::log(norm);
    c /= norm;
    const double g = std::exp(log_scale / std::ldexp(1.0, k));
    const double delta = std::abs(g - out.tail);
    out.tail = g;
    if (delta <= stop_tol * std::max(1.0, g)) {
      out.settled = true;
      return out;
    }
  }
  return out;
}

}  // namespace detail

// Consolidated spectral radius.  Full mode (default): dense eigensolver is
// authoritative, the Gelfand tail must agree within cross_check_tol, and
// power iteration joins the cross-check whenever it converges; disagreement
// raises CrossCheckMismatch.  Fast mode trades the Gelfand route for speed on
// bulk ensembles (see SpectralOptions).
inline SpectralSummary spectral_radius(const Eigen::MatrixXd& a,
                                       const SpectralOptions& opts = {}) {
  detail::check_square(a);
  SpectralSummary s;

  if (opts.fast) {
    s.power = spectral_radius_power(a, opts.power_tol, opts.power_max_iterations);
    const double row_norm = detail::inf_norm(a);
    if (s.power.converged &&
        s.power.residual <=
            config::kFastPowerResidual * std::max(1.0, s.power.radius) &&
        s.power.radius <= row_norm + 1e-12) {
      s.radius = s.power.radius;
      s.method = "power";
      return s;
    }
    s.eigenvalues = eigenvalues(a);
    s.radius = s.eigenvalues.empty() ? 0.0 : std::abs(s.eigenvalues.front());
    s.method = "eigensolver (power fallback)";
    s.notes.push_back("power iteration did not validate; dense eigensolver used");
    return s;
  }

  // Authoritative route: dense eigensolver with eigenvector residuals.
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success)
    throw NumericalError("NoConvergence", "QR iteration did not converge");
  s.eigenvalues.resize(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    s.eigenvalues[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
  detail::sort_by_modulus(s.eigenvalues);
  s.radius = std::abs(s.eigenvalues.front());
  {
    const Eigen::MatrixXcd vecs = es.eigenvectors();
    const Eigen::MatrixXcd ac = a.cast<std::complex<double>>();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const Eigen::VectorXcd v = vecs.col(i);
      const double r =
          (ac * v - es.eigenvalues()(i) * v).cwiseAbs().maxCoeff();
      worst = std::max(worst, r);
    }
    s.eigen_residual = worst;
  }

  // Independent route 1: Gelfand tail by repeated squaring.
  const detail::GelfandTail tail = detail::gelfand_tail(
      a, opts.gelfand_max_squarings, opts.gelfand_stop_tol);
  s.gelfand_tail = tail.tail;
  {
    std::ostringstream os;
    os << "gelfand tail " << tail.tail << " after " << tail.squarings
       << " squarings" << (tail.settled ? "" : " (not settled)");
    s.notes.push_back(os.str());
  }
  if (std::abs(s.gelfand_tail - s.radius) >
      opts.cross_check_tol * std::max(1.0, s.radius)) {
    std::ostringstream os;
    os << "eigensolver radius " << s.radius << " vs gelfand tail "
       << s.gelfand_tail << " differ beyond " << opts.cross_check_tol;
    throw NumericalError("CrossCheckMismatch", os.str());
  }

  // Independent route 2: power iteration, cross-checked when it converges.
  s.power = spectral_radius_power(a, opts.power_tol, opts.power_max_iterations);
  if (s.power.converged) {
    if (std::abs(s.power.radius - s.radius) >
        opts.cross_check_tol * std::max(1.0, s.radius)) {
      std::ostringstream os;
      os << "eigensolver radius " << s.radius << " vs power iteration "
         << s.power.radius << " differ beyond " << opts.cross_check_tol;
      throw NumericalError("CrossCheckMismatch", os.str());
    }
    s.method = "eigensolver+gelfand+power";
  } else {
    s.method = "eigensolver+gelfand";
    s.notes.push_back(
        "power iteration did not converge (oscillating estimates); "
        "excluded from the cross-check");
  }
  return s;
}

}  // namespace mixbound
