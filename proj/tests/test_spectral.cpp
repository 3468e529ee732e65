#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using mixbound::SpectralOptions;
using mixbound::SpectralSummary;
using mixbound::StochasticMatrix;
using testutil::make_matrix;

TEST_CASE("eigenvalue listing") {
  SECTION("sorted by modulus, largest first") {
    Eigen::MatrixXd a = make_matrix({{0.65, 0.35}, {0.35, 0.65}});
    auto evs = mixbound::eigenvalues(a);
    REQUIRE(evs.size() == 2);
    REQUIRE(evs[0].real() == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(evs[1].real() == Catch::Approx(0.3).margin(1e-12));
  }
  SECTION("rejects non-square input") {
    REQUIRE_THROWS_AS(mixbound::eigenvalues(Eigen::MatrixXd::Zero(2, 3)),
                      mixbound::ValidationError);
  }
}

TEST_CASE("second modulus of a transition matrix") {
  SECTION("known two-state gap") {
    StochasticMatrix p = testutil::fixture_matrix("ex2.csv");
    REQUIRE(mixbound::second_modulus(p) == Catch::Approx(0.4).margin(1e-12));
  }
  SECTION("complex pair gives its modulus") {
    StochasticMatrix p = testutil::fixture_matrix("ex4.json");
    REQUIRE(mixbound::second_modulus(p) ==
            Catch::Approx(std::sqrt(0.37)).margin(1e-12));
  }
}

TEST_CASE("power iteration") {
  SECTION("converges on a diagonal matrix") {
    Eigen::MatrixXd a = make_matrix({{0.5, 0.0}, {0.0, 0.2}});
    auto r = mixbound::spectral_radius_power(a);
    REQUIRE(r.converged);
    REQUIRE(r.radius == Catch::Approx(0.5).margin(1e-11));
  }
  SECTION("zero matrix reports radius zero") {
    auto r = mixbound::spectral_radius_power(Eigen::MatrixXd::Zero(3, 3));
    REQUIRE(r.converged);
    REQUIRE(r.radius == 0.0);
  }
  SECTION("plus-minus spectrum never settles") {
    // Eigenvalues are +2 and -2; the iteration oscillates between scaled
    // copies of (1,4) and (1,1)-type vectors and the residual stays large.
    Eigen::MatrixXd a = make_matrix({{0.0, 1.0}, {4.0, 0.0}});
    auto r = mixbound::spectral_radius_power(a, 1e-12, 500);
    REQUIRE_FALSE(r.converged);
  }
}

TEST_CASE("norm-root sequence") {
  SECTION("settles to the radius of a diagonal matrix") {
    Eigen::MatrixXd a = make_matrix({{0.5, 0.0}, {0.0, 0.2}});
    std::vector<double> g = mixbound::gelfand_sequence(a, 20);
    REQUIRE(g.back() == Catch::Approx(0.5).margin(1e-6));
  }
  SECTION("handles nilpotent matrices") {
    Eigen::MatrixXd a = make_matrix({{0.0, 1.0}, {0.0, 0.0}});
    std::vector<double> g = mixbound::gelfand_sequence(a, 8);
    REQUIRE(g.back() == 0.0);
  }
  SECTION("handles the zero matrix") {
    std::vector<double> g =
        mixbound::gelfand_sequence(Eigen::MatrixXd::Zero(2, 2), 5);
    for (double v : g) REQUIRE(v == 0.0);
  }
  SECTION("repeated squaring does not underflow for tiny scales") {
    Eigen::MatrixXd a = 1e-200 * make_matrix({{0.5, 0.0}, {0.0, 0.2}});
    std::vector<double> g = mixbound::gelfand_sequence(a, 20);
    REQUIRE(g.back() == Catch::Approx(0.5e-200).epsilon(1e-6));
  }
  SECTION("plus-minus spectrum still converges in norm") {
    Eigen::MatrixXd a = make_matrix({{0.0, 1.0}, {4.0, 0.0}});
    std::vector<double> g = mixbound::gelfand_sequence(a, 20);
    REQUIRE(g.back() == Catch::Approx(2.0).margin(1e-6));
  }
}

TEST_CASE("cross-checked spectral radius") {
  StochasticMatrix pa = testutil::fixture_matrix("ex1.csv");
  Eigen::MatrixXd v = mixbound::build_vhat(pa).matrix;

  SECTION("full mode agrees across routes and records residuals") {
    SpectralSummary s = mixbound::spectral_radius(v);
    REQUIRE(s.radius == Catch::Approx(0.3).margin(1e-12));
    REQUIRE(std::abs(s.gelfand_tail - s.radius) <= 1e-6);
    REQUIRE(s.eigen_residual <= 1e-10);
    if (s.power.converged)
      REQUIRE(std::abs(s.power.radius - s.radius) <= 1e-6);
    REQUIRE(!s.method.empty());
  }
  SECTION("zero tolerance forces the mismatch error") {
    SpectralOptions opts;
    opts.cross_check_tol = 0.0;
    StochasticMatrix pg = testutil::fixture_matrix("ex7.json");
    Eigen::MatrixXd vg = mixbound::build_vhat(pg).matrix;
    bool threw = false;
    try {
      mixbound::spectral_radius(vg, opts);
    } catch (const mixbound::NumericalError& e) {
      threw = true;
      REQUIRE(e.code() == "CrossCheckMismatch");
    }
    REQUIRE(threw);
  }
  SECTION("fast mode accepts a validated power result") {
    SpectralOptions opts;
    opts.fast = true;
    SpectralSummary s = mixbound::spectral_radius(v, opts);
    REQUIRE(s.radius == Catch::Approx(0.3).margin(1e-9));
    REQUIRE(s.method == "power");
  }
  SECTION("fast mode falls back to the eigensolver when power stalls") {
    SpectralOptions opts;
    opts.fast = true;
    opts.power_max_iterations = 200;
    Eigen::MatrixXd osc = make_matrix({{0.0, 1.0}, {4.0, 0.0}});
    SpectralSummary s = mixbound::spectral_radius(osc, opts);
    REQUIRE(s.radius == Catch::Approx(2.0).margin(1e-9));
    REQUIRE(testutil::contains(s.method, "eigensolver"));
  }
  SECTION("full mode tolerates non-convergent power and notes it") {
    Eigen::MatrixXd osc = make_matrix({{0.0, 1.0}, {4.0, 0.0}});
    SpectralSummary s = mixbound::spectral_radius(osc);
    REQUIRE(s.radius == Catch::Approx(2.0).margin(1e-9));
    REQUIRE_FALSE(s.power.converged);
    bool noted = false;
    for (const std::string& n : s.notes)
      if (testutil::contains(n, "power iteration")) noted = true;
    REQUIRE(noted);
  }
  SECTION("random operators: all routes agree") {
    mixbound::Xoshiro256StarStar rng(314);
    for (int rep = 0; rep < 8; ++rep) {
      StochasticMatrix p = mixbound::random_stochastic_matrix(4, rng, 0.2);
      Eigen::MatrixXd m = mixbound::build_vhat(p).matrix;
      SpectralSummary s = mixbound::spectral_radius(m);
      REQUIRE(std::abs(s.gelfand_tail - s.radius) <=
              1e-6 * std::max(1.0, s.radius));
      if (s.power.converged)
        REQUIRE(std::abs(s.power.radius - s.radius) <=
                1e-6 * std::max(1.0, s.radius));
    }
  }
}
