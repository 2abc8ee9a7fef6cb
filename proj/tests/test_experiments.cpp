#include <doctest.h>

#include <cmath>
#include <numbers>

#include "condenser/error.hpp"
#include "condenser/experiments.hpp"

using namespace condenser;

TEST_CASE("counterexample coefficients have c_k^2 / r_k = 1 and sum below one") {
  CounterexampleOptions o;
  o.terms = 5;
  o.nodes_per_disc = 80;
  CounterexampleReport r = counterexample_experiment(o);
  double sum = 0;
  for (std::size_t k = 0; k < r.c.size(); ++k) {
    CHECK(r.c[k] * r.c[k] / r.r[k] == doctest::Approx(1.0));
    sum += r.c[k];
  }
  CHECK(sum < 1.0);
  for (double g : r.green_partial_sums) CHECK(g <= 1.1);
  // Each added term contributes about E_2(mu_1) to the Riesz energy.
  for (std::size_t k = 1; k < r.riesz_increments.size(); ++k) CHECK(r.riesz_increments[k] >= 0.5);
  for (std::size_t k = 1; k < r.riesz_partial_sums.size(); ++k)
    CHECK(r.riesz_partial_sums[k] / static_cast<double>(k + 1) >= 0.5 * r.unit_disc_energy);
  CHECK(r.pass);
}

TEST_CASE("unbounded constraint optima decrease") {
  UnboundedConstraintOptions o;
  o.discs = 4;
  o.nodes_per_disc = 80;
  UnboundedConstraintReport r = unbounded_constraint_experiment(o);
  CHECK(r.strictly_decreasing);
  CHECK(r.norms_within_bounds);
  // Continuum norm of the unit equilibrium measure of a disc of radius 2 j^4: sqrt(pi / (4 j^4)).
  for (std::size_t j = 0; j < r.component_norms.size(); ++j) {
    const double jj = static_cast<double>(j + 1);
    CHECK(r.component_norms[j] == doctest::Approx(std::sqrt(std::numbers::pi / (4 * jj * jj * jj * jj))).epsilon(0.02));
  }
}

TEST_CASE("short-circuit sequence decreases on a coarse stack") {
  ShortCircuitOptions o;
  o.levels = 3;
  o.base_nodes = 60;
  o.a2_nodes = 2500;
  ShortCircuitReport r = short_circuit_experiment(o);
  CHECK(r.strictly_decreasing);
  CHECK(r.max_relative_gap <= 0.05);
}

TEST_CASE("beta calibration brackets the Newtonian disc capacity") {
  BetaCalibration b = calibrate_beta(2.0 / std::numbers::pi, 600);
  CHECK(b.capacity == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-3));
  CHECK(b.beta > 0.3);
  CHECK(b.beta < 0.8);
  CHECK_THROWS_AS(calibrate_beta(2.0 / (std::numbers::pi * std::numbers::pi), 600), Error);
}

TEST_CASE("scaled equilibrium constraint has mass q") {
  BallExample e;
  e.a1_nodes = 120;
  e.a2_nodes = 300;
  ProblemInputs in = ball_example_inputs(e);
  CHECK(in.xi.sum() == doctest::Approx(e.q).epsilon(1e-9));
  CHECK_THROWS_AS(constraint_scaled_equilibrium(in.a1, 1.5, 1.0, DiagonalRule{}), Error);
}
