#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "condenser/solver.hpp"

namespace condenser {

/// Truncation radius of the complement shell: this many A1 diameters.
inline constexpr double kTruncationFactor = 8.0;

/// Riesz capacity of a flat disc of the given radius in R^3 (hexagonal nodes).
double disc_capacity(double radius, int nodes, double alpha, const DiagonalRule& rule);

/// Riesz capacity of a solid ball in R^3 (FCC nodes kept one cell radius inside).
double ball_capacity(double radius, int nodes, double alpha, const DiagonalRule& rule);

struct BetaCalibration {
  double beta = 0;
  double capacity = 0;  // of the unit disc at the returned beta
  double target = 0;
  int evaluations = 0;
};

/// Bisection on beta so that the alpha = 2 unit-disc capacity at `nodes` nodes hits `target`.
BetaCalibration calibrate_beta(double target, int nodes, double lo = 0.1, double hi = 2.0, double rel_tol = 1e-4);

/// xi = q * (unit equilibrium measure of the A1 cloud) for the Riesz kernel.
Eigen::VectorXd constraint_scaled_equilibrium(const PointCloud& a1, double alpha, double q, const DiagonalRule& rule);

/// xi = sum_k lambda_k / k^2 with lambda_k the unit equilibrium measure of part k - 1 (the k-th disc).
Eigen::VectorXd constraint_disc_series(const PointCloud& a1, double alpha, const DiagonalRule& rule);

/// Ball of radius r with alpha < 2, A1 the closed ball itself sampled inside, xi = q lambda_r.
struct BallExample {
  int dim = 3;
  double alpha = 1.5;
  double radius = 1.0;
  double q = 2.0;
  int a1_nodes = 1000;
  int a2_nodes = 2000;
  std::uint64_t seed = 0;
  DiagonalRule rule;
};
ProblemInputs ball_example_inputs(const BallExample& e);

/// Newtonian half-space with A1 = discs {x1 = 1/k, |x'| <= k}, k = 1..discs, xi = sum lambda_k / k^2.
struct DiscSeriesExample {
  int discs = 3;
  int a1_nodes = 500;
  int a2_nodes = 2000;
  std::uint64_t seed = 0;
  DiagonalRule rule;
};
ProblemInputs disc_series_example_inputs(const DiscSeriesExample& e);

struct BalayageCheckReport {
  int trials = 0;
  double max_mass_error = 0;       // |mu'(R^n) - mu(R^n)| / mu(R^n)
  double max_potential_gap = 0;    // max |U^mu - U^mu'| / max U^mu over A2 nodes deeper than their cell radius
  double max_identity_error = 0;   // ||mu - mu'||^2 against ||mu||^2 - ||mu'||^2, relative
  double max_closed_form_error = 0;  // against the closed-form Green quadratic form (alpha = 2)
  bool closed_form_checked = false;
  double mass_tol = 0.01;
  double potential_tol = 0.02;
  double closed_form_tol = 0.03;
  bool pass = false;
};

/// Sweeps `trials` random probability measures on the A1 nodes of the problem.
BalayageCheckReport balayage_check(const Problem& p, int trials = 10, std::uint64_t seed = 7);

struct ShortCircuitOptions {
  int levels = 6;
  int base_nodes = 120;      // disc k gets base_nodes * k nodes
  int a2_nodes = 6000;       // boundary plane only
  double core_factor = 1.25; // fine lateral spacing out to this many times the largest radius
  DiagonalRule rule;
};

struct ShortCircuitReport {
  std::vector<double> inverse_green_capacity;  // 1 / c_g(K_1 u ... u K_j)
  std::vector<double> riesz_difference;        // ||lambda_j - lambda_j'||^2 in the Riesz norm
  std::vector<double> relative_gap;
  double max_relative_gap = 0;
  bool strictly_decreasing = false;
  double tolerance = 0.03;
  bool pass = false;
};

/// Exhaustion of the disc-series example: level j uses the discs 1..j.
ShortCircuitReport short_circuit_experiment(const ShortCircuitOptions& opt = {});

struct UnboundedConstraintOptions {
  int discs = 5;
  int nodes_per_disc = 150;
  DiagonalRule rule;
};

struct UnboundedConstraintReport {
  std::vector<int> levels;              // m, with xi^(m) = xi_1 + ... + xi_m
  std::vector<double> optima;           // G^xi(m)_{g,f}
  std::vector<double> component_norms;  // ||xi_j||_alpha
  std::vector<double> component_bounds; // j^-2
  bool strictly_decreasing = false;
  double final_over_first = 0;
  bool norms_within_bounds = false;
  bool pass = false;
};

/// Newtonian half-space, field the Green potential of a unit charge at (1, 0, ..., 0).
/// xi_j is the unit equilibrium measure of the disc of radius 2 j^4 in the plane x1 = 2 j^4,
/// so ||xi_j||^2 = pi / (4 j^4) in the continuum. Levels start at m = 2 (xi^(1) has unit mass).
UnboundedConstraintReport unbounded_constraint_experiment(const UnboundedConstraintOptions& opt = {});

struct DualityReport {
  double q = 0;
  double theta_mass = 0;
  double eta = 0;
  double maxviol_wsc1 = 0;  // theta-weighted mean |W_theta + eta| / |eta|
  double maxviol_wsc2 = 0;  // max over A1 nodes of (-eta - W_theta)_+ / |eta|
  double objective_theta = 0;
  double objective_optimum = 0;
  double objective_gap = 0;  // |G(theta) - G*| / |G*|
  double tolerance = 0.02;
  bool pass = false;
};

/// theta = q (xi - lambda) against the unconstrained problem with field f0 = -q U_g^xi.
/// Throws WrongField unless the field is zero.
DualityReport duality_check(const Problem& p, const Solution& sol, double tolerance = 0.02);

struct CounterexampleOptions {
  int terms = 8;
  int nodes_per_disc = 200;
  double green_target = 0.5;  // each translated disc gets ||mu_k||_g below this
  DiagonalRule rule;
};

struct CounterexampleReport {
  std::vector<double> c;                  // 2^-k
  std::vector<double> r;                  // 4^-k
  std::vector<double> epsilon;            // heights above the boundary plane
  std::vector<double> disc_green_norm;    // ||mu_k||_g
  std::vector<double> green_partial_sums; // ||eta_l||_g
  std::vector<double> riesz_partial_sums; // E_2(eta_l)
  std::vector<double> riesz_increments;   // E_2(eta_l) - E_2(eta_{l-1}), in units of E_2(mu_1)
  double unit_disc_energy = 0;            // E_2(mu_1)
  double green_bound = 1.1;
  double min_increment = 0.5;
  bool pass = false;
};

/// Partial sums of sum_k c_k mu_k, mu_k the unit equilibrium measure of the disc of radius r_k
/// parallel to the boundary at height epsilon_k, centred at (epsilon_k, k, 0).
CounterexampleReport counterexample_experiment(const CounterexampleOptions& opt = {});

void to_json(nlohmann::json& j, const BalayageCheckReport& r);
void to_json(nlohmann::json& j, const ShortCircuitReport& r);
void to_json(nlohmann::json& j, const UnboundedConstraintReport& r);
void to_json(nlohmann::json& j, const DualityReport& r);
void to_json(nlohmann::json& j, const CounterexampleReport& r);

}  // namespace condenser
