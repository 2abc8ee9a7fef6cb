#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "condenser/balayage.hpp"
#include "condenser/geometry.hpp"
#include "condenser/kernels.hpp"
#include "condenser/measures.hpp"
#include "condenser/qp.hpp"

namespace condenser {

/// A discretized condenser problem. `cloud` holds the A1 nodes first, then the A2 nodes;
/// `a1_cloud` is the A1 part alone and carries the Green matrix.
struct Problem {
  Domain domain;
  std::shared_ptr<const PointCloud> cloud;
  std::shared_ptr<const PointCloud> a1_cloud;
  std::vector<std::size_t> a1_rows;
  std::vector<std::size_t> a2_rows;
  std::shared_ptr<const KernelMatrix> riesz;
  std::shared_ptr<const KernelMatrix> green;
  std::shared_ptr<const Sweeper> sweeper;
  ConstraintMeasure xi;
  ExternalField field;
  DiagonalRule rule;
  qp::Options qp;
  double truncation_radius = 0;

  /// Field values at the A1 nodes (the Green side).
  Eigen::VectorXd field_on_a1() const;
  /// Constraint weights at the A1 nodes.
  Eigen::VectorXd xi_on_a1() const;
  /// Embeds a vector over A1 nodes into the full cloud (zeros on A2).
  Eigen::VectorXd embed_a1(const Eigen::VectorXd& v) const;
  Eigen::VectorXd restrict_a1(const Eigen::VectorXd& v) const;
  Eigen::VectorXd restrict_a2(const Eigen::VectorXd& v) const;
};

struct ProblemInputs {
  Domain domain;
  PointCloud a1;
  PointCloud a2;
  Eigen::VectorXd xi;  // over a1 nodes
  enum class FieldKind { Zero, CaseI, CaseII } field = FieldKind::Zero;
  Eigen::VectorXd field_values;  // Case I, over a1 nodes
  PointMatrix zeta_points;       // Case II
  Eigen::VectorXd zeta_weights;
  DiagonalRule rule;
  qp::Options qp;
  double truncation_radius = 0;
};

/// Assembles kernels, the sweeper and the Green matrix (closed form for alpha = 2).
Problem build_problem(ProblemInputs in);

struct Solution {
  SignedDiscreteMeasure lambda;    // on the full cloud
  DiscreteMeasure green_minimizer;  // on the A1 cloud
  double objective_riesz = 0;      // ||lambda||^2 + 2 <f, lambda+>
  double objective_green = 0;      // nu' G nu + 2 <f, nu>
  double objective_gap = 0;        // |G_alpha - G_g| / (1 + |G_g|)
  double bridge_gap = 0;           // ||lambda- - (lambda+)'||_alpha / ||lambda+||_alpha
  double multiplier_c = 0;         // Lagrange multiplier of the unit-mass constraint (potential units)
  double kkt_residual = 0;
  int iterations = 0;
  std::string method;
  std::vector<double> objective_log;
};

struct GreenResult {
  DiscreteMeasure measure;  // on the A1 cloud
  qp::Result qp;
};

/// Minimizer of nu'G nu + 2 f'nu over 0 <= nu <= upper, sum nu = 1, on the Green matrix's cloud.
GreenResult solve_green_box(const KernelMatrix& green, const Eigen::VectorXd& f, const Eigen::VectorXd& upper,
                            const qp::Options& options = {}, const Eigen::VectorXd* start = nullptr);

/// Minimizer of nu'G nu + 2 f'nu over 0 <= nu <= xi, sum nu = 1.
GreenResult solve_green_constrained(const Problem& p, const Eigen::VectorXd* start = nullptr);

/// lambda+ from the Green problem, lambda- its balayage.
Solution solve_riesz_via_bridge(const Problem& p);

struct DirectOptions {
  int block_iterations = 6;
  bool joint_polish = true;
  std::optional<Eigen::VectorXd> minus_upper;  // over A2 nodes (signed-constraint variant)
};

/// Full signed problem by block alternation followed by a joint active-set polish.
Solution solve_riesz_direct(const Problem& p, const DirectOptions& opt = {});

/// Minimizer of nu'G nu + 2 f0'nu over probability measures on the A1 nodes.
GreenResult solve_unconstrained_weighted(const KernelMatrix& green, const Eigen::VectorXd& f0,
                                         const qp::Options& options = {});

struct SignedConstraintResult {
  Solution doubly;          // mu+ <= xi and mu- <= sigma-
  Solution xi_only;
  double relative_gap = 0;  // |G_sigma - G_xi| / (1 + |G_xi|)
  double minimizer_gap = 0;  // energy-norm distance of the two minimizers over ||xi_only||
};

/// Throws InvalidSigma (naming the node) unless sigma_minus >= balayage(xi) within tolerance.
SignedConstraintResult solve_signed_constraint(const Problem& p, const DiscreteMeasure& sigma_minus);

/// Feasible point in the spirit of the admissibility proof: xi restricted to its heaviest
/// nodes until mass 1 is reached, rescaled; equilibrium measure on A2. With a seed the
/// nodes are taken in a random order instead.
SignedDiscreteMeasure feasible_start(const Problem& p, std::optional<std::uint64_t> seed = std::nullopt);

/// Energy norm ||a - b||_alpha of two signed measures on the same cloud.
double energy_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelMatrix& K);

}  // namespace condenser
