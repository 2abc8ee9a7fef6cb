#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "condenser/geometry.hpp"
#include "condenser/kernels.hpp"

namespace condenser {

/// Nonnegative weights over the nodes of a cloud (zero off the support).
struct DiscreteMeasure {
  std::shared_ptr<const PointCloud> cloud;
  Eigen::VectorXd weights;

  DiscreteMeasure() = default;
  /// Throws InfeasibleSpec on negative or non-finite weights, DimensionMismatch on size.
  DiscreteMeasure(std::shared_ptr<const PointCloud> cloud, Eigen::VectorXd weights);
  static DiscreteMeasure zero(std::shared_ptr<const PointCloud> cloud);
  /// Unit mass at node i.
  static DiscreteMeasure dirac(std::shared_ptr<const PointCloud> cloud, std::size_t i);

  double mass() const { return weights.sum(); }
  std::size_t size() const { return static_cast<std::size_t>(weights.size()); }
};

/// mu = plus - minus with plus carried by A1 nodes and minus by A2 nodes of one cloud.
struct SignedDiscreteMeasure {
  DiscreteMeasure plus;
  DiscreteMeasure minus;

  SignedDiscreteMeasure() = default;
  /// Throws CloudMismatch if the parts live on different clouds, InfeasibleSpec if a part
  /// charges a node of the wrong plate.
  SignedDiscreteMeasure(DiscreteMeasure plus, DiscreteMeasure minus);
  Eigen::VectorXd net() const { return plus.weights - minus.weights; }
  const std::shared_ptr<const PointCloud>& cloud() const { return plus.cloud; }
};

/// External field f sampled at the nodes of a cloud.
///
/// Case I: given values, f = 0 on A2 nodes. Case II: f = U^zeta - U^zeta' for point
/// sources zeta in D; values are filled by the balayage module (make_case_two).
struct ExternalField {
  enum class Kind { Zero, CaseI, CaseII };
  Kind kind = Kind::Zero;
  std::shared_ptr<const PointCloud> cloud;
  Eigen::VectorXd values;
  // Case II sources.
  PointMatrix zeta_points;
  Eigen::VectorXd zeta_weights;
  Eigen::VectorXd zeta_swept;  // weights of zeta' on the cloud (A2 nodes)

  static ExternalField zero(std::shared_ptr<const PointCloud> cloud);
  /// Throws InfeasibleSpec if a value is not finite, negative, or nonzero on an A2 node.
  static ExternalField case_one(std::shared_ptr<const PointCloud> cloud, Eigen::VectorXd values);
  bool is_zero() const;
};

/// Upper constraint xi on A1 nodes with xi(A1) > 1.
struct ConstraintMeasure {
  DiscreteMeasure xi;
  double total = 0;

  ConstraintMeasure() = default;
  /// Throws Infeasible if xi(A1) <= 1, DegenerateConstraint if xi(A1) <= 1 + 1e-10,
  /// InfeasibleSpec if xi charges an A2 node.
  explicit ConstraintMeasure(DiscreteMeasure xi);
};

/// U[i] = sum_j K[i][j] w[j].
Eigen::VectorXd potential(const DiscreteMeasure& mu, const KernelMatrix& K);
Eigen::VectorXd potential(const SignedDiscreteMeasure& mu, const KernelMatrix& K);

double energy(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const KernelMatrix& K);
double energy(const SignedDiscreteMeasure& mu, const SignedDiscreteMeasure& nu, const KernelMatrix& K);
double energy(const SignedDiscreteMeasure& mu, const KernelMatrix& K);

Eigen::VectorXd weighted_potential(const DiscreteMeasure& mu, const KernelMatrix& K, const ExternalField& f);
Eigen::VectorXd weighted_potential(const SignedDiscreteMeasure& mu, const KernelMatrix& K, const ExternalField& f);

/// E(mu) + 2 <f, mu> (the field acts on the positive part only for signed measures).
double weighted_energy(const DiscreteMeasure& mu, const KernelMatrix& K, const ExternalField& f);
double weighted_energy(const SignedDiscreteMeasure& mu, const KernelMatrix& K, const ExternalField& f);

struct AdmissibilityReport {
  bool admissible = true;
  double plus_mass = 0;
  double minus_mass = 0;
  double max_excess = 0;
  std::vector<std::size_t> violations;  // nodes where plus > xi + tol
  std::string message;
};

AdmissibilityReport check_admissible(const SignedDiscreteMeasure& mu, const ConstraintMeasure& xi, double tol = 1e-8);

/// CSV with columns index, x1..xn, weight.
void write_measure_csv(const DiscreteMeasure& mu, const std::string& path);

/// Throws CloudMismatch unless both handles name the same cloud object.
void require_same_cloud(const std::shared_ptr<const PointCloud>& a, const std::shared_ptr<const PointCloud>& b,
                        const char* what);

}  // namespace condenser
