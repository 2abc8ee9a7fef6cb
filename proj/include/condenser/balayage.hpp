#pragma once

#include <cstdint>
#include <list>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "condenser/kernels.hpp"
#include "condenser/measures.hpp"
#include "condenser/qp.hpp"

namespace condenser {

struct SweepStats {
  int rounds = 0;             // active-set rounds of the batched solve
  int factorizations = 0;
  int fallbacks = 0;          // columns handed to the general QP solver
  double max_kkt_residual = 0;
};

/// Balayage onto the A2 nodes of a Riesz kernel matrix: the projection, in the energy
/// norm, onto nonnegative measures carried by those nodes.
class Sweeper {
 public:
  explicit Sweeper(const KernelMatrix& K, qp::Options options = {});

  const KernelMatrix& kernel() const { return *K_; }
  const std::vector<std::size_t>& targets() const { return a2_; }
  const Eigen::MatrixXd& target_block() const { return K22_; }

  /// Balayage of a nonnegative measure on the kernel's cloud.
  DiscreteMeasure sweep(const DiscreteMeasure& mu, SweepStats* stats = nullptr) const;

  /// Column j of B holds the potential at the A2 nodes of a unit source; returns the swept
  /// weights (rows follow targets()). Columns are solved jointly with shared factorizations.
  Eigen::MatrixXd sweep_potentials(const Eigen::MatrixXd& B, SweepStats* stats = nullptr) const;

  /// Potentials at the A2 nodes of point sources (rows of `sources`).
  Eigen::MatrixXd source_potentials(const PointMatrix& sources) const;

 private:
  struct Factor {
    std::vector<char> free_mask;
    std::uint64_t key = 0;
    std::vector<Eigen::Index> free_idx;
    Eigen::LLT<Eigen::MatrixXd> llt;
  };
  const Factor& factor_for(const std::vector<char>& free_mask, std::uint64_t key, SweepStats* stats) const;
  Eigen::VectorXd solve_single_qp(const Eigen::VectorXd& b) const;

  const KernelMatrix* K_;
  qp::Options options_;
  std::vector<std::size_t> a2_;
  Eigen::MatrixXd K22_;
  mutable std::list<Factor> cache_;
};

DiscreteMeasure balayage(const DiscreteMeasure& mu, const KernelMatrix& K_riesz);

struct GreenEnergyParts {
  double riesz_energy = 0;       // ||mu||^2
  double swept_energy = 0;       // ||mu'||^2
  double difference_norm = 0;    // ||mu - mu'||^2
  double difference_of_norms = 0;  // ||mu||^2 - ||mu'||^2
  double swept_mass = 0;
};

/// ||mu - mu'||^2 in the Riesz energy norm.
double green_energy_via_identity(const DiscreteMeasure& mu, const KernelMatrix& K_riesz,
                                 GreenEnergyParts* parts = nullptr);
double green_energy_via_identity(const DiscreteMeasure& mu, const Sweeper& sweeper, GreenEnergyParts* parts = nullptr);

struct EquilibriumResult {
  DiscreteMeasure measure;  // on the kernel's cloud
  double capacity = 0;
  double energy = 0;
  double potential_level = 0;  // 1 / capacity
  double kkt_residual = 0;
};

/// Minimizer of the energy over unit measures on the node subset Q.
EquilibriumResult equilibrium_measure(const std::vector<std::size_t>& Q, const KernelMatrix& K,
                                      const qp::Options& options = {});

/// Balayage of the unit mass at an interior point y (not a node).
DiscreteMeasure dirac_balayage(const Point& y, const Domain& domain, const Sweeper& sweeper);

/// kappa(x, y) - U^{eps_y'}(x) for interior x != y.
double green_kernel_numeric(const Point& x, const Point& y, const Domain& domain, const Sweeper& sweeper);

/// Green matrix over `a1` (whose nodes are rows `source_rows` of the sweeper's cloud):
/// K11 - K12 * Theta, with Theta the swept unit masses, symmetrized.
KernelMatrix green_matrix_numeric(const Domain& domain, std::shared_ptr<const PointCloud> a1,
                                  const std::vector<std::size_t>& source_rows, const Sweeper& sweeper,
                                  SweepStats* stats = nullptr);

/// Closed form for alpha = 2, balayage route otherwise.
KernelMatrix green_matrix(const Domain& domain, std::shared_ptr<const PointCloud> a1,
                          const std::vector<std::size_t>& source_rows, const Sweeper& sweeper,
                          const DiagonalRule& rule);

/// Case II field f = U^zeta - U^zeta' at the nodes of the sweeper's cloud.
ExternalField make_case_two(const Sweeper& sweeper, const PointMatrix& zeta_points, const Eigen::VectorXd& zeta_weights);

}  // namespace condenser
