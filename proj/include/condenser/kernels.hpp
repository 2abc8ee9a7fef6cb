#pragma once

#include <memory>
#include <string>

#include <Eigen/Dense>

#include "condenser/geometry.hpp"

namespace condenser {

/// Riesz kernel |x-y|^(alpha-n) on R^n, or the alpha-Green kernel of a domain.
struct KernelKind {
  enum class Type { Riesz, Green };
  Type type = Type::Riesz;
  double alpha = 2.0;
  int dim = 3;
  Domain domain;  // Green only

  static KernelKind riesz(double alpha, int dim);
  static KernelKind green(const Domain& domain);
  void validate() const;
  std::string descriptor() const;
};

/// Self-energy rule: K[i][i] is the kernel at separation beta * cell_radius[i].
struct DiagonalRule {
  double beta = 0.54;
  std::string descriptor() const;
  double separation(double cell_radius) const { return beta * cell_radius; }
};

struct KernelMatrix {
  Eigen::MatrixXd values;
  KernelKind kind;
  DiagonalRule diagonal_rule;
  std::shared_ptr<const PointCloud> cloud;

  Eigen::Index size() const { return values.rows(); }
  /// Attempts a Cholesky factorization.
  bool is_positive_definite() const;
  /// Binary dump: magic "CKM1", u64 node count, u32 descriptor length, descriptor bytes,
  /// then the matrix row-major as little-endian f64.
  void dump(const std::string& path) const;
};

double riesz_kernel(const Point& x, const Point& y, double alpha, int n);
/// Riesz kernel as a function of distance.
double riesz_of_distance(double r, double alpha, int n);

/// Newtonian Green function of the half-space x_1 > 0 (any n >= 3).
double green_kernel_halfspace(const Point& x, const Point& y, int n);

/// Newtonian Green function of a ball via the Kelvin image.
double green_kernel_ball_newtonian(const Point& x, const Point& y, const Domain& ball);

/// Potential at x of the image of a unit charge at y (the harmonic correction of the
/// closed-form Green kernels); finite for x == y inside the domain.
double newtonian_image_term(const Point& x, const Point& y, const Domain& domain);

/// |x - y*|^2 - |x - y|^2 for the image point y*: 4 x_1 y_1 for the half-space,
/// (R^2 - |x|^2)(R^2 - |y|^2) / R^2 for a ball.
double boundary_excess(const Point& x, const Point& y, const Domain& domain);

/// Newtonian Green kernel d^(2-n) - (d^2 + excess)^((2-n)/2) from the squared distance,
/// evaluated without cancellation. Nonnegative.
double newtonian_green_of(double dist2, double excess, int n);

/// Dense matrix over the cloud. Green kernels are closed-form and need alpha = 2;
/// other Green matrices come from the balayage module.
KernelMatrix assemble(const KernelKind& kernel, std::shared_ptr<const PointCloud> cloud,
                      const DiagonalRule& rule = {});

/// Off-diagonal block kappa(x_i, z_j) between two point sets (no regularization).
Eigen::MatrixXd riesz_block(const PointMatrix& x, const PointMatrix& z, double alpha);

}  // namespace condenser
