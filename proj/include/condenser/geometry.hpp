#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace condenser {

using Point = Eigen::VectorXd;
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class DomainKind { HalfSpace, Ball };

/// The domain D of the condenser. The negative plate is always the closed complement.
///
/// HalfSpace is {x : x_1 > 0}. Ball is the open ball B(center, radius).
struct Domain {
  DomainKind kind = DomainKind::HalfSpace;
  int dim = 3;
  double alpha = 2.0;
  Point center;       // Ball only
  double radius = 0;  // Ball only
  /// Declared, not computed. Both built-in complements are unbounded with interior points.
  bool complement_thin_at_infinity = false;

  static Domain half_space(int dim, double alpha);
  static Domain ball(const Point& center, double radius, double alpha);

  /// Throws DimensionMismatch / InfeasibleSpec if n < 3, alpha outside (0, 2] or radius <= 0.
  void validate() const;

  bool contains(const Point& x) const;       // x in the open domain D
  bool in_complement(const Point& x) const;  // x in the closed complement
  double boundary_distance(const Point& x) const;
  /// Signed distance to the boundary, positive inside D.
  double signed_depth(const Point& x) const;
};

enum class Plate : std::uint8_t { A1 = 1, A2 = 2 };

/// A flat (n-1)-disc in the hyperplane x_1 = reference_x1 + offset, centred on the x_1 axis.
struct Disc {
  double offset = 0;
  double radius = 1;
  int nodes = 0;  // 0: share of the plate's node_count proportional to area
};

struct DiscStack {
  std::vector<Disc> discs;
};

/// Volumetric sampling of the ball interior (Ball domains only), kept boundary_margin inside.
struct BallInterior {};

/// Truncated complement shell attached to the boundary.
///
/// Ball: the spherical shell inner_radius <= |x - c| <= outer_radius in layers,
/// layer 0 lying on the sphere. HalfSpace: the half ball {x_1 <= 0, |x| <= outer_radius}
/// in planar layers x_1 = -t_k, layer 0 on the boundary plane, laterally graded outside
/// core_radius.
struct AnnulusOnBoundary {
  double inner_radius = 0;  // Ball: 0 means the ball radius
  double outer_radius = 0;  // must be resolved (> inner) before discretizing
  double core_radius = 0;   // HalfSpace lateral fine-spacing radius; 0 means outer/8
  int layers = 0;           // 0: 4 for alpha = 2, 8 otherwise
  double boundary_fraction = 0;  // 0: 0.7 for alpha = 2, 0.3 otherwise
  double layer_growth = 0;       // ratio between successive layer depths; 0: 2.0
};

struct Custom {
  std::vector<Point> points;
};

using PlateShape = std::variant<DiscStack, BallInterior, AnnulusOnBoundary, Custom>;

struct PlateSpec {
  Plate which = Plate::A1;
  PlateShape shape;
  int node_count = 0;
  double boundary_margin = 0;
  std::uint64_t seed = 0;
};

/// Nodes of one or both plates with per-node quadrature radii.
///
/// cell_dim is the intrinsic dimension of the sampled set at each node (n - 1 for
/// discs and boundary layers, n for volume layers); it only feeds cell_measure().
struct PointCloud {
  int dim = 3;
  PointMatrix points;
  std::vector<double> cell_radius;
  std::vector<Plate> plate;
  std::vector<int> cell_dim;
  std::vector<int> part;  // connected piece of the plate (disc, boundary layer); cells never span two
  std::uint64_t seed = 0;

  std::size_t size() const { return cell_radius.size(); }
  Point point(std::size_t i) const { return points.row(static_cast<Eigen::Index>(i)).transpose(); }
  std::size_t count(Plate p) const;
  std::vector<std::size_t> indices(Plate p) const;

  /// Measure of the cell around node i: the cell of a hexagonal (2-d) or face-centred
  /// cubic (3-d) packing with nearest-neighbour distance 2 * cell_radius[i].
  double cell_measure(std::size_t i) const;

  /// Nodes of `a` followed by nodes of `b`; cell radii are kept as computed per plate.
  static PointCloud concat(const PointCloud& a, const PointCloud& b);
  PointCloud subset(const std::vector<std::size_t>& idx) const;
};

PointCloud discretize(const Domain& domain, const PlateSpec& spec);

/// Mirror image across the boundary plane of a HalfSpace. Throws UnsupportedDomain for Ball.
Point reflect_across_boundary(const Domain& domain, const Point& p);

/// Kelvin image of p in the sphere bounding a Ball domain.
Point kelvin_image(const Domain& ball, const Point& p);

/// Sets cell_radius[i] to half the distance to the nearest node of the same plate and part
/// (the same plate if the part has one node), clamped below by 1e-9.
void assign_cell_radii(PointCloud& cloud);

/// Largest pairwise distance among the given points (O(N^2)).
double diameter(const PointCloud& cloud);

/// Measure (area or volume) of a built-in plate shape, used for tiling checks.
double plate_measure(const Domain& domain, const PlateSpec& spec);

std::string describe(const Domain& domain);

}  // namespace condenser
