#include "condenser/kernels.hpp"

#include <cmath>
#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "condenser/error.hpp"

namespace condenser {

namespace {

void check_pair(const Point& x, const Point& y, int n) {
  if (x.size() != n || y.size() != n) throw Error(ErrorCode::DimensionMismatch, "point dimension differs from n");
}

}  // namespace

KernelKind KernelKind::riesz(double alpha, int dim) {
  KernelKind k;
  k.type = Type::Riesz;
  k.alpha = alpha;
  k.dim = dim;
  k.validate();
  return k;
}

KernelKind KernelKind::green(const Domain& domain) {
  KernelKind k;
  k.type = Type::Green;
  k.alpha = domain.alpha;
  k.dim = domain.dim;
  k.domain = domain;
  k.validate();
  return k;
}

void KernelKind::validate() const {
  if (dim < 3) throw Error(ErrorCode::DimensionMismatch, "kernels need n >= 3");
  if (type == Type::Riesz) {
    if (!(alpha > 0 && alpha < dim)) throw Error(ErrorCode::InfeasibleSpec, "Riesz kernel needs 0 < alpha < n");
  } else {
    if (!(alpha > 0 && alpha <= 2)) throw Error(ErrorCode::InfeasibleSpec, "Green kernel needs 0 < alpha <= 2");
    domain.validate();
  }
}

std::string KernelKind::descriptor() const {
  std::ostringstream os;
  if (type == Type::Riesz) {
    os << "riesz alpha=" << alpha << " n=" << dim;
  } else {
    os << "green " << (domain.kind == DomainKind::HalfSpace ? "half-space" : "ball") << " alpha=" << alpha
       << " n=" << dim;
    if (domain.kind == DomainKind::Ball) os << " r=" << domain.radius;
  }
  return os.str();
}

std::string DiagonalRule::descriptor() const {
  std::ostringstream os;
  os << "beta*cell_radius beta=" << beta;
  return os.str();
}

double riesz_of_distance(double r, double alpha, int n) {
  if (alpha == 2.0 && n == 3) return 1.0 / r;
  return std::pow(r, alpha - n);
}

double riesz_kernel(const Point& x, const Point& y, double alpha, int n) {
  check_pair(x, y, n);
  if (!(alpha > 0 && alpha < n)) throw Error(ErrorCode::InfeasibleSpec, "Riesz kernel needs 0 < alpha < n");
  double r = (x - y).norm();
  if (r == 0) throw Error(ErrorCode::SingularPair, "kernel evaluated at coincident points");
  return riesz_of_distance(r, alpha, n);
}

double boundary_excess(const Point& x, const Point& y, const Domain& domain) {
  if (domain.kind == DomainKind::HalfSpace) return 4.0 * x[0] * y[0];
  const double R2 = domain.radius * domain.radius;
  return (R2 - (x - domain.center).squaredNorm()) * (R2 - (y - domain.center).squaredNorm()) / R2;
}

double newtonian_green_of(double dist2, double excess, int n) {
  // d^(2-n) - (d^2 + e)^((2-n)/2) without cancellation when e << d^2.
  const double half = (2.0 - n) / 2.0;
  return -std::pow(dist2, half) * std::expm1(half * std::log1p(std::max(excess, 0.0) / dist2));
}

double newtonian_image_term(const Point& x, const Point& y, const Domain& domain) {
  return std::pow((x - y).squaredNorm() + boundary_excess(x, y, domain), (2.0 - domain.dim) / 2.0);
}

double green_kernel_halfspace(const Point& x, const Point& y, int n) {
  check_pair(x, y, n);
  if (!(x[0] > 0) || !(y[0] > 0)) throw Error(ErrorCode::OutsideDomain, "Green kernel needs points with x1 > 0");
  double r2 = (x - y).squaredNorm();
  if (r2 == 0) throw Error(ErrorCode::SingularPair, "kernel evaluated at coincident points");
  return newtonian_green_of(r2, 4.0 * x[0] * y[0], n);
}

double green_kernel_ball_newtonian(const Point& x, const Point& y, const Domain& ball) {
  if (ball.kind != DomainKind::Ball) throw Error(ErrorCode::UnsupportedDomain, "expected a Ball domain");
  check_pair(x, y, ball.dim);
  if (!ball.contains(x) || !ball.contains(y)) throw Error(ErrorCode::OutsideDomain, "points must lie inside the ball");
  double r2 = (x - y).squaredNorm();
  if (r2 == 0) throw Error(ErrorCode::SingularPair, "kernel evaluated at coincident points");
  return newtonian_green_of(r2, boundary_excess(x, y, ball), ball.dim);
}

KernelMatrix assemble(const KernelKind& kernel, std::shared_ptr<const PointCloud> cloud, const DiagonalRule& rule) {
  kernel.validate();
  if (!cloud || cloud->size() == 0) throw Error(ErrorCode::InfeasibleSpec, "cannot assemble over an empty cloud");
  if (cloud->dim != kernel.dim) throw Error(ErrorCode::DimensionMismatch, "cloud and kernel dimensions differ");
  if (!(rule.beta > 0)) throw Error(ErrorCode::InfeasibleSpec, "diagonal beta must be positive");
  const bool green = kernel.type == KernelKind::Type::Green;
  if (green && kernel.alpha != 2.0)
    throw Error(ErrorCode::UnsupportedDomain, "closed-form Green kernels exist for alpha = 2 only");
  if (green) {
    for (std::size_t i = 0; i < cloud->size(); ++i)
      if (!kernel.domain.contains(cloud->point(i)))
        throw Error(ErrorCode::OutsideDomain, "Green matrix node " + std::to_string(i) + " lies outside the domain");
  }
  const auto N = static_cast<Eigen::Index>(cloud->size());
  const double alpha = kernel.alpha;
  const int n = kernel.dim;
  KernelMatrix K;
  K.kind = kernel;
  K.diagonal_rule = rule;
  K.cloud = cloud;
  K.values.resize(N, N);
  const PointMatrix& P = cloud->points;
  Eigen::Index bad = -1;
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      double r = (P.row(i) - P.row(j)).norm();
      if (r == 0) {
#pragma omp critical
        bad = i;
        r = 1;
      }
      double v = green ? newtonian_green_of(r * r, boundary_excess(P.row(i).transpose(), P.row(j).transpose(), kernel.domain), n)
                       : riesz_of_distance(r, alpha, n);
      K.values(i, j) = v;
    }
    const auto si = static_cast<std::size_t>(i);
    const double sep = rule.separation(cloud->cell_radius[si]);
    // The image of a cell sits 2 * depth away and is regularized like the cell itself.
    double d = green ? newtonian_green_of(sep * sep, boundary_excess(P.row(i).transpose(), P.row(i).transpose(), kernel.domain), n)
                     : riesz_of_distance(sep, alpha, n);
    K.values(i, i) = d;
  }
  if (bad >= 0) throw Error(ErrorCode::SingularPair, "node " + std::to_string(bad) + " coincides with another node");
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < i; ++j) K.values(j, i) = K.values(i, j);
  return K;
}

Eigen::MatrixXd riesz_block(const PointMatrix& x, const PointMatrix& z, double alpha) {
  if (x.cols() != z.cols()) throw Error(ErrorCode::DimensionMismatch, "point sets have different dimensions");
  const int n = static_cast<int>(x.cols());
  Eigen::MatrixXd B(x.rows(), z.rows());
  bool singular = false;
#pragma omp parallel for reduction(|| : singular)
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < z.rows(); ++j) {
      double r = (x.row(i) - z.row(j)).norm();
      if (r == 0) singular = true;
      B(i, j) = r == 0 ? 0.0 : riesz_of_distance(r, alpha, n);
    }
  if (singular) throw Error(ErrorCode::SingularPair, "point coincides with a node");
  return B;
}

bool KernelMatrix::is_positive_definite() const {
  Eigen::LLT<Eigen::MatrixXd> llt(values);
  return llt.info() == Eigen::Success;
}

void KernelMatrix::dump(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string desc = kind.descriptor() + "; " + diagonal_rule.descriptor();
  out.write("CKM1", 4);
  std::uint64_t count = static_cast<std::uint64_t>(values.rows());
  std::uint32_t len = static_cast<std::uint32_t>(desc.size());
  static_assert(std::endian::native == std::endian::little, "binary dump assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(desc.data(), static_cast<std::streamsize>(desc.size()));
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      double v = values(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace condenser
