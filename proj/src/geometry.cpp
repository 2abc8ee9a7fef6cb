#include "condenser/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "condenser/error.hpp"

namespace condenser {

namespace {

constexpr double kPi = std::numbers::pi;
const double kGoldenAngle = kPi * (3.0 - std::sqrt(5.0));
constexpr double kInvPhi = 0.6180339887498949;

double frac(double x) { return x - std::floor(x); }

// Rotation derived from the seed; seed 0 gives the canonical lattice.
double seed_rotation(std::uint64_t seed, int salt) {
  return 2.0 * kPi * frac(static_cast<double>(seed % 1000003ULL) * kInvPhi + salt * 0.7548776662466927);
}

double radical_inverse(std::uint64_t k, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv;
  double r = 0;
  while (k > 0) {
    r += f * static_cast<double>(k % base);
    k /= base;
    f *= inv;
  }
  return r;
}

constexpr std::uint64_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

// Acklam's rational approximation of the standard normal quantile.
double normal_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01, -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  p = std::clamp(p, 1e-12, 1.0 - 1e-12);
  const double plow = 0.02425;
  if (p < plow) {
    double q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > 1 - plow) {
    double q = std::sqrt(-2 * std::log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

// Quasi-uniform direction on S^{m-1} from Halton coordinates starting at prime index `first`.
Eigen::VectorXd halton_direction(std::uint64_t k, int m, int first) {
  Eigen::VectorXd v(m);
  for (int j = 0; j < m; ++j) v[j] = normal_quantile(radical_inverse(k, kPrimes[first + j]));
  double nrm = v.norm();
  if (nrm < 1e-12) {
    v.setZero();
    v[0] = 1;
    return v;
  }
  return v / nrm;
}

// Split `total` into integer parts proportional to `weights`, each part >= min_each.
std::vector<int> apportion(int total, const std::vector<double>& weights, int min_each) {
  const std::size_t k = weights.size();
  std::vector<int> out(k, min_each);
  int remaining = total - min_each * static_cast<int>(k);
  if (remaining < 0) throw Error(ErrorCode::InfeasibleSpec, "too few nodes for the requested parts");
  double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::pair<double, std::size_t>> rema;
  int assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    double share = wsum > 0 ? remaining * weights[i] / wsum : 0.0;
    int whole = static_cast<int>(std::floor(share));
    out[i] += whole;
    assigned += whole;
    rema.emplace_back(share - whole, i);
  }
  std::stable_sort(rema.begin(), rema.end(), [](auto& a, auto& b) { return a.first > b.first; });
  for (int r = 0; r < remaining - assigned; ++r) out[rema[static_cast<std::size_t>(r) % k].second] += 1;
  return out;
}

// Radius quantile for a disc of dimension m that is uniform inside `core` and graded
// (local spacing proportional to radius) outside it, truncated at `outer`.
double graded_radius(double u, int m, double core, double outer) {
  if (outer <= core) return outer * std::pow(u, 1.0 / m);
  double inner_mass = 1.0 / m;
  double total = inner_mass + std::log(outer / core);
  double t = u * total;
  if (t <= inner_mass) return core * std::pow(t * m, 1.0 / m);
  return core * std::exp(t - inner_mass);
}

// Points of an m-dimensional disc (m = dim - 1) written into the coordinates 1..m of rows.
void fill_disc(PointMatrix& out, Eigen::Index row0, int count, double x1, const Point& lateral_center, double core,
               double outer, std::uint64_t seed, int salt) {
  const int dim = static_cast<int>(lateral_center.size());
  const int m = dim - 1;
  const double rot = seed_rotation(seed, salt);
  for (int k = 0; k < count; ++k) {
    Eigen::Index r = row0 + k;
    out.row(r) = lateral_center.transpose();
    out(r, 0) = x1;
    if (m == 2) {
      double rho = graded_radius((k + 0.5) / count, 2, core, outer);
      double phi = k * kGoldenAngle + rot;
      out(r, 1) += rho * std::cos(phi);
      out(r, 2) += rho * std::sin(phi);
    } else {
      std::uint64_t idx = static_cast<std::uint64_t>(k) + 1 + seed % 4096;
      double rho = graded_radius(frac(radical_inverse(idx, 2) + rot / (2 * kPi)), m, core, outer);
      Eigen::VectorXd dir = halton_direction(idx, m, 1);
      for (int j = 0; j < m; ++j) out(r, 1 + j) += rho * dir[j];
    }
  }
}

// The `count` hexagonal-lattice points nearest the disc centre (n = 3), spacing chosen so
// that their cells cover the disc area. The seed shifts and rotates the lattice.
void fill_hex_disc(PointMatrix& out, Eigen::Index row0, int count, double x1, const Point& lateral_center,
                   double radius, std::uint64_t seed, int salt) {
  const double h = std::sqrt(2.0 * kPi * radius * radius / (std::sqrt(3.0) * count));
  const double rot = seed == 0 ? 0.0 : seed_rotation(seed, salt);
  const double ou = seed == 0 ? 0.0 : frac(seed * kInvPhi) - 0.5;
  const double ov = seed == 0 ? 0.0 : frac(seed * kInvPhi * kInvPhi) - 0.5;
  const int span = static_cast<int>(std::ceil(radius / h * 1.3)) + 3;
  struct Cand {
    double r, phi, u, v;
  };
  std::vector<Cand> cand;
  for (int j = -span; j <= span; ++j)
    for (int i = -2 * span; i <= 2 * span; ++i) {
      double a = (i + ou + 0.5 * (j + ov)) * h;
      double b = (j + ov) * std::sqrt(3.0) / 2.0 * h;
      double u = a * std::cos(rot) - b * std::sin(rot);
      double v = a * std::sin(rot) + b * std::cos(rot);
      double r = std::hypot(u, v);
      if (r <= radius * 1.2 + 2 * h) cand.push_back({r, std::atan2(v, u), u, v});
    }
  std::sort(cand.begin(), cand.end(), [](const Cand& a, const Cand& b) {
    if (a.r != b.r) return a.r < b.r;
    return a.phi < b.phi;
  });
  if (static_cast<int>(cand.size()) < count) throw Error(ErrorCode::InfeasibleSpec, "lattice too small for disc");
  for (int k = 0; k < count; ++k) {
    Eigen::Index r = row0 + k;
    out.row(r) = lateral_center.transpose();
    out(r, 0) = x1;
    out(r, 1) += cand[static_cast<std::size_t>(k)].u;
    out(r, 2) += cand[static_cast<std::size_t>(k)].v;
  }
}

// The `count` face-centred cubic lattice points nearest the centre, spacing chosen so their
// cells fill the inner part of the ball.
void fill_fcc_ball(PointMatrix& out, int count, const Point& c, double radius, std::uint64_t seed) {
  // Nearest-neighbour distance h such that count cells fill the ball of radius radius - h/2,
  // which keeps every node at least one cell radius inside.
  const double kappa = std::cbrt(4.0 / 3.0 * kPi * std::sqrt(2.0) / count);
  const double h = radius * kappa / (1.0 + 0.5 * kappa);
  const double a = h * std::sqrt(2.0);                        // cube edge
  Eigen::Vector3d off = Eigen::Vector3d::Zero();
  if (seed != 0) off << frac(seed * kInvPhi) - 0.5, frac(seed * kInvPhi * kInvPhi) - 0.5, frac(seed * 0.7548776662466927) - 0.5;
  off *= 0.5 * a;
  const int span = static_cast<int>(std::ceil(radius / a * 1.3)) + 2;
  const double basis[4][3] = {{0, 0, 0}, {0.5, 0.5, 0}, {0.5, 0, 0.5}, {0, 0.5, 0.5}};
  std::vector<std::pair<double, Eigen::Vector3d>> cand;
  for (int i = -span; i <= span; ++i)
    for (int j = -span; j <= span; ++j)
      for (int k = -span; k <= span; ++k)
        for (const auto& b : basis) {
          Eigen::Vector3d p((i + b[0]) * a, (j + b[1]) * a, (k + b[2]) * a);
          p += off;
          double r = p.norm();
          if (r <= radius * 1.2 + 2 * h) cand.emplace_back(r, p);
        }
  std::sort(cand.begin(), cand.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first < y.first;
    for (int d = 0; d < 3; ++d)
      if (x.second[d] != y.second[d]) return x.second[d] < y.second[d];
    return false;
  });
  if (static_cast<int>(cand.size()) < count) throw Error(ErrorCode::InfeasibleSpec, "lattice too small for ball");
  for (int k = 0; k < count; ++k) out.row(k) = (c + cand[static_cast<std::size_t>(k)].second).transpose();
}

// Quasi-uniform points on the sphere |x - c| = radius.
void fill_sphere(PointMatrix& out, Eigen::Index row0, int count, const Point& c, double radius, std::uint64_t seed,
                 int salt) {
  const int dim = static_cast<int>(c.size());
  const double rot = seed_rotation(seed, salt);
  for (int k = 0; k < count; ++k) {
    Eigen::Index r = row0 + k;
    Eigen::VectorXd dir(dim);
    if (dim == 3) {
      double z = 1.0 - (2.0 * k + 1.0) / count;
      double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      double phi = k * kGoldenAngle + rot;
      dir << s * std::cos(phi), s * std::sin(phi), z;
    } else {
      dir = halton_direction(static_cast<std::uint64_t>(k) + 1 + seed % 4096 + static_cast<std::uint64_t>(salt) * 7919,
                             dim, 0);
    }
    out.row(r) = (c + radius * dir).transpose();
  }
}

void push_outside_sphere(PointMatrix& pts, Eigen::Index r, const Point& c, double radius) {
  Eigen::VectorXd off = pts.row(r).transpose() - c;
  double scale = 1.0;
  for (int guard = 0; guard < 200 && (c + off * scale - c).norm() < radius; ++guard)
    scale = (guard == 0 ? radius / off.norm() : scale * (1.0 + 0x1p-50));
  pts.row(r) = (c + off * scale).transpose();
}

Point reference_point(const Domain& d) {
  if (d.kind == DomainKind::Ball) return d.center;
  return Point::Zero(d.dim);
}

double ball_volume(int m, double r) {
  return std::pow(kPi, m / 2.0) / std::tgamma(m / 2.0 + 1.0) * std::pow(r, m);
}

double sphere_area(int n, double r) {
  return 2.0 * std::pow(kPi, n / 2.0) / std::tgamma(n / 2.0) * std::pow(r, n - 1);
}

PointCloud make_cloud(int dim, std::size_t count, Plate plate, std::uint64_t seed) {
  PointCloud c;
  c.dim = dim;
  c.points.resize(static_cast<Eigen::Index>(count), dim);
  c.cell_radius.assign(count, 0.0);
  c.plate.assign(count, plate);
  c.cell_dim.assign(count, dim);
  c.part.assign(count, 0);
  c.seed = seed;
  return c;
}

PointCloud discretize_discs(const Domain& domain, const PlateSpec& spec, const DiscStack& stack) {
  if (stack.discs.empty()) throw Error(ErrorCode::InfeasibleSpec, "disc stack is empty");
  const int m = domain.dim - 1;
  std::vector<double> area;
  std::vector<std::size_t> implicit;
  int explicit_sum = 0;
  for (std::size_t i = 0; i < stack.discs.size(); ++i) {
    const Disc& d = stack.discs[i];
    if (!(d.radius > 0)) throw Error(ErrorCode::InfeasibleSpec, "disc radius must be positive");
    if (d.nodes > 0) {
      explicit_sum += d.nodes;
    } else {
      implicit.push_back(i);
      area.push_back(std::pow(d.radius, m));
    }
  }
  std::vector<int> counts(stack.discs.size(), 0);
  for (std::size_t i = 0; i < stack.discs.size(); ++i) counts[i] = stack.discs[i].nodes;
  if (!implicit.empty()) {
    auto parts = apportion(spec.node_count - explicit_sum, area, 1);
    for (std::size_t j = 0; j < implicit.size(); ++j) counts[implicit[j]] = parts[j];
  } else if (spec.node_count != 0 && spec.node_count != explicit_sum) {
    throw Error(ErrorCode::InfeasibleSpec, "node_count disagrees with explicit per-disc node counts");
  }
  std::size_t total = 0;
  for (int c : counts) total += static_cast<std::size_t>(c);

  PointCloud cloud = make_cloud(domain.dim, total, spec.which, spec.seed);
  std::fill(cloud.cell_dim.begin(), cloud.cell_dim.end(), m);
  Point ref = reference_point(domain);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < stack.discs.size(); ++i) {
    const Disc& d = stack.discs[i];
    std::fill(cloud.part.begin() + row, cloud.part.begin() + row + counts[i], static_cast<int>(i));
    if (m == 2)
      fill_hex_disc(cloud.points, row, counts[i], ref[0] + d.offset, ref, d.radius, spec.seed, static_cast<int>(i));
    else
      fill_disc(cloud.points, row, counts[i], ref[0] + d.offset, ref, d.radius, d.radius, spec.seed,
                static_cast<int>(i));
    row += counts[i];
  }
  return cloud;
}

PointCloud discretize_ball_interior(const Domain& domain, const PlateSpec& spec) {
  if (domain.kind != DomainKind::Ball)
    throw Error(ErrorCode::InfeasibleSpec, "BallInterior requires a Ball domain");
  const double a = domain.radius - spec.boundary_margin;
  if (!(a > 0)) throw Error(ErrorCode::InfeasibleSpec, "boundary margin excludes the whole ball");
  const int n = domain.dim;
  const int N = spec.node_count;
  PointCloud cloud = make_cloud(n, static_cast<std::size_t>(N), spec.which, spec.seed);
  if (n == 3) {
    fill_fcc_ball(cloud.points, N, domain.center, a, spec.seed);
    double far = 0;
    for (int k = 0; k < N; ++k) far = std::max(far, (cloud.points.row(k).transpose() - domain.center).norm());
    const double kappa = std::cbrt(4.0 / 3.0 * kPi * std::sqrt(2.0) / N);
    const double limit = a * (1.0 - 0.5 * kappa / (1.0 + 0.5 * kappa));
    if (far > limit)
      for (int k = 0; k < N; ++k)
        cloud.points.row(k) = (domain.center + (cloud.points.row(k).transpose() - domain.center) * (limit / far)).transpose();
  } else {
    for (int k = 0; k < N; ++k) {
      std::uint64_t idx = static_cast<std::uint64_t>(k) + 1 + spec.seed % 4096;
      double rho = a * std::pow(radical_inverse(idx, 2), 1.0 / n);
      Eigen::VectorXd dir = halton_direction(idx, n, 1);
      cloud.points.row(k) = (domain.center + rho * dir).transpose();
    }
  }
  return cloud;
}

PointCloud discretize_shell(const Domain& domain, const PlateSpec& spec, const AnnulusOnBoundary& shell) {
  const int n = domain.dim;
  const int N = spec.node_count;
  const bool newtonian = domain.alpha == 2.0;
  const int layers = shell.layers > 0 ? shell.layers : (newtonian ? 4 : 8);
  const double bf = shell.boundary_fraction > 0 ? shell.boundary_fraction : (newtonian ? 0.7 : 0.3);
  const double growth = shell.layer_growth > 0 ? shell.layer_growth : 2.0;
  if (layers < 1) throw Error(ErrorCode::InfeasibleSpec, "shell needs at least one layer");
  if (!(bf > 0 && bf <= 1)) throw Error(ErrorCode::InfeasibleSpec, "boundary_fraction must lie in (0, 1]");

  const double inner = domain.kind == DomainKind::Ball
                           ? (shell.inner_radius > 0 ? shell.inner_radius : domain.radius)
                           : shell.inner_radius;
  if (domain.kind == DomainKind::Ball && inner < domain.radius)
    throw Error(ErrorCode::InfeasibleSpec, "shell inner radius lies inside the ball");
  const double outer = shell.outer_radius;
  if (!(outer > inner)) throw Error(ErrorCode::InfeasibleSpec, "shell outer radius must exceed the inner radius");

  // Depths of layers below the boundary: 0, then geometric up to the truncation.
  std::vector<double> depth{0.0};
  const double span = domain.kind == DomainKind::Ball ? outer - inner : outer * 0.9;
  if (layers > 1) {
    double first = span / std::pow(growth, layers - 2);
    for (int k = 1; k < layers; ++k) depth.push_back(first * std::pow(growth, k - 1));
  }
  const double core = shell.core_radius > 0 ? shell.core_radius : outer / 8.0;
  auto lateral_radius = [&](double t) { return std::sqrt(std::max(outer * outer - t * t, 0.0)); };
  auto graded_count = [&](double rad) {
    if (rad <= core) return std::pow(rad, n - 1) / (n - 1);
    return std::pow(core, n - 1) * (1.0 / (n - 1) + std::log(rad / core));
  };

  std::vector<int> counts(static_cast<std::size_t>(layers), 0);
  int boundary_nodes = layers == 1 ? N : std::max(1, static_cast<int>(std::lround(bf * N)));
  counts[0] = boundary_nodes;
  if (layers > 1) {
    std::vector<double> w;
    for (int k = 1; k < layers; ++k) {
      double lo = depth[static_cast<std::size_t>(k - 1)];
      double hi = k + 1 < layers ? depth[static_cast<std::size_t>(k + 1)] : depth[static_cast<std::size_t>(k)];
      double thickness = 0.5 * (hi - lo);
      double t = depth[static_cast<std::size_t>(k)];
      double size = domain.kind == DomainKind::Ball ? std::pow(inner + t, n - 1) : graded_count(lateral_radius(t));
      // In-layer spacing comparable to the layer gap: count ~ size / thickness^(n-1).
      w.push_back(size / std::pow(thickness, n - 1));
    }
    auto parts = apportion(N - boundary_nodes, w, 1);
    for (int k = 1; k < layers; ++k) counts[static_cast<std::size_t>(k)] = parts[static_cast<std::size_t>(k - 1)];
  }

  PointCloud cloud = make_cloud(n, static_cast<std::size_t>(N), spec.which, spec.seed);
  Eigen::Index row = 0;
  for (int k = 0; k < layers; ++k) {
    const int cnt = counts[static_cast<std::size_t>(k)];
    const double t = depth[static_cast<std::size_t>(k)];
    if (domain.kind == DomainKind::Ball) {
      fill_sphere(cloud.points, row, cnt, domain.center, inner + t, spec.seed, 101 + k);
      for (int j = 0; j < cnt; ++j) push_outside_sphere(cloud.points, row + j, domain.center, domain.radius);
    } else {
      Point lateral = Point::Zero(n);
      double rad = lateral_radius(t);
      fill_disc(cloud.points, row, cnt, -t, lateral, std::min(core, rad), rad, spec.seed, 101 + k);
    }
    for (int j = 0; j < cnt; ++j) {
      cloud.cell_dim[static_cast<std::size_t>(row + j)] = k == 0 ? n - 1 : n;
      cloud.part[static_cast<std::size_t>(row + j)] = k == 0 ? 0 : 1;
    }
    row += cnt;
  }
  return cloud;
}

void check_membership(const Domain& domain, const PlateSpec& spec, const PointCloud& cloud) {
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    Point x = cloud.point(i);
    if (spec.which == Plate::A1) {
      if (!domain.contains(x))
        throw Error(ErrorCode::InfeasibleSpec, "positive plate node " + std::to_string(i) + " lies outside the domain");
      if (spec.boundary_margin > 0 && domain.boundary_distance(x) < spec.boundary_margin * (1 - 1e-12))
        throw Error(ErrorCode::InfeasibleSpec,
                    "positive plate node " + std::to_string(i) + " violates the boundary margin");
    } else if (!domain.in_complement(x)) {
      throw Error(ErrorCode::InfeasibleSpec, "negative plate node " + std::to_string(i) + " lies inside the domain");
    }
  }
}

}  // namespace

Domain Domain::half_space(int dim, double alpha) {
  Domain d;
  d.kind = DomainKind::HalfSpace;
  d.dim = dim;
  d.alpha = alpha;
  d.center = Point::Zero(dim);
  d.validate();
  return d;
}

Domain Domain::ball(const Point& center, double radius, double alpha) {
  Domain d;
  d.kind = DomainKind::Ball;
  d.dim = static_cast<int>(center.size());
  d.alpha = alpha;
  d.center = center;
  d.radius = radius;
  d.validate();
  return d;
}

void Domain::validate() const {
  if (dim < 3) throw Error(ErrorCode::DimensionMismatch, "dimension must be at least 3");
  if (!(alpha > 0 && alpha <= 2)) throw Error(ErrorCode::InfeasibleSpec, "alpha must lie in (0, 2]");
  if (kind == DomainKind::Ball) {
    if (center.size() != dim) throw Error(ErrorCode::DimensionMismatch, "ball centre has wrong dimension");
    if (!(radius > 0)) throw Error(ErrorCode::InfeasibleSpec, "ball radius must be positive");
  }
}

bool Domain::contains(const Point& x) const {
  if (kind == DomainKind::HalfSpace) return x[0] > 0;
  return (x - center).norm() < radius;
}

bool Domain::in_complement(const Point& x) const { return !contains(x); }

double Domain::signed_depth(const Point& x) const {
  if (kind == DomainKind::HalfSpace) return x[0];
  return radius - (x - center).norm();
}

double Domain::boundary_distance(const Point& x) const { return std::abs(signed_depth(x)); }

std::size_t PointCloud::count(Plate p) const { return static_cast<std::size_t>(std::count(plate.begin(), plate.end(), p)); }

std::vector<std::size_t> PointCloud::indices(Plate p) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < plate.size(); ++i)
    if (plate[i] == p) out.push_back(i);
  return out;
}

double PointCloud::cell_measure(std::size_t i) const {
  const double d = 2.0 * cell_radius[i];
  switch (cell_dim[i]) {
    case 2: return std::sqrt(3.0) / 2.0 * d * d;
    case 3: return d * d * d / std::sqrt(2.0);
    default: return std::pow(d, cell_dim[i]);
  }
}

PointCloud PointCloud::concat(const PointCloud& a, const PointCloud& b) {
  if (a.dim != b.dim) throw Error(ErrorCode::DimensionMismatch, "cannot join clouds of different dimension");
  PointCloud c;
  c.dim = a.dim;
  c.seed = a.seed;
  c.points.resize(static_cast<Eigen::Index>(a.size() + b.size()), a.dim);
  if (a.size() > 0) c.points.topRows(static_cast<Eigen::Index>(a.size())) = a.points;
  if (b.size() > 0) c.points.bottomRows(static_cast<Eigen::Index>(b.size())) = b.points;
  c.cell_radius = a.cell_radius;
  c.cell_radius.insert(c.cell_radius.end(), b.cell_radius.begin(), b.cell_radius.end());
  c.plate = a.plate;
  c.plate.insert(c.plate.end(), b.plate.begin(), b.plate.end());
  c.cell_dim = a.cell_dim;
  c.cell_dim.insert(c.cell_dim.end(), b.cell_dim.begin(), b.cell_dim.end());
  const int shift = a.part.empty() ? 0 : *std::max_element(a.part.begin(), a.part.end()) + 1;
  c.part = a.part;
  for (int q : b.part) c.part.push_back(q + shift);
  return c;
}

PointCloud PointCloud::subset(const std::vector<std::size_t>& idx) const {
  PointCloud c;
  c.dim = dim;
  c.seed = seed;
  c.points.resize(static_cast<Eigen::Index>(idx.size()), dim);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    c.points.row(static_cast<Eigen::Index>(k)) = points.row(static_cast<Eigen::Index>(idx[k]));
    c.cell_radius.push_back(cell_radius[idx[k]]);
    c.plate.push_back(plate[idx[k]]);
    c.cell_dim.push_back(cell_dim[idx[k]]);
    c.part.push_back(part[idx[k]]);
  }
  return c;
}

void assign_cell_radii(PointCloud& cloud) {
  const std::size_t N = cloud.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> same(N, inf), plate(N, inf);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = i + 1; j < N; ++j) {
      if (cloud.plate[i] != cloud.plate[j]) continue;
      double d2 = (cloud.points.row(static_cast<Eigen::Index>(i)) - cloud.points.row(static_cast<Eigen::Index>(j)))
                      .squaredNorm();
      if (d2 == 0.0) throw Error(ErrorCode::SingularPair, "coincident nodes at index " + std::to_string(i));
      plate[i] = std::min(plate[i], d2);
      plate[j] = std::min(plate[j], d2);
      if (cloud.part[i] != cloud.part[j]) continue;
      same[i] = std::min(same[i], d2);
      same[j] = std::min(same[j], d2);
    }
  }
  for (std::size_t i = 0; i < N; ++i) {
    double d2 = std::isfinite(same[i]) ? same[i] : plate[i];
    double r = std::isfinite(d2) ? 0.5 * std::sqrt(d2) : 0.5;
    cloud.cell_radius[i] = std::max(r, 1e-9);
  }
}

PointCloud discretize(const Domain& domain, const PlateSpec& spec) {
  domain.validate();
  if (spec.boundary_margin < 0) throw Error(ErrorCode::InfeasibleSpec, "boundary margin must be nonnegative");
  PointCloud cloud;
  if (const auto* stack = std::get_if<DiscStack>(&spec.shape)) {
    if (spec.node_count <= 0 && std::all_of(stack->discs.begin(), stack->discs.end(), [](auto& d) { return d.nodes == 0; }))
      throw Error(ErrorCode::InfeasibleSpec, "node_count must be positive");
    cloud = discretize_discs(domain, spec, *stack);
  } else if (std::holds_alternative<BallInterior>(spec.shape)) {
    if (spec.node_count <= 0) throw Error(ErrorCode::InfeasibleSpec, "node_count must be positive");
    cloud = discretize_ball_interior(domain, spec);
  } else if (const auto* shell = std::get_if<AnnulusOnBoundary>(&spec.shape)) {
    if (spec.node_count <= 0) throw Error(ErrorCode::InfeasibleSpec, "node_count must be positive");
    cloud = discretize_shell(domain, spec, *shell);
  } else {
    const auto& custom = std::get<Custom>(spec.shape);
    if (custom.points.empty()) throw Error(ErrorCode::InfeasibleSpec, "custom plate has no points");
    cloud = make_cloud(domain.dim, custom.points.size(), spec.which, spec.seed);
    for (std::size_t i = 0; i < custom.points.size(); ++i) {
      if (custom.points[i].size() != domain.dim)
        throw Error(ErrorCode::DimensionMismatch, "custom point " + std::to_string(i) + " has wrong dimension");
      cloud.points.row(static_cast<Eigen::Index>(i)) = custom.points[i].transpose();
    }
  }
  check_membership(domain, spec, cloud);
  assign_cell_radii(cloud);
  return cloud;
}

Point reflect_across_boundary(const Domain& domain, const Point& p) {
  if (domain.kind != DomainKind::HalfSpace)
    throw Error(ErrorCode::UnsupportedDomain, "reflection is defined for half-spaces; balls use the Kelvin image");
  if (p.size() != domain.dim) throw Error(ErrorCode::DimensionMismatch, "point has wrong dimension");
  Point q = p;
  q[0] = -q[0];
  return q;
}

Point kelvin_image(const Domain& ball, const Point& p) {
  if (ball.kind != DomainKind::Ball) throw Error(ErrorCode::UnsupportedDomain, "Kelvin image needs a Ball domain");
  Point off = p - ball.center;
  double r2 = off.squaredNorm();
  if (r2 == 0) throw Error(ErrorCode::SingularPair, "the centre has no Kelvin image");
  return ball.center + off * (ball.radius * ball.radius / r2);
}

double diameter(const PointCloud& cloud) {
  double best = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    for (std::size_t j = i + 1; j < cloud.size(); ++j)
      best = std::max(best, (cloud.points.row(static_cast<Eigen::Index>(i)) -
                             cloud.points.row(static_cast<Eigen::Index>(j)))
                                .squaredNorm());
  return std::sqrt(best);
}

double plate_measure(const Domain& domain, const PlateSpec& spec) {
  if (const auto* stack = std::get_if<DiscStack>(&spec.shape)) {
    double s = 0;
    for (const auto& d : stack->discs) s += ball_volume(domain.dim - 1, d.radius);
    return s;
  }
  if (std::holds_alternative<BallInterior>(spec.shape))
    return ball_volume(domain.dim, domain.radius - spec.boundary_margin);
  if (const auto* shell = std::get_if<AnnulusOnBoundary>(&spec.shape)) {
    if (domain.kind == DomainKind::Ball) {
      double inner = shell->inner_radius > 0 ? shell->inner_radius : domain.radius;
      return ball_volume(domain.dim, shell->outer_radius) - ball_volume(domain.dim, inner);
    }
    return 0.5 * ball_volume(domain.dim, shell->outer_radius);
  }
  (void)sphere_area;
  return std::numeric_limits<double>::quiet_NaN();
}

std::string describe(const Domain& domain) {
  std::ostringstream os;
  if (domain.kind == DomainKind::HalfSpace) {
    os << "half-space x1>0 in R^" << domain.dim;
  } else {
    os << "ball r=" << domain.radius << " in R^" << domain.dim;
  }
  os << ", alpha=" << domain.alpha;
  return os.str();
}

}  // namespace condenser
