#include "condenser/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "condenser/error.hpp"
#include "condenser/random.hpp"

namespace condenser {

namespace {

bool interior_a2(const Problem& p, std::size_t i) {
  return p.domain.boundary_distance(p.cloud->point(i)) > p.cloud->cell_radius[i];
}

// Probe ball: centred at the A1 centroid, radius twice the A1 extent (at least one unit).
void probe_region(const Problem& p, Point& centre, double& radius) {
  const PointCloud& a1 = *p.a1_cloud;
  centre = a1.points.colwise().mean().transpose();
  radius = 0;
  for (std::size_t i = 0; i < a1.size(); ++i) radius = std::max(radius, (a1.point(i) - centre).norm());
  radius = std::max(2.0 * radius, 1.0);
}

struct Nearest {
  std::size_t index = 0;
  double distance = std::numeric_limits<double>::infinity();
};

Nearest nearest_node(const PointCloud& cloud, const std::vector<std::size_t>& rows, const Point& x) {
  Nearest out;
  for (auto i : rows) {
    double d = (cloud.point(i) - x).norm();
    if (d < out.distance) {
      out.distance = d;
      out.index = i;
    }
  }
  return out;
}

}  // namespace

Eigen::VectorXd weighted_potential_at_nodes(const SignedDiscreteMeasure& lambda, const Problem& p) {
  require_same_cloud(lambda.cloud(), p.cloud, "weighted potential");
  return p.riesz->values * lambda.net() + p.field.values;
}

namespace {

// Quasi-uniform points of the unit d-ball (Halton, bases 2, 3, 5, ...), deterministic.
std::vector<Eigen::VectorXd> unit_ball_points(int d, int count) {
  static constexpr std::uint64_t bases[] = {2, 3, 5, 7, 11, 13, 17, 19};
  std::vector<Eigen::VectorXd> out;
  for (std::uint64_t k = 1; static_cast<int>(out.size()) < count; ++k) {
    Eigen::VectorXd v(d);
    for (int j = 0; j < d; ++j) {
      double f = 1, r = 0;
      for (std::uint64_t m = k; m > 0; m /= bases[j]) {
        f /= static_cast<double>(bases[j]);
        r += f * static_cast<double>(m % bases[j]);
      }
      v[j] = 2 * r - 1;
    }
    if (v.squaredNorm() <= 1) out.push_back(v);
  }
  return out;
}

// Orthonormal basis of the cell's own span: the hyperplane normal to e1 (discs, half-space
// boundary) or to the radius (sphere layer), or the whole space for volume cells.
Eigen::MatrixXd cell_basis(const Problem& p, std::size_t i) {
  const int n = p.cloud->dim;
  const int d = p.cloud->cell_dim[i];
  if (d >= n) return Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd normal = Eigen::VectorXd::Unit(n, 0);
  if (p.domain.kind == DomainKind::Ball && p.cloud->plate[i] == Plate::A2) {
    Eigen::VectorXd off = p.cloud->point(i) - p.domain.center;
    if (off.norm() > 0) normal = off.normalized();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(normal);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return Q.rightCols(n - 1);
}

}  // namespace

Eigen::VectorXd potential_at_points(const Eigen::VectorXd& weights, const Problem& p, const PointMatrix& x) {
  const PointCloud& cloud = *p.cloud;
  if (weights.size() != static_cast<Eigen::Index>(cloud.size()))
    throw Error(ErrorCode::DimensionMismatch, "weights differ in length from the cloud");
  if (x.cols() != cloud.dim) throw Error(ErrorCode::DimensionMismatch, "probe dimension differs from the cloud");
  const double alpha = p.domain.alpha;
  const int n = p.domain.dim;
  constexpr int kSub = 32;
  std::vector<std::vector<Eigen::VectorXd>> unit(static_cast<std::size_t>(n + 1));
  // Each charged node becomes kSub equal sub-masses spread over a ball of its cell's measure.
  std::vector<Eigen::VectorXd> sub;
  std::vector<double> sub_w, sub_floor;
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    double w = weights[static_cast<Eigen::Index>(j)];
    if (w == 0) continue;
    const int d = cloud.cell_dim[j];
    if (unit[static_cast<std::size_t>(d)].empty()) unit[static_cast<std::size_t>(d)] = unit_ball_points(d, kSub);
    const double unit_ball = std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
    const double rho = std::pow(cloud.cell_measure(j) / unit_ball, 1.0 / d);
    const double floor = p.rule.separation(cloud.cell_radius[j]) / std::pow(static_cast<double>(kSub), 1.0 / d);
    Eigen::MatrixXd B = cell_basis(p, j);
    Eigen::VectorXd y = cloud.point(j);
    for (const auto& u : unit[static_cast<std::size_t>(d)]) {
      sub.push_back(y + rho * (B * u));
      sub_w.push_back(w / kSub);
      sub_floor.push_back(floor);
    }
  }
  Eigen::VectorXd out(x.rows());
#pragma omp parallel for schedule(static)
  for (Eigen::Index k = 0; k < x.rows(); ++k) {
    Eigen::VectorXd xk = x.row(k).transpose();
    double s = 0;
    for (std::size_t m = 0; m < sub.size(); ++m) {
      double r = std::max((sub[m] - xk).norm(), sub_floor[m]);
      s += sub_w[m] * riesz_of_distance(r, alpha, n);
    }
    out[k] = s;
  }
  return out;
}

double weighted_median(const std::vector<double>& values, const std::vector<double>& weights) {
  if (values.size() != weights.size() || values.empty())
    throw Error(ErrorCode::DimensionMismatch, "weighted median needs matching nonempty inputs");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0)) throw Error(ErrorCode::InfeasibleSpec, "weighted median needs positive total weight");
  double acc = 0;
  for (auto i : order) {
    acc += weights[i];
    if (acc >= 0.5 * total) return values[i];
  }
  return values[order.back()];
}

FrostmanReport frostman_diagnostics(const Solution& sol, const Problem& p, double threshold) {
  return frostman_diagnostics(sol.lambda, p, threshold);
}

FrostmanReport frostman_diagnostics(const SignedDiscreteMeasure& lambda, const Problem& p, double threshold) {
  FrostmanReport r;
  r.threshold = threshold;
  const Eigen::VectorXd W = weighted_potential_at_nodes(lambda, p);
  const Eigen::VectorXd& plus = lambda.plus.weights;
  const Eigen::VectorXd& minus = lambda.minus.weights;
  const Eigen::VectorXd& xi = p.xi.xi.weights;

  std::vector<double> vals, wts;
  for (auto i : p.a1_rows) {
    auto k = static_cast<Eigen::Index>(i);
    double slack = xi[k] - plus[k];
    if (slack > 1e-10) {
      vals.push_back(W[k]);
      wts.push_back(slack);
    }
  }
  if (vals.empty()) {
    // Constraint saturated everywhere: fall back to the lambda+-weighted median.
    for (auto i : p.a1_rows) {
      vals.push_back(W[static_cast<Eigen::Index>(i)]);
      wts.push_back(plus[static_cast<Eigen::Index>(i)]);
    }
  }
  r.c = weighted_median(vals, wts);
  const double scale = std::abs(r.c) > 0 ? std::abs(r.c) : 1.0;

  double b1 = 0, b1_mass = 0, b2 = 0, b2_mass = 0;
  for (auto i : p.a1_rows) {
    auto k = static_cast<Eigen::Index>(i);
    double slack = std::max(xi[k] - plus[k], 0.0);
    b1 += slack * std::max(r.c - W[k], 0.0);
    b1_mass += slack;
    b2 += plus[k] * std::max(W[k] - r.c, 0.0);
    b2_mass += plus[k];
  }
  r.maxviol_b1 = b1_mass > 0 ? b1 / (b1_mass * scale) : 0.0;
  r.maxviol_b2 = b2_mass > 0 ? b2 / (b2_mass * scale) : 0.0;

  double a2 = 0, a2_mass = 0;
  for (auto i : p.a2_rows) {
    if (!interior_a2(p, i)) {
      ++r.a2_excluded;
      continue;
    }
    ++r.a2_checked;
    auto k = static_cast<Eigen::Index>(i);
    a2 += minus[k] * std::abs(W[k]);
    a2_mass += minus[k];
    r.max_abs_a2 = std::max(r.max_abs_a2, std::abs(W[k]) / scale);
  }
  r.maxviol_a2 = a2_mass > 0 ? a2 / (a2_mass * scale) : 0.0;
  r.pass = r.c > 0 && r.maxviol_b1 <= threshold && r.maxviol_b2 <= threshold && r.max_abs_a2 <= threshold;
  return r;
}

SignedDiscreteMeasure perturb_solution(const Solution& sol, const Problem& p, double fraction) {
  if (!(fraction > 0 && fraction < 1)) throw Error(ErrorCode::InfeasibleSpec, "perturbation fraction must lie in (0, 1)");
  Eigen::VectorXd plus = sol.lambda.plus.weights;
  const Eigen::VectorXd& xi = p.xi.xi.weights;
  const double mass = sol.lambda.plus.mass();
  const int n = p.domain.dim;

  // Axis of largest lambda+-weighted spread.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n), var = Eigen::VectorXd::Zero(n);
  for (auto i : p.a1_rows) mean += plus[static_cast<Eigen::Index>(i)] * p.cloud->point(i);
  mean /= mass;
  for (auto i : p.a1_rows) var += plus[static_cast<Eigen::Index>(i)] * (p.cloud->point(i) - mean).cwiseAbs2();
  Eigen::Index axis = 0;
  var.maxCoeff(&axis);

  std::vector<std::size_t> order = p.a1_rows;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p.cloud->point(a)[axis] < p.cloud->point(b)[axis]; });

  // Donors: the low end holding 1.25 times the moved mass gives up 80% of its weight.
  const double moved = fraction * mass;
  double pool = 0;
  std::size_t cut = 0;
  while (cut < order.size() && pool < 1.25 * moved) pool += plus[static_cast<Eigen::Index>(order[cut++])];
  const double keep = 1.0 - moved / pool;
  for (std::size_t t = 0; t < cut; ++t) plus[static_cast<Eigen::Index>(order[t])] *= keep;

  // Recipients: slack at the high end, filled outward in.
  double left = moved;
  for (auto it = order.rbegin(); it != order.rend() && left > 0; ++it) {
    auto k = static_cast<Eigen::Index>(*it);
    double add = std::min(std::max(xi[k] - plus[k], 0.0), left);
    plus[k] += add;
    left -= add;
  }
  if (left > 1e-12 * mass) throw Error(ErrorCode::InfeasibleSpec, "no slack left to receive the perturbed mass");
  DiscreteMeasure mp(p.cloud, plus);
  return SignedDiscreteMeasure(mp, p.sweeper->sweep(mp));
}

ZoneReport zone_diagnostics(const Solution& sol, const Problem& p, const ZoneOptions& opt) {
  if (!p.field.is_zero()) throw Error(ErrorCode::WrongField, "zone diagnostics require a zero external field");
  ZoneReport r;
  FrostmanReport fr = frostman_diagnostics(sol, p);
  r.c = fr.c;
  const double c = r.c;

  // (i) Riesz potential of lambda against the Green potential of lambda+ at the A1 nodes.
  Eigen::VectorXd U = p.riesz->values * sol.lambda.net();
  Eigen::VectorXd Ug = p.green->values * p.restrict_a1(sol.lambda.plus.weights);
  for (std::size_t a = 0; a < p.a1_rows.size(); ++a)
    r.riesz_green_gap =
        std::max(r.riesz_green_gap, std::abs(U[static_cast<Eigen::Index>(p.a1_rows[a])] - Ug[static_cast<Eigen::Index>(a)]) / c);

  // (ii), (iv) and the A2 bound over random probes.
  Point centre;
  double radius = 0;
  probe_region(p, centre, radius);
  const int n = p.domain.dim;
  PointMatrix probes(opt.probes, n);
  Rng rng(opt.seed);
  for (int k = 0; k < opt.probes; ++k) {
    Eigen::VectorXd v(n);
    do {
      for (int d = 0; d < n; ++d) v[d] = rng.uniform(-1.0, 1.0);
    } while (v.squaredNorm() > 1.0);
    probes.row(k) = (centre + radius * v).transpose();
  }
  Eigen::VectorXd Up = potential_at_points(sol.lambda.net(), p, probes);

  std::vector<std::size_t> xi_support;
  for (auto i : p.a1_rows)
    if (p.xi.xi.weights[static_cast<Eigen::Index>(i)] > 0) xi_support.push_back(i);
  r.probes = static_cast<std::size_t>(opt.probes);
  r.probe_max_ratio = -std::numeric_limits<double>::infinity();
  r.a2_probe_max_ratio = -std::numeric_limits<double>::infinity();
  r.off_support_max_ratio = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < opt.probes; ++k) {
    Point x = probes.row(k).transpose();
    double ratio = Up[k] / c;
    r.probe_max_ratio = std::max(r.probe_max_ratio, ratio);
    if (p.domain.in_complement(x)) {
      Nearest nb = nearest_node(*p.cloud, p.a2_rows, x);
      if (p.domain.boundary_distance(x) > p.cloud->cell_radius[nb.index]) {
        ++r.a2_probes;
        r.a2_probe_max_ratio = std::max(r.a2_probe_max_ratio, ratio);
      }
    } else {
      Nearest ns = nearest_node(*p.cloud, xi_support, x);
      if (ns.distance > 2.0 * p.cloud->cell_radius[ns.index]) {
        ++r.off_support_probes;
        r.off_support_max_ratio = std::max(r.off_support_max_ratio, ratio);
      }
    }
  }
  if (r.a2_probes == 0) r.a2_probe_max_ratio = 0;
  if (r.off_support_probes == 0) r.off_support_max_ratio = 0;

  // (iii) Support agreement, meaningful for alpha < 2.
  r.support_checked = p.domain.alpha < 2.0;
  if (!xi_support.empty()) {
    double cut = opt.support_threshold * sol.lambda.plus.weights.maxCoeff();
    std::size_t hit = 0;
    for (auto i : xi_support)
      if (sol.lambda.plus.weights[static_cast<Eigen::Index>(i)] >= cut) ++hit;
    r.support_fraction = static_cast<double>(hit) / static_cast<double>(xi_support.size());
  }

  r.pass = c > 0 && r.probe_max_ratio <= 1.0 + opt.global_tol &&
           r.a2_probe_max_ratio <= opt.a2_tol && (!r.support_checked || r.support_fraction >= opt.support_min) &&
           (r.off_support_probes == 0 || r.off_support_max_ratio < 1.0);
  return r;
}

SupportReport support_diagnostics(const Solution& sol, const Problem& p, double min_boundary_fraction) {
  SupportReport r;
  r.newtonian = p.domain.alpha == 2.0;
  const Eigen::VectorXd& minus = sol.lambda.minus.weights;
  double near = 0;
  for (auto i : p.a2_rows) {
    double w = minus[static_cast<Eigen::Index>(i)];
    r.minus_mass += w;
    if (interior_a2(p, i)) r.interior_mass += w;
    else near += w;
  }
  r.boundary_mass_fraction = r.minus_mass > 0 ? near / r.minus_mass : 0.0;
  r.pass = r.newtonian ? r.boundary_mass_fraction >= min_boundary_fraction : r.interior_mass > 0;
  return r;
}

void to_json(nlohmann::json& j, const FrostmanReport& r) {
  j = nlohmann::json{{"c", r.c},
                     {"maxviol_b1", r.maxviol_b1},
                     {"maxviol_b2", r.maxviol_b2},
                     {"maxviol_a2", r.maxviol_a2},
                     {"max_abs_a2", r.max_abs_a2},
                     {"a2_checked", r.a2_checked},
                     {"a2_excluded", r.a2_excluded},
                     {"threshold", r.threshold},
                     {"pass", r.pass}};
}

void to_json(nlohmann::json& j, const ZoneReport& r) {
  j = nlohmann::json{{"c", r.c},
                     {"riesz_green_gap", r.riesz_green_gap},
                     {"probe_max_ratio", r.probe_max_ratio},
                     {"probes", r.probes},
                     {"a2_probe_max_ratio", r.a2_probe_max_ratio},
                     {"a2_probes", r.a2_probes},
                     {"support_fraction", r.support_fraction},
                     {"support_checked", r.support_checked},
                     {"off_support_max_ratio", r.off_support_max_ratio},
                     {"off_support_probes", r.off_support_probes},
                     {"pass", r.pass}};
}

void to_json(nlohmann::json& j, const SupportReport& r) {
  j = nlohmann::json{{"newtonian", r.newtonian},
                     {"minus_mass", r.minus_mass},
                     {"boundary_mass_fraction", r.boundary_mass_fraction},
                     {"interior_mass", r.interior_mass},
                     {"pass", r.pass}};
}

}  // namespace condenser
