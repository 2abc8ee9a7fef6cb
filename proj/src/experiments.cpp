#include "condenser/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "condenser/error.hpp"
#include "condenser/verify.hpp"

namespace condenser {

namespace {

std::vector<std::size_t> all_rows(const PointCloud& c) {
  std::vector<std::size_t> rows(c.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

std::vector<std::size_t> part_rows(const PointCloud& c, int part) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c.part[i] == part) rows.push_back(i);
  return rows;
}

double quadratic(const Eigen::VectorXd& w, const Eigen::MatrixXd& K) { return w.dot(K * w); }

PointCloud disc_stack(const Domain& d, const std::vector<Disc>& discs, int nodes, std::uint64_t seed) {
  PlateSpec s;
  s.which = Plate::A1;
  s.shape = DiscStack{discs};
  s.node_count = nodes;
  s.seed = seed;
  return discretize(d, s);
}

PointCloud shell(const Domain& d, const AnnulusOnBoundary& a, int nodes, std::uint64_t seed) {
  PlateSpec s;
  s.which = Plate::A2;
  s.shape = a;
  s.node_count = nodes;
  s.seed = seed;
  return discretize(d, s);
}

}  // namespace

double disc_capacity(double radius, int nodes, double alpha, const DiagonalRule& rule) {
  Domain d = Domain::half_space(3, 2.0);
  auto cloud = std::make_shared<PointCloud>(disc_stack(d, {Disc{1.0, radius, 0}}, nodes, 0));
  KernelMatrix K = assemble(KernelKind::riesz(alpha, 3), cloud, rule);
  return equilibrium_measure(all_rows(*cloud), K).capacity;
}

double ball_capacity(double radius, int nodes, double alpha, const DiagonalRule& rule) {
  Domain d = Domain::ball(Point::Zero(3), radius, std::min(alpha, 2.0));
  PlateSpec s;
  s.which = Plate::A1;
  s.shape = BallInterior{};
  s.node_count = nodes;
  auto cloud = std::make_shared<PointCloud>(discretize(d, s));
  KernelMatrix K = assemble(KernelKind::riesz(alpha, 3), cloud, rule);
  return equilibrium_measure(all_rows(*cloud), K).capacity;
}

BetaCalibration calibrate_beta(double target, int nodes, double lo, double hi, double rel_tol) {
  if (!(target > 0) || !(lo > 0) || !(hi > lo)) throw Error(ErrorCode::InfeasibleSpec, "calibration needs 0 < lo < hi and target > 0");
  // The capacity grows with beta: a larger separation lowers every self-energy.
  BetaCalibration out;
  out.target = target;
  auto cap = [&](double b) {
    ++out.evaluations;
    return disc_capacity(1.0, nodes, 2.0, DiagonalRule{b});
  };
  double clo = cap(lo), chi = cap(hi);
  if (clo > target || chi < target)
    throw Error(ErrorCode::InfeasibleSpec, "target capacity is not bracketed by the beta interval");
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    double cm = cap(mid);
    out.beta = mid;
    out.capacity = cm;
    if (std::abs(cm - target) <= rel_tol * target) break;
    (cm < target ? lo : hi) = mid;
  }
  return out;
}

Eigen::VectorXd constraint_scaled_equilibrium(const PointCloud& a1, double alpha, double q, const DiagonalRule& rule) {
  if (!(q > 1)) throw Error(ErrorCode::InfeasibleSpec, "scaled equilibrium constraint needs q > 1");
  auto cloud = std::make_shared<PointCloud>(a1);
  KernelMatrix K = assemble(KernelKind::riesz(alpha, a1.dim), cloud, rule);
  return q * equilibrium_measure(all_rows(a1), K).measure.weights;
}

Eigen::VectorXd constraint_disc_series(const PointCloud& a1, double alpha, const DiagonalRule& rule) {
  auto cloud = std::make_shared<PointCloud>(a1);
  KernelMatrix K = assemble(KernelKind::riesz(alpha, a1.dim), cloud, rule);
  const int parts = a1.part.empty() ? 0 : *std::max_element(a1.part.begin(), a1.part.end()) + 1;
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(a1.size()));
  for (int k = 1; k <= parts; ++k) {
    auto rows = part_rows(a1, k - 1);
    if (rows.empty()) continue;
    xi += equilibrium_measure(rows, K).measure.weights / static_cast<double>(k * k);
  }
  return xi;
}

ProblemInputs ball_example_inputs(const BallExample& e) {
  Point centre = Point::Zero(e.dim);
  Domain d = Domain::ball(centre, e.radius, e.alpha);
  ProblemInputs in;
  in.domain = d;
  PlateSpec s1;
  s1.which = Plate::A1;
  s1.shape = BallInterior{};
  s1.node_count = e.a1_nodes;
  s1.seed = e.seed;
  in.a1 = discretize(d, s1);
  AnnulusOnBoundary a;
  a.outer_radius = e.radius + kTruncationFactor * 2.0 * e.radius;
  in.truncation_radius = a.outer_radius;
  in.a2 = shell(d, a, e.a2_nodes, e.seed);
  in.rule = e.rule;
  in.xi = constraint_scaled_equilibrium(in.a1, e.alpha, e.q, e.rule);
  return in;
}

ProblemInputs disc_series_example_inputs(const DiscSeriesExample& e) {
  if (e.discs < 1) throw Error(ErrorCode::InfeasibleSpec, "need at least one disc");
  Domain d = Domain::half_space(3, 2.0);
  ProblemInputs in;
  in.domain = d;
  std::vector<Disc> discs;
  for (int k = 1; k <= e.discs; ++k) discs.push_back(Disc{1.0 / k, static_cast<double>(k), 0});
  in.a1 = disc_stack(d, discs, e.a1_nodes, e.seed);
  AnnulusOnBoundary a;
  a.outer_radius = kTruncationFactor * 2.0 * e.discs;
  in.truncation_radius = a.outer_radius;
  in.a2 = shell(d, a, e.a2_nodes, e.seed);
  in.rule = e.rule;
  in.xi = constraint_disc_series(in.a1, 2.0, e.rule);
  return in;
}

BalayageCheckReport balayage_check(const Problem& p, int trials, std::uint64_t seed) {
  if (trials < 1) throw Error(ErrorCode::InfeasibleSpec, "balayage check needs at least one trial");
  BalayageCheckReport r;
  r.trials = trials;
  const PointCloud& cloud = *p.cloud;
  const Eigen::MatrixXd& K = p.riesz->values;
  std::vector<std::size_t> deep;
  for (std::size_t i : p.a2_rows)
    if (p.domain.boundary_distance(cloud.point(i)) > cloud.cell_radius[i]) deep.push_back(i);
  r.closed_form_checked = p.domain.alpha == 2.0 && p.green != nullptr;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cloud.size()));
    for (std::size_t i : p.a1_rows) w[static_cast<Eigen::Index>(i)] = unif(rng);
    w /= w.sum();
    DiscreteMeasure mu(p.cloud, w);
    GreenEnergyParts parts;
    const double g = green_energy_via_identity(mu, *p.sweeper, &parts);
    const DiscreteMeasure swept = p.sweeper->sweep(mu);
    r.max_mass_error = std::max(r.max_mass_error, std::abs(swept.mass() - 1.0));
    const Eigen::VectorXd u = K * w, us = K * swept.weights;
    double gap = 0, ref = 0;
    for (std::size_t i : deep) {
      const auto k = static_cast<Eigen::Index>(i);
      gap = std::max(gap, std::abs(u[k] - us[k]));
      ref = std::max(ref, std::abs(u[k]));
    }
    if (ref > 0) r.max_potential_gap = std::max(r.max_potential_gap, gap / ref);
    r.max_identity_error =
        std::max(r.max_identity_error, std::abs(parts.difference_norm - parts.difference_of_norms) / std::abs(g));
    if (r.closed_form_checked) {
      const Eigen::VectorXd w1 = p.restrict_a1(w);
      const double closed = quadratic(w1, p.green->values);
      r.max_closed_form_error = std::max(r.max_closed_form_error, std::abs(g / closed - 1.0));
    }
  }
  r.pass = r.max_mass_error <= r.mass_tol && r.max_potential_gap <= r.potential_tol && r.max_identity_error <= 1e-8 &&
           (!r.closed_form_checked || r.max_closed_form_error <= r.closed_form_tol);
  return r;
}

ShortCircuitReport short_circuit_experiment(const ShortCircuitOptions& opt) {
  if (opt.levels < 2) throw Error(ErrorCode::InfeasibleSpec, "short circuit needs at least two levels");
  Domain d = Domain::half_space(3, 2.0);
  std::vector<Disc> discs;
  for (int k = 1; k <= opt.levels; ++k) discs.push_back(Disc{1.0 / k, static_cast<double>(k), opt.base_nodes * k});
  PointCloud a1 = disc_stack(d, discs, 0, 0);
  AnnulusOnBoundary a;
  a.layers = 1;
  a.core_radius = opt.core_factor * opt.levels;
  a.outer_radius = kTruncationFactor * 2.0 * opt.levels;
  PointCloud a2 = shell(d, a, opt.a2_nodes, 0);

  auto a1c = std::make_shared<PointCloud>(a1);
  auto all = std::make_shared<PointCloud>(PointCloud::concat(a1, a2));
  KernelMatrix G = assemble(KernelKind::green(d), a1c, opt.rule);
  KernelMatrix K = assemble(KernelKind::riesz(2.0, 3), all, opt.rule);
  Sweeper sweeper(K);

  ShortCircuitReport r;
  r.tolerance = 0.03;
  std::vector<std::size_t> level;
  for (int j = 1; j <= opt.levels; ++j) {
    auto rows = part_rows(a1, j - 1);
    level.insert(level.end(), rows.begin(), rows.end());
    EquilibriumResult eq = equilibrium_measure(level, G);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(all->size()));
    w.head(static_cast<Eigen::Index>(a1.size())) = eq.measure.weights;
    double diff = green_energy_via_identity(DiscreteMeasure(all, w), sweeper);
    r.inverse_green_capacity.push_back(eq.energy);
    r.riesz_difference.push_back(diff);
    r.relative_gap.push_back(std::abs(diff - eq.energy) / eq.energy);
    r.max_relative_gap = std::max(r.max_relative_gap, r.relative_gap.back());
  }
  r.strictly_decreasing = true;
  for (std::size_t j = 1; j < r.inverse_green_capacity.size(); ++j)
    r.strictly_decreasing &= r.inverse_green_capacity[j] < r.inverse_green_capacity[j - 1];
  r.pass = r.strictly_decreasing && r.max_relative_gap <= r.tolerance;
  return r;
}

UnboundedConstraintReport unbounded_constraint_experiment(const UnboundedConstraintOptions& opt) {
  if (opt.discs < 3) throw Error(ErrorCode::InfeasibleSpec, "unbounded constraint needs at least three discs");
  Domain d = Domain::half_space(3, 2.0);
  std::vector<Disc> discs;
  for (int j = 1; j <= opt.discs; ++j) {
    double R = 2.0 * std::pow(j, 4);
    discs.push_back(Disc{R, R, opt.nodes_per_disc});
  }
  PointCloud a1 = disc_stack(d, discs, 0, 0);
  auto a1c = std::make_shared<PointCloud>(a1);
  KernelMatrix K = assemble(KernelKind::riesz(2.0, 3), a1c, opt.rule);
  KernelMatrix G = assemble(KernelKind::green(d), a1c, opt.rule);

  UnboundedConstraintReport r;
  std::vector<Eigen::VectorXd> xi;
  for (int j = 1; j <= opt.discs; ++j) {
    EquilibriumResult eq = equilibrium_measure(part_rows(a1, j - 1), K);
    xi.push_back(eq.measure.weights);
    r.component_norms.push_back(std::sqrt(eq.energy));
    r.component_bounds.push_back(1.0 / (static_cast<double>(j) * j));
  }
  Point zeta = Point::Zero(3);
  zeta[0] = 1.0;
  Eigen::VectorXd f(static_cast<Eigen::Index>(a1.size()));
  for (std::size_t i = 0; i < a1.size(); ++i) f[static_cast<Eigen::Index>(i)] = green_kernel_halfspace(a1.point(i), zeta, 3);

  Eigen::VectorXd upper = xi[0];
  const Eigen::VectorXd* start = nullptr;
  Eigen::VectorXd previous;
  for (int m = 2; m <= opt.discs; ++m) {
    upper += xi[static_cast<std::size_t>(m - 1)];
    GreenResult g = solve_green_box(G, f, upper, {}, start);
    r.levels.push_back(m);
    r.optima.push_back(g.qp.objective);
    previous = g.measure.weights;
    start = &previous;
  }
  r.strictly_decreasing = true;
  for (std::size_t k = 1; k < r.optima.size(); ++k) r.strictly_decreasing &= r.optima[k] < r.optima[k - 1];
  r.final_over_first = r.optima.back() / r.optima.front();
  r.norms_within_bounds = true;
  for (std::size_t j = 0; j < r.component_norms.size(); ++j)
    r.norms_within_bounds &= r.component_norms[j] <= r.component_bounds[j];
  r.pass = r.strictly_decreasing && r.final_over_first <= 0.1 && r.norms_within_bounds;
  return r;
}

DualityReport duality_check(const Problem& p, const Solution& sol, double tolerance) {
  if (!p.field.is_zero()) throw Error(ErrorCode::WrongField, "duality check requires a zero external field");
  DualityReport r;
  r.tolerance = tolerance;
  const Eigen::MatrixXd& G = p.green->values;
  const Eigen::VectorXd xi = p.xi_on_a1();
  const Eigen::VectorXd lambda = sol.green_minimizer.weights;
  r.q = 1.0 / (xi.sum() - 1.0);
  const Eigen::VectorXd theta = r.q * (xi - lambda);
  r.theta_mass = theta.sum();

  // Frostman constant of the Green problem.
  const Eigen::VectorXd W = G * lambda;
  std::vector<double> vals, wts;
  for (Eigen::Index i = 0; i < xi.size(); ++i)
    if (xi[i] - lambda[i] > 1e-10) {
      vals.push_back(W[i]);
      wts.push_back(xi[i] - lambda[i]);
    }
  const double c = weighted_median(vals, wts);
  r.eta = r.q * c;

  const Eigen::VectorXd f0 = -r.q * (G * xi);
  const Eigen::VectorXd Wt = G * theta + f0;
  const double scale = std::abs(r.eta);
  double flat = 0, mass = 0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    double t = std::max(theta[i], 0.0);
    flat += t * std::abs(Wt[i] + r.eta);
    mass += t;
    r.maxviol_wsc2 = std::max(r.maxviol_wsc2, std::max(-r.eta - Wt[i], 0.0) / scale);
  }
  r.maxviol_wsc1 = flat / (mass * scale);

  r.objective_theta = theta.dot(G * theta) + 2.0 * f0.dot(theta);
  GreenResult opt = solve_unconstrained_weighted(*p.green, f0, p.qp);
  r.objective_optimum = opt.qp.objective;
  r.objective_gap = std::abs(r.objective_theta - r.objective_optimum) / std::abs(r.objective_optimum);
  r.pass = std::abs(r.theta_mass - 1.0) <= 1e-8 && r.objective_gap <= tolerance && r.maxviol_wsc1 <= tolerance &&
           r.maxviol_wsc2 <= tolerance;
  return r;
}

CounterexampleReport counterexample_experiment(const CounterexampleOptions& opt) {
  if (opt.terms < 2) throw Error(ErrorCode::InfeasibleSpec, "counterexample needs at least two terms");
  Domain d = Domain::half_space(3, 2.0);
  CounterexampleReport r;

  auto unit_energy = [&](const PointCloud& c) {
    auto cc = std::make_shared<PointCloud>(c);
    KernelMatrix K = assemble(KernelKind::riesz(2.0, 3), cc, opt.rule);
    return equilibrium_measure(all_rows(c), K);
  };
  {
    PointCloud unit = disc_stack(d, {Disc{1.0, 1.0, opt.nodes_per_disc}}, 0, 0);
    r.unit_disc_energy = unit_energy(unit).energy;
  }

  PointCloud joined;
  Eigen::VectorXd weights;
  for (int k = 1; k <= opt.terms; ++k) {
    const double ck = std::ldexp(1.0, -k);
    const double rk = std::ldexp(1.0, -2 * k);
    // Lower the disc until its Green norm drops below the target.
    double eps = std::min(rk, 0.5);
    PointCloud disc;
    Eigen::VectorXd mu;
    double gnorm = 0;
    for (int halvings = 0;; ++halvings) {
      disc = disc_stack(d, {Disc{eps, rk, opt.nodes_per_disc}}, 0, 0);
      for (std::size_t i = 0; i < disc.size(); ++i) disc.points(static_cast<Eigen::Index>(i), 1) += k;
      EquilibriumResult eq = unit_energy(disc);
      mu = eq.measure.weights;
      auto dc = std::make_shared<PointCloud>(disc);
      KernelMatrix G = assemble(KernelKind::green(d), dc, opt.rule);
      gnorm = std::sqrt(std::max(quadratic(mu, G.values), 0.0));
      if (gnorm < opt.green_target) break;
      if (halvings > 200) throw Error(ErrorCode::SolverDiverged, "no height gives a small Green norm");
      eps *= 0.5;
    }
    r.c.push_back(ck);
    r.r.push_back(rk);
    r.epsilon.push_back(eps);
    r.disc_green_norm.push_back(gnorm);
    if (k == 1) {
      joined = disc;
      weights = ck * mu;
    } else {
      joined = PointCloud::concat(joined, disc);
      Eigen::VectorXd w(weights.size() + mu.size());
      w << weights, ck * mu;
      weights = w;
    }
  }

  auto jc = std::make_shared<PointCloud>(joined);
  KernelMatrix K = assemble(KernelKind::riesz(2.0, 3), jc, opt.rule);
  KernelMatrix G = assemble(KernelKind::green(d), jc, opt.rule);
  Eigen::Index used = 0;
  double prev = 0;
  r.pass = true;
  for (int k = 1; k <= opt.terms; ++k) {
    used += opt.nodes_per_disc;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(weights.size());
    w.head(used) = weights.head(used);
    double e2 = quadratic(w, K.values);
    double eg = std::sqrt(std::max(quadratic(w, G.values), 0.0));
    r.riesz_partial_sums.push_back(e2);
    r.green_partial_sums.push_back(eg);
    r.riesz_increments.push_back((e2 - prev) / r.unit_disc_energy);
    prev = e2;
    r.pass = r.pass && eg <= r.green_bound && r.riesz_increments.back() >= r.min_increment;
  }
  return r;
}

void to_json(nlohmann::json& j, const BalayageCheckReport& r) {
  j = nlohmann::json{{"trials", r.trials},
                     {"max_mass_error", r.max_mass_error},
                     {"max_potential_gap", r.max_potential_gap},
                     {"max_identity_error", r.max_identity_error},
                     {"max_closed_form_error", r.max_closed_form_error},
                     {"closed_form_checked", r.closed_form_checked},
                     {"mass_tol", r.mass_tol},
                     {"potential_tol", r.potential_tol},
                     {"closed_form_tol", r.closed_form_tol},
                     {"pass", r.pass}};
}

void to_json(nlohmann::json& j, const ShortCircuitReport& r) {
  j = nlohmann::json{{"inverse_green_capacity", r.inverse_green_capacity},
                     {"riesz_difference", r.riesz_difference},
                     {"relative_gap", r.relative_gap},
                     {"max_relative_gap", r.max_relative_gap},
                     {"strictly_decreasing", r.strictly_decreasing},
                     {"tolerance", r.tolerance},
                     {"pass", r.pass}};
}

void to_json(nlohmann::json& j, const UnboundedConstraintReport& r) {
  j = nlohmann::json{{"levels", r.levels},
                     {"optima", r.optima},
                     {"component_norms", r.component_norms},
                     {"component_bounds", r.component_bounds},
                     {"strictly_decreasing", r.strictly_decreasing},
                     {"final_over_first", r.final_over_first},
                     {"norms_within_bounds", r.norms_within_bounds},
                     {"pass", r.pass}};
}

void to_json(nlohmann::json& j, const DualityReport& r) {
  j = nlohmann::json{{"q", r.q},
                     {"theta_mass", r.theta_mass},
                     {"eta", r.eta},
                     {"maxviol_wsc1", r.maxviol_wsc1},
                     {"maxviol_wsc2", r.maxviol_wsc2},
                     {"objective_theta", r.objective_theta},
                     {"objective_optimum", r.objective_optimum},
                     {"objective_gap", r.objective_gap},
                     {"tolerance", r.tolerance},
                     {"pass", r.pass}};
}

void to_json(nlohmann::json& j, const CounterexampleReport& r) {
  j = nlohmann::json{{"c", r.c},
                     {"r", r.r},
                     {"epsilon", r.epsilon},
                     {"disc_green_norm", r.disc_green_norm},
                     {"green_partial_sums", r.green_partial_sums},
                     {"riesz_partial_sums", r.riesz_partial_sums},
                     {"riesz_increments", r.riesz_increments},
                     {"unit_disc_energy", r.unit_disc_energy},
                     {"green_bound", r.green_bound},
                     {"min_increment", r.min_increment},
                     {"pass", r.pass}};
}

}  // namespace condenser
