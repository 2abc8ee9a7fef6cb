#include "condenser/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "condenser/error.hpp"
#include "condenser/random.hpp"

namespace condenser {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::MatrixXd sub_block(const Eigen::MatrixXd& M, const std::vector<std::size_t>& r, const std::vector<std::size_t>& c) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(c.size()));
  for (std::size_t a = 0; a < r.size(); ++a)
    for (std::size_t b = 0; b < c.size(); ++b)
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = M(static_cast<Eigen::Index>(r[a]), static_cast<Eigen::Index>(c[b]));
  return out;
}

void fill_objectives(const Problem& p, Solution& s) {
  const Eigen::VectorXd net = s.lambda.net();
  s.objective_riesz = net.dot(p.riesz->values * net) + 2.0 * p.field.values.dot(s.lambda.plus.weights);
  const Eigen::VectorXd& nu = s.green_minimizer.weights;
  s.objective_green = nu.dot(p.green->values * nu) + 2.0 * p.field_on_a1().dot(nu);
  s.objective_gap = std::abs(s.objective_riesz - s.objective_green) / (1.0 + std::abs(s.objective_green));
  DiscreteMeasure swept = p.sweeper->sweep(s.lambda.plus);
  double plus_norm = std::sqrt(std::max(s.lambda.plus.weights.dot(p.riesz->values * s.lambda.plus.weights), 0.0));
  s.bridge_gap = energy_distance(s.lambda.minus.weights, swept.weights, *p.riesz) / plus_norm;
}

}  // namespace

Eigen::VectorXd Problem::field_on_a1() const { return restrict_a1(field.values); }
Eigen::VectorXd Problem::xi_on_a1() const { return restrict_a1(xi.xi.weights); }

Eigen::VectorXd Problem::embed_a1(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cloud->size()));
  for (std::size_t a = 0; a < a1_rows.size(); ++a) out[static_cast<Eigen::Index>(a1_rows[a])] = v[static_cast<Eigen::Index>(a)];
  return out;
}

Eigen::VectorXd Problem::restrict_a1(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(a1_rows.size()));
  for (std::size_t a = 0; a < a1_rows.size(); ++a) out[static_cast<Eigen::Index>(a)] = v[static_cast<Eigen::Index>(a1_rows[a])];
  return out;
}

Eigen::VectorXd Problem::restrict_a2(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(a2_rows.size()));
  for (std::size_t a = 0; a < a2_rows.size(); ++a) out[static_cast<Eigen::Index>(a)] = v[static_cast<Eigen::Index>(a2_rows[a])];
  return out;
}

double energy_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelMatrix& K) {
  Eigen::VectorXd d = a - b;
  return std::sqrt(std::max(d.dot(K.values * d), 0.0));
}

Problem build_problem(ProblemInputs in) {
  in.domain.validate();
  if (in.a1.size() == 0) throw Error(ErrorCode::Infeasible, "the positive plate has no nodes");
  if (in.xi.size() != static_cast<Eigen::Index>(in.a1.size()))
    throw Error(ErrorCode::DimensionMismatch, "constraint weights differ in length from the A1 nodes");
  for (auto t : in.a1.plate)
    if (t != Plate::A1) throw Error(ErrorCode::InfeasibleSpec, "positive plate cloud contains A2 tags");
  for (auto t : in.a2.plate)
    if (t != Plate::A2) throw Error(ErrorCode::InfeasibleSpec, "negative plate cloud contains A1 tags");
  Problem p;
  p.domain = in.domain;
  p.rule = in.rule;
  p.qp = in.qp;
  p.truncation_radius = in.truncation_radius;
  auto cloud = std::make_shared<PointCloud>(PointCloud::concat(in.a1, in.a2));
  p.cloud = cloud;
  p.a1_cloud = std::make_shared<PointCloud>(in.a1);
  p.a1_rows.resize(in.a1.size());
  std::iota(p.a1_rows.begin(), p.a1_rows.end(), std::size_t{0});
  p.a2_rows.resize(in.a2.size());
  std::iota(p.a2_rows.begin(), p.a2_rows.end(), in.a1.size());
  auto K = std::make_shared<KernelMatrix>(assemble(KernelKind::riesz(in.domain.alpha, in.domain.dim), p.cloud, in.rule));
  p.riesz = K;
  p.sweeper = std::make_shared<Sweeper>(*K, in.qp);
  p.green = std::make_shared<KernelMatrix>(green_matrix(in.domain, p.a1_cloud, p.a1_rows, *p.sweeper, in.rule));

  Eigen::VectorXd xi_full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cloud->size()));
  xi_full.head(in.xi.size()) = in.xi;
  p.xi = ConstraintMeasure(DiscreteMeasure(p.cloud, xi_full));

  switch (in.field) {
    case ProblemInputs::FieldKind::Zero:
      p.field = ExternalField::zero(p.cloud);
      break;
    case ProblemInputs::FieldKind::CaseI: {
      if (in.field_values.size() != static_cast<Eigen::Index>(in.a1.size()))
        throw Error(ErrorCode::DimensionMismatch, "Case I field must list one value per A1 node");
      Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cloud->size()));
      f.head(in.field_values.size()) = in.field_values;
      p.field = ExternalField::case_one(p.cloud, f);
      break;
    }
    case ProblemInputs::FieldKind::CaseII:
      for (Eigen::Index k = 0; k < in.zeta_points.rows(); ++k)
        if (!in.domain.contains(in.zeta_points.row(k).transpose()))
          throw Error(ErrorCode::OutsideDomain, "zeta source " + std::to_string(k) + " lies outside the domain");
      p.field = make_case_two(*p.sweeper, in.zeta_points, in.zeta_weights);
      break;
  }
  return p;
}

GreenResult solve_green_box(const KernelMatrix& green, const Eigen::VectorXd& f, const Eigen::VectorXd& upper,
                            const qp::Options& options, const Eigen::VectorXd* start) {
  const auto n = green.size();
  if (f.size() != n || upper.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "field or bound length differs from the Green matrix size");
  if (upper.sum() <= 1) throw Error(ErrorCode::Infeasible, "constraint mass must exceed 1");
  qp::Problem q;
  q.H = &green.values;
  q.c = f;
  q.upper = upper;
  q.group.assign(static_cast<std::size_t>(n), 0);
  q.target = Eigen::VectorXd::Constant(1, 1.0);
  GreenResult r;
  r.qp = qp::solve(q, options, start);
  r.measure = DiscreteMeasure(green.cloud, r.qp.x.cwiseMax(0.0));
  return r;
}

GreenResult solve_green_constrained(const Problem& p, const Eigen::VectorXd* start) {
  return solve_green_box(*p.green, p.field_on_a1(), p.xi_on_a1(), p.qp, start);
}

Solution solve_riesz_via_bridge(const Problem& p) {
  GreenResult g = solve_green_constrained(p);
  Solution s;
  s.method = "bridge";
  s.green_minimizer = g.measure;
  DiscreteMeasure plus(p.cloud, p.embed_a1(g.measure.weights));
  DiscreteMeasure minus = p.sweeper->sweep(plus);
  s.lambda = SignedDiscreteMeasure(plus, minus);
  s.multiplier_c = 0.5 * g.qp.multiplier[0];
  s.kkt_residual = g.qp.kkt_residual;
  s.iterations = g.qp.iterations;
  s.objective_log = g.qp.objective_log;
  fill_objectives(p, s);
  return s;
}

SignedDiscreteMeasure feasible_start(const Problem& p, std::optional<std::uint64_t> seed) {
  Eigen::VectorXd xi = p.xi_on_a1();
  std::vector<std::size_t> order(static_cast<std::size_t>(xi.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (seed) {
    Rng rng(*seed);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  } else {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return xi[static_cast<Eigen::Index>(a)] > xi[static_cast<Eigen::Index>(b)];
    });
  }
  Eigen::VectorXd plus = Eigen::VectorXd::Zero(xi.size());
  double acc = 0;
  std::vector<std::size_t> K;
  for (auto i : order) {
    K.push_back(i);
    acc += xi[static_cast<Eigen::Index>(i)];
    if (acc >= 1) break;
  }
  for (auto i : K) plus[static_cast<Eigen::Index>(i)] = xi[static_cast<Eigen::Index>(i)] / acc;
  EquilibriumResult eq = equilibrium_measure(p.a2_rows, *p.riesz, p.qp);
  return SignedDiscreteMeasure(DiscreteMeasure(p.cloud, p.embed_a1(plus)), eq.measure);
}

Solution solve_riesz_direct(const Problem& p, const DirectOptions& opt) {
  const auto n1 = static_cast<Eigen::Index>(p.a1_rows.size());
  const auto n2 = static_cast<Eigen::Index>(p.a2_rows.size());
  const Eigen::MatrixXd& K = p.riesz->values;
  Eigen::MatrixXd K11 = sub_block(K, p.a1_rows, p.a1_rows);
  Eigen::MatrixXd K12 = sub_block(K, p.a1_rows, p.a2_rows);
  const Eigen::MatrixXd& K22 = p.sweeper->target_block();
  const Eigen::VectorXd f1 = p.field_on_a1();
  const Eigen::VectorXd xi1 = p.xi_on_a1();
  Eigen::VectorXd minus_upper = opt.minus_upper ? *opt.minus_upper : Eigen::VectorXd::Constant(n2, kInf);
  if (minus_upper.size() != n2) throw Error(ErrorCode::DimensionMismatch, "upper bound for the negative part has the wrong size");

  SignedDiscreteMeasure start = feasible_start(p);
  Eigen::VectorXd x1 = p.restrict_a1(start.plus.weights);
  Eigen::VectorXd x2 = p.restrict_a2(start.minus.weights);
  auto objective = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.dot(K11 * a) - 2.0 * a.dot(K12 * b) + b.dot(K22 * b) + 2.0 * f1.dot(a);
  };
  Solution s;
  s.method = "direct";
  s.objective_log.push_back(objective(x1, x2));

  qp::Problem q1;
  q1.H = &K11;
  q1.upper = xi1;
  q1.group.assign(static_cast<std::size_t>(n1), 0);
  q1.target = Eigen::VectorXd::Constant(1, 1.0);
  qp::Problem q2;
  q2.H = &K22;
  q2.upper = minus_upper;
  q2.group.assign(static_cast<std::size_t>(n2), 0);
  q2.target = Eigen::VectorXd::Constant(1, 1.0);
  int iters = 0;
  for (int b = 0; b < opt.block_iterations; ++b) {
    q1.c = f1 - K12 * x2;
    x1 = qp::solve(q1, p.qp, &x1).x;
    q2.c = -(K12.transpose() * x1);
    x2 = qp::solve(q2, p.qp, &x2).x;
    s.objective_log.push_back(std::min(objective(x1, x2), s.objective_log.back()));
    ++iters;
  }
  if (opt.joint_polish) {
    Eigen::MatrixXd H(n1 + n2, n1 + n2);
    H.topLeftCorner(n1, n1) = K11;
    H.topRightCorner(n1, n2) = -K12;
    H.bottomLeftCorner(n2, n1) = -K12.transpose();
    H.bottomRightCorner(n2, n2) = K22;
    qp::Problem q;
    q.H = &H;
    q.c = Eigen::VectorXd::Zero(n1 + n2);
    q.c.head(n1) = f1;
    q.upper.resize(n1 + n2);
    q.upper << xi1, minus_upper;
    q.group.assign(static_cast<std::size_t>(n1 + n2), 1);
    std::fill(q.group.begin(), q.group.begin() + n1, 0);
    q.target = Eigen::Vector2d(1.0, 1.0);
    Eigen::VectorXd x0(n1 + n2);
    x0 << x1, x2;
    qp::Result r = qp::solve(q, p.qp, &x0);
    x1 = r.x.head(n1);
    x2 = r.x.tail(n2);
    for (double v : r.objective_log) s.objective_log.push_back(std::min(v, s.objective_log.back()));
    s.kkt_residual = r.kkt_residual;
    s.multiplier_c = 0.5 * r.multiplier[0];
    iters += r.iterations;
  }
  s.iterations = iters;
  x1 = x1.cwiseMax(0.0);
  x2 = x2.cwiseMax(0.0);
  s.lambda = SignedDiscreteMeasure(DiscreteMeasure(p.cloud, p.embed_a1(x1)), DiscreteMeasure(p.cloud, [&] {
                                     Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.cloud->size()));
                                     for (std::size_t a = 0; a < p.a2_rows.size(); ++a)
                                       w[static_cast<Eigen::Index>(p.a2_rows[a])] = x2[static_cast<Eigen::Index>(a)];
                                     return w;
                                   }()));
  s.green_minimizer = DiscreteMeasure(p.a1_cloud, x1);
  fill_objectives(p, s);
  return s;
}

GreenResult solve_unconstrained_weighted(const KernelMatrix& green, const Eigen::VectorXd& f0, const qp::Options& options) {
  const auto n = green.size();
  if (f0.size() != n) throw Error(ErrorCode::DimensionMismatch, "field length differs from the Green matrix size");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!std::isfinite(f0[i])) throw Error(ErrorCode::InfeasibleSpec, "field value at node " + std::to_string(i) + " is not finite");
  qp::Problem q;
  q.H = &green.values;
  q.c = f0;
  q.upper = Eigen::VectorXd::Constant(n, kInf);
  q.group.assign(static_cast<std::size_t>(n), 0);
  q.target = Eigen::VectorXd::Constant(1, 1.0);
  GreenResult r;
  r.qp = qp::solve(q, options);
  r.measure = DiscreteMeasure(green.cloud, r.qp.x.cwiseMax(0.0));
  return r;
}

SignedConstraintResult solve_signed_constraint(const Problem& p, const DiscreteMeasure& sigma_minus) {
  require_same_cloud(sigma_minus.cloud, p.cloud, "signed constraint");
  DiscreteMeasure xi_swept = p.sweeper->sweep(p.xi.xi);
  const double tol = 1e-8 + 1e-6 * xi_swept.weights.maxCoeff();
  for (auto i : p.a2_rows) {
    auto k = static_cast<Eigen::Index>(i);
    if (sigma_minus.weights[k] < xi_swept.weights[k] - tol)
      throw Error(ErrorCode::InvalidSigma, "sigma- falls below the balayage of xi at node " + std::to_string(i) + " (" +
                                               std::to_string(sigma_minus.weights[k]) + " < " +
                                               std::to_string(xi_swept.weights[k]) + ")");
  }
  for (auto i : p.a1_rows)
    if (sigma_minus.weights[static_cast<Eigen::Index>(i)] > 0)
      throw Error(ErrorCode::InvalidSigma, "sigma- charges A1 node " + std::to_string(i));
  SignedConstraintResult r;
  r.xi_only = solve_riesz_direct(p);
  DirectOptions opt;
  opt.minus_upper = p.restrict_a2(sigma_minus.weights);
  r.doubly = solve_riesz_direct(p, opt);
  r.doubly.method = "direct-sigma";
  r.relative_gap = std::abs(r.doubly.objective_riesz - r.xi_only.objective_riesz) / (1.0 + std::abs(r.xi_only.objective_riesz));
  double base = std::sqrt(std::max(r.xi_only.lambda.net().dot(p.riesz->values * r.xi_only.lambda.net()), 1e-300));
  r.minimizer_gap = energy_distance(r.doubly.lambda.net(), r.xi_only.lambda.net(), *p.riesz) / base;
  return r;
}

}  // namespace condenser
