#include <doctest.h>

#include <cmath>
#include <random>

#include "condenser/error.hpp"
#include "condenser/verify.hpp"
#include "helpers.hpp"

using namespace condenser;

namespace {

const Solution& bridge(const Problem& p) {
  static const Solution disc = solve_riesz_via_bridge(testing::small_disc_problem());
  static const Solution ball = solve_riesz_via_bridge(testing::small_ball_problem());
  return &p == &testing::small_disc_problem() ? disc : ball;
}

// Random feasible positive part: xi / xi(A1) moved towards a random probability vector
// as far as the bound nu <= xi allows.
Eigen::VectorXd random_feasible_plus(const Problem& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  const Eigen::VectorXd xi = p.xi_on_a1();
  const Eigen::VectorXd base = xi / xi.sum();
  Eigen::VectorXd w = xi.cwiseProduct(Eigen::VectorXd::NullaryExpr(xi.size(), [&] { return u(rng); }));
  w /= w.sum();
  double s = 1.0;
  for (Eigen::Index i = 0; i < xi.size(); ++i)
    if (w[i] > base[i]) s = std::min(s, (xi[i] - base[i]) / (w[i] - base[i]));
  return base + s * (w - base);
}

}  // namespace

TEST_CASE("bridge and direct solves reach the same minimizer") {
  for (const Problem* p : {&testing::small_disc_problem(), &testing::small_ball_problem()}) {
    const Solution& b = bridge(*p);
    Solution d = solve_riesz_direct(*p);
    const double scale = std::sqrt(b.lambda.net().dot(p->riesz->values * b.lambda.net()));
    CHECK(energy_distance(b.lambda.net(), d.lambda.net(), *p->riesz) <= 0.02 * scale);
    CHECK(std::abs(d.objective_riesz - b.objective_green) <= 0.02 * std::abs(b.objective_green));
    for (std::size_t k = 1; k < d.objective_log.size(); ++k) CHECK(d.objective_log[k] <= d.objective_log[k - 1] + 1e-12);
  }
}

TEST_CASE("solutions are admissible") {
  for (const Problem* p : {&testing::small_disc_problem(), &testing::small_ball_problem()}) {
    const Solution& s = bridge(*p);
    CHECK(s.lambda.plus.mass() == doctest::Approx(1.0).epsilon(1e-9));
    AdmissibilityReport r = check_admissible(s.lambda, p->xi);
    CHECK(r.violations.empty());
    CHECK(r.plus_mass == doctest::Approx(1.0).epsilon(1e-8));
    // lambda- is the balayage of lambda+; the truncated shell keeps all but a sliver of its mass.
    CHECK(r.minus_mass == doctest::Approx(1.0).epsilon(0.02));
  }
}

TEST_CASE("uniqueness: Green solves from different feasible starts agree") {
  const Problem& p = testing::small_disc_problem();
  SignedDiscreteMeasure s1 = feasible_start(p), s2 = feasible_start(p, 11);
  Eigen::VectorXd x1 = p.restrict_a1(s1.plus.weights), x2 = p.restrict_a1(s2.plus.weights);
  GreenResult a = solve_green_constrained(p, &x1), b = solve_green_constrained(p, &x2);
  const Eigen::VectorXd d = a.measure.weights - b.measure.weights;
  const double norm = std::sqrt(a.measure.weights.dot(p.green->values * a.measure.weights));
  CHECK(std::sqrt(std::max(0.0, d.dot(p.green->values * d))) <= 1e-3 * norm);
  // Parallelogram identity on the two iterates.
  const Eigen::VectorXd& u = a.measure.weights;
  const Eigen::VectorXd& v = b.measure.weights;
  const Eigen::MatrixXd& G = p.green->values;
  const Eigen::VectorXd sum = u + v;
  CHECK(sum.dot(G * sum) + d.dot(G * d) == doctest::Approx(2 * u.dot(G * u) + 2 * v.dot(G * v)).epsilon(1e-10));
}

TEST_CASE("variational inequality against random feasible measures") {
  const Problem& p = testing::small_disc_problem();
  const Solution& s = bridge(p);
  const Eigen::VectorXd lam = s.green_minimizer.weights;
  const Eigen::VectorXd W = p.green->values * lam + p.field_on_a1();
  std::mt19937_64 rng(21);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd nu = random_feasible_plus(p, rng);
    REQUIRE((nu.array() <= p.xi_on_a1().array() + 1e-12).all());
    CHECK(W.dot(nu - lam) >= -1e-6 * W.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("signed constraint: slack sigma changes nothing, sigma below xi' is rejected") {
  const Problem& p = testing::small_disc_problem();
  DiscreteMeasure sw = p.sweeper->sweep(p.xi.xi);
  SignedConstraintResult r = solve_signed_constraint(p, sw);
  CHECK(r.relative_gap <= 0.02);
  DiscreteMeasure loose(p.cloud, 10.0 * sw.weights);
  CHECK(solve_signed_constraint(p, loose).relative_gap <= 1e-6);
  Eigen::VectorXd low = sw.weights;
  Eigen::Index top;
  low.maxCoeff(&top);
  low[top] *= 0.5;
  try {
    solve_signed_constraint(p, DiscreteMeasure(p.cloud, low));
    FAIL("sigma below xi' accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidSigma);
    CHECK(std::string(e.what()).find(std::to_string(top)) != std::string::npos);
  }
}

TEST_CASE("Frostman checks pass on the solution and fail on perturbed or scrambled points") {
  for (const Problem* p : {&testing::small_disc_problem(), &testing::small_ball_problem()}) {
    const Solution& s = bridge(*p);
    FrostmanReport ok = frostman_diagnostics(s, *p);
    CHECK(ok.pass);
    CHECK(ok.c == doctest::Approx(s.multiplier_c).epsilon(0.02));
    FrostmanReport bad = frostman_diagnostics(perturb_solution(s, *p, 0.05), *p);
    CHECK_FALSE(bad.pass);
    // Scramble lambda+ within the A1 nodes, keeping the box constraint by reusing xi's shape.
    Eigen::VectorXd plus = p->restrict_a1(s.lambda.plus.weights);
    std::mt19937_64 rng(4);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(plus.size()));
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<Eigen::Index>(i);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::VectorXd scr(plus.size());
    for (Eigen::Index i = 0; i < plus.size(); ++i) scr[i] = plus[perm[static_cast<std::size_t>(i)]];
    DiscreteMeasure sp(p->cloud, p->embed_a1(scr));
    SignedDiscreteMeasure scrambled(sp, p->sweeper->sweep(sp));
    FrostmanReport sc = frostman_diagnostics(scrambled, *p);
    CHECK(std::max({sc.maxviol_b1, sc.maxviol_b2, sc.maxviol_a2}) > 5 * sc.threshold);
  }
}

TEST_CASE("diagnostics are pure functions of their inputs") {
  const Problem& p = testing::small_disc_problem();
  const Solution& s = bridge(p);
  CHECK(nlohmann::json(frostman_diagnostics(s, p)) == nlohmann::json(frostman_diagnostics(s, p)));
  CHECK(nlohmann::json(zone_diagnostics(s, p)) == nlohmann::json(zone_diagnostics(s, p)));
  CHECK(nlohmann::json(support_diagnostics(s, p)) == nlohmann::json(support_diagnostics(s, p)));
}

TEST_CASE("zone and support diagnostics on the Newtonian disc problem") {
  const Problem& p = testing::small_disc_problem();
  const Solution& s = bridge(p);
  ZoneReport z = zone_diagnostics(s, p);
  CHECK(z.probe_max_ratio <= 1.02);
  CHECK(z.a2_probe_max_ratio <= 0.02);
  SupportReport sr = support_diagnostics(s, p);
  CHECK(sr.newtonian);
  CHECK(sr.boundary_mass_fraction >= 0.98);
}

TEST_CASE("alpha < 2 sweeps part of the mass off the boundary") {
  const Problem& p = testing::small_ball_problem();
  SupportReport sr = support_diagnostics(bridge(p), p);
  CHECK_FALSE(sr.newtonian);
  CHECK(sr.interior_mass > 0);
}

TEST_CASE("zone checks need a zero field") {
  DiscSeriesExample e;
  e.discs = 1;
  e.a1_nodes = 80;
  e.a2_nodes = 400;
  ProblemInputs in = disc_series_example_inputs(e);
  in.field = ProblemInputs::FieldKind::CaseI;
  in.field_values = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(in.a1.size()), 0.1);
  in.xi *= 2.0;
  Problem p = build_problem(in);
  Solution s = solve_riesz_via_bridge(p);
  CHECK_THROWS_AS(zone_diagnostics(s, p), Error);
  CHECK(frostman_diagnostics(s, p).pass);
  CHECK_THROWS_AS(duality_check(p, s), Error);
}

TEST_CASE("case II field from a point source") {
  DiscSeriesExample e;
  e.discs = 1;
  e.a1_nodes = 80;
  e.a2_nodes = 400;
  ProblemInputs in = disc_series_example_inputs(e);
  in.xi *= 2.0;
  in.field = ProblemInputs::FieldKind::CaseII;
  in.zeta_points.resize(1, 3);
  in.zeta_points << 2.0, 0.0, 0.0;
  in.zeta_weights = Eigen::VectorXd::Constant(1, 0.5);
  Problem p = build_problem(in);
  // f = U^zeta - U^zeta' is the Green potential of zeta: positive in D, about zero on A2.
  for (std::size_t i : p.a1_rows) CHECK(p.field.values[static_cast<Eigen::Index>(i)] > 0);
  Solution s = solve_riesz_via_bridge(p);
  CHECK(frostman_diagnostics(s, p).pass);
}

TEST_CASE("weighted median") {
  CHECK(weighted_median({1, 2, 3}, {1, 1, 1}) == 2);
  CHECK(weighted_median({1, 2, 3}, {0, 0, 5}) == 3);
  CHECK(weighted_median({5, 1}, {3, 1}) == 5);
}

TEST_CASE("duality on the Newtonian disc problem") {
  const Problem& p = testing::small_disc_problem();
  DualityReport r = duality_check(p, bridge(p));
  CHECK(r.theta_mass == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.q == doctest::Approx(1.0 / (p.xi.total - 1.0)));
  CHECK(r.objective_gap <= 0.02);
  CHECK(r.maxviol_wsc1 <= 0.02);
  CHECK(r.pass);
}
