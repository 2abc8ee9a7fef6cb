#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "condenser/error.hpp"
#include "condenser/measures.hpp"
#include "condenser/qp.hpp"
#include "helpers.hpp"

using namespace condenser;

TEST_CASE("measures reject bad weights") {
  const Problem& p = testing::small_disc_problem();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.cloud->size()));
  w[0] = -1e-3;
  CHECK_THROWS_AS(DiscreteMeasure(p.cloud, w), Error);
  w[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(DiscreteMeasure(p.cloud, w), Error);
  CHECK_THROWS_AS(DiscreteMeasure(p.cloud, Eigen::VectorXd::Zero(3)), Error);
}

TEST_CASE("signed measures keep their parts on the right plates") {
  const Problem& p = testing::small_disc_problem();
  auto plus = DiscreteMeasure::dirac(p.cloud, p.a1_rows[0]);
  auto minus = DiscreteMeasure::dirac(p.cloud, p.a2_rows[0]);
  CHECK_NOTHROW(SignedDiscreteMeasure(plus, minus));
  CHECK_THROWS_AS(SignedDiscreteMeasure(minus, plus), Error);
}

TEST_CASE("constraint mass must exceed one") {
  const Problem& p = testing::small_disc_problem();
  Eigen::VectorXd xi = p.xi.xi.weights;
  auto with_total = [&](double t) { return ConstraintMeasure(DiscreteMeasure(p.cloud, xi * (t / xi.sum()))); };
  CHECK_THROWS_AS(with_total(0.9), Error);
  try {
    with_total(1.0 + 1e-12);
    FAIL("degenerate constraint accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateConstraint);
  }
  CHECK(with_total(1.5).total == doctest::Approx(1.5));
}

TEST_CASE("energy is a symmetric positive bilinear form") {
  const Problem& p = testing::small_disc_problem();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  const auto n = static_cast<Eigen::Index>(p.cloud->size());
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n), b = a;
  for (std::size_t i : p.a1_rows) {
    a[static_cast<Eigen::Index>(i)] = u(rng);
    b[static_cast<Eigen::Index>(i)] = u(rng);
  }
  DiscreteMeasure ma(p.cloud, a), mb(p.cloud, b);
  CHECK(energy(ma, mb, *p.riesz) == doctest::Approx(energy(mb, ma, *p.riesz)).epsilon(1e-12));
  CHECK(energy(ma, ma, *p.riesz) > 0);
  CHECK(potential(ma, *p.riesz).dot(b) == doctest::Approx(energy(ma, mb, *p.riesz)).epsilon(1e-12));
}

TEST_CASE("QP on the simplex matches the closed form") {
  // minimize x'Hx on {x >= 0, x1 + x2 = 1}: x1 = (H22 - H12) / (H11 + H22 - 2 H12).
  Eigen::MatrixXd H(2, 2);
  H << 2.0, 0.5, 0.5, 1.0;
  qp::Problem prob;
  prob.H = &H;
  prob.c = Eigen::VectorXd::Zero(2);
  prob.upper = Eigen::VectorXd::Constant(2, std::numeric_limits<double>::infinity());
  prob.group = {0, 0};
  prob.target = Eigen::VectorXd::Constant(1, 1.0);
  qp::Result r = qp::solve(prob);
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(0.5 / 2.0).epsilon(1e-7));
  CHECK(r.x.sum() == doctest::Approx(1.0));
}

TEST_CASE("QP box constraints bind and the objective log never increases") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  const int n = 40;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = g(rng);
  Eigen::MatrixXd H = A * A.transpose() / n + Eigen::MatrixXd::Identity(n, n) * 0.1;
  qp::Problem prob;
  prob.H = &H;
  prob.c = Eigen::VectorXd::NullaryExpr(n, [&] { return g(rng); });
  prob.upper = Eigen::VectorXd::Constant(n, 0.05);
  prob.group.assign(n, 0);
  prob.target = Eigen::VectorXd::Constant(1, 1.0);
  qp::Result r = qp::solve(prob);
  CHECK(r.converged);
  CHECK(r.x.sum() == doctest::Approx(1.0));
  CHECK(r.x.maxCoeff() <= 0.05 + 1e-12);
  CHECK(r.x.minCoeff() >= 0.0);
  for (std::size_t k = 1; k < r.objective_log.size(); ++k) CHECK(r.objective_log[k] <= r.objective_log[k - 1] + 1e-12);
  // Any other feasible point is no better.
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd y = qp::project(prob, r.x + 0.01 * Eigen::VectorXd::NullaryExpr(n, [&] { return g(rng); }));
    CHECK(qp::objective(prob, y) >= r.objective - 1e-9);
  }
}

TEST_CASE("QP reports infeasible targets") {
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(3, 3);
  qp::Problem prob;
  prob.H = &H;
  prob.c = Eigen::VectorXd::Zero(3);
  prob.upper = Eigen::VectorXd::Constant(3, 0.2);
  prob.group = {0, 0, 0};
  prob.target = Eigen::VectorXd::Constant(1, 1.0);
  CHECK_THROWS_AS(qp::solve(prob), Error);
}
