#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "condenser/balayage.hpp"
#include "condenser/error.hpp"
#include "helpers.hpp"

using namespace condenser;

namespace {

DiscreteMeasure random_a1_measure(const Problem& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.cloud->size()));
  for (std::size_t i : p.a1_rows) w[static_cast<Eigen::Index>(i)] = u(rng);
  return DiscreteMeasure(p.cloud, w / w.sum());
}

}  // namespace

TEST_CASE("balayage lives on A2, keeps the mass and the potential there") {
  for (const Problem* p : {&testing::small_disc_problem(), &testing::small_ball_problem()}) {
    DiscreteMeasure mu = random_a1_measure(*p, 3);
    DiscreteMeasure sw = p->sweeper->sweep(mu);
    for (std::size_t i : p->a1_rows) CHECK(sw.weights[static_cast<Eigen::Index>(i)] == 0.0);
    CHECK(sw.mass() == doctest::Approx(1.0).epsilon(0.02));
    const Eigen::VectorXd gap = p->riesz->values * (mu.weights - sw.weights);
    for (std::size_t i : p->a2_rows) {
      const auto k = static_cast<Eigen::Index>(i);
      // Projection conditions: U^mu' >= U^mu on A2 with equality on the support of mu'.
      CHECK(gap[k] <= 1e-6);
      if (sw.weights[k] > 1e-9) CHECK(std::abs(gap[k]) <= 1e-6);
    }
  }
}

TEST_CASE("a measure already on A2 is its own balayage") {
  const Problem& p = testing::small_disc_problem();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.cloud->size()));
  for (std::size_t k = 0; k < p.a2_rows.size(); k += 7) w[static_cast<Eigen::Index>(p.a2_rows[k])] = 1.0;
  DiscreteMeasure mu(p.cloud, w);
  CHECK((p.sweeper->sweep(mu).weights - w).norm() <= 1e-7 * w.norm());
}

TEST_CASE("Green energy identity agrees with the closed-form Green matrix") {
  const Problem& p = testing::small_disc_problem();
  for (std::uint64_t s : {1u, 2u, 3u}) {
    DiscreteMeasure mu = random_a1_measure(p, s);
    GreenEnergyParts parts;
    const double g = green_energy_via_identity(mu, *p.sweeper, &parts);
    CHECK(parts.difference_norm == doctest::Approx(parts.difference_of_norms).epsilon(1e-8));
    const Eigen::VectorXd w1 = p.restrict_a1(mu.weights);
    CHECK(g == doctest::Approx(w1.dot(p.green->values * w1)).epsilon(0.05));
    CHECK(g > 0);
    CHECK(g < parts.riesz_energy);
  }
}

TEST_CASE("equilibrium measure of two symmetric nodes") {
  auto cloud = std::make_shared<PointCloud>();
  cloud->dim = 3;
  cloud->points.resize(2, 3);
  cloud->points << 1, 0, 0, 1, 2, 0;
  cloud->cell_radius = {0.5, 0.5};
  cloud->plate = {Plate::A1, Plate::A1};
  cloud->cell_dim = {2, 2};
  cloud->part = {0, 0};
  KernelMatrix K = assemble(KernelKind::riesz(2.0, 3), cloud, DiagonalRule{});
  EquilibriumResult eq = equilibrium_measure({0, 1}, K);
  CHECK(eq.measure.weights[0] == doctest::Approx(0.5));
  CHECK(eq.capacity == doctest::Approx(2.0 / (K.values(0, 0) + K.values(0, 1))).epsilon(1e-9));
}

TEST_CASE("unit-disc capacity approaches 2/pi") {
  // Newtonian capacity of a flat disc of radius r is 2r/pi (kernel 1/|x - y|).
  const double c = disc_capacity(1.0, 2000, 2.0, DiagonalRule{});
  CHECK(c == doctest::Approx(2.0 / std::numbers::pi).epsilon(0.01));
  CHECK(disc_capacity(2.0, 800, 2.0, DiagonalRule{}) ==
        doctest::Approx(2.0 * disc_capacity(1.0, 800, 2.0, DiagonalRule{})).epsilon(0.01));
}

TEST_CASE("Newtonian ball capacity is the radius") {
  // Riesz alpha-capacity of the unit ball: Gamma(n/2) / (Gamma(alpha/2) Gamma(n/2 + 1 - alpha/2)) = 1 at alpha = 2.
  // FCC nodes sit one cell radius inside, so the discrete value is low by a few percent.
  const double c = ball_capacity(1.0, 2000, 2.0, DiagonalRule{});
  CHECK(c < 1.0);
  CHECK(c > 0.85);
}

TEST_CASE("point-charge balayage in the half-space sits on the boundary plane") {
  const Problem& p = testing::small_disc_problem();
  DiscreteMeasure eps = dirac_balayage(Eigen::Vector3d(0.8, 0.2, -0.1), p.domain, *p.sweeper);
  double on_plane = 0;
  for (std::size_t i : p.a2_rows)
    if (p.domain.boundary_distance(p.cloud->point(i)) <= p.cloud->cell_radius[i])
      on_plane += eps.weights[static_cast<Eigen::Index>(i)];
  CHECK(on_plane / eps.mass() >= 0.98);
  CHECK(eps.mass() == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("numeric Green kernel agrees with the method of images") {
  const Problem& p = testing::small_disc_problem();
  Point x = Eigen::Vector3d(1.0, 0.3, 0.0), y = Eigen::Vector3d(0.5, -0.6, 0.4);
  CHECK(green_kernel_numeric(x, y, p.domain, *p.sweeper) ==
        doctest::Approx(green_kernel_halfspace(x, y, 3)).epsilon(0.03));
}
