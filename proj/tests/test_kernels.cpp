#include <doctest.h>

#include <cmath>
#include <numbers>

#include "condenser/error.hpp"
#include "condenser/kernels.hpp"

using namespace condenser;

TEST_CASE("Riesz kernel values") {
  Point x = Eigen::Vector3d(0, 0, 0), y = Eigen::Vector3d(0, 3, 4);
  CHECK(riesz_kernel(x, y, 2.0, 3) == doctest::Approx(0.2));
  CHECK(riesz_kernel(x, y, 1.5, 3) == doctest::Approx(std::pow(5.0, -1.5)));
  CHECK_THROWS_AS(riesz_kernel(x, x, 2.0, 3), Error);
  CHECK_THROWS_AS(riesz_kernel(x, y, 3.0, 3), Error);
  CHECK_THROWS_AS(riesz_kernel(x, Eigen::Vector2d(1, 1), 2.0, 3), Error);
}

TEST_CASE("half-space Green kernel is the method of images") {
  Point x = Eigen::Vector3d(0.7, 0.1, -0.3), y = Eigen::Vector3d(1.3, -0.4, 0.2);
  Point ys = y;
  ys[0] = -y[0];
  const double expect = 1.0 / (x - y).norm() - 1.0 / (x - ys).norm();
  CHECK(green_kernel_halfspace(x, y, 3) == doctest::Approx(expect).epsilon(1e-13));
  CHECK(green_kernel_halfspace(x, y, 3) == doctest::Approx(green_kernel_halfspace(y, x, 3)).epsilon(1e-14));
  CHECK(green_kernel_halfspace(x, y, 3) > 0);
  CHECK_THROWS_AS(green_kernel_halfspace(Eigen::Vector3d(0, 0, 0), y, 3), Error);
}

TEST_CASE("half-space Green kernel vanishes at the boundary without cancellation") {
  Point y = Eigen::Vector3d(1.0, 0.0, 0.0);
  double prev = 1e300;
  for (double h : {1e-2, 1e-4, 1e-6, 1e-8}) {
    Point x = Eigen::Vector3d(h, 0.5, 0.0);
    const double g = green_kernel_halfspace(x, y, 3);
    // g ~ 2 h y1 / |x - y|^3 for small h.
    const double lead = 2 * h * y[0] / std::pow((x - y).norm(), 3);
    CHECK(g == doctest::Approx(lead).epsilon(2 * h + 1e-9));
    CHECK(g < prev);
    prev = g;
  }
}

TEST_CASE("ball Green kernel matches the Kelvin form") {
  Domain b = Domain::ball(Point::Zero(3), 2.0, 2.0);
  Point x = Eigen::Vector3d(0.5, -0.2, 0.9), y = Eigen::Vector3d(-1.1, 0.3, 0.4);
  const double R = 2.0;
  Point ystar = (R * R / y.squaredNorm()) * y;
  const double expect = 1.0 / (x - y).norm() - (R / y.norm()) / (x - ystar).norm();
  CHECK(green_kernel_ball_newtonian(x, y, b) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(green_kernel_ball_newtonian(x, y, b) == doctest::Approx(green_kernel_ball_newtonian(y, x, b)).epsilon(1e-13));
  CHECK_THROWS_AS(green_kernel_ball_newtonian(Eigen::Vector3d(3, 0, 0), y, b), Error);
}

TEST_CASE("assembled matrices follow the diagonal rule") {
  auto cloud = std::make_shared<PointCloud>();
  cloud->dim = 3;
  cloud->points.resize(3, 3);
  cloud->points << 1, 0, 0, 1, 1, 0, 2, 0, 1;
  cloud->cell_radius = {0.5, 0.5, 0.25};
  cloud->plate = {Plate::A1, Plate::A1, Plate::A1};
  cloud->cell_dim = {2, 2, 2};
  cloud->part = {0, 0, 0};
  DiagonalRule rule{0.54};
  KernelMatrix K = assemble(KernelKind::riesz(1.5, 3), cloud, rule);
  CHECK(K.values(0, 1) == doctest::Approx(1.0));
  CHECK(K.values(0, 2) == doctest::Approx(std::pow(std::sqrt(2.0), -1.5)));
  CHECK(K.values(2, 2) == doctest::Approx(std::pow(0.54 * 0.25, -1.5)));
  CHECK((K.values - K.values.transpose()).norm() == 0.0);
  KernelMatrix G = assemble(KernelKind::green(Domain::half_space(3, 2.0)), cloud, rule);
  CHECK(G.values(0, 1) == doctest::Approx(green_kernel_halfspace(cloud->point(0), cloud->point(1), 3)));
  CHECK(G.values(1, 1) < K.values(1, 1));  // the image lowers the self-term
  CHECK_THROWS_AS(assemble(KernelKind::green(Domain::half_space(3, 1.5)), cloud, rule), Error);
  CHECK_THROWS_AS(assemble(KernelKind::riesz(2.0, 3), cloud, DiagonalRule{0.0}), Error);
}

TEST_CASE("coincident nodes are rejected") {
  auto cloud = std::make_shared<PointCloud>();
  cloud->dim = 3;
  cloud->points.resize(2, 3);
  cloud->points << 1, 0, 0, 1, 0, 0;
  cloud->cell_radius = {0.5, 0.5};
  cloud->plate = {Plate::A1, Plate::A1};
  cloud->cell_dim = {2, 2};
  cloud->part = {0, 0};
  CHECK_THROWS_AS(assemble(KernelKind::riesz(2.0, 3), cloud, DiagonalRule{}), Error);
}

TEST_CASE("Riesz matrices of a disc are positive definite") {
  Domain d = Domain::half_space(3, 2.0);
  PlateSpec s;
  s.which = Plate::A1;
  s.shape = DiscStack{{Disc{1.0, 1.0, 0}}};
  s.node_count = 300;
  auto cloud = std::make_shared<PointCloud>(discretize(d, s));
  for (double alpha : {1.0, 1.5, 2.0}) CHECK(assemble(KernelKind::riesz(alpha, 3), cloud, DiagonalRule{}).is_positive_definite());
  CHECK(assemble(KernelKind::green(d), cloud, DiagonalRule{}).is_positive_definite());
}
