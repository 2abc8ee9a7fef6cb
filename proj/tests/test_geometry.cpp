#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "condenser/error.hpp"
#include "condenser/geometry.hpp"

using namespace condenser;

namespace {

PointCloud disc_cloud(int nodes, std::uint64_t seed = 0) {
  Domain d = Domain::half_space(3, 2.0);
  PlateSpec s;
  s.which = Plate::A1;
  s.shape = DiscStack{{Disc{1.0, 1.0, 0}, Disc{0.5, 2.0, 0}}};
  s.node_count = nodes;
  s.seed = seed;
  return discretize(d, s);
}

}  // namespace

TEST_CASE("domains validate their parameters") {
  CHECK_THROWS_AS(Domain::half_space(2, 2.0).validate(), Error);
  CHECK_THROWS_AS(Domain::half_space(3, 2.5).validate(), Error);
  CHECK_THROWS_AS(Domain::half_space(3, 0.0).validate(), Error);
  CHECK_THROWS_AS(Domain::ball(Point::Zero(3), -1.0, 2.0).validate(), Error);
  CHECK_NOTHROW(Domain::ball(Point::Zero(3), 1.0, 1.5).validate());
}

TEST_CASE("membership and depth") {
  Domain h = Domain::half_space(3, 2.0);
  CHECK(h.contains(Eigen::Vector3d(0.1, 5, 5)));
  CHECK(h.in_complement(Eigen::Vector3d(0.0, 1, 1)));
  CHECK(h.signed_depth(Eigen::Vector3d(-0.25, 0, 0)) == doctest::Approx(-0.25));
  Domain b = Domain::ball(Point::Zero(3), 2.0, 1.5);
  CHECK(b.contains(Eigen::Vector3d(1.9, 0, 0)));
  CHECK(b.in_complement(Eigen::Vector3d(2.0, 0, 0)));
  CHECK(b.boundary_distance(Eigen::Vector3d(0, 3, 0)) == doctest::Approx(1.0));
}

TEST_CASE("reflection and Kelvin images are involutions") {
  Domain h = Domain::half_space(3, 2.0);
  Point x = Eigen::Vector3d(0.3, -1.2, 2.0);
  Point r = reflect_across_boundary(h, x);
  CHECK(r[0] == doctest::Approx(-0.3));
  CHECK((reflect_across_boundary(h, r) - x).norm() < 1e-15);
  Domain b = Domain::ball(Eigen::Vector3d(1, 0, 0), 2.0, 2.0);
  Point y = Eigen::Vector3d(1.5, 0.5, -0.2);
  Point k = kelvin_image(b, y);
  CHECK((y - b.center).norm() * (k - b.center).norm() == doctest::Approx(4.0));
  CHECK((kelvin_image(b, k) - y).norm() < 1e-12);
  CHECK_THROWS_AS(reflect_across_boundary(b, y), Error);
}

TEST_CASE("disc stacks land on their planes with per-disc parts") {
  PointCloud c = disc_cloud(300);
  CHECK(c.size() == 300);
  std::set<int> parts(c.part.begin(), c.part.end());
  CHECK(parts == std::set<int>{0, 1});
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double x1 = c.points(static_cast<Eigen::Index>(i), 0);
    const double rho = std::hypot(c.points(static_cast<Eigen::Index>(i), 1), c.points(static_cast<Eigen::Index>(i), 2));
    if (c.part[i] == 0) {
      CHECK(x1 == doctest::Approx(1.0));
      CHECK(rho <= 1.0 + 1e-12);
    } else {
      CHECK(x1 == doctest::Approx(0.5));
      CHECK(rho <= 2.0 + 1e-12);
    }
    CHECK(c.cell_radius[i] > 0);
    CHECK(c.plate[i] == Plate::A1);
  }
}

TEST_CASE("cell radii are half the nearest same-part spacing") {
  PointCloud c = disc_cloud(200);
  for (std::size_t i = 0; i < c.size(); i += 17) {
    double best = 1e300;
    for (std::size_t j = 0; j < c.size(); ++j)
      if (j != i && c.part[j] == c.part[i]) best = std::min(best, (c.point(i) - c.point(j)).norm());
    CHECK(c.cell_radius[i] == doctest::Approx(best / 2).epsilon(1e-12));
  }
}

TEST_CASE("cells tile the disc area") {
  Domain d = Domain::half_space(3, 2.0);
  PlateSpec s;
  s.which = Plate::A1;
  s.shape = DiscStack{{Disc{1.0, 1.0, 0}}};
  s.node_count = 1500;
  PointCloud c = discretize(d, s);
  double area = 0;
  for (std::size_t i = 0; i < c.size(); ++i) area += c.cell_measure(i);
  CHECK(area == doctest::Approx(plate_measure(d, s)).epsilon(0.08));
  CHECK(plate_measure(d, s) == doctest::Approx(std::numbers::pi));
}

TEST_CASE("discretization is a pure function of the plate description") {
  PointCloud a = disc_cloud(250, 3), b = disc_cloud(250, 3);
  CHECK(a.points == b.points);
  CHECK(a.cell_radius == b.cell_radius);
}

TEST_CASE("ball interior and complement shell") {
  Domain d = Domain::ball(Point::Zero(3), 1.0, 1.5);
  PlateSpec s1;
  s1.which = Plate::A1;
  s1.shape = BallInterior{};
  s1.node_count = 400;
  PointCloud a1 = discretize(d, s1);
  for (std::size_t i = 0; i < a1.size(); ++i) CHECK(d.contains(a1.point(i)));
  PlateSpec s2;
  s2.which = Plate::A2;
  AnnulusOnBoundary sh;
  sh.outer_radius = 8.0;
  s2.shape = sh;
  s2.node_count = 800;
  PointCloud a2 = discretize(d, s2);
  std::size_t on_sphere = 0;
  for (std::size_t i = 0; i < a2.size(); ++i) {
    CHECK(d.in_complement(a2.point(i)));
    CHECK(a2.point(i).norm() <= 8.0 + 1e-9);
    if (std::abs(a2.point(i).norm() - 1.0) < 1e-12) ++on_sphere;
  }
  CHECK(on_sphere > 0);
  PointCloud both = PointCloud::concat(a1, a2);
  CHECK(both.size() == a1.size() + a2.size());
  CHECK(both.count(Plate::A1) == a1.size());
  CHECK(*std::min_element(both.part.begin() + static_cast<long>(a1.size()), both.part.end()) >
        *std::max_element(a1.part.begin(), a1.part.end()));
}

TEST_CASE("A2 shells need a resolved outer radius and A1 must lie in D") {
  Domain d = Domain::ball(Point::Zero(3), 1.0, 1.5);
  PlateSpec s;
  s.which = Plate::A2;
  s.shape = AnnulusOnBoundary{};
  s.node_count = 100;
  CHECK_THROWS_AS(discretize(d, s), Error);
  PlateSpec c;
  c.which = Plate::A1;
  c.shape = Custom{{Eigen::Vector3d(2, 0, 0)}};
  c.node_count = 1;
  CHECK_THROWS_AS(discretize(d, c), Error);
}
