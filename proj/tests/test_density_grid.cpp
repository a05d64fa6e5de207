#include "sacbma/density_grid.hpp"

#include <doctest.h>

using namespace sacbma;

namespace {

DensityGrid gaussian(double mean, double sd, Index points = 801)
{
  DensityGrid g;
  g.x = Vector::LinSpaced(points, mean - 8.0 * sd, mean + 8.0 * sd);
  g.density = ((g.x.array() - mean) / sd).square().unaryExpr([&](double q) {
    return std::exp(-0.5 * q) / (sd * std::sqrt(2.0 * M_PI));
  });
  return g;
}

} // namespace

TEST_CASE("gaussian grid moments")
{
  auto const g = gaussian(1.5, 0.3);
  CHECK(integral(g) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(grid_mean(g) == doctest::Approx(1.5).epsilon(1e-8));
  CHECK(grid_sd(g) == doctest::Approx(0.3).epsilon(1e-4));
  CHECK(grid_quantile(g, 0.5) == doctest::Approx(1.5).epsilon(1e-8));
  CHECK(grid_quantile(g, 0.975) == doctest::Approx(1.5 + 1.959964 * 0.3).epsilon(1e-4));
  CHECK(grid_quantile(g, 0.0) == g.x[0]);
}

TEST_CASE("validation")
{
  DensityGrid bad;
  bad.x = Vector{{0.0, 0.0, 1.0}};
  bad.density = Vector{{1.0, 1.0, 1.0}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.x = Vector{{0.0, 0.5, 1.0}};
  bad.density = Vector{{1.0, -1.0, 1.0}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.density = Vector{{1.0, 1.0}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("point mass")
{
  auto const p = DensityGrid::point_mass(2.0);
  CHECK(integral(p) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(grid_mean(p) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(grid_sd(p) < 1e-8);
}

TEST_CASE("rescaling is a change of variables")
{
  auto const g = gaussian(1.0, 0.2);
  auto const up = rescale(g, 3.0);
  CHECK(integral(up) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(grid_mean(up) == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(grid_sd(up) == doctest::Approx(0.6).epsilon(1e-4));

  auto const flipped = rescale(g, -0.5);
  flipped.validate();
  CHECK(grid_mean(flipped) == doctest::Approx(-0.5).epsilon(1e-8));
  CHECK(integral(flipped) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS(rescale(g, 0.0));
}

TEST_CASE("normalization")
{
  auto g = gaussian(0.0, 1.0);
  g.density *= 3.0;
  auto const n = normalized(g);
  CHECK(integral(n) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("monotone cubic interpolation")
{
  Vector const x = Vector::LinSpaced(11, 0.0, 1.0);
  Vector const y = x.array().square();
  MonotoneCubic const f(x, y);
  CHECK(f(0.5) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(f(0.55) == doctest::Approx(0.3025).epsilon(1e-3));
  CHECK(f(-0.1) == 0.0);
  CHECK(f(1.1) == 0.0);

  // No overshoot on a step.
  Vector const step{{0.0, 0.0, 0.0, 1.0, 1.0, 1.0}};
  MonotoneCubic const s(Vector::LinSpaced(6, 0.0, 5.0), step);
  Vector const at = Vector::LinSpaced(501, 0.0, 5.0);
  Vector const v = s(at);
  CHECK(v.minCoeff() >= 0.0);
  CHECK(v.maxCoeff() <= 1.0);
  for (Index i = 1; i < v.size(); ++i) { CHECK(v[i] >= v[i - 1] - 1e-15); }
}
