#include "sacbma/grid.hpp"

#include <doctest.h>

using namespace sacbma;

TEST_CASE("internal transform")
{
  CHECK(to_internal(0.0) == 0.0);
  CHECK(to_internal(0.5) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
  CHECK(from_internal(0.0) == 0.0);
  CHECK(std::abs(from_internal(to_internal(0.93)) - 0.93) <= 1e-12);
  for (double x = -0.999; x <= 0.999; x += 0.001) { CHECK(std::abs(from_internal(to_internal(x)) - x) <= 1e-12); }
  CHECK_THROWS_AS(to_internal(1.0), std::domain_error);
  CHECK_THROWS_AS(to_internal(-1.5), std::domain_error);

  // Extended precision reference for gamma = 40.
  long double const reference = 2.0L * std::exp(-40.0L) / (1.0L + std::exp(-40.0L));
  CHECK(std::abs(one_minus_from_internal(40.0) - static_cast<double>(reference)) <= 1e-30);
  CHECK(from_internal(40.0) < 1.0);
  CHECK(from_internal(-40.0) > -1.0);
  CHECK(std::isfinite(from_internal(1e6)));
  CHECK(from_internal(1000.0) < 1.0);

  double previous = -1.0;
  for (double g = -30.0; g <= 30.0; g += 0.01) {
    double const x = from_internal(g);
    CHECK(x >= previous);
    previous = x;
  }
}

TEST_CASE("delta-method variance")
{
  CHECK(delta_variance(0.0, 0.1) == doctest::Approx(0.04).epsilon(1e-14));
  CHECK(std::abs(delta_variance(0.93, 0.02) - 0.08766) <= 1e-5);
  CHECK(std::abs(delta_variance(0.09, 0.10) - 0.04066) <= 1e-5);
  CHECK_THROWS(delta_variance(1.0, 0.1));
  CHECK_THROWS(delta_variance(0.5, 0.0));
}

TEST_CASE("internal prior")
{
  CHECK(internal_log_prior(0.0) == std::log(0.25));
  CHECK(std::exp(internal_log_prior(0.0)) == 0.25);
  for (double g : {0.3, 1.7, 9.0, 35.0}) { CHECK(internal_log_prior(g) == doctest::Approx(internal_log_prior(-g))); }
  Vector const grid = Vector::LinSpaced(30001, -15.0, 15.0);
  double mass = 0.0;
  for (Index i = 1; i < grid.size(); ++i) {
    mass += 0.5 * (grid[i] - grid[i - 1]) * (std::exp(internal_log_prior(grid[i])) + std::exp(internal_log_prior(grid[i - 1])));
  }
  CHECK(std::abs(mass - 1.0) <= 1e-3);
  CHECK(std::isfinite(internal_log_prior(800.0)));

  auto const beta = AutocorrelationPrior::scaled_beta(2.0, 2.0);
  // Beta(2,2) on (-1,1) has density 0.75 at 0, times the Jacobian 0.5.
  CHECK(internal_log_prior(0.0, beta) == doctest::Approx(std::log(0.375)));
}

TEST_CASE("lattice construction")
{
  GridSpec spec;
  spec.dims = {2, 2};
  auto const points = build_grid(spec);
  REQUIRE(points.size() == 4);
  CHECK(points[0].internal.gamma1 == -3.0);
  CHECK(points[0].internal.gamma2 == -3.0);
  CHECK(points[1].internal.gamma1 == -3.0);
  CHECK(points[1].internal.gamma2 == 3.0);
  CHECK(points[3].internal.gamma1 == 3.0);
  CHECK(points[3].lambda == doctest::Approx(from_internal(3.0)));
  CHECK(points[2].rho_index == 1);

  spec.dims = {160, 40};
  CHECK(build_grid(spec).size() == 6400);
  spec.dims = {40, 20};
  CHECK(build_grid(spec).size() == 800);

  spec.dims = {1, 1};
  spec.center = {0.4, -0.2};
  auto const single = build_grid(spec);
  REQUIRE(single.size() == 1);
  CHECK(single[0].internal.gamma1 == 0.4);

  GridSpec bad;
  bad.internal_sds = {0.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.internal_sds = {1.0, 1.0};
  bad.dims = {0, 3};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  auto const published = GridSpec::from_estimates(0.93, 0.02, 0.09, 0.10, {160, 40});
  CHECK(published.center.gamma1 == doctest::Approx(to_internal(0.93)));
  CHECK(published.internal_sds[0] == doctest::Approx(std::sqrt(delta_variance(0.93, 0.02))));
}

namespace {

std::vector<GridPoint> with_logs(std::vector<double> const &logs)
{
  std::vector<GridPoint> points(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) { points[i].log_evidence = logs[i]; }
  return points;
}

} // namespace

TEST_CASE("softmax weights")
{
  auto const two = compute_weights(with_logs({-10.0, -12.0}));
  CHECK(two[0].weight == doctest::Approx(0.8808).epsilon(1e-4));
  CHECK(two[1].weight == doctest::Approx(0.1192).epsilon(1e-3));
  CHECK(std::abs(two[0].weight - 1.0 / (1.0 + std::exp(-2.0))) <= 1e-15);

  auto const flat = compute_weights(with_logs({3.0, 3.0, 3.0, 3.0, 3.0}));
  for (auto const &p : flat) { CHECK(p.weight == doctest::Approx(0.2).epsilon(1e-15)); }

  // Dyadic values and shifts keep the shifted inputs exact.
  std::vector<double> logs{-1000.0, -1003.5, -999.25, -1010.0};
  auto const base = compute_weights(with_logs(logs));
  for (double shift : {1024.0, -5e4, 123.375}) {
    std::vector<double> shifted = logs;
    for (auto &v : shifted) { v += shift; }
    auto const moved = compute_weights(with_logs(shifted));
    for (std::size_t i = 0; i < logs.size(); ++i) { CHECK(std::abs(moved[i].weight - base[i].weight) <= 1e-15); }
  }

  CHECK_THROWS(compute_weights(with_logs({-INFINITY, -INFINITY})));
  CHECK_THROWS(compute_weights(with_logs({0.0, NAN})));
  CHECK_THROWS(compute_weights({}));
  auto const partial = compute_weights(with_logs({-INFINITY, 0.0}));
  CHECK(partial[0].weight == 0.0);
  CHECK(partial[1].weight == 1.0);
}

TEST_CASE("boundary mass and nearest node")
{
  GridSpec spec;
  spec.dims = {5, 4};
  auto points = build_grid(spec);
  for (auto &p : points) { p.log_evidence = -(p.internal.gamma1 * p.internal.gamma1 + p.internal.gamma2 * p.internal.gamma2); }
  points = compute_weights(points);
  double ring = 0.0;
  for (auto const &p : points) {
    if (p.rho_index == 0 || p.rho_index == 4 || p.lambda_index == 0 || p.lambda_index == 3) { ring += p.weight; }
  }
  CHECK(boundary_mass(points, spec.dims) == doctest::Approx(ring).epsilon(1e-14));

  Eigen::Matrix2d precision;
  precision << 4.0, 0.0, 0.0, 0.25;
  Index const k = nearest_node(points, {1.4, 0.9}, precision);
  CHECK(points[static_cast<std::size_t>(k)].internal.gamma1 == doctest::Approx(1.5));
  CHECK(points[static_cast<std::size_t>(k)].internal.gamma2 == doctest::Approx(1.0));
}
