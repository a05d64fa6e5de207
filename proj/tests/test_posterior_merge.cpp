#include "sacbma/posterior_merge.hpp"

#include <doctest.h>

#include <random>

using namespace sacbma;

namespace {

DensityGrid gaussian(double mean, double sd, Index points = 401, double width = 8.0)
{
  DensityGrid g;
  g.x = Vector::LinSpaced(points, mean - width * sd, mean + width * sd);
  g.density.resize(points);
  for (Index i = 0; i < points; ++i) {
    double const q = (g.x[i] - mean) / sd;
    g.density[i] = std::exp(-0.5 * q * q) / (sd * std::sqrt(2.0 * M_PI));
  }
  return g;
}

// Straightforward unweighted Gaussian KDE evaluated at given abscissae.
Vector unweighted_kde(std::vector<double> const &data, Vector const &at, double h)
{
  Vector out = Vector::Zero(at.size());
  for (Index i = 0; i < at.size(); ++i) {
    for (double d : data) {
      double const q = (at[i] - d) / h;
      out[i] += std::exp(-0.5 * q * q);
    }
    out[i] /= static_cast<double>(data.size()) * h * std::sqrt(2.0 * M_PI);
  }
  return out;
}

} // namespace

TEST_CASE("single input is reproduced")
{
  std::vector<DensityGrid> const one{gaussian(0.3, 1.2)};
  std::vector<double> const w{1.0};
  auto const merged = merge_marginals(one, w);
  CHECK((merged.grid.x - one[0].x).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((merged.grid.density - one[0].density).cwiseAbs().maxCoeff() <= 1e-6);

  // Two inputs with one negligible weight also reduce to the first input.
  std::vector<DensityGrid> const two{gaussian(0.3, 1.2), gaussian(50.0, 1.0)};
  std::vector<double> const w2{1.0, 0.0};
  auto const dropped = merge_marginals(two, w2);
  CHECK(dropped.grid.x[0] == doctest::Approx(two[0].x[0]));
  CHECK(dropped.grid.x[dropped.grid.size() - 1] == doctest::Approx(two[0].x[two[0].size() - 1]));
  CHECK(grid_mean(dropped.grid) == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("identical inputs give the same density")
{
  auto const g = gaussian(-1.0, 0.5);
  std::vector<DensityGrid> const grids{g, g};
  std::vector<double> const w{0.3, 0.7};
  auto const merged = merge_marginals(grids, w);
  MonotoneCubic const f(g.x, g.density);
  CHECK((merged.grid.density - f(merged.grid.x)).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(merged.renormalization == doctest::Approx(1.0).epsilon(5e-3));
}

TEST_CASE("gaussian mixture moments")
{
  std::vector<DensityGrid> const grids{gaussian(-2.0, 1.0), gaussian(2.0, 1.0)};
  std::vector<double> const w{0.5, 0.5};
  auto const merged = merge_marginals(grids, w);
  CHECK(std::abs(grid_mean(merged.grid)) <= 1e-3);
  double const variance = std::pow(grid_sd(merged.grid), 2);
  CHECK(std::abs(variance - 5.0) <= 1e-3);
  CHECK(integral(merged.grid) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(merged.renormalization - 1.0) <= 5e-3);
}

TEST_CASE("merging is linear")
{
  auto const a = gaussian(0.0, 1.0);
  auto const b = gaussian(1.0, 0.5);
  auto const c = gaussian(-0.5, 2.0);
  double const w = 0.35;
  double const outer = 0.6;
  std::vector<DensityGrid> const ab{a, b};
  std::vector<double> const wab{w, 1.0 - w};
  auto const inner = merge_marginals(ab, wab);
  std::vector<DensityGrid> const second{inner.grid, c};
  std::vector<double> const w2{outer, 1.0 - outer};
  auto const nested = merge_marginals(second, w2);
  std::vector<DensityGrid> const all{a, b, c};
  std::vector<double> const w3{outer * w, outer * (1.0 - w), 1.0 - outer};
  auto const direct = merge_marginals(all, w3);
  MonotoneCubic const f(direct.grid.x, direct.grid.density);
  CHECK((nested.grid.density - f(nested.grid.x)).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("merge errors")
{
  std::vector<DensityGrid> const grids{gaussian(0.0, 1.0), gaussian(1.0, 1.0)};
  std::vector<double> const short_w{1.0};
  CHECK_THROWS_AS(merge_marginals(grids, short_w), std::invalid_argument);
  std::vector<double> const negative{1.5, -0.5};
  CHECK_THROWS_AS(merge_marginals(grids, negative), std::invalid_argument);
  std::vector<double> const unnormalized{0.5, 0.6};
  CHECK_THROWS_AS(merge_marginals(grids, unnormalized), std::invalid_argument);
  CHECK_THROWS(merge_marginals({}, std::span<double const>{}));
}

TEST_CASE("weighted summaries")
{
  std::vector<double> const v{1.0, 3.0};
  std::vector<double> const half{0.5, 0.5};
  auto const s = weighted_summary(v, half);
  CHECK(s.mean == 2.0);
  CHECK(s.sd == 1.0);

  std::vector<double> const point{1.0, 0.0};
  auto const p = weighted_summary(v, point);
  CHECK(p.mean == 1.0);
  CHECK(p.sd == 0.0);
  CHECK(p.q50 == 1.0);

  // Type-4 convention on equal weights: F(x_k) = k / n, linear in between.
  std::vector<double> const five{5.0, 1.0, 4.0, 2.0, 3.0};
  std::vector<double> const equal(5, 0.2);
  CHECK(weighted_quantile(five, equal, 0.5) == doctest::Approx(2.5));
  CHECK(weighted_quantile(five, equal, 0.9) == doctest::Approx(4.5));
  CHECK(weighted_quantile(five, equal, 0.1) == doctest::Approx(1.0));

  CHECK_THROWS(weighted_summary({}, {}));
  std::vector<double> const ess_w{0.25, 0.25, 0.25, 0.25};
  CHECK(effective_sample_size(ess_w) == doctest::Approx(4.0));
}

TEST_CASE("1D weighted KDE")
{
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  std::vector<double> data(200);
  for (auto &d : data) { d = normal(rng); }
  std::vector<double> const equal(200, 1.0 / 200.0);
  auto const kde = weighted_kde_1d(data, equal);
  CHECK(kde.size() == 512);
  CHECK(integral(kde) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(kde.density.minCoeff() >= 0.0);

  double const h = 0.4;
  auto const fixed = weighted_kde_1d(data, equal, h);
  Vector const reference = unweighted_kde(data, fixed.x, h);
  // The library rescales to unit trapezoid mass; undo that before comparing.
  double const mass = trapezoid(fixed.x, reference);
  CHECK((fixed.density * mass - reference).cwiseAbs().maxCoeff() <= 1e-12);

  std::vector<double> const pts{0.0, 1.0, 2.0, 3.0};
  std::vector<double> const heavy{0.0, 0.0, 1.0, 0.0};
  auto const peak = weighted_kde_1d(pts, heavy, 0.3);
  Index arg = 0;
  peak.density.maxCoeff(&arg);
  double const step = peak.x[1] - peak.x[0];
  CHECK(std::abs(peak.x[arg] - 2.0) <= step);

  std::vector<double> const same{1.0, 1.0};
  std::vector<double> const w2{0.5, 0.5};
  CHECK_THROWS(weighted_kde_1d(same, w2));
}

TEST_CASE("2D weighted KDE")
{
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  std::vector<double> x(150), y(150), w(150);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = normal(rng);
    y[i] = 0.5 * x[i] + normal(rng);
    w[i] = std::exp(0.3 * normal(rng));
    total += w[i];
  }
  for (auto &v : w) { v /= total; }
  auto const s = weighted_kde_2d(x, y, w);
  CHECK(s.x.size() == 101);
  CHECK(s.density.minCoeff() >= 0.0);
  CHECK(double_trapezoid(s) == doctest::Approx(1.0).epsilon(5e-3));

  auto const swapped = weighted_kde_2d(y, x, w);
  CHECK((swapped.density - s.density.transpose()).cwiseAbs().maxCoeff() <= 1e-12);

  std::vector<double> const equal(150, 1.0 / 150.0);
  std::array<double, 2> const bw{0.5, 0.6};
  auto const fixed = weighted_kde_2d(x, y, equal, bw);
  Matrix reference = Matrix::Zero(101, 101);
  for (Index i = 0; i < 101; ++i) {
    for (Index j = 0; j < 101; ++j) {
      for (std::size_t k = 0; k < x.size(); ++k) {
        double const a = (fixed.x[i] - x[k]) / bw[0];
        double const b = (fixed.y[j] - y[k]) / bw[1];
        reference(i, j) += std::exp(-0.5 * (a * a + b * b));
      }
      reference(i, j) /= 150.0 * 2.0 * M_PI * bw[0] * bw[1];
    }
  }
  Surface2D raw = fixed;
  raw.density = reference;
  double const mass = double_trapezoid(raw);
  CHECK((fixed.density * mass - reference).cwiseAbs().maxCoeff() <= 1e-12);

  std::vector<double> const px{0.0, 1.0, 2.0};
  std::vector<double> const py{0.0, -1.0, 1.0};
  std::vector<double> const heavy{0.02, 0.96, 0.02};
  auto const peak = weighted_kde_2d(px, py, heavy, std::array<double, 2>{0.3, 0.3});
  Index r = 0, c = 0;
  peak.density.maxCoeff(&r, &c);
  CHECK(std::abs(peak.x[r] - 1.0) <= 2.0 * (peak.x[1] - peak.x[0]));
  CHECK(std::abs(peak.y[c] + 1.0) <= 2.0 * (peak.y[1] - peak.y[0]));

  std::vector<double> const flat{1.0, 1.0, 1.0};
  CHECK_THROWS(weighted_kde_2d(px, flat, heavy));
}
