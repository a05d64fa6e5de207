#include "sacbma/posterior_merge.hpp"

#include <numeric>
#include <stdexcept>

namespace sacbma {

namespace {

void check_weights(std::span<double const> weights, std::size_t expected)
{
  if (weights.size() != expected) { throw std::invalid_argument("weights and inputs have different lengths"); }
  if (weights.empty()) { throw std::invalid_argument("empty input"); }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) { throw std::invalid_argument("negative weight"); }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-8) { throw std::invalid_argument("weights must sum to 1"); }
}

double gaussian(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

std::pair<double, double> weighted_range(std::span<double const> points, std::span<double const> weights)
{
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (weights[i] <= 1e-12) { continue; }
    lo = std::min(lo, points[i]);
    hi = std::max(hi, points[i]);
  }
  return {lo, hi};
}

double weighted_sd(std::span<double const> points, std::span<double const> weights)
{
  double mean = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) { mean += weights[i] * points[i]; }
  double var = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) { var += weights[i] * (points[i] - mean) * (points[i] - mean); }
  return std::sqrt(std::max(var, 0.0));
}

void check_spread(std::span<double const> points)
{
  auto const [lo, hi] = std::minmax_element(points.begin(), points.end());
  if (points.size() < 2 || *lo == *hi) { throw std::invalid_argument("kernel density: zero spread"); }
}

// Kernel matrix K(i, k) = phi((grid_i - point_k) / h) / h.
Matrix kernel_matrix(Vector const &grid, std::span<double const> points, double h)
{
  Matrix K(grid.size(), static_cast<Index>(points.size()));
  for (Index k = 0; k < K.cols(); ++k) {
    for (Index i = 0; i < K.rows(); ++i) { K(i, k) = gaussian((grid[i] - points[static_cast<std::size_t>(k)]) / h) / h; }
  }
  return K;
}

} // namespace

MergedDensity merge_marginals(std::span<DensityGrid const> grids, std::span<double const> weights, Index points,
                              double min_weight)
{
  check_weights(weights, grids.size());
  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    if (weights[i] > min_weight) {
      grids[i].validate();
      used.push_back(i);
    }
  }
  if (used.size() == 1 && weights[used.front()] == 1.0) { return {grids[used.front()], 1.0}; }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (auto i : used) {
    lo = std::min(lo, grids[i].x[0]);
    hi = std::max(hi, grids[i].x[grids[i].size() - 1]);
  }
  MergedDensity out;
  out.grid.x = Vector::LinSpaced(points, lo, hi);
  out.grid.density = Vector::Zero(points);
  for (auto i : used) {
    MonotoneCubic const interp(grids[i].x, grids[i].density);
    out.grid.density += weights[i] * interp(out.grid.x);
  }
  out.renormalization = integral(out.grid);
  out.grid.density /= out.renormalization;
  return out;
}

double weighted_quantile(std::span<double const> values, std::span<double const> weights, double q)
{
  check_weights(weights, values.size());
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });

  // Distinct values with their cumulative weights.
  std::vector<double> xs;
  std::vector<double> cumulative;
  double running = 0.0;
  for (auto i : order) {
    running += weights[i];
    if (!xs.empty() && xs.back() == values[i]) {
      cumulative.back() = running;
    } else {
      xs.push_back(values[i]);
      cumulative.push_back(running);
    }
  }
  if (q <= cumulative.front()) { return xs.front(); }
  for (std::size_t k = 1; k < xs.size(); ++k) {
    if (q <= cumulative[k]) {
      double const span = cumulative[k] - cumulative[k - 1];
      return span > 0.0 ? xs[k - 1] + (q - cumulative[k - 1]) / span * (xs[k] - xs[k - 1]) : xs[k];
    }
  }
  return xs.back();
}

WeightedSummary weighted_summary(std::span<double const> values, std::span<double const> weights)
{
  check_weights(weights, values.size());
  WeightedSummary s;
  for (std::size_t i = 0; i < values.size(); ++i) { s.mean += weights[i] * values[i]; }
  double var = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) { var += weights[i] * (values[i] - s.mean) * (values[i] - s.mean); }
  s.sd = std::sqrt(std::max(var, 0.0));
  s.q025 = weighted_quantile(values, weights, 0.025);
  s.q50 = weighted_quantile(values, weights, 0.5);
  s.q975 = weighted_quantile(values, weights, 0.975);
  return s;
}

double effective_sample_size(std::span<double const> weights)
{
  double sum_sq = 0.0;
  for (double w : weights) { sum_sq += w * w; }
  return 1.0 / sum_sq;
}

double silverman_bandwidth(std::span<double const> points, std::span<double const> weights)
{
  check_weights(weights, points.size());
  check_spread(points);
  double sd = weighted_sd(points, weights);
  double n = effective_sample_size(weights);
  if (sd == 0.0) {
    // All weight on one value: fall back to the unweighted spread.
    std::vector<double> const equal(points.size(), 1.0 / static_cast<double>(points.size()));
    sd = weighted_sd(points, equal);
    n = 1.0;
  }
  return 1.06 * sd * std::pow(n, -0.2);
}

DensityGrid weighted_kde_1d(std::span<double const> points, std::span<double const> weights,
                            std::optional<double> bandwidth, Index grid_points)
{
  check_weights(weights, points.size());
  check_spread(points);
  double const h = bandwidth.value_or(silverman_bandwidth(points, weights));
  if (!(h > 0.0)) { throw std::invalid_argument("kernel density: bandwidth must be positive"); }
  auto const [lo, hi] = weighted_range(points, weights);
  DensityGrid g;
  g.x = Vector::LinSpaced(grid_points, lo - 3.0 * h, hi + 3.0 * h);
  Eigen::Map<Vector const> const w(weights.data(), static_cast<Index>(weights.size()));
  g.density = kernel_matrix(g.x, points, h) * w;
  return normalized(std::move(g));
}

double double_trapezoid(Surface2D const &s)
{
  Vector inner(s.x.size());
  for (Index i = 0; i < s.x.size(); ++i) { inner[i] = trapezoid(s.y, s.density.row(i).transpose()); }
  return trapezoid(s.x, inner);
}

Surface2D weighted_kde_2d(std::span<double const> x, std::span<double const> y, std::span<double const> weights,
                          std::optional<std::array<double, 2>> bandwidths, Index grid_points)
{
  check_weights(weights, x.size());
  if (y.size() != x.size()) { throw std::invalid_argument("kernel density: x and y have different lengths"); }
  check_spread(x);
  check_spread(y);
  auto const h = bandwidths.value_or(std::array{silverman_bandwidth(x, weights), silverman_bandwidth(y, weights)});
  if (!(h[0] > 0.0) || !(h[1] > 0.0)) { throw std::invalid_argument("kernel density: bandwidth must be positive"); }
  auto const [xlo, xhi] = weighted_range(x, weights);
  auto const [ylo, yhi] = weighted_range(y, weights);
  Surface2D s;
  s.x = Vector::LinSpaced(grid_points, xlo - 3.0 * h[0], xhi + 3.0 * h[0]);
  s.y = Vector::LinSpaced(grid_points, ylo - 3.0 * h[1], yhi + 3.0 * h[1]);
  Eigen::Map<Vector const> const w(weights.data(), static_cast<Index>(weights.size()));
  Matrix const Kx = kernel_matrix(s.x, x, h[0]);
  Matrix const Ky = kernel_matrix(s.y, y, h[1]);
  s.density = Kx * w.asDiagonal() * Ky.transpose();
  s.density /= double_trapezoid(s);
  return s;
}

} // namespace sacbma
