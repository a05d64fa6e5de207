#include "sacbma/density_grid.hpp"

#include <stdexcept>

namespace sacbma {

void DensityGrid::validate() const
{
  if (x.size() != density.size() || x.size() < 2) { throw std::invalid_argument("DensityGrid: bad lengths"); }
  for (Index i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) { throw std::invalid_argument("DensityGrid: abscissae not strictly increasing"); }
  }
  for (Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(density[i]) || density[i] < 0.0) {
      throw std::invalid_argument("DensityGrid: densities must be finite and nonnegative");
    }
  }
}

DensityGrid DensityGrid::point_mass(double at, double half_width)
{
  double const h = half_width * std::max(1.0, std::abs(at));
  DensityGrid g;
  g.x = Vector::LinSpaced(3, at - h, at + h);
  g.density = Vector::Zero(3);
  g.density[1] = 1.0 / h;
  return g;
}

double trapezoid(Eigen::Ref<Vector const> const &x, Eigen::Ref<Vector const> const &f)
{
  Index const n = x.size();
  if (n < 2) { return 0.0; }
  return 0.5 * ((x.tail(n - 1) - x.head(n - 1)).array() * (f.tail(n - 1) + f.head(n - 1)).array()).sum();
}

double grid_mean(DensityGrid const &g)
{
  return trapezoid(g.x, g.x.cwiseProduct(g.density)) / integral(g);
}

double grid_sd(DensityGrid const &g)
{
  double const m = grid_mean(g);
  Vector const centred = (g.x.array() - m).square().matrix();
  return std::sqrt(std::max(0.0, trapezoid(g.x, centred.cwiseProduct(g.density)) / integral(g)));
}

double grid_quantile(DensityGrid const &g, double q)
{
  if (!(q >= 0.0 && q <= 1.0)) { throw std::invalid_argument("grid_quantile: q outside [0, 1]"); }
  double const total = integral(g);
  double cumulative = 0.0;
  for (Index i = 1; i < g.size(); ++i) {
    double const cell = 0.5 * (g.x[i] - g.x[i - 1]) * (g.density[i] + g.density[i - 1]) / total;
    if (cumulative + cell >= q && cell > 0.0) {
      return g.x[i - 1] + (q - cumulative) / cell * (g.x[i] - g.x[i - 1]);
    }
    cumulative += cell;
  }
  return g.x[g.size() - 1];
}

DensityGrid normalized(DensityGrid g)
{
  double const total = integral(g);
  if (!(total > 0.0)) { throw std::invalid_argument("DensityGrid: zero mass"); }
  g.density /= total;
  return g;
}

DensityGrid rescale(DensityGrid const &g, double scale)
{
  if (scale == 0.0) { throw std::invalid_argument("rescale: zero scale"); }
  DensityGrid out;
  out.x = g.x * scale;
  out.density = g.density / std::abs(scale);
  if (scale < 0.0) {
    out.x.reverseInPlace();
    out.density.reverseInPlace();
  }
  return out;
}

MonotoneCubic::MonotoneCubic(Vector x, Vector y)
  : x_(std::move(x))
  , y_(std::move(y))
{
  Index const n = x_.size();
  if (n < 2 || y_.size() != n) { throw std::invalid_argument("MonotoneCubic: need matching data of length >= 2"); }
  Vector secant(n - 1);
  for (Index i = 0; i + 1 < n; ++i) { secant[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]); }
  slope_.resize(n);
  slope_[0] = secant[0];
  slope_[n - 1] = secant[n - 2];
  auto uniform = [&](Index from, Index to) {
    double const h = x_[from + 1] - x_[from];
    for (Index k = from + 1; k < to; ++k) {
      if (std::abs((x_[k + 1] - x_[k]) - h) > 1e-9 * h) { return false; }
    }
    return true;
  };
  std::vector<bool> peak(static_cast<std::size_t>(n), false);
  for (Index i = 1; i + 1 < n; ++i) {
    double const h0 = x_[i] - x_[i - 1];
    double const h1 = x_[i + 1] - x_[i];
    double centred = (h1 * secant[i - 1] + h0 * secant[i]) / (h0 + h1);
    if (i >= 2 && i + 2 < n && uniform(i - 2, i + 2)) {
      centred = (y_[i - 2] - 8.0 * y_[i - 1] + 8.0 * y_[i + 1] - y_[i + 2]) / (12.0 * h1);
    }
    if (secant[i - 1] > 0.0 && secant[i] < 0.0) {
      // Local maximum: keep the smooth slope within Hyman's bound.
      double const bound = 3.0 * std::min(std::abs(secant[i - 1]), std::abs(secant[i]));
      slope_[i] = std::clamp(centred, -bound, bound);
      peak[static_cast<std::size_t>(i)] = true;
    } else if (secant[i - 1] * secant[i] <= 0.0) {
      slope_[i] = 0.0;
    } else {
      slope_[i] = centred * secant[i] > 0.0 ? centred : 0.5 * (secant[i - 1] + secant[i]);
    }
  }
  for (Index i = 0; i + 1 < n; ++i) {
    if (peak[static_cast<std::size_t>(i)] || peak[static_cast<std::size_t>(i + 1)]) { continue; }
    if (secant[i] == 0.0) {
      slope_[i] = slope_[i + 1] = 0.0;
      continue;
    }
    double const a = slope_[i] / secant[i];
    double const b = slope_[i + 1] / secant[i];
    double const r = a * a + b * b;
    if (r > 9.0) {
      double const t = 3.0 / std::sqrt(r);
      slope_[i] = t * a * secant[i];
      slope_[i + 1] = t * b * secant[i];
    }
  }
}

double MonotoneCubic::operator()(double at) const
{
  Index const n = x_.size();
  if (at < x_[0] || at > x_[n - 1]) { return 0.0; }
  Index const hi = std::clamp<Index>(std::upper_bound(x_.data(), x_.data() + n, at) - x_.data(), 1, n - 1);
  Index const lo = hi - 1;
  double const h = x_[hi] - x_[lo];
  double const t = (at - x_[lo]) / h;
  double const t2 = t * t;
  double const t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y_[lo] + (t3 - 2 * t2 + t) * h * slope_[lo] + (-2 * t3 + 3 * t2) * y_[hi] +
         (t3 - t2) * h * slope_[hi];
}

Vector MonotoneCubic::operator()(Eigen::Ref<Vector const> const &at) const
{
  Vector out(at.size());
  for (Index i = 0; i < at.size(); ++i) { out[i] = (*this)(at[i]); }
  return out;
}

} // namespace sacbma
