#pragma once

#include "types.hpp"

namespace sacbma {

/// A univariate density tabulated on strictly increasing abscissae.
struct DensityGrid
{
  Vector x;
  Vector density;

  Index size() const { return x.size(); }

  /// Throws std::invalid_argument unless x is strictly increasing and the
  /// densities are finite, nonnegative and of matching length.
  void validate() const;

  /// A narrow triangle of unit mass centred on `at`.
  static DensityGrid point_mass(double at, double half_width = 1e-9);
};

double trapezoid(Eigen::Ref<Vector const> const &x, Eigen::Ref<Vector const> const &f);

inline double integral(DensityGrid const &g) { return trapezoid(g.x, g.density); }
double grid_mean(DensityGrid const &g);
double grid_sd(DensityGrid const &g);

/// Inverse of the trapezoid CDF, linear within cells.
double grid_quantile(DensityGrid const &g, double q);

DensityGrid normalized(DensityGrid g);

/// Change of variables y = scale * x.
DensityGrid rescale(DensityGrid const &g, double scale);

/// Shape-preserving cubic Hermite interpolant: Fritsch-Carlson limiting on
/// monotone stretches, local minima flat, local maxima keep a smooth slope
/// bounded by three times the smaller adjacent secant. Zero outside
/// [x.front(), x.back()].
class MonotoneCubic
{
public:
  MonotoneCubic(Vector x, Vector y);
  double operator()(double at) const;
  Vector operator()(Eigen::Ref<Vector const> const &at) const;

private:
  Vector x_;
  Vector y_;
  Vector slope_;
};

} // namespace sacbma
