#pragma once

#include "density_grid.hpp"

#include <array>
#include <optional>
#include <span>

namespace sacbma {

struct MergedDensity
{
  DensityGrid grid;
  double renormalization = 1.0; // mass on the common support before rescaling
};

/// sum_i w_i pi_i(x) on the union of the supports (`points` equispaced),
/// each input interpolated by a monotone cubic and zero outside its support.
/// Inputs with weight below `min_weight` do not widen the support and are
/// skipped. A single contributing input is returned unchanged.
MergedDensity merge_marginals(std::span<DensityGrid const> grids, std::span<double const> weights,
                              Index points = 401, double min_weight = 1e-12);

struct WeightedSummary
{
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
};

/// Weighted quantile by linear interpolation of the cumulative weights over
/// the sorted distinct values (the type-4 convention of R's quantile).
double weighted_quantile(std::span<double const> values, std::span<double const> weights, double q);

/// Mean, population sd and the 2.5/50/97.5% weighted quantiles.
WeightedSummary weighted_summary(std::span<double const> values, std::span<double const> weights);

/// 1 / sum(w^2) for normalized weights.
double effective_sample_size(std::span<double const> weights);

/// Silverman's rule 1.06 sd n^{-1/5} with the weighted sd and the ESS as n.
double silverman_bandwidth(std::span<double const> points, std::span<double const> weights);

/// Gaussian-kernel weighted KDE on `grid_points` equispaced points spanning the
/// data +- 3 bandwidths, rescaled to unit trapezoid mass.
DensityGrid weighted_kde_1d(std::span<double const> points, std::span<double const> weights,
                            std::optional<double> bandwidth = std::nullopt, Index grid_points = 512);

/// Density on a lattice; density(i, j) is at (x[i], y[j]).
struct Surface2D
{
  Vector x;
  Vector y;
  Matrix density;
};

double double_trapezoid(Surface2D const &s);

/// Product-Gaussian weighted KDE on a grid_points x grid_points lattice.
Surface2D weighted_kde_2d(std::span<double const> x, std::span<double const> y, std::span<double const> weights,
                          std::optional<std::array<double, 2>> bandwidths = std::nullopt, Index grid_points = 101);

} // namespace sacbma
