#include "sacbma/impacts.hpp"

#include <stdexcept>

namespace sacbma {

namespace {

constexpr double kDegenerateFactor = 1e-12;

DensityGrid scaled_or_point(DensityGrid const &beta, double factor)
{
  return std::abs(factor) <= kDegenerateFactor ? DensityGrid::point_mass(0.0) : rescale(beta, factor);
}

} // namespace

ImpactFactors impact_factors(double rho, double trace_inverse, Index n)
{
  if (!(rho < 1.0)) { throw std::invalid_argument("impacts: rho must be < 1"); }
  ImpactFactors f;
  f.total = 1.0 / (1.0 - rho);
  f.direct = trace_inverse / static_cast<double>(n);
  f.indirect = f.total - f.direct;
  return f;
}

ImpactMarginals conditional_impacts(ConditionalFit const &fit, double trace_inverse, Index n, Index j)
{
  DensityGrid const beta = marginal_beta(fit, j);
  ImpactMarginals out;
  out.factors = impact_factors(fit.rho, trace_inverse, n);
  out.total = rescale(beta, out.factors.total);
  out.direct = rescale(beta, out.factors.direct);
  out.indirect_degenerate = std::abs(out.factors.indirect) <= kDegenerateFactor;
  out.indirect = scaled_or_point(beta, out.factors.indirect);
  return out;
}

ImpactSummary bma_impacts(std::span<double const> weights, std::span<ConditionalFit const> fits,
                          std::span<double const> traces, Index n, Index j, std::string covariate,
                          Index merge_points)
{
  if (weights.size() != fits.size() || traces.size() != fits.size()) {
    throw std::invalid_argument("bma_impacts: weights, fits and traces differ in length");
  }
  std::vector<DensityGrid> total, direct, indirect;
  total.reserve(fits.size());
  direct.reserve(fits.size());
  indirect.reserve(fits.size());

  // Moments accumulated as sum w (s m, s^2 (v + m^2)) per impact kind.
  Eigen::Array3d first = Eigen::Array3d::Zero();
  Eigen::Array3d second = Eigen::Array3d::Zero();
  for (std::size_t i = 0; i < fits.size(); ++i) {
    ImpactFactors const f = impact_factors(fits[i].rho, traces[i], n);
    double const m = fits[i].beta_mean()[j];
    double const v = fits[i].beta_cov()(j, j);
    Eigen::Array3d const s(f.direct, f.indirect, f.total);
    first += weights[i] * s * m;
    second += weights[i] * s.square() * (v + m * m);
    if (weights[i] > 1e-12) {
      DensityGrid const beta = marginal_beta(fits[i], j);
      direct.push_back(rescale(beta, f.direct));
      indirect.push_back(scaled_or_point(beta, f.indirect));
      total.push_back(rescale(beta, f.total));
    } else {
      // Negligible weight: placeholders keep indices aligned and are skipped by the merge.
      direct.push_back(DensityGrid::point_mass(0.0));
      indirect.push_back(DensityGrid::point_mass(0.0));
      total.push_back(DensityGrid::point_mass(0.0));
    }
  }

  ImpactSummary out;
  out.covariate = std::move(covariate);
  out.index = j;
  auto finish = [&](ImpactEstimate &e, std::vector<DensityGrid> const &grids, int k) {
    e.density = merge_marginals(grids, weights, merge_points).grid;
    e.mean = first[k];
    e.sd = std::sqrt(std::max(0.0, second[k] - first[k] * first[k]));
  };
  finish(out.direct, direct, 0);
  finish(out.indirect, indirect, 1);
  finish(out.total, total, 2);
  return out;
}

} // namespace sacbma
