#pragma once

#include "conditional_fit.hpp"
#include "posterior_merge.hpp"

#include <span>

namespace sacbma {

/// Average impacts are beta_j times a factor that depends on rho only:
/// total 1/(1 - rho), direct tr((I - rho W)^{-1})/n, indirect their difference.
struct ImpactFactors
{
  double total = 1.0;
  double direct = 1.0;
  double indirect = 0.0;
};

ImpactFactors impact_factors(double rho, double trace_inverse, Index n);

struct ImpactMarginals
{
  ImpactFactors factors;
  DensityGrid total;
  DensityGrid direct;
  DensityGrid indirect;
  bool indirect_degenerate = false; // zero indirect factor, returned as a point mass at 0
};

ImpactMarginals conditional_impacts(ConditionalFit const &fit, double trace_inverse, Index n, Index j);

struct ImpactEstimate
{
  DensityGrid density;
  double mean = 0.0;
  double sd = 0.0;
};

struct ImpactSummary
{
  std::string covariate;
  Index index = 0;
  ImpactEstimate direct;
  ImpactEstimate indirect;
  ImpactEstimate total;
};

/// BMA merge of the conditional impact marginals. `traces[i]` is the trace for
/// the rho of fits[i]. Means and sds are exact mixture moments, so
/// mean(direct) + mean(indirect) = mean(total) up to rounding.
ImpactSummary bma_impacts(std::span<double const> weights, std::span<ConditionalFit const> fits,
                          std::span<double const> traces, Index n, Index j, std::string covariate = {},
                          Index merge_points = 401);

} // namespace sacbma
