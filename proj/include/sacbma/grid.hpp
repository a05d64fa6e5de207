#pragma once

#include "conditional_fit.hpp"

#include <array>

namespace sacbma {

// Internal scale of an autocorrelation parameter: gamma = log((1 + x) / (1 - x)).

template <typename Scalar> Scalar to_internal(Scalar x)
{
  if (!(std::abs(x) < Scalar(1))) { throw std::domain_error("to_internal: |x| must be < 1"); }
  return std::log1p(x) - std::log1p(-x);
}

/// x = 2 e^gamma / (1 + e^gamma) - 1 = tanh(gamma / 2), kept strictly inside (-1, 1).
template <typename Scalar> Scalar from_internal(Scalar gamma)
{
  Scalar const x = std::tanh(gamma / Scalar(2));
  Scalar const edge = std::nextafter(Scalar(1), Scalar(0));
  return std::clamp(x, -edge, edge);
}

/// 1 - from_internal(gamma) = 2 / (1 + e^gamma), accurate for large gamma.
template <typename Scalar> Scalar one_minus_from_internal(Scalar gamma)
{
  if (gamma > Scalar(0)) {
    Scalar const e = std::exp(-gamma);
    return Scalar(2) * e / (Scalar(1) + e);
  }
  return Scalar(2) / (Scalar(1) + std::exp(gamma));
}

/// Delta-method variance of gamma from a standard error on the bounded scale:
/// se^2 * (2 / ((1 + x)(1 - x)))^2.
double delta_variance(double estimate, double std_error);

/// log of the base prior pushed to the internal scale, including the
/// Jacobian 2 e^gamma / (1 + e^gamma)^2.
double internal_log_prior(double gamma, AutocorrelationPrior const &base = {});

struct InternalPoint
{
  double gamma1 = 0.0; // rho
  double gamma2 = 0.0; // lambda
};

struct GridSpec
{
  InternalPoint center;
  std::array<double, 2> internal_sds{1.0, 1.0};
  std::array<Index, 2> dims{20, 20};
  double semi_amplitude = 3.0;

  void validate() const;

  /// Centre and spread from external estimates of (rho, lambda) and their
  /// standard errors via the delta method.
  static GridSpec from_estimates(double rho, double se_rho, double lambda, double se_lambda,
                                 std::array<Index, 2> dims, double semi_amplitude = 3.0);
};

struct GridPoint
{
  InternalPoint internal;
  double rho = 0.0;
  double lambda = 0.0;
  Index rho_index = 0;
  Index lambda_index = 0;
  double log_evidence = 0.0;
  double log_prior_internal = 0.0;
  double weight = 0.0;
};

/// Regular K1 x K2 lattice in lattice order (rho index major). A dimension of
/// one places a single node at the centre.
std::vector<GridPoint> build_grid(GridSpec const &spec);

/// Softmax of log_evidence + log_prior_internal. Throws when every term is -inf
/// or any term is NaN/+inf.
std::vector<GridPoint> compute_weights(std::vector<GridPoint> points);

/// Share of weight on the outer ring of the lattice.
double boundary_mass(std::vector<GridPoint> const &points, std::array<Index, 2> dims);

/// Index of the node closest to `target` in the metric given by `precision`
/// (for example the negative Hessian of the log posterior at the mode).
Index nearest_node(std::vector<GridPoint> const &points, InternalPoint target, Eigen::Matrix2d const &precision);

} // namespace sacbma
