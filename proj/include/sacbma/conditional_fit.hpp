#pragma once

#include "density_grid.hpp"
#include "sac_linalg.hpp"

#include <functional>
#include <optional>
#include <string>

namespace sacbma {

/// A prior density for an autocorrelation parameter on (-1, 1).
struct AutocorrelationPrior
{
  std::string name = "uniform";
  std::function<double(double)> log_density = [](double) { return -std::log(2.0); };

  double operator()(double x) const { return log_density(x); }

  static AutocorrelationPrior uniform() { return {}; }
  /// Beta(a, b) stretched onto (-1, 1); a, b >= 1.
  static AutocorrelationPrior scaled_beta(double a, double b);
};

struct PriorSpec
{
  double beta_precision = 1000.0;
  double tau_shape = 0.01;
  double tau_rate = 0.01;
  /// Known noise precision; replaces the Gamma prior by a point mass.
  std::optional<double> tau_fixed;
  AutocorrelationPrior rho_prior;
  AutocorrelationPrior lambda_prior;

  /// Throws std::invalid_argument on non-positive hyperparameters or
  /// autocorrelation priors that do not integrate to 1 within 1e-6.
  void validate() const;
};

struct Dataset
{
  Vector y;
  Matrix X;
  std::vector<std::string> names;

  Index n() const { return y.size(); }
  Index p() const { return X.cols(); }

  /// Throws std::invalid_argument on missing values, n <= p, mismatched
  /// names or a rank-deficient X.
  void validate() const;
};

struct QuadratureConfig
{
  int nodes = 41;
  double log_drop = 30.0; // integration range: integrand above exp(-log_drop) of its peak
};

/// The conditional model at fixed (rho, lambda) after whitening by
/// L = A(lambda) A(rho): z = L y, Z = L (I - rho W)^{-1} X = A(lambda) X and
/// z = Z beta + e with e ~ N(0, I / tau).
struct WhitenedProblem
{
  double rho = 0.0;
  double lambda = 0.0;
  Vector z;
  Matrix Z;
  double log_det_sigma = 0.0;
};

WhitenedProblem whiten(Dataset const &data, SpatialFilter const &rho_filter, SpatialFilter const &lambda_filter);

/// log p(y | tau, rho, lambda) p(tau) tau as a function of t = log tau, with
/// beta integrated out analytically.
class LogTauIntegrand
{
public:
  LogTauIntegrand() = default;
  LogTauIntegrand(WhitenedProblem const &problem, PriorSpec const &priors);

  /// log N(y | 0, (tau Sigma)^{-1} + X~ X~' / p_beta)
  double log_likelihood(double log_tau) const;
  double operator()(double log_tau) const;

  /// Gaussian full conditional of beta given tau.
  Vector beta_mean(double log_tau) const;
  Matrix beta_cov(double log_tau) const;

  Index n() const { return n_; }
  double residual_sum_of_squares() const { return rss_; }

private:
  double quadratic(double tau) const;

  Index n_ = 0;
  double log_det_sigma_ = 0.0;
  double rss_ = 0.0;
  Vector gram_values_;
  Matrix gram_vectors_;
  Vector projected_;
  double beta_precision_ = 0.0;
  double tau_shape_ = 0.0;
  double tau_rate_ = 0.0;
};

struct TauNode
{
  double log_tau = 0.0;
  double weight = 0.0; // normalized posterior weight
  Vector beta_mean;
  Matrix beta_cov;
};

struct ConditionalFit
{
  double rho = 0.0;
  double lambda = 0.0;
  double log_evidence = 0.0;
  std::vector<TauNode> nodes;
  LogTauIntegrand integrand;
  double log_tau_lower = 0.0;
  double log_tau_upper = 0.0;
  bool tau_fixed = false;

  Index p() const { return nodes.front().beta_mean.size(); }
  Vector beta_mean() const;
  Matrix beta_cov() const;
  double variance_mean() const; // E[1 / tau]
  double variance_sd() const;
};

/// Exact conditional inference: analytic over beta, Gauss-Legendre over
/// log tau. Throws std::invalid_argument for fewer than 3 nodes.
ConditionalFit fit_conditional(WhitenedProblem const &problem, PriorSpec const &priors,
                               QuadratureConfig const &quad = {});
ConditionalFit fit_conditional(Dataset const &data, SpatialWeights const &W, double rho, double lambda,
                               PriorSpec const &priors, QuadratureConfig const &quad = {});

/// Mixture over tau nodes of the Gaussian conditionals of beta_j, on mean +- 6 sd.
DensityGrid marginal_beta(ConditionalFit const &fit, Index j, Index points = 401);

/// Posterior density of 1 / tau.
DensityGrid marginal_variance(ConditionalFit const &fit, Index points = 2001);

/// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<Vector, Vector> gauss_legendre(int count);

} // namespace sacbma
