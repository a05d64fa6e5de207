#pragma once

#include "conditional_fit.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>

namespace sacbma {

struct McmcConfig
{
  Index burn_in = 10000;
  Index iterations = 90000; // after burn-in
  Index thin = 10;
  std::optional<std::array<double, 2>> rw_scales; // internal scale; default from the mode curvature
  std::uint64_t seed = 1;
  std::optional<std::array<double, 2>> init; // (rho, lambda); default the posterior mode
  bool freeze_autocorrelation = false;       // keep (rho, lambda) at init

  void validate() const;
};

/// Kept draws, one row each: beta_0..beta_{p-1}, tau, rho, lambda.
struct Chains
{
  Matrix draws;
  std::vector<std::string> columns;
  std::array<double, 2> acceptance{0.0, 0.0};
  Vector ess;
  std::vector<std::string> warnings;

  Index tau_column() const { return draws.cols() - 3; }
  Index rho_column() const { return draws.cols() - 2; }
  Index lambda_column() const { return draws.cols() - 1; }
};

/// Metropolis-within-Gibbs for the full model: exact Gaussian and Gamma full
/// conditionals for beta and tau, random-walk Metropolis-Hastings for rho and
/// lambda on the internal scale. Deterministic given the seed.
Chains sample_posterior(Dataset const &data, SpatialWeights const &W, PriorSpec const &priors, McmcConfig const &cfg);

/// Independent chains with seeds cfg.seed + k, run concurrently.
std::vector<Chains> sample_chains(Dataset const &data, SpatialWeights const &W, PriorSpec const &priors,
                                  McmcConfig const &cfg, int count, unsigned threads = 0);

struct ParameterSummary
{
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
  double ess = 0.0;
  bool degenerate = false; // constant chain
};

/// Effective sample size by Geyer's initial monotone sequence estimator.
/// Returns the chain length and sets `degenerate` for a constant chain.
double chain_ess(Eigen::Ref<Vector const> const &x, bool *degenerate = nullptr);

std::vector<ParameterSummary> chain_summary(Chains const &chains);

void write_chains_csv(Chains const &chains, std::filesystem::path const &path);

} // namespace sacbma
