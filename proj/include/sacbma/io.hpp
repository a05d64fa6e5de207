#pragma once

#include "bma.hpp"
#include "mcmc.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>

namespace sacbma {

inline constexpr char kInterceptName[] = "(Intercept)";

/// Reads a CSV with a header row. Row i is region i of the adjacency. The
/// design gets an intercept column first, then the covariates in the given
/// order. Throws std::invalid_argument naming the offending column or cell.
Dataset load_dataset(std::filesystem::path const &csv, std::string const &response,
                     std::vector<std::string> const &covariates);

/// Appends W x for every non-intercept column, named "lag_<name>".
Dataset with_lagged_covariates(Dataset const &data, SpatialWeights const &W);

/// Writes y and the non-intercept covariates as CSV (columns "y", names...).
void write_dataset_csv(Dataset const &data, std::filesystem::path const &path);

/// y = (I - rho W)^{-1} (X beta + (I - lambda W)^{-1} e), e ~ N(0, I / tau).
/// Without X, draws an intercept plus beta.size() - 1 standard-normal columns.
Dataset simulate_sac(SpatialWeights const &W, Vector const &beta, double rho, double lambda, double tau,
                     std::optional<Matrix> X, std::uint64_t seed);

struct RunConfig
{
  std::filesystem::path data_path;
  std::filesystem::path adjacency_path;
  std::string response = "y";
  std::vector<std::string> covariates;
  bool include_lagged = false;
  PriorSpec priors;
  std::array<Index, 2> grid_dims{20, 20};
  std::optional<std::array<double, 2>> grid_center; // (rho, lambda) estimates
  std::optional<std::array<double, 2>> grid_se;     // their standard errors
  double semi_amplitude = 3.0;
  std::optional<McmcConfig> mcmc;
  std::filesystem::path output_dir = "sacbma-out";
  unsigned threads = 0;
  std::uint64_t seed = 1;
};

struct PipelineResult
{
  BmaResult bma;
  std::optional<Chains> chains;
  nlohmann::json summary;
  nlohmann::json impacts;
};

/// Grid settings of a run: explicit centre and standard errors when both are
/// given, otherwise centred at the posterior mode.
BmaConfig bma_config(RunConfig const &cfg);

/// Fits the model and writes summary.json, weights.csv, marginals/*.csv,
/// joint_rl.csv, impacts.json (and chains.csv with MCMC) to cfg.output_dir.
PipelineResult run_pipeline(RunConfig const &cfg);

/// Parameter table: one row per coefficient, rho, lambda and tau_inv with
/// BMA (and MCMC) mean and sd.
nlohmann::json summary_json(Dataset const &data, BmaResult const &bma, std::optional<Chains> const &chains);
nlohmann::json impacts_json(BmaResult const &bma, std::optional<Chains> const &chains, Dataset const &data,
                            SpatialWeights const &W);

void write_density_csv(DensityGrid const &g, std::filesystem::path const &path);

inline constexpr char kItalyDataUrl[] = "http://ksgleditsch.com/srm_book.html";
inline constexpr Index kItalyRegions = 477;

/// Checks a user-supplied turnout file: 477 rows and the named columns present.
/// Returns a list of problems (empty when the file is usable).
std::vector<std::string> verify_italy_file(std::filesystem::path const &csv, std::vector<std::string> const &columns);

} // namespace sacbma
