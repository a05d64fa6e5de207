#include "oracles.hpp"

#include <doctest.h>

#include <fstream>

using namespace sacbma;

namespace {

double mcse(Vector const &x)
{
  double const sd = std::sqrt((x.array() - x.mean()).square().sum() / static_cast<double>(x.size() - 1));
  return sd / std::sqrt(chain_ess(x));
}

double sample_sd(Vector const &x)
{
  return std::sqrt((x.array() - x.mean()).square().sum() / static_cast<double>(x.size() - 1));
}

} // namespace

TEST_CASE("frozen at rho = lambda = 0 with known tau matches the conjugate posterior")
{
  std::mt19937_64 rng(5);
  auto const W = oracle::random_weights(40, rng);
  auto const data = oracle::simulated(W, 0.0, 0.0, 17);
  PriorSpec priors;
  priors.beta_precision = 0.01;
  priors.tau_fixed = 1.0;
  McmcConfig cfg;
  cfg.burn_in = 100;
  cfg.iterations = 20000;
  cfg.thin = 1;
  cfg.init = std::array<double, 2>{0.0, 0.0};
  cfg.freeze_autocorrelation = true;
  auto const chains = sample_posterior(data, W, priors, cfg);
  auto const exact = oracle::conjugate(data.X, data.y, 1.0, 0.01);
  for (Index j = 0; j < data.p(); ++j) {
    Vector const col = chains.draws.col(j);
    CHECK(std::abs(col.mean() - exact.mean[j]) <= 3.0 * mcse(col));
    CHECK(std::abs(sample_sd(col) / std::sqrt(exact.cov(j, j)) - 1.0) <= 0.05);
  }
  CHECK((chains.draws.col(chains.tau_column()).array() == 1.0).all());
  CHECK((chains.draws.col(chains.rho_column()).array() == 0.0).all());
  CHECK(chains.acceptance[0] == 0.0);
}

TEST_CASE("frozen chain reproduces the conditional fit with unknown tau")
{
  std::mt19937_64 rng(6);
  auto const W = oracle::random_weights(50, rng);
  auto const data = oracle::simulated(W, 0.4, 0.3, 23);
  PriorSpec priors;
  priors.beta_precision = 0.001;
  McmcConfig cfg;
  cfg.burn_in = 200;
  cfg.iterations = 20000;
  cfg.thin = 1;
  cfg.init = std::array<double, 2>{0.4, 0.3};
  cfg.freeze_autocorrelation = true;
  auto const chains = sample_posterior(data, W, priors, cfg);
  auto const fit = fit_conditional(data, W, 0.4, 0.3, priors);
  Vector const mean = fit.beta_mean();
  Matrix const cov = fit.beta_cov();
  for (Index j = 0; j < data.p(); ++j) {
    Vector const col = chains.draws.col(j);
    CHECK(std::abs(col.mean() - mean[j]) <= 3.0 * mcse(col));
    CHECK(std::abs(sample_sd(col) / std::sqrt(cov(j, j)) - 1.0) <= 0.1);
  }
  Vector const variance = chains.draws.col(chains.tau_column()).cwiseInverse();
  CHECK(std::abs(variance.mean() - fit.variance_mean()) <= 3.0 * mcse(variance));
  CHECK(std::abs(sample_sd(variance) / fit.variance_sd() - 1.0) <= 0.1);
}

TEST_CASE("chains are deterministic given the seed and thinning subsamples")
{
  std::mt19937_64 rng(7);
  auto const W = oracle::random_weights(30, rng);
  auto const data = oracle::simulated(W, 0.3, 0.2, 3);
  PriorSpec priors;
  priors.beta_precision = 0.01;
  McmcConfig cfg;
  cfg.burn_in = 50;
  cfg.iterations = 500;
  cfg.thin = 1;
  cfg.seed = 99;
  auto const a = sample_posterior(data, W, priors, cfg);
  auto const b = sample_posterior(data, W, priors, cfg);
  CHECK(a.draws == b.draws);
  cfg.seed = 100;
  auto const c = sample_posterior(data, W, priors, cfg);
  CHECK(a.draws != c.draws);

  cfg.seed = 99;
  cfg.thin = 5;
  auto const thinned = sample_posterior(data, W, priors, cfg);
  REQUIRE(thinned.draws.rows() == 100);
  for (Index i = 0; i < thinned.draws.rows(); ++i) { CHECK(thinned.draws.row(i) == a.draws.row(5 * i + 4)); }

  auto const many = sample_chains(data, W, priors, cfg, 2, 2);
  REQUIRE(many.size() == 2);
  CHECK(many[0].draws == thinned.draws);
  CHECK(many[1].draws != thinned.draws);
}

TEST_CASE("full sampler mixes over rho and lambda")
{
  std::mt19937_64 rng(8);
  auto const W = oracle::random_weights(60, rng);
  auto const data = oracle::simulated(W, 0.5, 0.2, 41);
  PriorSpec priors;
  priors.beta_precision = 0.001;
  McmcConfig cfg;
  cfg.burn_in = 1000;
  cfg.iterations = 10000;
  cfg.thin = 2;
  auto const chains = sample_posterior(data, W, priors, cfg);
  CHECK(chains.draws.rows() == 5000);
  CHECK(chains.columns.back() == "lambda");
  CHECK(chains.columns[static_cast<std::size_t>(chains.tau_column())] == "tau");
  for (double a : chains.acceptance) {
    CHECK(a > 0.05);
    CHECK(a < 0.9);
  }
  Vector const rho = chains.draws.col(chains.rho_column());
  CHECK(rho.minCoeff() > -1.0);
  CHECK(rho.maxCoeff() < 1.0);
  CHECK(chains.ess.size() == chains.draws.cols());
  CHECK(chains.ess[chains.rho_column()] > 50.0);

  auto const summary = chain_summary(chains);
  REQUIRE(summary.size() == static_cast<std::size_t>(chains.draws.cols()));
  CHECK(summary.back().name == "lambda");
  CHECK(summary[0].q025 < summary[0].q50);
  CHECK(summary[0].q50 < summary[0].q975);

  auto const path = std::filesystem::temp_directory_path() / "sacbma_chains_test.csv";
  write_chains_csv(chains, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "(Intercept),x1,tau,rho,lambda");
  Index lines = 0;
  for (std::string line; std::getline(in, line);) { ++lines; }
  CHECK(lines == chains.draws.rows());
  std::filesystem::remove(path);
}

TEST_CASE("effective sample size")
{
  bool degenerate = false;
  Vector const constant = Vector::Constant(500, 2.5);
  CHECK(chain_ess(constant, &degenerate) == 500.0);
  CHECK(degenerate);

  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  Vector iid(5000);
  for (Index i = 0; i < iid.size(); ++i) { iid[i] = normal(rng); }
  CHECK(std::abs(chain_ess(iid, &degenerate) / 5000.0 - 1.0) <= 0.2);
  CHECK_FALSE(degenerate);

  double const phi = 0.9;
  Vector ar(20000);
  ar[0] = normal(rng);
  for (Index i = 1; i < ar.size(); ++i) { ar[i] = phi * ar[i - 1] + std::sqrt(1.0 - phi * phi) * normal(rng); }
  double const expected = 20000.0 * (1.0 - phi) / (1.0 + phi);
  CHECK(std::abs(chain_ess(ar) / expected - 1.0) <= 0.25);
}

TEST_CASE("configuration errors")
{
  McmcConfig cfg;
  cfg.iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.iterations = 10;
  cfg.thin = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.thin = 1;
  cfg.burn_in = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.burn_in = 0;
  cfg.rw_scales = std::array<double, 2>{0.1, 0.0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  std::mt19937_64 rng(9);
  auto const W = oracle::random_weights(20, rng);
  auto const data = oracle::simulated(W, 0.0, 0.0, 1);
  McmcConfig ok;
  ok.iterations = 10;
  ok.init = std::array<double, 2>{0.0, 0.0};
  ok.rw_scales = std::array<double, 2>{0.1, 0.1};
  auto const other = oracle::random_weights(21, rng);
  CHECK_THROWS_AS(sample_posterior(data, other, PriorSpec{}, ok), std::invalid_argument);
  CHECK_THROWS_AS(chain_summary(Chains{}), std::invalid_argument);
}
