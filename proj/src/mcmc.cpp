#include "sacbma/mcmc.hpp"

#include "sacbma/bma.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sacbma {

void McmcConfig::validate() const
{
  if (iterations <= 0) { throw std::invalid_argument("mcmc: iterations must be positive"); }
  if (burn_in < 0) { throw std::invalid_argument("mcmc: burn-in must be nonnegative"); }
  if (thin < 1) { throw std::invalid_argument("mcmc: thin must be >= 1"); }
  if (rw_scales && (!((*rw_scales)[0] > 0.0) || !((*rw_scales)[1] > 0.0))) {
    throw std::invalid_argument("mcmc: random-walk scales must be positive");
  }
}

namespace {

class Sampler
{
public:
  Sampler(Dataset const &data, SpatialWeights const &W, PriorSpec const &priors, std::uint64_t seed)
    : data_(data)
    , W_(W)
    , priors_(priors)
    , logdet_(W)
    , rng_(seed)
    , Wy_(W.matrix() * data.y)
    , WX_(W.matrix() * data.X)
  {
  }

  void start(double rho, double lambda)
  {
    rho_ = rho;
    lambda_ = lambda;
    gamma_ = {to_internal(rho), to_internal(lambda)};
    logdet_rho_ = logdet_(rho);
    logdet_lambda_ = logdet_(lambda);
    tau_ = priors_.tau_fixed.value_or(1.0);
    beta_ = Vector::Zero(data_.p());
    if (!priors_.tau_fixed) {
      // Start tau at the least-squares residual precision of the whitened model.
      Vector const z = whitened_response();
      Matrix const Z = whitened_design();
      Vector const ols = Z.colPivHouseholderQr().solve(z);
      tau_ = static_cast<double>(data_.n()) / std::max((z - Z * ols).squaredNorm(), 1e-12);
    }
    update_beta();
    if (!std::isfinite(log_target_rho(rho_, logdet_rho_)) || !std::isfinite(log_target_lambda(lambda_, logdet_lambda_))) {
      throw std::runtime_error("mcmc: log-posterior is not finite at the initial values");
    }
  }

  void sweep(std::array<double, 2> const &scales, bool move_autocorrelation)
  {
    update_beta();
    update_tau();
    if (!move_autocorrelation) { return; }
    update_rho(scales[0]);
    update_lambda(scales[1]);
  }

  void record(Matrix &draws, Index r) const
  {
    Index const p = data_.p();
    auto row = draws.row(r);
    row.head(p) = beta_.transpose();
    row[p] = tau_;
    row[p + 1] = rho_;
    row[p + 2] = lambda_;
  }

  std::array<Index, 2> accepted{0, 0};

private:
  Vector whitened_response() const
  {
    Vector const r = data_.y - rho_ * Wy_;
    return r - lambda_ * (W_.matrix() * r);
  }
  Matrix whitened_design() const { return data_.X - lambda_ * WX_; }

  void update_beta()
  {
    Vector const z = whitened_response();
    Matrix const Z = whitened_design();
    Matrix precision = tau_ * Z.transpose() * Z;
    precision.diagonal().array() += priors_.beta_precision;
    Eigen::LLT<Matrix> const llt(precision);
    Vector const mean = llt.solve(tau_ * Z.transpose() * z);
    Vector noise(data_.p());
    for (Index i = 0; i < noise.size(); ++i) { noise[i] = normal_(rng_); }
    // precision = L L', so L'^{-1} e has covariance precision^{-1}.
    beta_ = mean + llt.matrixU().solve(noise);
  }

  void update_tau()
  {
    if (priors_.tau_fixed) { return; }
    Vector const e = whitened_response() - whitened_design() * beta_;
    double const shape = priors_.tau_shape + 0.5 * static_cast<double>(data_.n());
    double const rate = priors_.tau_rate + 0.5 * e.squaredNorm();
    tau_ = std::gamma_distribution<double>(shape, 1.0 / rate)(rng_);
  }

  // log p(y | beta, tau, rho, lambda) + internal prior, in terms of rho.
  double log_target_rho(double rho, double logdet) const
  {
    Vector const r = data_.y - rho * Wy_ - data_.X * beta_;
    Vector const e = r - lambda_ * (W_.matrix() * r);
    return logdet - 0.5 * tau_ * e.squaredNorm() + internal_log_prior(to_internal(rho), priors_.rho_prior);
  }

  double log_target_lambda(double lambda, double logdet) const
  {
    Vector const r = data_.y - rho_ * Wy_ - data_.X * beta_;
    Vector const e = r - lambda * (W_.matrix() * r);
    return logdet - 0.5 * tau_ * e.squaredNorm() + internal_log_prior(to_internal(lambda), priors_.lambda_prior);
  }

  void update_rho(double scale)
  {
    double const proposal_gamma = gamma_[0] + scale * normal_(rng_);
    double const proposal = from_internal(proposal_gamma);
    double const proposal_logdet = logdet_(proposal);
    double const log_ratio = log_target_rho(proposal, proposal_logdet) - log_target_rho(rho_, logdet_rho_);
    if (std::log(uniform_(rng_)) < log_ratio) {
      gamma_[0] = proposal_gamma;
      rho_ = proposal;
      logdet_rho_ = proposal_logdet;
      ++accepted[0];
    }
  }

  void update_lambda(double scale)
  {
    double const proposal_gamma = gamma_[1] + scale * normal_(rng_);
    double const proposal = from_internal(proposal_gamma);
    double const proposal_logdet = logdet_(proposal);
    double const log_ratio = log_target_lambda(proposal, proposal_logdet) - log_target_lambda(lambda_, logdet_lambda_);
    if (std::log(uniform_(rng_)) < log_ratio) {
      gamma_[1] = proposal_gamma;
      lambda_ = proposal;
      logdet_lambda_ = proposal_logdet;
      ++accepted[1];
    }
  }

  Dataset const &data_;
  SpatialWeights const &W_;
  PriorSpec const &priors_;
  LogDetEvaluator logdet_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_;
  Vector Wy_;
  Matrix WX_;

  Vector beta_;
  double tau_ = 1.0;
  double rho_ = 0.0;
  double lambda_ = 0.0;
  std::array<double, 2> gamma_{0.0, 0.0};
  double logdet_rho_ = 0.0;
  double logdet_lambda_ = 0.0;
};

} // namespace

Chains sample_posterior(Dataset const &data, SpatialWeights const &W, PriorSpec const &priors, McmcConfig const &cfg)
{
  cfg.validate();
  data.validate();
  priors.validate();
  if (data.n() != W.size()) { throw std::invalid_argument("mcmc: dataset and W differ in size"); }
  if (!W.row_standardized()) { throw std::invalid_argument("mcmc: W must be row-standardized"); }

  std::array<double, 2> init{0.0, 0.0};
  std::array<double, 2> scales{0.1, 0.1};
  bool const need_mode = (!cfg.init && !cfg.freeze_autocorrelation) || (!cfg.rw_scales && !cfg.freeze_autocorrelation);
  std::optional<ModeResult> mode;
  if (need_mode) { mode = find_mode(data, W, priors); }
  if (cfg.init) {
    init = *cfg.init;
  } else if (mode) {
    init = {from_internal(mode->mode.gamma1), from_internal(mode->mode.gamma2)};
  }
  if (cfg.rw_scales) {
    scales = *cfg.rw_scales;
  } else if (mode) {
    scales = random_walk_scales(*mode);
  }

  Sampler sampler(data, W, priors, cfg.seed);
  sampler.start(init[0], init[1]);
  bool const move = !cfg.freeze_autocorrelation;
  for (Index it = 0; it < cfg.burn_in; ++it) { sampler.sweep(scales, move); }
  sampler.accepted = {0, 0};

  Index const kept = cfg.iterations / cfg.thin;
  Chains chains;
  chains.draws.resize(kept, data.p() + 3);
  for (Index j = 0; j < data.p(); ++j) {
    chains.columns.push_back(j < static_cast<Index>(data.names.size()) ? data.names[static_cast<std::size_t>(j)]
                                                                        : "beta_" + std::to_string(j));
  }
  chains.columns.insert(chains.columns.end(), {"tau", "rho", "lambda"});
  Index row = 0;
  for (Index it = 1; it <= cfg.iterations; ++it) {
    sampler.sweep(scales, move);
    if (it % cfg.thin == 0 && row < kept) { sampler.record(chains.draws, row++); }
  }
  if (move) {
    for (int k = 0; k < 2; ++k) {
      chains.acceptance[static_cast<std::size_t>(k)] =
        static_cast<double>(sampler.accepted[static_cast<std::size_t>(k)]) / static_cast<double>(cfg.iterations);
    }
    for (int k = 0; k < 2; ++k) {
      double const a = chains.acceptance[static_cast<std::size_t>(k)];
      if (a < 0.1 || a > 0.6) {
        std::ostringstream os;
        os << "mcmc: acceptance rate " << a << " for " << (k == 0 ? "rho" : "lambda") << " outside [0.1, 0.6]";
        chains.warnings.push_back(os.str());
      }
    }
  }
  chains.ess.resize(chains.draws.cols());
  for (Index j = 0; j < chains.draws.cols(); ++j) { chains.ess[j] = chain_ess(chains.draws.col(j)); }
  return chains;
}

std::vector<Chains> sample_chains(Dataset const &data, SpatialWeights const &W, PriorSpec const &priors,
                                  McmcConfig const &cfg, int count, unsigned threads)
{
  std::vector<Chains> out(static_cast<std::size_t>(count));
  parallel_for(count, threads, [&](Index k) {
    McmcConfig local = cfg;
    local.seed = cfg.seed + static_cast<std::uint64_t>(k);
    out[static_cast<std::size_t>(k)] = sample_posterior(data, W, priors, local);
  });
  return out;
}

double chain_ess(Eigen::Ref<Vector const> const &x, bool *degenerate)
{
  Index const n = x.size();
  double const mean = x.mean();
  Vector const centred = x.array() - mean;
  double const c0 = centred.squaredNorm() / static_cast<double>(n);
  if (degenerate) { *degenerate = c0 == 0.0; }
  if (c0 == 0.0 || n < 4) { return static_cast<double>(n); }
  auto autocorrelation = [&](Index lag) {
    return centred.head(n - lag).dot(centred.tail(n - lag)) / (static_cast<double>(n) * c0);
  };
  double sum = 0.0;
  double previous = std::numeric_limits<double>::infinity();
  for (Index m = 0; 2 * m + 1 < n; ++m) {
    double pair = autocorrelation(2 * m) + autocorrelation(2 * m + 1);
    if (pair <= 0.0) { break; }
    pair = std::min(pair, previous);
    previous = pair;
    sum += pair;
  }
  double const tau = std::max(-1.0 + 2.0 * sum, 1.0 / static_cast<double>(n));
  return static_cast<double>(n) / tau;
}

std::vector<ParameterSummary> chain_summary(Chains const &chains)
{
  if (chains.draws.rows() == 0) { throw std::invalid_argument("chain_summary: empty chains"); }
  Index const n = chains.draws.rows();
  std::vector<double> const equal(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
  std::vector<ParameterSummary> out;
  for (Index j = 0; j < chains.draws.cols(); ++j) {
    Vector const col = chains.draws.col(j);
    std::vector<double> const values(col.data(), col.data() + n);
    WeightedSummary const s = weighted_summary(values, equal);
    ParameterSummary p;
    p.name = j < static_cast<Index>(chains.columns.size()) ? chains.columns[static_cast<std::size_t>(j)] : "";
    p.mean = s.mean;
    p.sd = n > 1 ? std::sqrt((col.array() - s.mean).square().sum() / static_cast<double>(n - 1)) : 0.0;
    p.q025 = s.q025;
    p.q50 = s.q50;
    p.q975 = s.q975;
    p.ess = chain_ess(col, &p.degenerate);
    out.push_back(p);
  }
  return out;
}

void write_chains_csv(Chains const &chains, std::filesystem::path const &path)
{
  std::ofstream out(path);
  if (!out) { throw std::runtime_error("cannot write " + path.string()); }
  out.precision(17);
  for (std::size_t j = 0; j < chains.columns.size(); ++j) { out << (j ? "," : "") << chains.columns[j]; }
  out << '\n';
  for (Index i = 0; i < chains.draws.rows(); ++i) {
    for (Index j = 0; j < chains.draws.cols(); ++j) { out << (j ? "," : "") << chains.draws(i, j); }
    out << '\n';
  }
}

} // namespace sacbma
