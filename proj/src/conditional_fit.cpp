#include "sacbma/conditional_fit.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <map>
#include <mutex>
#include <stdexcept>

namespace sacbma {

AutocorrelationPrior AutocorrelationPrior::scaled_beta(double a, double b)
{
  if (!(a >= 1.0 && b >= 1.0)) { throw std::invalid_argument("scaled_beta: shape parameters must be >= 1"); }
  double const log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) - std::log(2.0);
  AutocorrelationPrior prior;
  prior.name = "scaled_beta(" + std::to_string(a) + ", " + std::to_string(b) + ")";
  prior.log_density = [=](double x) {
    if (!(x > -1.0 && x < 1.0)) { return -std::numeric_limits<double>::infinity(); }
    double const u = 0.5 * (x + 1.0);
    return log_norm + (a - 1.0) * std::log(u) + (b - 1.0) * std::log1p(-u);
  };
  return prior;
}

void PriorSpec::validate() const
{
  if (!(beta_precision > 0.0) || !(tau_shape > 0.0) || !(tau_rate > 0.0)) {
    throw std::invalid_argument("priors: hyperparameters must be strictly positive");
  }
  if (tau_fixed && !(*tau_fixed > 0.0)) { throw std::invalid_argument("priors: fixed tau must be positive"); }
  for (auto const *prior : {&rho_prior, &lambda_prior}) {
    constexpr int kCells = 200000;
    double mass = 0.0;
    for (int i = 0; i < kCells; ++i) {
      double const x = -1.0 + (i + 0.5) * (2.0 / kCells);
      mass += std::exp((*prior)(x));
    }
    mass *= 2.0 / kCells;
    if (std::abs(mass - 1.0) > 1e-6) {
      throw std::invalid_argument("priors: " + prior->name + " integrates to " + std::to_string(mass) + ", not 1");
    }
  }
}

void Dataset::validate() const
{
  if (X.rows() != y.size()) { throw std::invalid_argument("dataset: y and X have different lengths"); }
  if (!(n() > p())) { throw std::invalid_argument("dataset: need more observations than coefficients"); }
  if (!names.empty() && static_cast<Index>(names.size()) != p()) {
    throw std::invalid_argument("dataset: one name per column required");
  }
  if (!y.allFinite() || !X.allFinite()) { throw std::invalid_argument("dataset: missing or non-finite values"); }
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p()) { throw std::invalid_argument("dataset: design matrix is not of full column rank"); }
}

WhitenedProblem whiten(Dataset const &data, SpatialFilter const &rho_filter, SpatialFilter const &lambda_filter)
{
  if (data.n() != rho_filter.size() || data.n() != lambda_filter.size()) {
    throw std::invalid_argument("whiten: dataset has " + std::to_string(data.n()) + " rows, W has " +
                                std::to_string(rho_filter.size()));
  }
  WhitenedProblem out;
  out.rho = rho_filter.rho();
  out.lambda = lambda_filter.rho();
  out.z = lambda_filter.matrix() * (rho_filter.matrix() * data.y);
  out.Z = lambda_filter.matrix() * data.X;
  out.log_det_sigma = 2.0 * rho_filter.log_det() + 2.0 * lambda_filter.log_det();
  return out;
}

LogTauIntegrand::LogTauIntegrand(WhitenedProblem const &problem, PriorSpec const &priors)
  : n_(problem.z.size())
  , log_det_sigma_(problem.log_det_sigma)
  , beta_precision_(priors.beta_precision)
  , tau_shape_(priors.tau_shape)
  , tau_rate_(priors.tau_rate)
{
  Matrix const gram = problem.Z.transpose() * problem.Z;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
    throw std::runtime_error("conditional fit: whitened design is rank deficient");
  }
  gram_values_ = eig.eigenvalues();
  gram_vectors_ = eig.eigenvectors();
  projected_ = gram_vectors_.transpose() * (problem.Z.transpose() * problem.z);
  Vector const ols = gram_vectors_ * projected_.cwiseQuotient(gram_values_);
  rss_ = (problem.z - problem.Z * ols).squaredNorm();
}

// min_beta tau |z - Z beta|^2 + p_beta |beta|^2, written around the least
// squares residual to avoid cancellation.
double LogTauIntegrand::quadratic(double tau) const
{
  double shrinkage = 0.0;
  for (Index i = 0; i < gram_values_.size(); ++i) {
    double const d = gram_values_[i];
    shrinkage += projected_[i] * projected_[i] * beta_precision_ / (d * (tau * d + beta_precision_));
  }
  return tau * (rss_ + shrinkage);
}

double LogTauIntegrand::log_likelihood(double log_tau) const
{
  double const tau = std::exp(log_tau);
  auto const p = static_cast<double>(gram_values_.size());
  double const log_det_posterior = (tau * gram_values_.array() + beta_precision_).log().sum();
  return 0.5 * static_cast<double>(n_) * (log_tau - kLog2Pi) + 0.5 * log_det_sigma_ +
         0.5 * p * std::log(beta_precision_) - 0.5 * log_det_posterior - 0.5 * quadratic(tau);
}

double LogTauIntegrand::operator()(double log_tau) const
{
  double const log_prior = tau_shape_ * std::log(tau_rate_) - std::lgamma(tau_shape_) +
                           (tau_shape_ - 1.0) * log_tau - tau_rate_ * std::exp(log_tau);
  return log_likelihood(log_tau) + log_prior + log_tau;
}

Vector LogTauIntegrand::beta_mean(double log_tau) const
{
  double const tau = std::exp(log_tau);
  Vector const scaled = (tau * projected_.array() / (tau * gram_values_.array() + beta_precision_)).matrix();
  return gram_vectors_ * scaled;
}

Matrix LogTauIntegrand::beta_cov(double log_tau) const
{
  double const tau = std::exp(log_tau);
  Vector const inv = (tau * gram_values_.array() + beta_precision_).inverse().matrix();
  Matrix cov = gram_vectors_ * inv.asDiagonal() * gram_vectors_.transpose();
  return 0.5 * (cov + cov.transpose());
}

std::pair<Vector, Vector> gauss_legendre(int count)
{
  static std::mutex cache_mutex;
  static std::map<int, std::pair<Vector, Vector>> cache;
  std::lock_guard lock(cache_mutex);
  if (auto it = cache.find(count); it != cache.end()) { return it->second; }

  Vector nodes(count);
  Vector weights(count);
  for (int i = 0; i < count; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (count + 0.5));
    double derivative = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= count; ++k) {
        double const pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (count == 1) { p0 = 1.0; }
      derivative = count * (x * p1 - p0) / (x * x - 1.0);
      double const step = p1 / derivative;
      x -= step;
      if (std::abs(step) < 1e-16) { break; }
    }
    nodes[count - 1 - i] = x;
    weights[count - 1 - i] = 2.0 / ((1.0 - x * x) * derivative * derivative);
  }
  return cache.emplace(count, std::pair{nodes, weights}).first->second;
}

namespace {

template <typename F> double golden_section_max(F const &f, double lo, double hi)
{
  double const ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo;
  double b = hi;
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > 1e-10 * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Point on the `direction` side of `mode` where f falls to `level`.
template <typename F> double crossing(F const &f, double mode, double direction, double level)
{
  double step = 0.25;
  double inside = mode;
  double outside = mode + direction * step;
  while (f(outside) > level) {
    inside = outside;
    step *= 2.0;
    outside = mode + direction * step;
    if (step > 1e4) { throw std::runtime_error("conditional fit: tau posterior is not proper"); }
  }
  for (int iter = 0; iter < 60; ++iter) {
    double const mid = 0.5 * (inside + outside);
    (f(mid) > level ? inside : outside) = mid;
  }
  return 0.5 * (inside + outside);
}

} // namespace

ConditionalFit fit_conditional(WhitenedProblem const &problem, PriorSpec const &priors, QuadratureConfig const &quad)
{
  if (quad.nodes < 3) { throw std::invalid_argument("conditional fit: need at least 3 quadrature nodes"); }
  ConditionalFit fit;
  fit.rho = problem.rho;
  fit.lambda = problem.lambda;
  fit.integrand = LogTauIntegrand(problem, priors);
  auto const &g = fit.integrand;

  if (priors.tau_fixed) {
    double const t = std::log(*priors.tau_fixed);
    fit.tau_fixed = true;
    fit.log_tau_lower = fit.log_tau_upper = t;
    fit.log_evidence = g.log_likelihood(t);
    fit.nodes.push_back({t, 1.0, g.beta_mean(t), g.beta_cov(t)});
    return fit;
  }

  auto const n = static_cast<double>(problem.z.size());
  double const guess =
    std::log((priors.tau_shape + 0.5 * n) / (priors.tau_rate + 0.5 * std::max(g.residual_sum_of_squares(), 1e-300)));
  double lo = guess - 4.0;
  double hi = guess + 4.0;
  while (g(lo) > g(lo + 1e-3)) { lo -= 4.0; }
  while (g(hi) > g(hi - 1e-3)) { hi += 4.0; }
  double const mode = golden_section_max(g, lo, hi);
  double const level = g(mode) - quad.log_drop;
  fit.log_tau_lower = crossing(g, mode, -1.0, level);
  fit.log_tau_upper = crossing(g, mode, +1.0, level);

  auto const [unit_nodes, unit_weights] = gauss_legendre(quad.nodes);
  double const half = 0.5 * (fit.log_tau_upper - fit.log_tau_lower);
  double const mid = 0.5 * (fit.log_tau_upper + fit.log_tau_lower);
  Vector log_terms(quad.nodes);
  for (int k = 0; k < quad.nodes; ++k) {
    double const t = mid + half * unit_nodes[k];
    log_terms[k] = std::log(half * unit_weights[k]) + g(t);
  }
  fit.log_evidence = log_sum_exp(log_terms);
  fit.nodes.reserve(quad.nodes);
  for (int k = 0; k < quad.nodes; ++k) {
    double const t = mid + half * unit_nodes[k];
    fit.nodes.push_back({t, std::exp(log_terms[k] - fit.log_evidence), g.beta_mean(t), g.beta_cov(t)});
  }
  return fit;
}

ConditionalFit fit_conditional(Dataset const &data, SpatialWeights const &W, double rho, double lambda,
                               PriorSpec const &priors, QuadratureConfig const &quad)
{
  return fit_conditional(whiten(data, SpatialFilter(W, rho), SpatialFilter(W, lambda)), priors, quad);
}

Vector ConditionalFit::beta_mean() const
{
  Vector mean = Vector::Zero(p());
  for (auto const &node : nodes) { mean += node.weight * node.beta_mean; }
  return mean;
}

Matrix ConditionalFit::beta_cov() const
{
  Vector const mean = beta_mean();
  Matrix second = Matrix::Zero(p(), p());
  for (auto const &node : nodes) {
    second += node.weight * (node.beta_cov + node.beta_mean * node.beta_mean.transpose());
  }
  return second - mean * mean.transpose();
}

double ConditionalFit::variance_mean() const
{
  double mean = 0.0;
  for (auto const &node : nodes) { mean += node.weight * std::exp(-node.log_tau); }
  return mean;
}

double ConditionalFit::variance_sd() const
{
  double second = 0.0;
  for (auto const &node : nodes) { second += node.weight * std::exp(-2.0 * node.log_tau); }
  double const mean = variance_mean();
  return std::sqrt(std::max(0.0, second - mean * mean));
}

DensityGrid marginal_beta(ConditionalFit const &fit, Index j, Index points)
{
  if (j < 0 || j >= fit.p()) { throw std::out_of_range("marginal_beta: coefficient index out of range"); }
  double const mean = fit.beta_mean()[j];
  double const sd = std::sqrt(fit.beta_cov()(j, j));
  DensityGrid g;
  g.x = Vector::LinSpaced(points, mean - 6.0 * sd, mean + 6.0 * sd);
  g.density = Vector::Zero(points);
  for (auto const &node : fit.nodes) {
    double const m = node.beta_mean[j];
    double const s = std::sqrt(node.beta_cov(j, j));
    g.density.array() +=
      node.weight * (-0.5 * ((g.x.array() - m) / s).square()).exp() / (s * std::sqrt(2.0 * M_PI));
  }
  return g;
}

DensityGrid marginal_variance(ConditionalFit const &fit, Index points)
{
  if (fit.tau_fixed) { return DensityGrid::point_mass(std::exp(-fit.log_tau_lower)); }
  DensityGrid g;
  g.x = Vector::LinSpaced(points, std::exp(-fit.log_tau_upper), std::exp(-fit.log_tau_lower));
  g.density.resize(points);
  for (Index i = 0; i < points; ++i) {
    double const t = -std::log(g.x[i]);
    g.density[i] = std::exp(fit.integrand(t) - fit.log_evidence) / g.x[i];
  }
  return g;
}

} // namespace sacbma
