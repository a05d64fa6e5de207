#include "sacbma/grid.hpp"

#include <stdexcept>

namespace sacbma {

double delta_variance(double estimate, double std_error)
{
  if (!(std::abs(estimate) < 1.0)) { throw std::domain_error("delta_variance: estimate must lie in (-1, 1)"); }
  if (!(std_error > 0.0)) { throw std::domain_error("delta_variance: standard error must be positive"); }
  double const slope = 2.0 / ((1.0 + estimate) * (1.0 - estimate));
  return std_error * std_error * slope * slope;
}

double internal_log_prior(double gamma, AutocorrelationPrior const &base)
{
  double const a = std::abs(gamma);
  double const log_jacobian = std::log(2.0) - a - 2.0 * std::log1p(std::exp(-a));
  return base(from_internal(gamma)) + log_jacobian;
}

void GridSpec::validate() const
{
  if (dims[0] < 1 || dims[1] < 1) { throw std::invalid_argument("grid: dimensions must be positive"); }
  if (!(internal_sds[0] > 0.0) || !(internal_sds[1] > 0.0) || !std::isfinite(internal_sds[0]) ||
      !std::isfinite(internal_sds[1])) {
    throw std::invalid_argument("grid: degenerate internal standard deviations");
  }
  if (!(semi_amplitude > 0.0)) { throw std::invalid_argument("grid: semi-amplitude must be positive"); }
  if (!std::isfinite(center.gamma1) || !std::isfinite(center.gamma2)) {
    throw std::invalid_argument("grid: centre must be finite");
  }
}

GridSpec GridSpec::from_estimates(double rho, double se_rho, double lambda, double se_lambda,
                                  std::array<Index, 2> dims, double semi_amplitude)
{
  GridSpec spec;
  spec.center = {to_internal(rho), to_internal(lambda)};
  spec.internal_sds = {std::sqrt(delta_variance(rho, se_rho)), std::sqrt(delta_variance(lambda, se_lambda))};
  spec.dims = dims;
  spec.semi_amplitude = semi_amplitude;
  return spec;
}

namespace {

Vector axis(double center, double sd, Index count, double amplitude)
{
  if (count == 1) { return Vector::Constant(1, center); }
  return Vector::LinSpaced(count, center - amplitude * sd, center + amplitude * sd);
}

} // namespace

std::vector<GridPoint> build_grid(GridSpec const &spec)
{
  spec.validate();
  Vector const g1 = axis(spec.center.gamma1, spec.internal_sds[0], spec.dims[0], spec.semi_amplitude);
  Vector const g2 = axis(spec.center.gamma2, spec.internal_sds[1], spec.dims[1], spec.semi_amplitude);
  std::vector<GridPoint> points;
  points.reserve(static_cast<std::size_t>(g1.size() * g2.size()));
  for (Index i = 0; i < g1.size(); ++i) {
    for (Index j = 0; j < g2.size(); ++j) {
      GridPoint p;
      p.internal = {g1[i], g2[j]};
      p.rho = from_internal(g1[i]);
      p.lambda = from_internal(g2[j]);
      p.rho_index = i;
      p.lambda_index = j;
      points.push_back(p);
    }
  }
  return points;
}

std::vector<GridPoint> compute_weights(std::vector<GridPoint> points)
{
  if (points.empty()) { throw std::invalid_argument("compute_weights: no grid points"); }
  Vector log_terms(static_cast<Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    double const term = points[i].log_evidence + points[i].log_prior_internal;
    if (std::isnan(term) || term == std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("compute_weights: non-finite log term at grid point " + std::to_string(i));
    }
    log_terms[static_cast<Index>(i)] = term;
  }
  double const peak = log_terms.maxCoeff();
  if (!std::isfinite(peak)) { throw std::invalid_argument("compute_weights: all log terms are -inf"); }
  Vector const scaled = (log_terms.array() - peak).unaryExpr([](double v) { return std::exp(v); });
  double const total = scaled.sum();
  for (std::size_t i = 0; i < points.size(); ++i) { points[i].weight = scaled[static_cast<Index>(i)] / total; }
  return points;
}

double boundary_mass(std::vector<GridPoint> const &points, std::array<Index, 2> dims)
{
  double mass = 0.0;
  for (auto const &p : points) {
    if (p.rho_index == 0 || p.rho_index == dims[0] - 1 || p.lambda_index == 0 || p.lambda_index == dims[1] - 1) {
      mass += p.weight;
    }
  }
  return mass;
}

Index nearest_node(std::vector<GridPoint> const &points, InternalPoint target, Eigen::Matrix2d const &precision)
{
  Index best = -1;
  double best_distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    Eigen::Vector2d const d(points[i].internal.gamma1 - target.gamma1, points[i].internal.gamma2 - target.gamma2);
    double const distance = d.dot(precision * d);
    if (distance < best_distance) {
      best_distance = distance;
      best = static_cast<Index>(i);
    }
  }
  return best;
}

} // namespace sacbma
