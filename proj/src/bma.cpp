#include "sacbma/bma.hpp"

#include <sstream>
#include <stdexcept>

namespace sacbma {

EvidenceSurface::EvidenceSurface(Dataset const &data, SpatialWeights const &W, PriorSpec const &priors,
                                 QuadratureConfig quad)
  : data_(&data)
  , W_(&W)
  , priors_(&priors)
  , quad_(quad)
{
}

double EvidenceSurface::log_evidence(double rho, double lambda) const
{
  return fit_conditional(*data_, *W_, rho, lambda, *priors_, quad_).log_evidence;
}

double EvidenceSurface::operator()(InternalPoint at) const
{
  return log_evidence(from_internal(at.gamma1), from_internal(at.gamma2)) +
         internal_log_prior(at.gamma1, priors_->rho_prior) + internal_log_prior(at.gamma2, priors_->lambda_prior);
}

namespace {

using Point2 = Eigen::Vector2d;

class NelderMead
{
public:
  NelderMead(EvidenceSurface const &surface, ModeSearchConfig const &cfg)
    : surface_(surface)
    , cfg_(cfg)
  {
  }

  // Minimizes -h from `start`; returns the best vertex.
  std::pair<Point2, double> run(Point2 const &start, double step)
  {
    std::array<Point2, 3> x{start, start + Point2(step, 0.0), start + Point2(0.0, step)};
    std::array<double, 3> f{};
    for (int i = 0; i < 3; ++i) { f[i] = eval(x[i]); }
    for (;;) {
      std::array<int, 3> order{0, 1, 2};
      std::sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
      x = {x[order[0]], x[order[1]], x[order[2]]};
      f = {f[order[0]], f[order[1]], f[order[2]]};
      if (std::isfinite(f[2]) && f[2] - f[0] < cfg_.tolerance) { return {x[0], f[0]}; }

      Point2 const centroid = 0.5 * (x[0] + x[1]);
      Point2 const xr = centroid + (centroid - x[2]);
      double const fr = eval(xr);
      if (fr < f[0]) {
        Point2 const xe = centroid + 2.0 * (centroid - x[2]);
        double const fe = eval(xe);
        if (fe < fr) {
          x[2] = xe;
          f[2] = fe;
        } else {
          x[2] = xr;
          f[2] = fr;
        }
        continue;
      }
      if (fr < f[1]) {
        x[2] = xr;
        f[2] = fr;
        continue;
      }
      bool const outside = fr < f[2];
      Point2 const xc = outside ? Point2(centroid + 0.5 * (xr - centroid)) : Point2(centroid + 0.5 * (x[2] - centroid));
      double const fc = eval(xc);
      if (outside ? fc <= fr : fc < f[2]) {
        x[2] = xc;
        f[2] = fc;
        continue;
      }
      for (int i = 1; i < 3; ++i) {
        x[i] = x[0] + 0.5 * (x[i] - x[0]);
        f[i] = eval(x[i]);
      }
    }
  }

  int evaluations() const { return evaluations_; }

private:
  double eval(Point2 const &at)
  {
    if (std::abs(at[0]) > cfg_.boundary || std::abs(at[1]) > cfg_.boundary) {
      return std::numeric_limits<double>::infinity();
    }
    if (++evaluations_ > cfg_.max_evaluations) {
      throw std::runtime_error("find_mode: optimizer did not converge within " + std::to_string(cfg_.max_evaluations) +
                               " evaluations");
    }
    return -surface_({at[0], at[1]});
  }

  EvidenceSurface const &surface_;
  ModeSearchConfig const &cfg_;
  int evaluations_ = 0;
};

} // namespace

ModeResult find_mode(EvidenceSurface const &surface, ModeSearchConfig const &cfg)
{
  NelderMead optimizer(surface, cfg);
  auto [best, value] = optimizer.run(Point2(cfg.start.gamma1, cfg.start.gamma2), cfg.initial_step);
  for (;;) {
    auto const [again, again_value] = optimizer.run(best, 0.25 * cfg.initial_step);
    bool const settled = value - again_value < cfg.tolerance;
    if (again_value < value) {
      best = again;
      value = again_value;
    }
    if (settled) { break; }
  }
  if (std::abs(best[0]) > cfg.boundary - 1.0 || std::abs(best[1]) > cfg.boundary - 1.0) {
    throw std::runtime_error("find_mode: mode lies on the search boundary");
  }

  ModeResult out;
  out.mode = {best[0], best[1]};
  out.objective = -value;
  out.evaluations = optimizer.evaluations();

  double const h = cfg.hessian_step;
  auto f = [&](double d1, double d2) { return surface({best[0] + d1, best[1] + d2}); };
  double const f0 = out.objective;
  Eigen::Matrix2d hessian;
  hessian(0, 0) = (f(h, 0) - 2.0 * f0 + f(-h, 0)) / (h * h);
  hessian(1, 1) = (f(0, h) - 2.0 * f0 + f(0, -h)) / (h * h);
  hessian(0, 1) = hessian(1, 0) = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
  out.precision = -hessian;

  Eigen::LLT<Eigen::Matrix2d> llt(out.precision);
  if (llt.info() == Eigen::Success) {
    Eigen::Matrix2d const cov = llt.solve(Eigen::Matrix2d::Identity());
    out.internal_sds = {std::sqrt(cov(0, 0)), std::sqrt(cov(1, 1))};
  } else {
    if (!(out.precision(0, 0) > 0.0) || !(out.precision(1, 1) > 0.0)) {
      throw std::runtime_error("find_mode: curvature at the mode is not negative along the axes");
    }
    out.diagonal_fallback = true;
    out.internal_sds = {1.0 / std::sqrt(out.precision(0, 0)), 1.0 / std::sqrt(out.precision(1, 1))};
    out.warnings.emplace_back("find_mode: Hessian at the mode is not negative definite; using its diagonal");
  }
  return out;
}

std::array<double, 2> random_walk_scales(ModeResult const &mode)
{
  return {2.4 / std::sqrt(mode.precision(0, 0)), 2.4 / std::sqrt(mode.precision(1, 1))};
}

ModeResult find_mode(Dataset const &data, SpatialWeights const &W, PriorSpec const &priors,
                     ModeSearchConfig const &cfg)
{
  return find_mode(EvidenceSurface(data, W, priors), cfg);
}

bool is_intercept(Matrix const &X, Index j) { return (X.col(j).array() == 1.0).all(); }

std::vector<double> BmaResult::weights() const
{
  std::vector<double> w;
  w.reserve(points.size());
  for (auto const &p : points) { w.push_back(p.weight); }
  return w;
}

namespace {

CoefficientSummary summarize(std::string name, MergedDensity merged, double mean, double second_moment)
{
  CoefficientSummary s;
  s.name = std::move(name);
  s.marginal = std::move(merged.grid);
  s.mean = mean;
  s.sd = std::sqrt(std::max(0.0, second_moment - mean * mean));
  s.q025 = grid_quantile(s.marginal, 0.025);
  s.q50 = grid_quantile(s.marginal, 0.5);
  s.q975 = grid_quantile(s.marginal, 0.975);
  return s;
}

std::string location(GridPoint const &p)
{
  std::ostringstream os;
  os << "grid point (" << p.rho_index << ", " << p.lambda_index << ") at rho = " << p.rho
     << ", lambda = " << p.lambda;
  return os.str();
}

} // namespace

BmaResult run_bma(Dataset const &data, SpatialWeights const &W, PriorSpec const &priors, BmaConfig const &cfg)
{
  data.validate();
  priors.validate();
  if (data.n() != W.size()) { throw std::invalid_argument("run_bma: dataset and W differ in size"); }

  BmaResult result;
  if (cfg.grid) {
    result.grid = *cfg.grid;
  } else {
    EvidenceSurface const surface(data, W, priors, cfg.quad);
    result.mode = find_mode(surface, cfg.mode);
    result.grid.center = result.mode->mode;
    result.grid.internal_sds = result.mode->internal_sds;
    result.grid.dims = cfg.auto_dims;
    result.grid.semi_amplitude = cfg.semi_amplitude;
    result.warnings = result.mode->warnings;
  }
  result.points = build_grid(result.grid);
  auto &points = result.points;
  Index const k1 = result.grid.dims[0];
  Index const k2 = result.grid.dims[1];
  Index const count = k1 * k2;

  // One factorization per distinct rho and per distinct lambda.
  std::vector<std::optional<SpatialFilter>> rho_filters(static_cast<std::size_t>(k1));
  std::vector<std::optional<SpatialFilter>> lambda_filters(static_cast<std::size_t>(k2));
  parallel_for(k1 + k2, cfg.threads, [&](Index i) {
    GridPoint const &p = i < k1 ? points[static_cast<std::size_t>(i * k2)] : points[static_cast<std::size_t>(i - k1)];
    try {
      if (i < k1) {
        rho_filters[static_cast<std::size_t>(i)].emplace(W, p.rho);
      } else {
        lambda_filters[static_cast<std::size_t>(i - k1)].emplace(W, p.lambda);
      }
    } catch (std::exception const &e) {
      throw std::runtime_error(location(p) + ": " + e.what());
    }
  });

  result.fits.resize(static_cast<std::size_t>(count));
  parallel_for(count, cfg.threads, [&](Index k) {
    auto &p = points[static_cast<std::size_t>(k)];
    try {
      auto const problem = whiten(data, *rho_filters[static_cast<std::size_t>(p.rho_index)],
                                  *lambda_filters[static_cast<std::size_t>(p.lambda_index)]);
      result.fits[static_cast<std::size_t>(k)] = fit_conditional(problem, priors, cfg.quad);
    } catch (std::exception const &e) {
      throw std::runtime_error(location(p) + ": " + e.what());
    }
    p.log_evidence = result.fits[static_cast<std::size_t>(k)].log_evidence;
    p.log_prior_internal = internal_log_prior(p.internal.gamma1, priors.rho_prior) +
                           internal_log_prior(p.internal.gamma2, priors.lambda_prior);
  });
  points = compute_weights(std::move(points));
  std::vector<double> const w = result.weights();

  // Coefficients and variance: merged marginals, exact mixture moments.
  auto const &fits = result.fits;
  for (Index j = 0; j < data.p(); ++j) {
    std::vector<DensityGrid> grids(fits.size(), DensityGrid::point_mass(0.0));
    double mean = 0.0;
    double second = 0.0;
    for (std::size_t i = 0; i < fits.size(); ++i) {
      double const m = fits[i].beta_mean()[j];
      mean += w[i] * m;
      second += w[i] * (fits[i].beta_cov()(j, j) + m * m);
      if (w[i] > 1e-12) { grids[i] = marginal_beta(fits[i], j); }
    }
    std::string name = j < static_cast<Index>(data.names.size()) ? data.names[static_cast<std::size_t>(j)]
                                                                 : "beta_" + std::to_string(j);
    result.beta.push_back(summarize(std::move(name), merge_marginals(grids, w, cfg.merge_points), mean, second));
  }
  {
    std::vector<DensityGrid> grids(fits.size(), DensityGrid::point_mass(0.0));
    double mean = 0.0;
    double second = 0.0;
    for (std::size_t i = 0; i < fits.size(); ++i) {
      double const m = fits[i].variance_mean();
      double const s = fits[i].variance_sd();
      mean += w[i] * m;
      second += w[i] * (s * s + m * m);
      if (w[i] > 1e-12) { grids[i] = marginal_variance(fits[i]); }
    }
    result.variance = summarize("tau_inv", merge_marginals(grids, w, cfg.merge_points), mean, second);
  }

  // Autocorrelation parameters on the bounded scale.
  std::vector<double> rho(points.size()), lambda(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    rho[i] = points[i].rho;
    lambda[i] = points[i].lambda;
  }
  result.rho_summary = weighted_summary(rho, w);
  result.lambda_summary = weighted_summary(lambda, w);
  result.rho_marginal = k1 > 1 ? weighted_kde_1d(rho, w) : DensityGrid::point_mass(rho.front());
  result.lambda_marginal = k2 > 1 ? weighted_kde_1d(lambda, w) : DensityGrid::point_mass(lambda.front());
  if (k1 > 1 && k2 > 1) { result.joint = weighted_kde_2d(rho, lambda, w); }

  result.ess = effective_sample_size(w);
  if (k1 >= 3 && k2 >= 3) {
    result.boundary_mass = boundary_mass(points, result.grid.dims);
    if (result.boundary_mass > cfg.boundary_warning) {
      std::ostringstream os;
      os << "run_bma: " << 100.0 * result.boundary_mass
         << "% of the weight lies on the grid boundary; widen the search region";
      result.warnings.push_back(os.str());
    }
  }

  std::vector<Index> impact_columns;
  for (Index j = 0; j < data.p(); ++j) {
    if (cfg.intercept_impacts || !is_intercept(data.X, j)) { impact_columns.push_back(j); }
  }
  if (cfg.compute_impacts && !impact_columns.empty()) {
    result.rho_traces.resize(static_cast<std::size_t>(k1));
    parallel_for(k1, cfg.threads, [&](Index i) {
      auto const trace = rho_filters[static_cast<std::size_t>(i)]->trace_inverse();
      result.rho_traces[static_cast<std::size_t>(i)] = trace.value;
    });
    if (data.n() >= 5000) { result.warnings.emplace_back("impacts: traces are stochastic estimates"); }
    std::vector<double> traces(fits.size());
    for (std::size_t i = 0; i < fits.size(); ++i) {
      traces[i] = result.rho_traces[static_cast<std::size_t>(points[i].rho_index)];
    }
    auto const top = static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
    for (Index j : impact_columns) {
      std::string const &name = result.beta[static_cast<std::size_t>(j)].name;
      result.impacts.push_back(bma_impacts(w, fits, traces, data.n(), j, name, cfg.merge_points));
      std::array<double, 1> const one{1.0};
      result.plug_in_impacts.push_back(bma_impacts(one, std::span(fits).subspan(top, 1),
                                                   std::span(traces).subspan(top, 1), data.n(), j, name));
    }
  }
  return result;
}

} // namespace sacbma
