#pragma once

#include "grid.hpp"
#include "impacts.hpp"
#include "posterior_merge.hpp"

#include <optional>

namespace sacbma {

/// h(gamma1, gamma2) = log p(D | rho, lambda) + internal priors of both parameters.
class EvidenceSurface
{
public:
  EvidenceSurface(Dataset const &data, SpatialWeights const &W, PriorSpec const &priors, QuadratureConfig quad = {});
  double operator()(InternalPoint at) const;
  double log_evidence(double rho, double lambda) const;

private:
  Dataset const *data_;
  SpatialWeights const *W_;
  PriorSpec const *priors_;
  QuadratureConfig quad_;
};

struct ModeSearchConfig
{
  InternalPoint start{0.0, 0.0};
  double initial_step = 1.0;
  int max_evaluations = 200;
  double tolerance = 1e-6; // on the objective
  double hessian_step = 1e-3;
  double boundary = 12.0; // |gamma| beyond this counts as the search boundary
};

struct ModeResult
{
  InternalPoint mode;
  std::array<double, 2> internal_sds{0.0, 0.0};
  Eigen::Matrix2d precision = Eigen::Matrix2d::Zero(); // negative Hessian of h at the mode
  double objective = 0.0;
  int evaluations = 0;
  bool diagonal_fallback = false;
  std::vector<std::string> warnings;
};

/// Nelder-Mead with restart on h, then a central finite-difference Hessian.
/// Throws std::runtime_error on budget exhaustion or a mode on the boundary.
ModeResult find_mode(EvidenceSurface const &surface, ModeSearchConfig const &cfg = {});

/// Default random-walk scales for single-coordinate updates: 2.4 times the
/// conditional sds 1 / sqrt(precision_kk) at the mode.
std::array<double, 2> random_walk_scales(ModeResult const &mode);
ModeResult find_mode(Dataset const &data, SpatialWeights const &W, PriorSpec const &priors,
                     ModeSearchConfig const &cfg = {});

struct BmaConfig
{
  std::optional<GridSpec> grid; // absent: centre and spread from find_mode
  std::array<Index, 2> auto_dims{20, 20};
  double semi_amplitude = 3.0;
  unsigned threads = 0; // 0: hardware concurrency
  QuadratureConfig quad;
  ModeSearchConfig mode;
  bool compute_impacts = true;
  bool intercept_impacts = false;
  double boundary_warning = 0.01;
  Index merge_points = 401;
};

struct CoefficientSummary
{
  std::string name;
  DensityGrid marginal;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
};

struct BmaResult
{
  GridSpec grid;
  std::optional<ModeResult> mode;
  std::vector<GridPoint> points;
  std::vector<ConditionalFit> fits; // lattice order, aligned with points
  std::vector<double> rho_traces;   // tr((I - rho W)^{-1}) per rho index, when impacts were computed

  std::vector<CoefficientSummary> beta;
  CoefficientSummary variance; // 1 / tau

  WeightedSummary rho_summary;
  WeightedSummary lambda_summary;
  DensityGrid rho_marginal;
  DensityGrid lambda_marginal;
  Surface2D joint;

  std::vector<ImpactSummary> impacts;
  std::vector<ImpactSummary> plug_in_impacts; // at the highest-weight node
  double ess = 0.0;
  double boundary_mass = 0.0;
  std::vector<std::string> warnings;

  std::vector<double> weights() const;
};

/// Evaluates every lattice node concurrently and merges in lattice order, so
/// the result does not depend on the thread count. A failing node aborts with
/// its location.
BmaResult run_bma(Dataset const &data, SpatialWeights const &W, PriorSpec const &priors, BmaConfig const &cfg = {});

/// True for an all-ones column (the intercept).
bool is_intercept(Matrix const &X, Index j);

} // namespace sacbma
