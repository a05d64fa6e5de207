#pragma once

#include "spatial_weights.hpp"

#include <Eigen/SparseLU>

#include <memory>

namespace sacbma {

struct TraceResult
{
  double value = 0.0;
  bool estimated = false; // stochastic (Hutchinson) estimate above the size threshold
};

/// The spatial filter A(rho) = I - rho W, factorized once. Immutable; solves
/// against one filter may run concurrently.
class SpatialFilter
{
public:
  /// Throws std::invalid_argument when W is not row-standardized or rho lies
  /// outside (1/m, 1), and std::runtime_error when the factorization fails or
  /// the determinant is not positive.
  SpatialFilter(SpatialWeights const &W, double rho);

  double rho() const { return rho_; }
  Index size() const { return matrix_.rows(); }
  SparseMatrix const &matrix() const { return matrix_; }

  /// log det(I - rho W).
  double log_det() const { return log_det_; }

  /// (I - rho W) B
  Matrix apply(Eigen::Ref<Matrix const> const &B) const;

  /// (I - rho W)^{-1} B
  Matrix solve(Eigen::Ref<Matrix const> const &B) const;

  /// tr((I - rho W)^{-1}): unit-vector solves for n < exact_limit, otherwise a
  /// seeded Rademacher estimate flagged in the result.
  TraceResult trace_inverse(Index exact_limit = 5000) const;

private:
  double rho_ = 0.0;
  SparseMatrix matrix_;
  std::shared_ptr<Eigen::SparseLU<SparseMatrix> const> lu_;
  double log_det_ = 0.0;
};

/// Throws unless rho is in the admissible interval (1/m, 1) of a
/// row-standardized W.
void check_admissible(SpatialWeights const &W, double rho);

inline SpatialFilter make_filter(SpatialWeights const &W, double rho) { return SpatialFilter(W, rho); }
inline double logdet_filter(SpatialFilter const &F) { return F.log_det(); }
inline Matrix solve_filter(SpatialFilter const &F, Eigen::Ref<Matrix const> const &B) { return F.solve(B); }
inline TraceResult trace_inverse_filter(SpatialFilter const &F) { return F.trace_inverse(); }

/// Sigma = A(rho)' A(lambda)' A(lambda) A(rho) with its log-determinant taken
/// from the two filter factorizations.
struct PrecisionStructure
{
  SparseMatrix sigma;
  double log_det_sigma = 0.0;
};

PrecisionStructure precision_structure(SpatialFilter const &rho_filter, SpatialFilter const &lambda_filter);
PrecisionStructure precision_structure(SpatialWeights const &W, double rho, double lambda);

/// log det(I - rho W) for many rho values: a sum over the spectrum when W is
/// symmetrizable and small enough, else refactorization on one symbolic analysis. Not
/// thread-safe; one instance per sampler.
class LogDetEvaluator
{
public:
  explicit LogDetEvaluator(SpatialWeights const &W);
  double operator()(double rho);

private:
  SparseMatrix pattern_;
  Vector weight_values_;
  Vector identity_values_;
  Eigen::SparseLU<SparseMatrix> lu_;
  std::optional<Vector> spectrum_;
};

} // namespace sacbma
