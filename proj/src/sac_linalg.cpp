#include "sacbma/sac_linalg.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace sacbma {

namespace {

SparseMatrix identity_minus(SpatialWeights const &W, double rho)
{
  SparseMatrix I(W.size(), W.size());
  I.setIdentity();
  SparseMatrix A = I - rho * W.matrix();
  A.makeCompressed();
  return A;
}

} // namespace

void check_admissible(SpatialWeights const &W, double rho)
{
  if (!W.row_standardized()) {
    throw std::invalid_argument("spatial filter: W must be row-standardized for the (1/m, 1) interval");
  }
  if (!std::isfinite(rho) || rho >= 1.0) {
    throw std::invalid_argument("spatial filter: autocorrelation " + std::to_string(rho) + " outside (1/m, 1)");
  }
  // Row-stochastic W has spectral radius 1, so m >= -1 and (-1, 1) is always admissible.
  if (rho > -1.0) { return; }
  auto const cached = W.cached_min_eigenvalue();
  double const m = cached ? *cached : min_eigenvalue(W);
  if (!(m < 0.0) || rho * m >= 1.0 - 1e-10) {
    throw std::invalid_argument("spatial filter: autocorrelation " + std::to_string(rho) + " outside (1/m, 1)");
  }
}

SpatialFilter::SpatialFilter(SpatialWeights const &W, double rho)
  : rho_(rho)
{
  check_admissible(W, rho);
  matrix_ = identity_minus(W, rho);
  auto lu = std::make_shared<Eigen::SparseLU<SparseMatrix>>();
  lu->compute(matrix_);
  if (lu->info() != Eigen::Success) {
    throw std::runtime_error("spatial filter: factorization of I - rho W failed at rho = " + std::to_string(rho));
  }
  if (lu->signDeterminant() <= 0.0) {
    throw std::runtime_error("spatial filter: det(I - rho W) is not positive at rho = " + std::to_string(rho));
  }
  log_det_ = lu->logAbsDeterminant();
  lu_ = std::move(lu);
}

Matrix SpatialFilter::apply(Eigen::Ref<Matrix const> const &B) const
{
  if (B.rows() != size()) { throw std::invalid_argument("spatial filter: dimension mismatch"); }
  return matrix_ * B;
}

Matrix SpatialFilter::solve(Eigen::Ref<Matrix const> const &B) const
{
  if (B.rows() != size()) { throw std::invalid_argument("spatial filter: dimension mismatch"); }
  if (rho_ == 0.0) { return B; }
  Matrix Z = lu_->solve(Matrix(B));
  if (lu_->info() != Eigen::Success) { throw std::runtime_error("spatial filter: solve failed"); }
  return Z;
}

TraceResult SpatialFilter::trace_inverse(Index exact_limit) const
{
  Index const n = size();
  if (rho_ == 0.0) { return {static_cast<double>(n), false}; }
  if (n < exact_limit) {
    constexpr Index kBlock = 64;
    double trace = 0.0;
    for (Index start = 0; start < n; start += kBlock) {
      Index const width = std::min(kBlock, n - start);
      Matrix E = Matrix::Zero(n, width);
      for (Index k = 0; k < width; ++k) { E(start + k, k) = 1.0; }
      Matrix const Z = lu_->solve(E);
      for (Index k = 0; k < width; ++k) { trace += Z(start + k, k); }
    }
    return {trace, false};
  }
  constexpr int kProbes = 200;
  std::mt19937_64 rng(20190101);
  std::bernoulli_distribution coin(0.5);
  double sum = 0.0;
  for (int probe = 0; probe < kProbes; ++probe) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) { v[i] = coin(rng) ? 1.0 : -1.0; }
    Vector const z = lu_->solve(v);
    sum += v.dot(z);
  }
  return {sum / kProbes, true};
}

PrecisionStructure precision_structure(SpatialFilter const &rho_filter, SpatialFilter const &lambda_filter)
{
  if (rho_filter.size() != lambda_filter.size()) { throw std::invalid_argument("precision_structure: size mismatch"); }
  SparseMatrix const L = lambda_filter.matrix() * rho_filter.matrix();
  SparseMatrix const Lt = L.transpose();
  SparseMatrix sigma = Lt * L;
  SparseMatrix const sigma_t = sigma.transpose();
  PrecisionStructure out;
  out.sigma = 0.5 * (sigma + sigma_t);
  out.sigma.makeCompressed();
  out.log_det_sigma = 2.0 * rho_filter.log_det() + 2.0 * lambda_filter.log_det();
  return out;
}

PrecisionStructure precision_structure(SpatialWeights const &W, double rho, double lambda)
{
  return precision_structure(SpatialFilter(W, rho), SpatialFilter(W, lambda));
}

LogDetEvaluator::LogDetEvaluator(SpatialWeights const &W)
{
  if (!W.row_standardized()) { throw std::invalid_argument("LogDetEvaluator: W must be row-standardized"); }
  spectrum_ = real_spectrum(W);
  if (spectrum_) { return; }
  Index const n = W.size();
  SparseMatrix I(n, n);
  I.setIdentity();
  // Shared pattern of I and W; values are rewritten per rho.
  SparseMatrix ones = W.matrix();
  ones.coeffs().setOnes();
  pattern_ = I + ones;
  pattern_.makeCompressed();
  SparseMatrix w_aligned = pattern_;
  SparseMatrix i_aligned = pattern_;
  for (Index col = 0; col < n; ++col) {
    for (SparseMatrix::InnerIterator it(w_aligned, col); it; ++it) { it.valueRef() = W.matrix().coeff(it.row(), col); }
    for (SparseMatrix::InnerIterator it(i_aligned, col); it; ++it) { it.valueRef() = it.row() == col ? 1.0 : 0.0; }
  }
  weight_values_ = Eigen::Map<Vector const>(w_aligned.valuePtr(), w_aligned.nonZeros());
  identity_values_ = Eigen::Map<Vector const>(i_aligned.valuePtr(), i_aligned.nonZeros());
  lu_.analyzePattern(pattern_);
}

double LogDetEvaluator::operator()(double rho)
{
  if (spectrum_) {
    Eigen::ArrayXd const factors = 1.0 - rho * spectrum_->array();
    if ((factors <= 0.0).any()) {
      throw std::runtime_error("log-determinant: det(I - rho W) not positive at rho = " + std::to_string(rho));
    }
    return factors.log().sum();
  }
  Eigen::Map<Vector>(pattern_.valuePtr(), pattern_.nonZeros()) = identity_values_ - rho * weight_values_;
  lu_.factorize(pattern_);
  if (lu_.info() != Eigen::Success || lu_.signDeterminant() <= 0.0) {
    throw std::runtime_error("log-determinant: det(I - rho W) not positive at rho = " +
                             std::to_string(rho));
  }
  return lu_.logAbsDeterminant();
}

} // namespace sacbma
