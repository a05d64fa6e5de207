#pragma once

#include "types.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace sacbma {

struct Edge
{
  Index from = 0; // 1-based
  Index to = 0;   // 1-based
  double weight = 1.0;
};

/// Sparse n x n spatial weights matrix. Entries are nonnegative, the diagonal
/// is zero and every row has at least one neighbour. Immutable once built.
class SpatialWeights
{
public:
  SpatialWeights() = default;

  Index size() const { return matrix_.rows(); }
  SparseMatrix const &matrix() const { return matrix_; }
  bool row_standardized() const { return row_standardized_; }

  /// True when the matrix is diagonally similar to a symmetric one, i.e. it is
  /// a row-scaled version of a symmetric adjacency. Eigenvalues are then real.
  bool symmetrizable() const { return symmetric_base_; }

  /// Row sums divided out by row standardization (ones otherwise).
  Vector const &row_scale() const { return row_scale_; }

  std::optional<double> cached_min_eigenvalue() const { return min_eigenvalue_; }
  void cache_min_eigenvalue(double m) { min_eigenvalue_ = m; }

  friend SpatialWeights load_adjacency(std::vector<Edge> const &, std::optional<Index>);
  friend SpatialWeights row_standardize(SpatialWeights const &);
  friend SpatialWeights permute(SpatialWeights const &, std::vector<Index> const &);

private:
  SparseMatrix matrix_;
  Vector row_scale_;
  bool row_standardized_ = false;
  bool symmetric_base_ = false;
  std::optional<double> min_eigenvalue_;
};

/// Builds W from 1-based directed edges. `n` defaults to the largest index.
/// Throws std::invalid_argument on self-loops, out-of-range or duplicate
/// edges, negative weights and isolated regions.
SpatialWeights load_adjacency(std::vector<Edge> const &edges, std::optional<Index> n = std::nullopt);

/// Reads an edge list ("i j [weight]" per line, '#' comments) or a
/// coordinate-format file whose first data line is the header "n n nnz".
SpatialWeights read_adjacency(std::filesystem::path const &path);

/// Writes W as an edge list readable by read_adjacency.
void write_edge_list(SpatialWeights const &W, std::filesystem::path const &path);

/// Divides each row by its sum. Idempotent.
SpatialWeights row_standardize(SpatialWeights const &W);

/// Relabels regions: region i of the result is region order[i] of W.
SpatialWeights permute(SpatialWeights const &W, std::vector<Index> const &order);

enum class EigenMethod
{
  Automatic,
  Dense,
  PowerIteration
};

/// Smallest real eigenvalue m of a row-standardized W; the admissible
/// autocorrelation interval is (1/m, 1). Dense eigendecomposition up to
/// n = 2000, shifted power iteration above. Throws std::runtime_error when the
/// eigensolver does not converge.
double min_eigenvalue(SpatialWeights const &W, EigenMethod method = EigenMethod::Automatic);

/// All eigenvalues of a row-standardized, symmetrizable W (dense solver, so
/// only up to max_size regions); empty otherwise.
std::optional<Vector> real_spectrum(SpatialWeights const &W, Index max_size = 2000);

/// Spatially lagged covariates W X.
Matrix lag(SpatialWeights const &W, Eigen::Ref<Matrix const> const &X);

/// Rook (4) or queen (8) contiguity on a rows x cols lattice, row-major
/// numbering. Not row-standardized.
SpatialWeights lattice_adjacency(Index rows, Index cols, bool queen = true);

} // namespace sacbma
