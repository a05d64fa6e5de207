#include "sacbma/spatial_weights.hpp"

#include <Eigen/Eigenvalues>

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sacbma {

namespace {

bool is_symmetric(SparseMatrix const &A)
{
  SparseMatrix const At = A.transpose();
  if (At.nonZeros() != A.nonZeros()) { return false; }
  return (SparseMatrix(A - At)).coeffs().cwiseAbs().maxCoeff() == 0.0;
}

std::string strip_comment(std::string const &line)
{
  auto const cut = line.find_first_of("#%");
  return cut == std::string::npos ? line : line.substr(0, cut);
}

} // namespace

SpatialWeights load_adjacency(std::vector<Edge> const &edges, std::optional<Index> n)
{
  Index size = n.value_or(0);
  if (!n) {
    for (auto const &e : edges) { size = std::max({size, e.from, e.to}); }
  }
  if (size <= 0) { throw std::invalid_argument("adjacency: no regions"); }

  std::map<std::pair<Index, Index>, double> seen;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size());
  for (auto const &e : edges) {
    if (e.from < 1 || e.from > size || e.to < 1 || e.to > size) {
      throw std::invalid_argument("adjacency: index out of range in edge (" + std::to_string(e.from) + ", " +
                                  std::to_string(e.to) + "), n = " + std::to_string(size));
    }
    if (e.from == e.to) { throw std::invalid_argument("adjacency: self-loop at region " + std::to_string(e.from)); }
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw std::invalid_argument("adjacency: negative or non-finite weight on edge (" + std::to_string(e.from) +
                                  ", " + std::to_string(e.to) + ")");
    }
    if (!seen.emplace(std::pair{e.from, e.to}, e.weight).second) {
      throw std::invalid_argument("adjacency: duplicate edge (" + std::to_string(e.from) + ", " +
                                  std::to_string(e.to) + ")");
    }
    if (e.weight > 0.0) { triplets.emplace_back(e.from - 1, e.to - 1, e.weight); }
  }

  SpatialWeights W;
  W.matrix_.resize(size, size);
  W.matrix_.setFromTriplets(triplets.begin(), triplets.end());
  W.matrix_.makeCompressed();

  Vector const sums = W.matrix_ * Vector::Ones(size);
  for (Index i = 0; i < size; ++i) {
    if (sums[i] <= 0.0) { throw std::invalid_argument("adjacency: isolated region " + std::to_string(i + 1)); }
  }
  W.row_scale_ = Vector::Ones(size);
  W.symmetric_base_ = is_symmetric(W.matrix_);
  return W;
}

SpatialWeights read_adjacency(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in) { throw std::runtime_error("cannot open adjacency file " + path.string()); }

  std::vector<Edge> edges;
  std::optional<Index> n;
  bool first = true;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(strip_comment(line));
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) { tokens.push_back(tok); }
    if (tokens.empty()) { continue; }
    if (tokens.size() < 2 || tokens.size() > 3) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": expected 'i j [weight]'");
    }
    Edge e;
    try {
      std::size_t used = 0;
      e.from = std::stoll(tokens[0], &used);
      if (used != tokens[0].size()) { throw std::invalid_argument(tokens[0]); }
      e.to = std::stoll(tokens[1], &used);
      if (used != tokens[1].size()) { throw std::invalid_argument(tokens[1]); }
      if (tokens.size() == 3) { e.weight = std::stod(tokens[2]); }
    } catch (std::logic_error const &) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": malformed record");
    }
    // Coordinate format: "n n nnz" header with an integral third field.
    if (first && tokens.size() == 3 && e.from == e.to && tokens[2].find_first_of(".eE") == std::string::npos) {
      n = e.from;
      first = false;
      continue;
    }
    first = false;
    edges.push_back(e);
  }
  return load_adjacency(edges, n);
}

void write_edge_list(SpatialWeights const &W, std::filesystem::path const &path)
{
  std::ofstream out(path);
  if (!out) { throw std::runtime_error("cannot write " + path.string()); }
  out << "# " << W.size() << " regions\n";
  out.precision(17);
  Eigen::SparseMatrix<double, Eigen::RowMajor> const rows = W.matrix();
  for (Index i = 0; i < rows.outerSize(); ++i) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, i); it; ++it) {
      out << i + 1 << ' ' << it.col() + 1;
      if (it.value() != 1.0) { out << ' ' << it.value(); }
      out << '\n';
    }
  }
}

SpatialWeights row_standardize(SpatialWeights const &W)
{
  if (W.row_standardized_) { return W; }
  Vector const sums = W.matrix_ * Vector::Ones(W.size());
  for (Index i = 0; i < W.size(); ++i) {
    if (!(sums[i] > 0.0)) { throw std::invalid_argument("row_standardize: zero row sum at region " + std::to_string(i + 1)); }
  }
  SpatialWeights out = W;
  out.matrix_ = sums.cwiseInverse().asDiagonal() * W.matrix_;
  out.matrix_.makeCompressed();
  out.row_scale_ = W.row_scale_.cwiseProduct(sums);
  out.row_standardized_ = true;
  out.min_eigenvalue_.reset();
  return out;
}

SpatialWeights permute(SpatialWeights const &W, std::vector<Index> const &order)
{
  Index const n = W.size();
  if (static_cast<Index>(order.size()) != n) { throw std::invalid_argument("permute: order has wrong length"); }
  // P maps old index order[i] to new index i.
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> P(n);
  for (Index i = 0; i < n; ++i) { P.indices()[order[i]] = static_cast<int>(i); }
  SpatialWeights out = W;
  out.matrix_ = W.matrix_.twistedBy(P);
  out.matrix_.makeCompressed();
  out.row_scale_ = P * W.row_scale_;
  return out;
}

namespace {

// D^{1/2} W D^{-1/2}, symmetric when W = D^{-1} A with A symmetric.
SparseMatrix symmetrized(SpatialWeights const &W)
{
  Vector const root = W.row_scale().cwiseSqrt();
  SparseMatrix S = root.asDiagonal() * W.matrix() * root.cwiseInverse().asDiagonal();
  SparseMatrix const St = S.transpose();
  return 0.5 * (S + St);
}

double min_eigenvalue_dense(SpatialWeights const &W)
{
  if (W.symmetrizable()) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(Matrix(symmetrized(W)), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) { throw std::runtime_error("min_eigenvalue: eigensolver did not converge"); }
    return solver.eigenvalues().minCoeff();
  }
  Eigen::EigenSolver<Matrix> solver(Matrix(W.matrix()), false);
  if (solver.info() != Eigen::Success) { throw std::runtime_error("min_eigenvalue: eigensolver did not converge"); }
  double m = std::numeric_limits<double>::infinity();
  for (auto const &z : solver.eigenvalues()) {
    if (std::abs(z.imag()) <= 1e-9) { m = std::min(m, z.real()); }
  }
  return m;
}

// Power iteration on I - W (eigenvalues 1 - mu >= 0); the dominant one is 1 - m.
double min_eigenvalue_power(SpatialWeights const &W)
{
  Index const n = W.size();
  bool const sym = W.symmetrizable();
  SparseMatrix const S = sym ? symmetrized(W) : W.matrix();
  Vector v = Vector::LinSpaced(n, 1.0, 2.0);
  v -= Vector::Constant(n, v.mean());
  v.normalize();
  double estimate = 0.0;
  for (int iter = 0; iter < 200000; ++iter) {
    Vector w = v - S * v;
    double const next = sym ? v.dot(w) : w.norm() * (v.dot(w) < 0.0 ? -1.0 : 1.0);
    double const norm = w.norm();
    if (norm == 0.0) { return 1.0; }
    v = w / norm;
    if (iter > 10 && std::abs(next - estimate) <= 1e-13 * std::max(1.0, std::abs(next))) { return 1.0 - next; }
    estimate = next;
  }
  throw std::runtime_error("min_eigenvalue: power iteration did not converge");
}

} // namespace

std::optional<Vector> real_spectrum(SpatialWeights const &W, Index max_size)
{
  if (!W.row_standardized() || !W.symmetrizable() || W.size() > max_size) { return std::nullopt; }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(Matrix(symmetrized(W)), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) { return std::nullopt; }
  return solver.eigenvalues();
}

double min_eigenvalue(SpatialWeights const &W, EigenMethod method)
{
  if (!W.row_standardized()) { throw std::invalid_argument("min_eigenvalue: W must be row-standardized"); }
  if (method == EigenMethod::Automatic) {
    if (auto cached = W.cached_min_eigenvalue()) { return *cached; }
    method = W.size() <= 2000 ? EigenMethod::Dense : EigenMethod::PowerIteration;
  }
  return method == EigenMethod::Dense ? min_eigenvalue_dense(W) : min_eigenvalue_power(W);
}

Matrix lag(SpatialWeights const &W, Eigen::Ref<Matrix const> const &X)
{
  if (X.rows() != W.size()) {
    throw std::invalid_argument("lag: X has " + std::to_string(X.rows()) + " rows, W has " + std::to_string(W.size()));
  }
  return W.matrix() * X;
}

SpatialWeights lattice_adjacency(Index rows, Index cols, bool queen)
{
  std::vector<Edge> edges;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      for (Index dr = -1; dr <= 1; ++dr) {
        for (Index dc = -1; dc <= 1; ++dc) {
          if ((dr == 0 && dc == 0) || (!queen && dr != 0 && dc != 0)) { continue; }
          Index const rr = r + dr;
          Index const cc = c + dc;
          if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) { continue; }
          edges.push_back({r * cols + c + 1, rr * cols + cc + 1, 1.0});
        }
      }
    }
  }
  return load_adjacency(edges, rows * cols);
}

} // namespace sacbma
