#include "sacbma/io.hpp"

#include <charconv>
#include <fstream>
#include <random>
#include <stdexcept>

namespace sacbma {

namespace {

using json = nlohmann::json;

std::string trim(std::string s)
{
  auto const first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) { return {}; }
  auto const last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(std::string const &line)
{
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char const c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(trim(field));
  return fields;
}

struct CsvTable
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string const &name, std::filesystem::path const &path) const
  {
    auto const it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) { throw std::invalid_argument(path.string() + ": missing column '" + name + "'"); }
    return static_cast<std::size_t>(it - header.begin());
  }
};

CsvTable read_csv(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in) { throw std::runtime_error("cannot open " + path.string()); }
  CsvTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) { continue; }
    if (table.header.empty()) {
      table.header = split_csv_line(line);
    } else {
      table.rows.push_back(split_csv_line(line));
    }
  }
  if (table.header.empty()) { throw std::invalid_argument(path.string() + ": no header row"); }
  return table;
}

double parse_cell(std::string const &cell, std::string const &column, std::size_t row)
{
  double value = 0.0;
  auto const *begin = cell.data();
  auto const *end = cell.data() + cell.size();
  if (!cell.empty() && *begin == '+') { ++begin; }
  auto const [ptr, ec] = std::from_chars(begin, end, value);
  if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw std::invalid_argument("non-numeric cell '" + cell + "' in column '" + column + "', data row " +
                                std::to_string(row + 1));
  }
  return value;
}

std::string file_stem(std::string name)
{
  for (char &c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') { c = '_'; }
  }
  return name;
}

std::ofstream open_output(std::filesystem::path const &path)
{
  std::ofstream out(path);
  if (!out) { throw std::runtime_error("cannot write " + path.string()); }
  out.precision(17);
  return out;
}

json moments(double mean, double sd) { return {{"mean", mean}, {"sd", sd}}; }

json summary_row(std::string const &name, double mean, double sd, double q025, double q50, double q975)
{
  return {{"parameter", name}, {"bma", {{"mean", mean}, {"sd", sd}, {"q025", q025}, {"q50", q50}, {"q975", q975}}}};
}

} // namespace

Dataset load_dataset(std::filesystem::path const &csv, std::string const &response,
                     std::vector<std::string> const &covariates)
{
  CsvTable const table = read_csv(csv);
  std::size_t const y_col = table.column(response, csv);
  std::vector<std::size_t> x_cols;
  for (auto const &name : covariates) { x_cols.push_back(table.column(name, csv)); }

  Index const n = static_cast<Index>(table.rows.size());
  Dataset data;
  data.y.resize(n);
  data.X.resize(n, static_cast<Index>(covariates.size()) + 1);
  data.X.col(0).setOnes();
  data.names.push_back(kInterceptName);
  data.names.insert(data.names.end(), covariates.begin(), covariates.end());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    auto const &row = table.rows[r];
    if (row.size() != table.header.size()) {
      throw std::invalid_argument(csv.string() + ": data row " + std::to_string(r + 1) + " has " +
                                  std::to_string(row.size()) + " fields, header has " +
                                  std::to_string(table.header.size()));
    }
    auto const i = static_cast<Index>(r);
    data.y[i] = parse_cell(row[y_col], response, r);
    for (std::size_t k = 0; k < x_cols.size(); ++k) {
      data.X(i, static_cast<Index>(k) + 1) = parse_cell(row[x_cols[k]], covariates[k], r);
    }
  }
  return data;
}

Dataset with_lagged_covariates(Dataset const &data, SpatialWeights const &W)
{
  std::vector<Index> cols;
  for (Index j = 0; j < data.p(); ++j) {
    if (!is_intercept(data.X, j)) { cols.push_back(j); }
  }
  Dataset out = data;
  out.X.conservativeResize(Eigen::NoChange, data.p() + static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    out.X.col(data.p() + static_cast<Index>(k)) = lag(W, data.X.col(cols[k]));
    out.names.push_back("lag_" + data.names[static_cast<std::size_t>(cols[k])]);
  }
  return out;
}

void write_dataset_csv(Dataset const &data, std::filesystem::path const &path)
{
  auto out = open_output(path);
  std::vector<Index> cols;
  out << "y";
  for (Index j = 0; j < data.p(); ++j) {
    if (is_intercept(data.X, j)) { continue; }
    cols.push_back(j);
    out << ',' << data.names[static_cast<std::size_t>(j)];
  }
  out << '\n';
  for (Index i = 0; i < data.n(); ++i) {
    out << data.y[i];
    for (Index j : cols) { out << ',' << data.X(i, j); }
    out << '\n';
  }
}

Dataset simulate_sac(SpatialWeights const &W, Vector const &beta, double rho, double lambda, double tau,
                     std::optional<Matrix> X, std::uint64_t seed)
{
  if (!(tau > 0.0)) { throw std::invalid_argument("simulate_sac: tau must be positive"); }
  SpatialFilter const rho_filter(W, rho);
  SpatialFilter const lambda_filter(W, lambda);
  Index const n = W.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  Dataset data;
  if (X) {
    if (X->rows() != n || X->cols() != beta.size()) { throw std::invalid_argument("simulate_sac: X has wrong shape"); }
    data.X = *X;
    for (Index j = 0; j < beta.size(); ++j) {
      data.names.push_back(is_intercept(data.X, j) ? std::string(kInterceptName) : "x" + std::to_string(j));
    }
  } else {
    if (beta.size() < 1) { throw std::invalid_argument("simulate_sac: beta must include the intercept"); }
    data.X.resize(n, beta.size());
    data.X.col(0).setOnes();
    data.names.push_back(kInterceptName);
    for (Index j = 1; j < beta.size(); ++j) {
      for (Index i = 0; i < n; ++i) { data.X(i, j) = normal(rng); }
      data.names.push_back("x" + std::to_string(j));
    }
  }
  Vector e(n);
  for (Index i = 0; i < n; ++i) { e[i] = normal(rng) / std::sqrt(tau); }
  Vector const u = lambda_filter.solve(e);
  data.y = rho_filter.solve(data.X * beta + u);
  return data;
}

BmaConfig bma_config(RunConfig const &cfg)
{
  BmaConfig bma;
  bma.threads = cfg.threads;
  bma.semi_amplitude = cfg.semi_amplitude;
  bma.auto_dims = cfg.grid_dims;
  if (cfg.grid_center && cfg.grid_se) {
    bma.grid = GridSpec::from_estimates((*cfg.grid_center)[0], (*cfg.grid_se)[0], (*cfg.grid_center)[1],
                                        (*cfg.grid_se)[1], cfg.grid_dims, cfg.semi_amplitude);
  } else if (cfg.grid_center || cfg.grid_se) {
    throw std::invalid_argument("grid centre and standard errors must be given together");
  }
  return bma;
}

json summary_json(Dataset const &data, BmaResult const &bma, std::optional<Chains> const &chains)
{
  json rows = json::array();
  for (auto const &b : bma.beta) { rows.push_back(summary_row(b.name, b.mean, b.sd, b.q025, b.q50, b.q975)); }
  auto const &r = bma.rho_summary;
  auto const &l = bma.lambda_summary;
  rows.push_back(summary_row("rho", r.mean, r.sd, r.q025, r.q50, r.q975));
  rows.push_back(summary_row("lambda", l.mean, l.sd, l.q025, l.q50, l.q975));
  auto const &v = bma.variance;
  rows.push_back(summary_row("tau_inv", v.mean, v.sd, v.q025, v.q50, v.q975));

  json diagnostics = {{"ess", bma.ess}, {"boundary_mass", bma.boundary_mass}, {"warnings", bma.warnings}};
  if (chains) {
    auto const stats = chain_summary(*chains);
    Index const p = data.p();
    for (Index j = 0; j < p; ++j) {
      auto const &s = stats[static_cast<std::size_t>(j)];
      rows[static_cast<std::size_t>(j)]["mcmc"] = {{"mean", s.mean}, {"sd", s.sd}, {"ess", s.ess}};
    }
    for (int k : {1, 2}) {
      auto const &s = stats[static_cast<std::size_t>(p + k)];
      rows[static_cast<std::size_t>(p + k - 1)]["mcmc"] = {{"mean", s.mean}, {"sd", s.sd}, {"ess", s.ess}};
    }
    // tau_inv from the precision draws.
    Vector const inv = chains->draws.col(chains->tau_column()).cwiseInverse();
    double const mean = inv.mean();
    double const sd = std::sqrt((inv.array() - mean).square().sum() / std::max<double>(1.0, inv.size() - 1.0));
    rows[static_cast<std::size_t>(p + 2)]["mcmc"] = {{"mean", mean}, {"sd", sd}, {"ess", chain_ess(inv)}};
    diagnostics["mcmc_acceptance"] = {{"rho", chains->acceptance[0]}, {"lambda", chains->acceptance[1]}};
    diagnostics["mcmc_warnings"] = chains->warnings;
  }

  json grid = {{"dims", bma.grid.dims},
               {"center_internal", {bma.grid.center.gamma1, bma.grid.center.gamma2}},
               {"center", {from_internal(bma.grid.center.gamma1), from_internal(bma.grid.center.gamma2)}},
               {"internal_sds", bma.grid.internal_sds},
               {"semi_amplitude", bma.grid.semi_amplitude},
               {"self_centered", bma.mode.has_value()}};
  return {{"n", data.n()}, {"coefficients", data.names}, {"grid", grid}, {"parameters", rows},
          {"diagnostics", diagnostics}};
}

json impacts_json(BmaResult const &bma, std::optional<Chains> const &chains, Dataset const &data,
                  SpatialWeights const &W)
{
  json out = json::array();
  // MCMC impacts use traces interpolated over the sampled rho range.
  std::optional<MonotoneCubic> trace_curve;
  if (chains && !bma.impacts.empty()) {
    Vector const rho = chains->draws.col(chains->rho_column());
    double lo = rho.minCoeff();
    double hi = rho.maxCoeff();
    if (hi - lo < 1e-9) {
      lo -= 1e-6;
      hi += 1e-6;
    }
    Vector const nodes = Vector::LinSpaced(101, lo, std::min(hi, std::nextafter(1.0, 0.0)));
    Vector traces(nodes.size());
    for (Index k = 0; k < nodes.size(); ++k) { traces[k] = SpatialFilter(W, nodes[k]).trace_inverse().value; }
    trace_curve.emplace(nodes, traces);
  }
  for (std::size_t k = 0; k < bma.impacts.size(); ++k) {
    auto const &imp = bma.impacts[k];
    auto const &plug = bma.plug_in_impacts[k];
    json row = {{"covariate", imp.covariate},
                {"bma",
                 {{"direct", moments(imp.direct.mean, imp.direct.sd)},
                  {"indirect", moments(imp.indirect.mean, imp.indirect.sd)},
                  {"total", moments(imp.total.mean, imp.total.sd)}}},
                {"plug_in", {{"direct", plug.direct.mean}, {"indirect", plug.indirect.mean}, {"total", plug.total.mean}}}};
    if (trace_curve) {
      Index const rows = chains->draws.rows();
      Eigen::ArrayXd direct(rows), total(rows);
      for (Index i = 0; i < rows; ++i) {
        double const beta = chains->draws(i, imp.index);
        double const rho = chains->draws(i, chains->rho_column());
        direct[i] = beta * (*trace_curve)(rho) / static_cast<double>(data.n());
        total[i] = beta / (1.0 - rho);
      }
      Eigen::ArrayXd const indirect = total - direct;
      auto stats = [&](Eigen::ArrayXd const &a) {
        double const m = a.mean();
        return moments(m, std::sqrt((a - m).square().sum() / std::max<double>(1.0, a.size() - 1.0)));
      };
      row["mcmc"] = {{"direct", stats(direct)}, {"indirect", stats(indirect)}, {"total", stats(total)}};
    }
    out.push_back(row);
  }
  return out;
}

void write_density_csv(DensityGrid const &g, std::filesystem::path const &path)
{
  auto out = open_output(path);
  out << "x,density\n";
  for (Index i = 0; i < g.size(); ++i) { out << g.x[i] << ',' << g.density[i] << '\n'; }
}

PipelineResult run_pipeline(RunConfig const &cfg)
{
  SpatialWeights const W = row_standardize(read_adjacency(cfg.adjacency_path));
  Dataset data = load_dataset(cfg.data_path, cfg.response, cfg.covariates);
  if (data.n() != W.size()) {
    throw std::invalid_argument("row-count mismatch: " + cfg.data_path.string() + " has " + std::to_string(data.n()) +
                                " rows, the adjacency has " + std::to_string(W.size()) + " regions");
  }
  if (cfg.include_lagged) { data = with_lagged_covariates(data, W); }

  PipelineResult result;
  result.bma = run_bma(data, W, cfg.priors, bma_config(cfg));
  auto const &bma = result.bma;
  if (cfg.mcmc) {
    McmcConfig mc = *cfg.mcmc;
    mc.seed = cfg.seed;
    InternalPoint const start = bma.mode ? bma.mode->mode : bma.grid.center;
    if (!mc.init) { mc.init = std::array{from_internal(start.gamma1), from_internal(start.gamma2)}; }
    if (!mc.rw_scales) {
      mc.rw_scales = bma.mode ? random_walk_scales(*bma.mode)
                              : std::array{2.4 * bma.grid.internal_sds[0], 2.4 * bma.grid.internal_sds[1]};
    }
    result.chains = sample_posterior(data, W, cfg.priors, mc);
  }

  result.summary = summary_json(data, bma, result.chains);
  result.impacts = impacts_json(bma, result.chains, data, W);

  auto const &dir = cfg.output_dir;
  std::filesystem::create_directories(dir / "marginals");
  open_output(dir / "summary.json") << result.summary.dump(2) << '\n';
  open_output(dir / "impacts.json") << result.impacts.dump(2) << '\n';
  {
    auto out = open_output(dir / "weights.csv");
    out << "rho,lambda,gamma1,gamma2,log_evidence,log_prior,weight\n";
    for (auto const &p : bma.points) {
      out << p.rho << ',' << p.lambda << ',' << p.internal.gamma1 << ',' << p.internal.gamma2 << ','
          << p.log_evidence << ',' << p.log_prior_internal << ',' << p.weight << '\n';
    }
  }
  for (auto const &b : bma.beta) { write_density_csv(b.marginal, dir / "marginals" / ("beta_" + file_stem(b.name) + ".csv")); }
  write_density_csv(bma.variance.marginal, dir / "marginals" / "tau_inv.csv");
  write_density_csv(bma.rho_marginal, dir / "marginals" / "rho.csv");
  write_density_csv(bma.lambda_marginal, dir / "marginals" / "lambda.csv");
  for (auto const &imp : bma.impacts) {
    std::string const stem = "impact_" + file_stem(imp.covariate);
    write_density_csv(imp.direct.density, dir / "marginals" / (stem + "_direct.csv"));
    write_density_csv(imp.indirect.density, dir / "marginals" / (stem + "_indirect.csv"));
    write_density_csv(imp.total.density, dir / "marginals" / (stem + "_total.csv"));
  }
  {
    auto out = open_output(dir / "joint_rl.csv");
    out << "rho,lambda,density\n";
    for (Index i = 0; i < bma.joint.x.size(); ++i) {
      for (Index j = 0; j < bma.joint.y.size(); ++j) {
        out << bma.joint.x[i] << ',' << bma.joint.y[j] << ',' << bma.joint.density(i, j) << '\n';
      }
    }
  }
  if (result.chains) { write_chains_csv(*result.chains, dir / "chains.csv"); }
  return result;
}

std::vector<std::string> verify_italy_file(std::filesystem::path const &csv, std::vector<std::string> const &columns)
{
  std::vector<std::string> problems;
  CsvTable table;
  try {
    table = read_csv(csv);
  } catch (std::exception const &e) {
    return {e.what()};
  }
  if (static_cast<Index>(table.rows.size()) != kItalyRegions) {
    problems.push_back("expected " + std::to_string(kItalyRegions) + " rows, found " + std::to_string(table.rows.size()));
  }
  for (auto const &name : columns) {
    if (std::find(table.header.begin(), table.header.end(), name) == table.header.end()) {
      problems.push_back("missing column '" + name + "'");
    }
  }
  return problems;
}

} // namespace sacbma
