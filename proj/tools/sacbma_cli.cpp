#include "sacbma/io.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

std::array<double, 2> parse_pair(std::string const &text, std::string const &flag)
{
  auto const comma = text.find(',');
  if (comma == std::string::npos) { throw CLI::ValidationError(flag, "expected two comma-separated numbers"); }
  try {
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (std::exception const &) {
    throw CLI::ValidationError(flag, "expected two comma-separated numbers, got '" + text + "'");
  }
}

std::array<sacbma::Index, 2> parse_dims(std::string const &text)
{
  auto const x = text.find_first_of("xX");
  if (x == std::string::npos) { throw CLI::ValidationError("--grid-dims", "expected K1xK2"); }
  try {
    return {std::stol(text.substr(0, x)), std::stol(text.substr(x + 1))};
  } catch (std::exception const &) {
    throw CLI::ValidationError("--grid-dims", "expected K1xK2, got '" + text + "'");
  }
}

std::vector<std::string> split_list(std::vector<std::string> const &items)
{
  std::vector<std::string> out;
  for (auto const &item : items) {
    std::size_t start = 0;
    while (start <= item.size()) {
      auto const end = item.find(',', start);
      auto const token = item.substr(start, end == std::string::npos ? std::string::npos : end - start);
      if (!token.empty()) { out.push_back(token); }
      if (end == std::string::npos) { break; }
      start = end + 1;
    }
  }
  return out;
}

void print_summary(nlohmann::json const &summary)
{
  std::printf("%-16s %12s %12s %12s %12s\n", "parameter", "mean", "sd", "q025", "q975");
  for (auto const &row : summary["parameters"]) {
    auto const &b = row["bma"];
    std::printf("%-16s %12.5f %12.5f %12.5f %12.5f\n", row["parameter"].get<std::string>().c_str(),
                b["mean"].get<double>(), b["sd"].get<double>(), b["q025"].get<double>(), b["q975"].get<double>());
    if (row.contains("mcmc")) {
      auto const &m = row["mcmc"];
      std::printf("%-16s %12.5f %12.5f\n", "  (mcmc)", m["mean"].get<double>(), m["sd"].get<double>());
    }
  }
  for (auto const &w : summary["diagnostics"]["warnings"]) { std::cerr << "warning: " << w.get<std::string>() << '\n'; }
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Bayesian model averaging for SAC spatial models"};
  app.set_config("--config", "", "INI-style configuration file ([run] / [simulate] sections)");
  app.require_subcommand(1);

  sacbma::RunConfig cfg;
  std::vector<std::string> covariates;
  std::string dims = "20x20";
  std::string center;
  std::string se;
  bool mcmc = false;
  sacbma::McmcConfig mc;

  auto *run = app.add_subcommand("run", "fit the model by grid BMA and optionally MCMC");
  run->add_option("--data", cfg.data_path, "CSV with a header row")->required()->check(CLI::ExistingFile);
  run->add_option("--adjacency", cfg.adjacency_path, "edge list (from to [weight]), 1-based")
    ->required()
    ->check(CLI::ExistingFile);
  run->add_option("--response", cfg.response, "response column")->capture_default_str();
  run->add_option("--covariates", covariates, "covariate columns (comma-separated)");
  run->add_flag("--lagged", cfg.include_lagged, "append W x for each covariate");
  run->add_option("--grid-dims", dims, "grid size K1xK2")->capture_default_str();
  run->add_option("--grid-center", center, "grid centre rho,lambda (needs --grid-se)");
  run->add_option("--grid-se", se, "standard errors of rho,lambda");
  run->add_option("--semi-amplitude", cfg.semi_amplitude, "grid half-width in internal sds")->capture_default_str();
  run->add_option("--beta-precision", cfg.priors.beta_precision, "prior precision of each beta")->capture_default_str();
  run->add_option("--tau-shape", cfg.priors.tau_shape, "Gamma shape of tau")->capture_default_str();
  run->add_option("--tau-rate", cfg.priors.tau_rate, "Gamma rate of tau")->capture_default_str();
  run->add_flag("--mcmc", mcmc, "also run the MCMC sampler");
  run->add_option("--burn-in", mc.burn_in, "MCMC burn-in iterations")->capture_default_str();
  run->add_option("--iterations", mc.iterations, "MCMC iterations after burn-in")->capture_default_str();
  run->add_option("--thin", mc.thin, "MCMC thinning")->capture_default_str();
  run->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  run->add_option("--threads", cfg.threads, "worker threads (0: all cores)")->capture_default_str();
  run->add_option("--out", cfg.output_dir, "output directory")->capture_default_str();

  std::string sim_adjacency;
  std::string sim_out = "simulated.csv";
  std::vector<double> sim_beta{1.0, 0.5};
  double sim_rho = 0.0;
  double sim_lambda = 0.0;
  double sim_tau = 1.0;
  std::uint64_t sim_seed = 1;
  auto *simulate = app.add_subcommand("simulate", "draw a synthetic SAC dataset");
  simulate->add_option("--adjacency", sim_adjacency, "edge list")->required()->check(CLI::ExistingFile);
  simulate->add_option("--beta", sim_beta, "coefficients, intercept first")->delimiter(',')->capture_default_str();
  simulate->add_option("--rho", sim_rho)->capture_default_str();
  simulate->add_option("--lambda", sim_lambda)->capture_default_str();
  simulate->add_option("--tau", sim_tau)->capture_default_str();
  simulate->add_option("--seed", sim_seed)->capture_default_str();
  simulate->add_option("--out", sim_out, "output CSV")->capture_default_str();

  sacbma::Index rows = 10;
  sacbma::Index cols = 10;
  bool rook = false;
  std::string lattice_out = "lattice.txt";
  auto *lattice = app.add_subcommand("lattice", "write the edge list of a regular lattice");
  lattice->add_option("--rows", rows)->capture_default_str();
  lattice->add_option("--cols", cols)->capture_default_str();
  lattice->add_flag("--rook", rook, "rook instead of queen contiguity");
  lattice->add_option("--out", lattice_out)->capture_default_str();

  std::string italy_file;
  std::vector<std::string> italy_columns{"TURNOUT01", "GDPCAP"};
  auto *italy = app.add_subcommand("fetch-italy", "show where to obtain the Italian turnout data and check a copy");
  italy->add_option("--verify", italy_file, "downloaded CSV to check");
  italy->add_option("--columns", italy_columns, "columns that must be present")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      cfg.covariates = split_list(covariates);
      cfg.grid_dims = parse_dims(dims);
      if (!center.empty()) { cfg.grid_center = parse_pair(center, "--grid-center"); }
      if (!se.empty()) { cfg.grid_se = parse_pair(se, "--grid-se"); }
      if (mcmc) { cfg.mcmc = mc; }
      auto const result = sacbma::run_pipeline(cfg);
      print_summary(result.summary);
      std::cout << "wrote " << cfg.output_dir.string() << '\n';
    } else if (*simulate) {
      auto const W = sacbma::row_standardize(sacbma::read_adjacency(sim_adjacency));
      sacbma::Vector const beta = Eigen::Map<sacbma::Vector const>(sim_beta.data(), static_cast<sacbma::Index>(sim_beta.size()));
      auto const data = sacbma::simulate_sac(W, beta, sim_rho, sim_lambda, sim_tau, std::nullopt, sim_seed);
      sacbma::write_dataset_csv(data, sim_out);
      std::cout << "wrote " << sim_out << " (" << data.n() << " rows)\n";
    } else if (*lattice) {
      sacbma::write_edge_list(sacbma::lattice_adjacency(rows, cols, !rook), lattice_out);
      std::cout << "wrote " << lattice_out << '\n';
    } else if (*italy) {
      std::cout << "The Italian electoral turnout data (477 areas) is not bundled.\n"
                << "Download it from " << sacbma::kItalyDataUrl << ",\n"
                << "export a CSV (one row per area, same order as the adjacency edge list)\n"
                << "and check it with: sacbma fetch-italy --verify <file.csv>\n";
      if (!italy_file.empty()) {
        auto const problems = sacbma::verify_italy_file(italy_file, italy_columns);
        for (auto const &p : problems) { std::cerr << "problem: " << p << '\n'; }
        if (!problems.empty()) { return 2; }
        std::cout << italy_file << ": ok\n";
      }
    }
  } catch (std::exception const &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
