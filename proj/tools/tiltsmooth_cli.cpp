// tiltsmooth: fit tilted and classical kernel smoothers, run Monte Carlo
// MISE campaigns, and compare estimators on real data.

#include "tiltsmooth/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace tiltsmooth;

namespace {

void add_common(CLI::App* sub, cli::CommonOptions& common, std::optional<std::uint64_t>& seed) {
  sub->add_option("--seed", seed, "Base seed for stochastic outputs");
  sub->add_option("--threads", common.threads, "Worker threads (never changes results)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", common.out, "Output directory")->required();
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tilted linear smoothers: fitting, simulation and real-data comparisons"};
  app.set_version_flag("--version", std::string(tiltsmooth::version));
  app.require_subcommand(1);

  cli::CommonOptions common;
  std::optional<std::uint64_t> seed;

  cli::FitOptions fit;
  std::size_t h_grid_size = 40, max_evals = 500;
  double tolerance = 1e-8;
  auto* fit_cmd = app.add_subcommand("fit", "Fit one estimator to an x,y CSV");
  fit_cmd->add_option("input", fit.input, "CSV with x,y columns")->required();
  fit_cmd->add_option("--estimator", fit.estimator, "nw|ll|io|tilted-nw|tilted-ll (or nw-p<m>)")
      ->capture_default_str();
  fit_cmd->add_option("--nodes", fit.nodes, "Tilt node count")->capture_default_str();
  fit_cmd->set_help_flag("--help", "Print this help message and exit");
  fit_cmd->add_option("--h", fit.h, "Fixed bandwidth (skips selection; seeds tilted search)");
  fit_cmd->add_option("--kernel", fit.kernel, "gaussian|epanechnikov")
      ->check(CLI::IsMember({"gaussian", "epanechnikov"}))
      ->capture_default_str();
  fit_cmd->add_option("--grid-points", fit.grid_points, "Rows of fitted_curve.csv")
      ->check(CLI::Range(2, 1000000))
      ->capture_default_str();
  fit_cmd->add_option("--h-grid-size", h_grid_size, "Bandwidth grid size")->capture_default_str();
  fit_cmd->add_option("--max-evaluations", max_evals, "Polytope budget per bandwidth")
      ->capture_default_str();
  fit_cmd->add_option("--tolerance", tolerance, "Relative objective tolerance")
      ->capture_default_str();
  add_common(fit_cmd, common, seed);

  cli::SimulateOptions sim;
  std::optional<std::size_t> reps;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a Monte Carlo MISE campaign");
  sim_cmd->add_option("--config", sim.config, "Campaign config (JSON)")->required();
  sim_cmd->add_option("--replications", reps, "Override the config's replication count");
  add_common(sim_cmd, common, seed);

  cli::CovidOptions covid;
  std::string date_format = "dmy";
  auto* covid_cmd = app.add_subcommand("covid", "Compare estimators on daily count series");
  covid_cmd->add_option("input", covid.input, "Case/death CSV")->required();
  covid_cmd->add_option("--country", covid.countries, "Restrict to these countries");
  covid_cmd->add_option("--estimators", covid.estimators, "Estimators to compare")
      ->delimiter(',');
  covid_cmd->add_option("--nodes", covid.nodes, "Tilt node count for tilted-* names");
  covid_cmd->add_option("--kernel", covid.kernel, "gaussian|epanechnikov")
      ->check(CLI::IsMember({"gaussian", "epanechnikov"}));
  covid_cmd->add_option("--zero-replacement", covid.csv.zero_replacement,
                        "Value substituted for zero counts before the log")
      ->check(CLI::PositiveNumber);
  covid_cmd->add_option("--date-column", covid.csv.date_column);
  covid_cmd->add_option("--country-column", covid.csv.country_column);
  covid_cmd->add_option("--cases-column", covid.csv.cases_column);
  covid_cmd->add_option("--deaths-column", covid.csv.deaths_column);
  covid_cmd->add_option("--date-format", date_format, "dmy (DD/MM/YYYY) or iso")
      ->check(CLI::IsMember({"dmy", "iso"}));
  add_common(covid_cmd, common, seed);

  cli::DoseCmdOptions dose;
  std::string axis = "log10", loss = "huber";
  std::optional<double> huber_delta;
  auto* dose_cmd = app.add_subcommand("dose", "Compare smoothers with a robust 4PL fit");
  dose_cmd->add_option("input", dose.input, "CSV with dose,response columns")->required();
  dose_cmd->add_option("--axis", axis, "Smoothing axis: log10 or linear dose")
      ->check(CLI::IsMember({"log10", "linear"}));
  dose_cmd->add_option("--nodes", dose.dose.nodes, "Tilt node count");
  dose_cmd->add_option("--loss", loss, "4PL loss: huber or squared")
      ->check(CLI::IsMember({"huber", "squared"}));
  dose_cmd->add_option("--huber-delta", huber_delta, "Huber threshold (default: 1.345 MAD)");
  add_common(dose_cmd, common, seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::bad_input;
  }
  if (seed)
    common.seed = *seed;

  if (*fit_cmd) {
    fit.optimizer.h_grid_size = h_grid_size;
    fit.optimizer.max_evaluations = max_evals;
    fit.optimizer.tolerance = tolerance;
    return cli::cmd_fit(fit, common);
  }
  if (*sim_cmd) {
    sim.seed = seed;
    sim.replications = reps;
    return cli::cmd_simulate(sim, common);
  }
  if (*covid_cmd) {
    covid.csv.date_format = date_format == "iso" ? DateFormat::iso : DateFormat::dmy;
    return cli::cmd_covid(covid, common);
  }
  dose.dose.axis = axis == "log10" ? DoseAxis::log10 : DoseAxis::linear;
  dose.dose.loss = loss == "huber" ? Loss::huber(huber_delta) : Loss::squared();
  return cli::cmd_dose(dose, common);
}
