#pragma once

// Subcommand implementations behind the `tiltsmooth` executable. Each
// command writes its outputs plus a manifest.json into the output directory
// and returns a process exit code.

#include "tiltsmooth/errors.hpp"
#include "tiltsmooth/estimators.hpp"
#include "tiltsmooth/realdata.hpp"
#include "tiltsmooth/simulate.hpp"
#include "tiltsmooth/version.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace tiltsmooth::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  ok = 0,
  failure = 1,    ///< estimator or config error, nothing useful written
  bad_input = 2,  ///< missing or unreadable input / usage error
  partial = 3,    ///< some requested outputs could not be produced
};

struct CommonOptions {
  std::uint64_t seed = 20240101;
  unsigned threads = 1;
  fs::path out = "out";
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// subcommand, resolved config, base_seed, library version, timestamp.
inline void write_manifest(const fs::path& dir, const std::string& subcommand,
                           const nlohmann::json& config, std::uint64_t seed) {
  nlohmann::json m;
  m["subcommand"] = subcommand;
  m["config"] = config;
  m["base_seed"] = seed;
  m["version"] = version;
  m["timestamp"] = utc_timestamp();
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out)
    throw IoError("cannot write manifest in " + dir.string());
  out << m.dump(2) << '\n';
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create output directory " + dir.string());
}

inline std::string safe_name(std::string s) {
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.')
      c = '_';
  return s;
}

// ---------------------------------------------------------------------------

struct FitOptions {
  fs::path input;
  std::string estimator = "nw";
  std::size_t nodes = 4;
  std::optional<double> h;
  std::string kernel = "gaussian";
  std::size_t grid_points = 201;
  OptimizerConfig optimizer;
};

/// fitted_curve.csv (grid_points rows over [min x, max x]), summary.txt and
/// manifest.json.
inline int cmd_fit(const FitOptions& o, const CommonOptions& common, std::ostream& err = std::cerr) {
  if (!fs::exists(o.input)) {
    err << "error: input file not found: " << o.input.string() << '\n';
    return bad_input;
  }
  try {
    const Sample s = read_sample_csv(o.input);
    const auto spec = parse_estimator(o.estimator, o.nodes);
    const Kernel kernel = parse_kernel(o.kernel);
    if (kernel.kind() == KernelKind::trapezoidal)
      throw DomainError("--kernel must be gaussian or epanechnikov");
    auto opt = o.optimizer;
    opt.threads = common.threads;
    const EstimatorFit fit(s, spec, kernel, opt, o.h);

    ensure_dir(common.out);
    const auto grid = trapezoid_grid(s.eval_interval(), o.grid_points);
    const auto yhat = fit.predict(grid.points);
    {
      std::ofstream out(common.out / "fitted_curve.csv", std::ios::binary);
      if (!out)
        throw IoError("cannot write fitted_curve.csv");
      out << "x,y_hat\n";
      for (std::size_t g = 0; g < grid.size(); ++g)
        out << csv::exact(grid.points[g]) << ',' << csv::exact(yhat[g]) << '\n';
    }
    {
      std::ofstream out(common.out / "summary.txt", std::ios::binary);
      if (!out)
        throw IoError("cannot write summary.txt");
      out << "estimator: " << spec.name() << '\n';
      out << "kernel: " << (spec.base == SmootherKind::io ? "trapezoidal" : to_string(kernel.kind()))
          << '\n';
      out << "n: " << s.size() << '\n';
      out << "h: " << csv::exact(fit.bandwidth()) << '\n';
      out << "mse: " << csv::exact(fit.in_sample_mse()) << '\n';
      if (const auto& t = fit.tilt()) {
        out << "comparator_h: " << csv::exact(fit.comparator()->bandwidth()) << '\n';
        out << "objective: " << csv::exact(t->objective) << '\n';
        out << "seed_objective: " << csv::exact(t->seed_objective) << '\n';
        out << "seed_h: " << csv::exact(t->seed_h) << '\n';
        out << "budget_exhausted: " << (t->budget_exhausted ? "true" : "false") << '\n';
        out << "node_values:";
        for (double v : t->params.node_values)
          out << ' ' << csv::exact(v);
        out << "\nnode_positions:";
        for (double v : t->params.node_positions)
          out << ' ' << csv::exact(v);
        const auto p = expand_p(t->params, s);
        double sum = 0.0;
        for (double v : p)
          sum += v;
        out << "\np_sum: " << csv::exact(sum) << '\n';
      }
    }
    nlohmann::json cfg{{"input", o.input.string()},
                       {"estimator", spec.name()},
                       {"kernel", o.kernel},
                       {"grid_points", o.grid_points},
                       {"threads", common.threads},
                       {"max_evaluations", opt.max_evaluations},
                       {"h_grid_size", opt.h_grid_size},
                       {"tolerance", opt.tolerance}};
    cfg["h"] = o.h ? nlohmann::json(*o.h) : nlohmann::json(nullptr);
    write_manifest(common.out, "fit", cfg, common.seed);
    return ok;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return bad_input;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return failure;
  }
}

// ---------------------------------------------------------------------------

struct SimulateOptions {
  fs::path config;
  /// Replaces the config's base_seed when set.
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
};

inline int cmd_simulate(const SimulateOptions& o, const CommonOptions& common,
                        std::ostream& err = std::cerr) {
  if (!fs::exists(o.config)) {
    err << "error: config file not found: " << o.config.string() << '\n';
    return bad_input;
  }
  try {
    auto cfg = load_sim_config(o.config);
    if (o.seed)
      cfg.base_seed = *o.seed;
    if (o.replications)
      cfg.replications = *o.replications;
    cfg.validate();
    const auto res = run_campaign(cfg, common.threads);
    emit_tables(res, common.out);
    write_manifest(common.out, "simulate", to_json(cfg), cfg.base_seed);
    bool flagged = false;
    for (const auto& row : res.cells)
      for (const auto& c : row)
        flagged |= c.flagged();
    if (flagged)
      err << "warning: some scenarios exceed 10% failed replications (see failures.csv)\n";
    return ok;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return failure;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return bad_input;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return failure;
  }
}

// ---------------------------------------------------------------------------

struct CovidOptions {
  fs::path input;
  std::vector<std::string> countries; ///< empty = every country in the file
  std::vector<std::string> estimators{"io", "nw", "nw-p4"};
  std::size_t nodes = 4;
  std::string kernel = "gaussian";
  CovidCsvOptions csv;
};

/// mse_by_country.csv (one row per country and field) and a fitted curve
/// file per fit.
inline int cmd_covid(const CovidOptions& o, const CommonOptions& common,
                     std::ostream& err = std::cerr) {
  if (!fs::exists(o.input)) {
    err << "error: input file not found: " << o.input.string() << '\n';
    return bad_input;
  }
  try {
    const auto records = read_covid_records(o.input, o.csv);
    auto countries = o.countries.empty() ? list_countries(records) : o.countries;
    std::vector<EstimatorSpec> specs;
    for (const auto& e : o.estimators)
      specs.push_back(parse_estimator(e, o.nodes));
    CompareOptions copt;
    copt.kernel = parse_kernel(o.kernel);

    struct Job {
      std::string country;
      CountField field;
      std::optional<Sample> sample;
      MseTable table;
      std::string error;
    };
    std::vector<Job> jobs;
    for (const auto& c : countries)
      for (auto f : {CountField::cases, CountField::deaths})
        jobs.push_back({c, f, std::nullopt, {}, {}});
    // lookup errors surface before any work
    for (auto& j : jobs)
      j.sample.emplace(series_sample(records, j.country, j.field, o.csv));
    parallel_for(jobs.size(), common.threads, [&](std::size_t i) {
      jobs[i].table = compare_estimators(*jobs[i].sample, specs, copt);
    });

    ensure_dir(common.out);
    bool any_failed = false;
    std::ofstream out(common.out / "mse_by_country.csv", std::ios::binary);
    if (!out)
      throw IoError("cannot write mse_by_country.csv");
    out << "country,field";
    for (const auto& s : specs)
      out << ',' << s.name();
    out << ",min_estimator\n";
    for (const auto& j : jobs) {
      out << j.country << ',' << to_string(j.field);
      for (const auto& s : specs) {
        const auto* r = j.table.find(s.name());
        out << ',' << (r && !r->failed ? detail::fmt6(r->mse) : std::string("NA"));
      }
      const auto* best = j.table.best();
      out << ',' << (best ? best->estimator : std::string("NA")) << '\n';
      for (const auto& r : j.table.rows) {
        if (r.failed) {
          any_failed = true;
          err << "warning: " << j.country << '/' << to_string(j.field) << '/' << r.estimator
              << ": " << r.error << '\n';
          continue;
        }
        write_fitted_curve(j.sample->x(), r.fitted,
                           common.out / ("fitted_curve_" + safe_name(j.country) + "_" +
                                         std::string(to_string(j.field)) + "_" + r.estimator +
                                         ".csv"));
      }
    }
    nlohmann::json cfg{{"input", o.input.string()},
                       {"countries", countries},
                       {"estimators", o.estimators},
                       {"kernel", o.kernel},
                       {"zero_replacement", o.csv.zero_replacement},
                       {"threads", common.threads}};
    write_manifest(common.out, "covid", cfg, common.seed);
    return any_failed ? partial : ok;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return bad_input;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return failure;
  }
}

// ---------------------------------------------------------------------------

struct DoseCmdOptions {
  fs::path input;
  DoseOptions dose;
};

/// dose_response_mse.csv plus fitted_curve_<estimator>.csv for each fit.
inline int cmd_dose(const DoseCmdOptions& o, const CommonOptions& common,
                    std::ostream& err = std::cerr) {
  if (!fs::exists(o.input)) {
    err << "error: input file not found: " << o.input.string() << '\n';
    return bad_input;
  }
  try {
    const auto data = read_dose_csv(o.input);
    auto dopt = o.dose;
    dopt.smoothing.optimizer.threads = common.threads;
    const auto cmp = dose_response_compare(data.dose, data.response, dopt);
    ensure_dir(common.out);
    write_mse_table(cmp.table, common.out / "dose_response_mse.csv");
    bool any_failed = false;
    for (const auto& r : cmp.table.rows) {
      if (r.failed) {
        any_failed = true;
        err << "warning: " << r.estimator << ": " << r.error << '\n';
        continue;
      }
      write_fitted_curve(data.dose, r.fitted,
                         common.out / ("fitted_curve_" + safe_name(r.estimator) + ".csv"));
    }
    nlohmann::json cfg{{"input", o.input.string()},
                       {"axis", o.dose.axis == DoseAxis::log10 ? "log10" : "linear"},
                       {"nodes", o.dose.nodes},
                       {"loss", o.dose.loss.kind == LossKind::huber ? "huber" : "squared"},
                       {"huber_delta", cmp.four_pl.delta},
                       {"threads", common.threads}};
    write_manifest(common.out, "dose", cfg, common.seed);
    return any_failed ? partial : ok;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return bad_input;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return failure;
  }
}

} // namespace tiltsmooth::cli
