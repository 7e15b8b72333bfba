#pragma once

#include "tiltsmooth/csv.hpp"
#include "tiltsmooth/errors.hpp"
#include "tiltsmooth/estimators.hpp"
#include "tiltsmooth/four_pl.hpp"
#include "tiltsmooth/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace tiltsmooth {

// ---------------------------------------------------------------------------
// Time-series ingestion

enum class CountField { cases, deaths };
enum class DateFormat { dmy, iso };

inline std::string_view to_string(CountField f) {
  return f == CountField::cases ? "cases" : "deaths";
}

/// Column mapping and transform settings. Defaults match the ECDC
/// geographic-distribution export.
struct CovidCsvOptions {
  std::string date_column = "dateRep";
  std::string country_column = "countriesAndTerritories";
  std::string cases_column = "cases";
  std::string deaths_column = "deaths";
  DateFormat date_format = DateFormat::dmy;
  /// Substituted for zero counts before taking logs.
  double zero_replacement = 0.5;
};

struct SeriesRecord {
  std::chrono::sys_days date;
  std::string country;
  long long cases = 0;
  long long deaths = 0;
};

/// "DD/MM/YYYY" or "YYYY-MM-DD".
inline std::chrono::sys_days parse_date(std::string_view s, DateFormat fmt, std::size_t line) {
  using namespace std::chrono;
  auto num = [&](std::string_view part) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string_view::npos)
      throw ParseError("unparseable date '" + std::string(s) + "'", line);
    return std::stoi(std::string(part));
  };
  int d = 0, m = 0, y = 0;
  if (fmt == DateFormat::dmy) {
    const auto p1 = s.find('/'), p2 = s.find('/', p1 == s.npos ? p1 : p1 + 1);
    if (p1 == s.npos || p2 == s.npos)
      throw ParseError("unparseable date '" + std::string(s) + "'", line);
    d = num(s.substr(0, p1));
    m = num(s.substr(p1 + 1, p2 - p1 - 1));
    y = num(s.substr(p2 + 1));
  } else {
    const auto p1 = s.find('-'), p2 = s.find('-', p1 == s.npos ? p1 : p1 + 1);
    if (p1 == s.npos || p2 == s.npos)
      throw ParseError("unparseable date '" + std::string(s) + "'", line);
    y = num(s.substr(0, p1));
    m = num(s.substr(p1 + 1, p2 - p1 - 1));
    d = num(s.substr(p2 + 1));
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok())
    throw ParseError("invalid date '" + std::string(s) + "'", line);
  return sys_days{ymd};
}

/// Parses every row; negative counts and bad dates are rejected with the
/// CSV line number.
inline std::vector<SeriesRecord> read_covid_records(const std::filesystem::path& path,
                                                    const CovidCsvOptions& opt = {}) {
  const auto t = csv::read(path);
  const auto cd = t.column(opt.date_column), cc = t.column(opt.country_column),
             cn = t.column(opt.cases_column), cx = t.column(opt.deaths_column);
  std::vector<SeriesRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.line[r];
    SeriesRecord rec;
    rec.date = parse_date(row[cd], opt.date_format, line);
    rec.country = row[cc];
    rec.cases = csv::to_integer(row[cn], line);
    rec.deaths = csv::to_integer(row[cx], line);
    if (rec.cases < 0 || rec.deaths < 0)
      throw ParseError("negative count", line);
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<std::string> list_countries(const std::vector<SeriesRecord>& records) {
  std::set<std::string> s;
  for (const auto& r : records)
    s.insert(r.country);
  return {s.begin(), s.end()};
}

/// X = days since the first date, Y = log(count) with zero counts replaced
/// by `zero_replacement`. Sorted by date; eval interval [0, last day].
inline Sample series_sample(const std::vector<SeriesRecord>& records, const std::string& country,
                            CountField field, const CovidCsvOptions& opt = {}) {
  if (!(opt.zero_replacement > 0.0))
    throw DomainError("zero replacement must be positive");
  std::vector<const SeriesRecord*> rows;
  for (const auto& r : records)
    if (r.country == country)
      rows.push_back(&r);
  if (rows.empty()) {
    std::string have;
    for (const auto& c : list_countries(records))
      have += (have.empty() ? "" : ", ") + c;
    throw LookupError("unknown country '" + country + "' (available: " + have + ")");
  }
  if (rows.size() < 2)
    throw InsufficientDesign("series for '" + country + "' has fewer than 2 observations");
  std::stable_sort(rows.begin(), rows.end(),
                   [](const SeriesRecord* a, const SeriesRecord* b) { return a->date < b->date; });
  std::vector<double> x, y;
  const auto first = rows.front()->date;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i]->date == rows[i - 1]->date)
      throw ParseError("duplicate date for '" + country + "'");
    x.push_back(static_cast<double>((rows[i]->date - first).count()));
    const long long count = field == CountField::cases ? rows[i]->cases : rows[i]->deaths;
    y.push_back(std::log(count == 0 ? opt.zero_replacement : static_cast<double>(count)));
  }
  const double last = x.back();
  return Sample(std::move(x), std::move(y), Interval{0.0, last});
}

inline Sample ingest_covid_csv(const std::filesystem::path& path, const std::string& country,
                               CountField field, const CovidCsvOptions& opt = {}) {
  return series_sample(read_covid_records(path, opt), country, field, opt);
}

/// Writes x,y with shortest round-trip formatting.
inline void write_sample_csv(const Sample& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << "x,y\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    out << csv::exact(s.x()[i]) << ',' << csv::exact(s.y()[i]) << '\n';
}

/// Reads an x,y CSV; the eval interval is [min x, max x].
inline Sample read_sample_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const auto cx = t.column("x"), cy = t.column("y");
  std::vector<double> x, y;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    x.push_back(csv::to_double(t.rows[r][cx], t.line[r]));
    y.push_back(csv::to_double(t.rows[r][cy], t.line[r]));
  }
  if (x.size() < 2)
    throw InsufficientDesign("need at least 2 rows in " + path.string());
  return Sample(std::move(x), std::move(y));
}

// ---------------------------------------------------------------------------
// Estimator comparison

struct MseRow {
  std::string estimator;
  double mse = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  std::string error;
  double bandwidth = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> fitted; ///< at the sample's design points
};

/// Rows sorted by MSE ascending (failed rows last, then by name); the first
/// non-failed row is the minimum.
struct MseTable {
  std::vector<MseRow> rows;

  const MseRow* best() const {
    return !rows.empty() && !rows.front().failed ? &rows.front() : nullptr;
  }

  const MseRow* find(std::string_view name) const {
    for (const auto& r : rows)
      if (r.estimator == name)
        return &r;
    return nullptr;
  }
};

inline void sort_rows(MseTable& t) {
  std::stable_sort(t.rows.begin(), t.rows.end(), [](const MseRow& a, const MseRow& b) {
    if (a.failed != b.failed)
      return b.failed;
    if (!a.failed && a.mse != b.mse)
      return a.mse < b.mse;
    return a.estimator < b.estimator;
  });
}

struct CompareOptions {
  Kernel kernel = Kernel::gaussian();
  OptimizerConfig optimizer;
};

/// In-sample MSE of each estimator fitted on the full series.
inline MseTable compare_estimators(const Sample& s, const std::vector<EstimatorSpec>& specs,
                                   const CompareOptions& opt = {}) {
  if (specs.empty())
    throw DomainError("no estimators to compare");
  MseTable t;
  for (const auto& spec : specs) {
    MseRow row;
    row.estimator = spec.name();
    try {
      const EstimatorFit fit(s, spec, opt.kernel, opt.optimizer);
      row.fitted = fit.predict(s.x());
      row.bandwidth = fit.bandwidth();
      double sse = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double r = s.y()[i] - row.fitted[i];
        sse += r * r;
      }
      row.mse = sse / static_cast<double>(s.size());
    } catch (const Error& e) {
      row.failed = true;
      row.error = e.what();
      row.fitted.clear();
    }
    t.rows.push_back(std::move(row));
  }
  sort_rows(t);
  return t;
}

/// estimator,mse,bandwidth,rank,is_min
inline void write_mse_table(const MseTable& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << "estimator,mse,bandwidth,rank,is_min,status\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    out << r.estimator << ',' << detail::fmt6(r.mse) << ',' << detail::fmt6(r.bandwidth) << ','
        << (r.failed ? std::string("NA") : std::to_string(i + 1)) << ','
        << (&r == t.best() ? 1 : 0) << ',' << (r.failed ? "failed" : "ok") << '\n';
  }
}

/// x,y_hat in design order sorted by x.
inline void write_fitted_curve(std::span<const double> x, std::span<const double> yhat,
                               const std::filesystem::path& path) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << "x,y_hat\n";
  for (auto i : idx)
    out << csv::exact(x[i]) << ',' << csv::exact(yhat[i]) << '\n';
}

// ---------------------------------------------------------------------------
// Dose-response

struct DoseData {
  std::vector<double> dose;
  std::vector<double> response;
};

inline DoseData read_dose_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const auto cd = t.column("dose"), cr = t.column("response");
  DoseData d;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double dose = csv::to_double(t.rows[r][cd], t.line[r]);
    if (!(dose > 0.0))
      throw ParseError("dose must be positive", t.line[r]);
    d.dose.push_back(dose);
    d.response.push_back(csv::to_double(t.rows[r][cr], t.line[r]));
  }
  return d;
}

enum class DoseAxis { log10, linear };

struct DoseOptions {
  /// Axis on which the kernel smoothers work; the 4PL always uses dose.
  DoseAxis axis = DoseAxis::log10;
  std::size_t nodes = 4;
  CompareOptions smoothing;
  Loss loss = Loss::huber();
};

struct DoseComparison {
  MseTable table;
  FourPLFit four_pl;
  Sample sample; ///< smoother input (x on the chosen axis)
};

/// MSE of tilted local linear, local linear, the flat-top smoother and a
/// robust 4PL on the same data.
inline DoseComparison dose_response_compare(std::span<const double> doses,
                                            std::span<const double> responses,
                                            const DoseOptions& opt = {}) {
  if (doses.size() != responses.size())
    throw DomainError("dose and response lengths differ");
  std::vector<double> x(doses.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(doses[i] > 0.0))
      throw DomainError("doses must be positive");
    x[i] = opt.axis == DoseAxis::log10 ? std::log10(doses[i]) : doses[i];
  }
  Sample s(std::move(x), std::vector<double>(responses.begin(), responses.end()));
  auto table = compare_estimators(
      s, {EstimatorSpec{SmootherKind::ll, opt.nodes}, EstimatorSpec{SmootherKind::ll, 0},
          EstimatorSpec{SmootherKind::io, 0}},
      opt.smoothing);
  MseRow row;
  row.estimator = "4pl";
  FourPLFit fpl;
  try {
    fpl = fit_4pl_robust(doses, responses, opt.loss);
    row.mse = fpl.mse;
    for (double d : doses)
      row.fitted.push_back(fpl.params(d));
  } catch (const Error& e) {
    row.failed = true;
    row.error = e.what();
  }
  table.rows.push_back(std::move(row));
  sort_rows(table);
  return {std::move(table), fpl, std::move(s)};
}

} // namespace tiltsmooth
