#ifndef MOBIDECOMP_INGEST_HPP
#define MOBIDECOMP_INGEST_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mobidecomp/csv.hpp"
#include "mobidecomp/panel.hpp"

namespace mobi::ingest {

/// Weekly mean of daily per-person out-of-home hours: each daily
/// person-seconds sum is divided by the resident count and by 3600, then the
/// seven daily values of each week are averaged.
inline std::vector<double> aggregate_daily_duration(const std::vector<double>& daily_seconds_sum,
                                                    double population) {
  if (!(population > 0.0)) {
    fail(ErrorKind::invalid_population, "population must be positive");
  }
  if (daily_seconds_sum.empty() || daily_seconds_sum.size() % 7 != 0) {
    fail(ErrorKind::incomplete_week,
         "need seven daily values per week, got " + std::to_string(daily_seconds_sum.size()));
  }
  const std::size_t n_weeks = daily_seconds_sum.size() / 7;
  std::vector<double> weekly(n_weeks, 0.0);
  for (std::size_t w = 0; w < n_weeks; ++w) {
    double sum = 0.0;
    for (std::size_t i = 0; i < 7; ++i) sum += daily_seconds_sum[w * 7 + i];
    weekly[w] = sum / population / 3600.0 / 7.0;
  }
  return weekly;
}

/// Replaces missing temperature cells by the unweighted mean of the
/// neighbors observed in the same week. Observed cells are never touched, so
/// a second application is the identity.
inline std::vector<std::vector<std::optional<double>>> fill_missing_temperature(
    const std::vector<std::vector<std::optional<double>>>& tmax,
    const std::vector<std::vector<int>>& adjacency) {
  auto filled = tmax;
  for (std::size_t d = 0; d < tmax.size(); ++d) {
    for (std::size_t t = 0; t < tmax[d].size(); ++t) {
      if (tmax[d][t].has_value()) continue;
      double sum = 0.0;
      int count = 0;
      for (int nb : adjacency[d]) {
        const auto& cell = tmax[static_cast<std::size_t>(nb)][t];
        if (cell.has_value()) {
          sum += *cell;
          ++count;
        }
      }
      if (count == 0) {
        fail(ErrorKind::unresolvable_gap,
             "district " + std::to_string(d) + " week " + std::to_string(t + 1) +
                 ": no neighbor has temperature data");
      }
      filled[d][t] = sum / count;
    }
  }
  return filled;
}

struct NormalizedIncidence {
  std::vector<double> local;     // district-major, same shape as input
  std::vector<double> national;  // peak exactly 1
};

/// Scales both series by the national maximum over the window so the two
/// signals mix on a common scale and the national peak sits at 1.
inline NormalizedIncidence normalize_incidence(const std::vector<double>& local,
                                               const std::vector<double>& national) {
  double peak = 0.0;
  for (double v : national) peak = std::max(peak, v);
  if (!(peak > 0.0)) {
    fail(ErrorKind::degenerate_incidence, "national incidence series has no positive maximum");
  }
  NormalizedIncidence out;
  out.local.resize(local.size());
  out.national.resize(national.size());
  for (std::size_t i = 0; i < local.size(); ++i) out.local[i] = local[i] / peak;
  for (std::size_t i = 0; i < national.size(); ++i) out.national[i] = national[i] / peak;
  return out;
}

struct PanelPaths {
  std::string duration;
  std::string incidence_local;
  std::string incidence_national;
  std::string tmax;
  std::string calendar;
  std::string adjacency;  // only consulted when tmax has gaps
};

namespace detail {

inline int week_from_field(const CsvTable& t, std::size_t row, int col) {
  std::int64_t serial = 0;
  try {
    serial = parse_iso_date(t.rows[row][static_cast<std::size_t>(col)]);
  } catch (const Error& e) {
    fail(ErrorKind::parse_error, t.location(row) + ": " + e.what());
  }
  try {
    return StudyCalendar::week_of_serial(serial);
  } catch (const Error& e) {
    fail(ErrorKind::range_error, t.location(row) + ": " + e.what());
  }
}

/// District-week file -> dense district-major matrix over the sorted AGS set.
/// Every cell must be present exactly once unless allow_missing is set.
template <class T, class Parse>
std::vector<std::optional<T>> read_district_week(const CsvTable& table,
                                                 const std::vector<DistrictId>& districts,
                                                 const std::string& value_col, Parse parse,
                                                 bool allow_missing) {
  const int c_ags = table.column("ags");
  const int c_week = table.column("week_ending");
  const int c_val = table.column(value_col);
  std::map<std::string, int> index;
  for (std::size_t d = 0; d < districts.size(); ++d) {
    index[districts[d].ags] = static_cast<int>(d);
  }
  std::vector<std::optional<T>> out(districts.size() * StudyCalendar::num_weeks);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string& ags = table.rows[r][static_cast<std::size_t>(c_ags)];
    const auto it = index.find(ags);
    if (it == index.end()) {
      fail(ErrorKind::parse_error,
           table.location(r) + ": district '" + ags + "' not in the duration file");
    }
    const int week = week_from_field(table, r, c_week);
    auto& cell = out[static_cast<std::size_t>(it->second) * StudyCalendar::num_weeks +
                     static_cast<std::size_t>(week - 1)];
    if (cell.has_value()) {
      fail(ErrorKind::duplicate_key,
           table.location(r) + ": duplicate district-week (" + ags + ", week " +
               std::to_string(week) + ")");
    }
    cell = parse(table, r, c_val);
  }
  if (!allow_missing) {
    for (std::size_t d = 0; d < districts.size(); ++d) {
      for (int t = 1; t <= StudyCalendar::num_weeks; ++t) {
        if (!out[d * StudyCalendar::num_weeks + static_cast<std::size_t>(t - 1)].has_value()) {
          fail(ErrorKind::validation_error, table.path + ": missing cell for district " +
                                                districts[d].ags + " week " + std::to_string(t));
        }
      }
    }
  }
  return out;
}

template <class T>
std::vector<T> unwrap(std::vector<std::optional<T>> cells) {
  std::vector<T> out(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) out[i] = *cells[i];
  return out;
}

}  // namespace detail

/// Adjacency file (undirected ags pairs) -> neighbor index lists over the
/// panel's district ordering. Unknown districts in the file are ignored so a
/// national adjacency file can be reused for sub-panels.
inline std::vector<std::vector<int>> load_adjacency(const std::string& path,
                                                    const std::vector<DistrictId>& districts) {
  const CsvTable table = read_csv(path);
  const int c_a = table.column("ags_a");
  const int c_b = table.column("ags_b");
  std::map<std::string, int> index;
  for (std::size_t d = 0; d < districts.size(); ++d) {
    index[districts[d].ags] = static_cast<int>(d);
  }
  std::vector<std::set<int>> nb(districts.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto a = index.find(table.rows[r][static_cast<std::size_t>(c_a)]);
    const auto b = index.find(table.rows[r][static_cast<std::size_t>(c_b)]);
    if (a == index.end() || b == index.end() || a->second == b->second) continue;
    nb[static_cast<std::size_t>(a->second)].insert(b->second);
    nb[static_cast<std::size_t>(b->second)].insert(a->second);
  }
  std::vector<std::vector<int>> out(districts.size());
  for (std::size_t d = 0; d < districts.size(); ++d) {
    out[d].assign(nb[d].begin(), nb[d].end());
  }
  return out;
}

/// Parses, aligns, and validates the full input file set into a WeeklyPanel.
/// District order is lexicographic by AGS key.
inline WeeklyPanel load_panel(const PanelPaths& paths) {
  WeeklyPanel panel;

  const CsvTable dur = read_csv(paths.duration);
  if (dur.rows.empty()) fail(ErrorKind::parse_error, dur.path + ": no data rows");
  {
    std::set<std::string> ags_set;
    const int c_ags = dur.column("ags");
    for (const auto& row : dur.rows) ags_set.insert(row[static_cast<std::size_t>(c_ags)]);
    for (const auto& ags : ags_set) panel.districts.push_back(DistrictId{ags, ags});
  }

  auto parse_val = [](const CsvTable& t, std::size_t r, int c) { return parse_double(t, r, c); };
  panel.duration = detail::unwrap(detail::read_district_week<double>(
      dur, panel.districts, "hours_per_day", parse_val, false));

  const CsvTable loc = read_csv(paths.incidence_local);
  panel.incidence_local = detail::unwrap(detail::read_district_week<double>(
      loc, panel.districts, "cases_per_100k", parse_val, false));

  {
    const CsvTable nat = read_csv(paths.incidence_national);
    if (nat.rows.empty()) fail(ErrorKind::parse_error, nat.path + ": no data rows");
    const int c_week = nat.column("week_ending");
    const int c_val = nat.column("cases_per_100k");
    std::vector<std::optional<double>> cells(StudyCalendar::num_weeks);
    for (std::size_t r = 0; r < nat.rows.size(); ++r) {
      const int week = detail::week_from_field(nat, r, c_week);
      auto& cell = cells[static_cast<std::size_t>(week - 1)];
      if (cell.has_value()) {
        fail(ErrorKind::duplicate_key, nat.location(r) + ": duplicate week");
      }
      cell = parse_double(nat, r, c_val);
    }
    for (int t = 1; t <= StudyCalendar::num_weeks; ++t) {
      if (!cells[static_cast<std::size_t>(t - 1)].has_value()) {
        fail(ErrorKind::validation_error,
             nat.path + ": missing national incidence for week " + std::to_string(t));
      }
    }
    panel.incidence_national = detail::unwrap(std::move(cells));
  }

  {
    const CsvTable tm = read_csv(paths.tmax);
    auto cells =
        detail::read_district_week<double>(tm, panel.districts, "deg_c", parse_val, true);
    bool has_gap = false;
    for (const auto& c : cells) has_gap = has_gap || !c.has_value();
    if (has_gap) {
      if (paths.adjacency.empty()) {
        fail(ErrorKind::unresolvable_gap,
             tm.path + ": temperature gaps present but no adjacency file configured");
      }
      const auto adjacency = load_adjacency(paths.adjacency, panel.districts);
      std::vector<std::vector<std::optional<double>>> grid(panel.districts.size());
      for (std::size_t d = 0; d < panel.districts.size(); ++d) {
        grid[d].assign(cells.begin() + static_cast<std::ptrdiff_t>(d * StudyCalendar::num_weeks),
                       cells.begin() +
                           static_cast<std::ptrdiff_t>((d + 1) * StudyCalendar::num_weeks));
      }
      const auto filled = fill_missing_temperature(grid, adjacency);
      panel.tmax.resize(cells.size());
      for (std::size_t d = 0; d < filled.size(); ++d) {
        for (std::size_t t = 0; t < filled[d].size(); ++t) {
          panel.tmax[d * StudyCalendar::num_weeks + t] = *filled[d][t];
        }
      }
    } else {
      panel.tmax = detail::unwrap(std::move(cells));
    }
  }

  {
    const CsvTable cal = read_csv(paths.calendar);
    auto parse_count = [](const CsvTable& t, std::size_t r, int c) {
      const long v = parse_int(t, r, c);
      if (v < 0 || v > 5) {
        fail(ErrorKind::validation_error,
             t.location(r) + ": calendar count " + std::to_string(v) + " outside 0..5");
      }
      return static_cast<int>(v);
    };
    panel.vacation_days = detail::unwrap(detail::read_district_week<int>(
        cal, panel.districts, "vacation_days", parse_count, false));
    panel.holiday_count = detail::unwrap(detail::read_district_week<int>(
        cal, panel.districts, "holiday_count", parse_count, false));
  }

  panel.validate();
  return panel;
}

/// Writes a panel back out in the input schemas at full precision.
inline void save_panel(const WeeklyPanel& panel, const std::string& dir) {
  const int W = StudyCalendar::num_weeks;
  CsvWriter dur(dir + "/panel_duration.csv");
  dur.row({"ags", "week_ending", "hours_per_day"});
  CsvWriter loc(dir + "/incidence_local.csv");
  loc.row({"ags", "week_ending", "cases_per_100k"});
  CsvWriter tm(dir + "/tmax.csv");
  tm.row({"ags", "week_ending", "deg_c"});
  CsvWriter cal(dir + "/calendar.csv");
  cal.row({"ags", "week_ending", "vacation_days", "holiday_count"});
  for (int d = 0; d < panel.n_districts(); ++d) {
    const std::string& ags = panel.districts[static_cast<std::size_t>(d)].ags;
    for (int t = 1; t <= W; ++t) {
      const std::string date = StudyCalendar::week_ending(t);
      const std::size_t i = panel.cell(d, t);
      dur.row({ags, date, CsvWriter::num(panel.duration[i])});
      loc.row({ags, date, CsvWriter::num(panel.incidence_local[i])});
      tm.row({ags, date, CsvWriter::num(panel.tmax[i])});
      cal.row({ags, date, CsvWriter::num(panel.vacation_days[i]),
               CsvWriter::num(panel.holiday_count[i])});
    }
  }
  CsvWriter nat(dir + "/incidence_national.csv");
  nat.row({"week_ending", "cases_per_100k"});
  for (int t = 1; t <= W; ++t) {
    nat.row({StudyCalendar::week_ending(t),
             CsvWriter::num(panel.incidence_national[static_cast<std::size_t>(t - 1)])});
  }
  dur.close();
  loc.close();
  tm.close();
  cal.close();
  nat.close();
}

/// covariates.csv: ags, optional name, the 19 covariate columns, district_type.
inline CovariateTable load_covariates(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.rows.empty()) fail(ErrorKind::parse_error, table.path + ": no data rows");
  const int c_ags = table.column("ags");
  int c_name = -1;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (table.header[i] == "name") c_name = static_cast<int>(i);
  }
  const int c_type = table.column("district_type");
  std::vector<int> c_cov;
  for (const auto& col : covariate_columns()) c_cov.push_back(table.column(col));

  std::vector<std::size_t> order(table.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return table.rows[a][static_cast<std::size_t>(c_ags)] <
           table.rows[b][static_cast<std::size_t>(c_ags)];
  });

  CovariateTable out;
  for (std::size_t r : order) {
    DistrictId id;
    id.ags = table.rows[r][static_cast<std::size_t>(c_ags)];
    id.name = c_name >= 0 ? table.rows[r][static_cast<std::size_t>(c_name)] : id.ags;
    if (!out.districts.empty() && out.districts.back().ags == id.ags) {
      fail(ErrorKind::duplicate_key, table.location(r) + ": duplicate district " + id.ags);
    }
    std::vector<double> row;
    row.reserve(c_cov.size());
    for (std::size_t k = 0; k < c_cov.size(); ++k) {
      const double v = parse_double(table, r, c_cov[k]);
      // Columns from share_65_plus onward are percentages.
      if (k >= 3 && (v < 0.0 || v > 100.0)) {
        fail(ErrorKind::validation_error,
             table.location(r) + ": column '" + covariate_columns()[k] + "' outside [0,100]");
      }
      row.push_back(v);
    }
    out.districts.push_back(std::move(id));
    out.values.push_back(std::move(row));
    out.district_type.push_back(
        district_type_from_name(table.rows[r][static_cast<std::size_t>(c_type)]));
  }
  return out;
}

inline void save_covariates(const CovariateTable& table, const std::string& path) {
  CsvWriter w(path);
  std::vector<std::string> header = {"ags", "name"};
  for (const auto& c : covariate_columns()) header.push_back(c);
  header.push_back("district_type");
  w.row(header);
  for (std::size_t d = 0; d < table.districts.size(); ++d) {
    std::vector<std::string> row = {table.districts[d].ags, table.districts[d].name};
    for (double v : table.values[d]) row.push_back(CsvWriter::num(v));
    row.push_back(district_type_name(table.district_type[d]));
    w.row(row);
  }
  w.close();
}

}  // namespace mobi::ingest

#endif  // MOBIDECOMP_INGEST_HPP
