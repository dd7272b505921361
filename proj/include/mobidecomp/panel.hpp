#ifndef MOBIDECOMP_PANEL_HPP
#define MOBIDECOMP_PANEL_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mobidecomp/common.hpp"

namespace mobi {

/// Fixed 52-week study window. Week 1 ends 2020-03-08; weeks end on Sunday
/// and are labeled by their week-ending date.
struct StudyCalendar {
  static constexpr int num_weeks = 52;
  static constexpr std::int64_t week1_ending = days_from_civil(2020, 3, 8);

  static std::int64_t week_ending_serial(int week) {
    return week1_ending + 7LL * (week - 1);
  }

  static std::string week_ending(int week) { return format_iso_date(week_ending_serial(week)); }

  /// Maps a week-ending serial back to 1..52; throws range-error outside the
  /// window or off the Sunday grid.
  static int week_of_serial(std::int64_t serial) {
    const std::int64_t delta = serial - week1_ending;
    if (delta < 0 || delta % 7 != 0 || delta / 7 >= num_weeks) {
      fail(ErrorKind::range_error,
           "date " + format_iso_date(serial) + " outside the study window");
    }
    return static_cast<int>(delta / 7) + 1;
  }
};

/// Official 5-character district key plus display name.
struct DistrictId {
  std::string ags;
  std::string name;

  friend bool operator<(const DistrictId& a, const DistrictId& b) { return a.ags < b.ags; }
  friend bool operator==(const DistrictId& a, const DistrictId& b) { return a.ags == b.ags; }
};

/// Aligned per-district weekly series over the 52-week window. District-major
/// storage; districts are sorted by AGS key so flattened layouts are stable.
struct WeeklyPanel {
  std::vector<DistrictId> districts;
  std::vector<double> duration;            // hours/day, n_districts x 52
  std::vector<double> incidence_local;     // weekly cases per 100k, n_districts x 52
  std::vector<double> incidence_national;  // weekly cases per 100k, 52
  std::vector<double> tmax;                // deg C, n_districts x 52
  std::vector<int> vacation_days;          // 0..5, n_districts x 52
  std::vector<int> holiday_count;          // 0..5, n_districts x 52

  int n_districts() const { return static_cast<int>(districts.size()); }

  /// Flat index for district d (0-based) and week t (1-based).
  std::size_t cell(int d, int t) const {
    return static_cast<std::size_t>(d) * StudyCalendar::num_weeks +
           static_cast<std::size_t>(t - 1);
  }

  int district_index(const std::string& ags) const {
    for (int d = 0; d < n_districts(); ++d) {
      if (districts[static_cast<std::size_t>(d)].ags == ags) return d;
    }
    fail(ErrorKind::range_error, "unknown district '" + ags + "'");
  }

  void validate() const {
    const auto n = static_cast<std::size_t>(n_districts()) * StudyCalendar::num_weeks;
    if (districts.empty()) fail(ErrorKind::validation_error, "panel has no districts");
    if (districts.size() > 400) fail(ErrorKind::validation_error, "more than 400 districts");
    for (std::size_t d = 1; d < districts.size(); ++d) {
      if (!(districts[d - 1] < districts[d])) {
        fail(ErrorKind::validation_error, "districts not strictly sorted by AGS key");
      }
    }
    if (duration.size() != n || incidence_local.size() != n || tmax.size() != n ||
        vacation_days.size() != n || holiday_count.size() != n ||
        incidence_national.size() != StudyCalendar::num_weeks) {
      fail(ErrorKind::validation_error, "panel series have inconsistent shapes");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!(duration[i] > 0.0)) fail(ErrorKind::validation_error, "non-positive duration cell");
      if (incidence_local[i] < 0.0) fail(ErrorKind::validation_error, "negative local incidence");
      if (vacation_days[i] < 0 || vacation_days[i] > 5) {
        fail(ErrorKind::validation_error, "vacation_days outside 0..5");
      }
      if (holiday_count[i] < 0 || holiday_count[i] > 5) {
        fail(ErrorKind::validation_error, "holiday_count outside 0..5");
      }
    }
    for (double v : incidence_national) {
      if (v < 0.0) fail(ErrorKind::validation_error, "negative national incidence");
    }
  }
};

enum class DistrictType { large_city, small_city, suburban, medium_rural, rural };

inline const char* district_type_name(DistrictType t) {
  switch (t) {
    case DistrictType::large_city: return "large_city";
    case DistrictType::small_city: return "small_city";
    case DistrictType::suburban: return "suburban";
    case DistrictType::medium_rural: return "medium_rural";
    case DistrictType::rural: return "rural";
  }
  return "unknown";
}

inline DistrictType district_type_from_name(const std::string& s) {
  for (DistrictType t : {DistrictType::large_city, DistrictType::small_city,
                         DistrictType::suburban, DistrictType::medium_rural,
                         DistrictType::rural}) {
    if (s == district_type_name(t)) return t;
  }
  fail(ErrorKind::parse_error, "unknown district_type '" + s + "'");
}

/// Canonical order of the 19 demographic/socioeconomic/political covariates.
inline const std::vector<std::string>& covariate_columns() {
  static const std::vector<std::string> cols = {
      "population_density",
      "income",
      "average_age",
      "share_65_plus",
      "childcare_share",
      "unemployment_rate",
      "employment_rate",
      "service_sectors",
      "manufacturing_sector",
      "tthic_sectors",
      "finance_sector",
      "construction",
      "agriculture_forestry_fisheries",
      "voter_turnout",
      "cdu",
      "spd",
      "afd",
      "fdp",
      "green_party",
  };
  return cols;
}

/// One row per district: the 19 covariates in canonical column order plus the
/// urban-rural district type.
struct CovariateTable {
  std::vector<DistrictId> districts;
  std::vector<std::vector<double>> values;  // row-major, 19 per row
  std::vector<DistrictType> district_type;

  int n_districts() const { return static_cast<int>(districts.size()); }

  int column(const std::string& name) const {
    const auto& cols = covariate_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (cols[i] == name) return static_cast<int>(i);
    }
    fail(ErrorKind::range_error, "unknown covariate '" + name + "'");
  }

  std::vector<double> column_values(const std::string& name) const {
    const int c = column(name);
    std::vector<double> out(districts.size());
    for (std::size_t d = 0; d < districts.size(); ++d) {
      out[d] = values[d][static_cast<std::size_t>(c)];
    }
    return out;
  }
};

}  // namespace mobi

#endif  // MOBIDECOMP_PANEL_HPP
