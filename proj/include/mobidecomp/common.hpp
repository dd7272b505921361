#ifndef MOBIDECOMP_COMMON_HPP
#define MOBIDECOMP_COMMON_HPP

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mobi {

/// Machine-checkable failure categories. Every thrown `Error` carries one so
/// callers (and tests) can dispatch on the kind instead of parsing messages.
enum class ErrorKind {
  invalid_population,
  incomplete_week,
  unresolvable_gap,
  degenerate_incidence,
  parse_error,
  range_error,
  duplicate_key,
  validation_error,
  domain_error,
  evaluation_error,
  capability_error,
  undefined_diagnostic,
  insufficient_data,
  adaptation_failure,
  configuration_error,
  degenerate_column,
  singular_design,
  press_undefined,
  sse_floor,
  io_error,
  missing_prerequisite,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_population: return "invalid-population";
    case ErrorKind::incomplete_week: return "incomplete-week";
    case ErrorKind::unresolvable_gap: return "unresolvable-gap";
    case ErrorKind::degenerate_incidence: return "degenerate-incidence";
    case ErrorKind::parse_error: return "parse-error";
    case ErrorKind::range_error: return "range-error";
    case ErrorKind::duplicate_key: return "duplicate-key";
    case ErrorKind::validation_error: return "validation-error";
    case ErrorKind::domain_error: return "domain-error";
    case ErrorKind::evaluation_error: return "evaluation-error";
    case ErrorKind::capability_error: return "capability-error";
    case ErrorKind::undefined_diagnostic: return "undefined-diagnostic";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::adaptation_failure: return "adaptation-failure";
    case ErrorKind::configuration_error: return "configuration-error";
    case ErrorKind::degenerate_column: return "degenerate-column";
    case ErrorKind::singular_design: return "singular-design";
    case ErrorKind::press_undefined: return "press-undefined";
    case ErrorKind::sse_floor: return "sse-floor";
    case ErrorKind::io_error: return "io-error";
    case ErrorKind::missing_prerequisite: return "missing-prerequisite";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Calendar dates. Proleptic Gregorian, days since 1970-01-01.
// ---------------------------------------------------------------------------

struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;
};

constexpr std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

constexpr Date civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

inline std::string format_iso_date(std::int64_t serial) {
  const Date d = civil_from_days(serial);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

/// Parses YYYY-MM-DD into a day serial; throws parse-error on malformed input.
inline std::int64_t parse_iso_date(const std::string& s) {
  int y = 0, m = 0, d = 0;
  char extra = '\0';
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &extra) != 3 || s.size() != 10 ||
      m < 1 || m > 12 || d < 1 || d > 31) {
    fail(ErrorKind::parse_error, "malformed ISO date '" + s + "'");
  }
  return days_from_civil(y, m, d);
}

// ---------------------------------------------------------------------------
// Seeding. Independent streams are derived from a base seed with splitmix64
// so results do not depend on thread scheduling.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ splitmix64(stream + 0x51ed2701ULL));
}

// ---------------------------------------------------------------------------
// Quantiles, linear interpolation between order statistics (index
// 1 + q*(n-1) on the sorted sample, 1-based).
// ---------------------------------------------------------------------------

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) fail(ErrorKind::range_error, "quantile of empty sample");
  if (sorted.size() == 1) return sorted[0];
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, q);
}

inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

// ---------------------------------------------------------------------------
// Worker pool helpers. Work is split into fixed blocks keyed by index, so the
// result layout is identical for any worker count.
// ---------------------------------------------------------------------------

inline int hardware_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Worker cap: MOBIDECOMP_THREADS if set, hardware concurrency otherwise.
inline int max_workers() {
  if (const char* env = std::getenv("MOBIDECOMP_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return hardware_threads();
}

/// Runs fn(i) for i in [0, n). Each index is an independent job; exceptions
/// are rethrown on the caller thread (first one wins).
inline void parallel_for(std::size_t n, int n_threads, const std::function<void(std::size_t)>& fn) {
  n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(n)));
  if (n_threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
  for (int w = 0; w < n_threads; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (std::size_t i = static_cast<std::size_t>(w); i < n;
             i += static_cast<std::size_t>(n_threads)) {
          fn(i);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Full-precision decimal formatting; round-trips double values exactly.
inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace mobi

#endif  // MOBIDECOMP_COMMON_HPP
