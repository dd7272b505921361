#ifndef MOBIDECOMP_DRAWS_HPP
#define MOBIDECOMP_DRAWS_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mobidecomp/csv.hpp"

namespace mobi::sampler {

struct IterStats {
  double step_size = 0.0;
  int tree_depth = 0;
  int n_leapfrog = 0;
  double accept_stat = 0.0;
  double energy = 0.0;
  bool divergent = false;
};

/// Post-warmup draws: chains x iterations x parameters, plus per-iteration
/// sampler statistics. Values are unconstrained coordinates; the layout file
/// carries the transform needed to map each one back to its support.
struct PosteriorDraws {
  std::vector<std::string> param_names;
  int n_chains = 0;
  int n_iters = 0;
  std::vector<double> values;      // [chain][iter][param]
  std::vector<IterStats> stats;    // [chain][iter]

  int n_params() const { return static_cast<int>(param_names.size()); }
  int n_total() const { return n_chains * n_iters; }

  double value(int chain, int iter, int param) const {
    return values[index(chain, iter, param)];
  }

  std::span<const double> draw(int chain, int iter) const {
    return {values.data() + index(chain, iter, 0), param_names.size()};
  }

  std::span<const double> flat_draw(int k) const {  // k in [0, n_total)
    return draw(k / n_iters, k % n_iters);
  }

  const IterStats& stat(int chain, int iter) const {
    return stats[static_cast<std::size_t>(chain) * static_cast<std::size_t>(n_iters) +
                 static_cast<std::size_t>(iter)];
  }

  /// Per-chain series of one parameter, as the diagnostics expect them.
  std::vector<std::vector<double>> chains_of(int param) const {
    std::vector<std::vector<double>> out(static_cast<std::size_t>(n_chains));
    for (int c = 0; c < n_chains; ++c) {
      auto& chain = out[static_cast<std::size_t>(c)];
      chain.resize(static_cast<std::size_t>(n_iters));
      for (int i = 0; i < n_iters; ++i) chain[static_cast<std::size_t>(i)] = value(c, i, param);
    }
    return out;
  }

  std::size_t index(int chain, int iter, int param) const {
    return (static_cast<std::size_t>(chain) * static_cast<std::size_t>(n_iters) +
            static_cast<std::size_t>(iter)) *
               param_names.size() +
           static_cast<std::size_t>(param);
  }
};

/// Long-format draw dump: chain, iter, param, value.
inline void save_draws_csv(const PosteriorDraws& draws, const std::string& path) {
  CsvWriter w(path);
  w.row({"chain", "iter", "param", "value"});
  for (int c = 0; c < draws.n_chains; ++c) {
    for (int i = 0; i < draws.n_iters; ++i) {
      for (int p = 0; p < draws.n_params(); ++p) {
        w.row({std::to_string(c), std::to_string(i), draws.param_names[static_cast<std::size_t>(p)],
               CsvWriter::num(draws.value(c, i, p))});
      }
    }
  }
  w.close();
}

inline void save_sampler_stats_csv(const PosteriorDraws& draws, const std::string& path) {
  CsvWriter w(path);
  w.row({"chain", "iter", "step_size", "tree_depth", "n_leapfrog", "accept_stat", "energy",
         "divergent"});
  for (int c = 0; c < draws.n_chains; ++c) {
    for (int i = 0; i < draws.n_iters; ++i) {
      const IterStats& s = draws.stat(c, i);
      w.row({std::to_string(c), std::to_string(i), CsvWriter::num(s.step_size),
             std::to_string(s.tree_depth), std::to_string(s.n_leapfrog),
             CsvWriter::num(s.accept_stat), CsvWriter::num(s.energy),
             s.divergent ? "1" : "0"});
    }
  }
  w.close();
}

/// Rebuilds a PosteriorDraws from draws.csv. Statistics are not part of the
/// file; only values and names are restored.
inline PosteriorDraws load_draws_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int c_chain = t.column("chain");
  const int c_iter = t.column("iter");
  const int c_param = t.column("param");
  const int c_value = t.column("value");

  PosteriorDraws out;
  std::map<std::string, int> param_index;
  int max_chain = -1, max_iter = -1;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& name = t.rows[r][static_cast<std::size_t>(c_param)];
    if (param_index.emplace(name, static_cast<int>(out.param_names.size())).second) {
      out.param_names.push_back(name);
    }
    max_chain = std::max(max_chain, static_cast<int>(parse_int(t, r, c_chain)));
    max_iter = std::max(max_iter, static_cast<int>(parse_int(t, r, c_iter)));
  }
  out.n_chains = max_chain + 1;
  out.n_iters = max_iter + 1;
  if (out.n_chains <= 0 || out.n_iters <= 0 || out.param_names.empty()) {
    fail(ErrorKind::parse_error, path + ": no draws");
  }
  out.values.assign(static_cast<std::size_t>(out.n_total()) * out.param_names.size(), 0.0);
  out.stats.assign(static_cast<std::size_t>(out.n_total()), IterStats{});
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int chain = static_cast<int>(parse_int(t, r, c_chain));
    const int iter = static_cast<int>(parse_int(t, r, c_iter));
    const int param = param_index.at(t.rows[r][static_cast<std::size_t>(c_param)]);
    out.values[out.index(chain, iter, param)] = parse_double(t, r, c_value);
  }
  return out;
}

}  // namespace mobi::sampler

#endif  // MOBIDECOMP_DRAWS_HPP
