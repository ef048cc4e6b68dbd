#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fracspread/cascade.hpp"
#include "fracspread/errors.hpp"
#include "fracspread/graph.hpp"
#include "fracspread/optimize.hpp"
#include "fracspread/rng.hpp"

namespace fracspread {

inline const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> names = {
      "DegreeFrac", "DegreeInt",  "DiscountFrac", "DiscountInt",
      "GreedyFrac", "GreedyInt",  "RandomInt",    "UniformFrac"};
  return names;
}

inline bool algorithm_is_fractional(std::string_view name) {
  return name == "DegreeFrac" || name == "DiscountFrac" || name == "UniformFrac" ||
         name == "GreedyFrac";
}

inline bool algorithm_is_known(std::string_view name) {
  const auto& ks = known_algorithms();
  return std::find(ks.begin(), ks.end(), name) != ks.end();
}

struct ExperimentConfig {
  std::string dataset;                 // label; defaults to the graph file stem
  std::string graph_path;
  bool undirected = false;
  WeightModel weight_model = WeightModel::weighted_cascade;
  std::string thresholds_path;         // optional fixed-threshold sidecar
  std::vector<std::string> algorithms;
  std::vector<double> budgets;
  std::uint32_t replicates = 10000;
  std::uint64_t master_seed = 1;
  double delta = 0.1;                  // grid step for the greedy algorithms
  std::string out_path;
  bool measure_time = true;            // off: wallclock_ms column is 0
  unsigned workers = 0;

  void validate() const {
    if (graph_path.empty()) throw ConfigError("no graph file given");
    if (replicates < 1) throw ConfigError("replicates must be >= 1");
    if (algorithms.empty()) throw ConfigError("no algorithms selected");
    for (const auto& a : algorithms)
      if (!algorithm_is_known(a)) throw ConfigError("unknown algorithm: " + a);
    for (std::size_t i = 1; i < budgets.size(); ++i)
      if (budgets[i] < budgets[i - 1])
        throw ConfigError("budgets must be nondecreasing");
  }
};

struct ResultRow {
  std::string dataset;
  std::string algorithm;
  double budget = 0.0;
  double mean_spread = 0.0;
  double std_error = 0.0;
  std::int64_t wallclock_ms = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t cell_seed(std::uint64_t master, std::string_view algorithm,
                               double budget) {
  return rng::hash3(master, fnv1a(algorithm), std::bit_cast<std::uint64_t>(budget));
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(sep, start);
    if (end == std::string_view::npos) end = s.size();
    auto piece = trim(s.substr(start, end - start));
    if (!piece.empty()) out.emplace_back(piece);
    start = end + 1;
  }
  return out;
}

inline std::string dataset_stem(const std::string& path) {
  std::size_t slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  std::size_t dot = base.find_last_of('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

}  // namespace detail

// "1/N" or a plain decimal.
inline double parse_fraction(std::string_view s) {
  s = detail::trim(s);
  auto slash = s.find('/');
  double val = 0.0;
  if (slash == std::string_view::npos) {
    if (!detail::parse_double(s, val)) throw ConfigError("unparsable number: " + std::string(s));
    return val;
  }
  double num, den;
  if (!detail::parse_double(s.substr(0, slash), num) ||
      !detail::parse_double(s.substr(slash + 1), den) || den == 0.0)
    throw ConfigError("unparsable fraction: " + std::string(s));
  return num / den;
}

// Flat key = value config file ('#' comments); CLI flags override afterwards.
inline ExperimentConfig load_experiment_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view sv = line;
    if (auto pos = sv.find('#'); pos != std::string_view::npos) sv = sv.substr(0, pos);
    sv = detail::trim(sv);
    if (sv.empty()) continue;
    auto eq = sv.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("expected 'key = value'", lineno);
    std::string key(detail::trim(sv.substr(0, eq)));
    std::string val(detail::trim(sv.substr(eq + 1)));
    if (key == "dataset") {
      cfg.dataset = val;
    } else if (key == "graph") {
      cfg.graph_path = val;
    } else if (key == "undirected") {
      cfg.undirected = val == "true" || val == "1";
    } else if (key == "weights") {
      auto wm = parse_weight_model(val);
      if (!wm) throw ConfigError("unknown weight model: " + val);
      cfg.weight_model = *wm;
    } else if (key == "thresholds") {
      cfg.thresholds_path = val;
    } else if (key == "algos") {
      cfg.algorithms = detail::split_list(val, ',');
    } else if (key == "budgets") {
      cfg.budgets.clear();
      for (const auto& tok : detail::split_list(val, ',')) {
        double b;
        if (!detail::parse_double(tok, b)) throw ConfigError("unparsable budget: " + tok);
        cfg.budgets.push_back(b);
      }
    } else if (key == "sims") {
      double r;
      if (!detail::parse_double(val, r) || r < 0) throw ConfigError("unparsable sims: " + val);
      cfg.replicates = static_cast<std::uint32_t>(r);
    } else if (key == "seed") {
      std::uint64_t sd;
      if (!detail::parse_u64(val, sd)) throw ConfigError("unparsable seed: " + val);
      cfg.master_seed = sd;
    } else if (key == "delta") {
      cfg.delta = parse_fraction(val);
    } else if (key == "out") {
      cfg.out_path = val;
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open config file: " + path);
  return load_experiment_config(f);
}

// Runs every (algorithm, budget) cell: compute the allocation, then estimate
// its spread with the configured replicate count.  Each cell derives its seed
// from (master_seed, algorithm, budget), so scheduling never affects output.
// Rows come back sorted by algorithm name, then budget.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  auto graph = std::make_shared<const DirectedGraph>(assign_weights(
      load_edge_list(cfg.graph_path, !cfg.undirected),
      cfg.weight_model, rng::hash_combine(cfg.master_seed, 0x77E16475ULL)));
  const NodeId n = graph->node_count();
  for (double b : cfg.budgets)
    if (b < 0.0 || b > double(n)) throw ConfigError("budget exceeds node count");

  CascadeModel model = CascadeModel::linear(graph);
  if (!cfg.thresholds_path.empty()) {
    std::vector<double> taus = load_node_values(cfg.thresholds_path, *graph, 0.0);
    model.fixed_thresholds = ThresholdVector::fixed_at(std::move(taus));
  }
  std::string dataset = cfg.dataset.empty() ? detail::dataset_stem(cfg.graph_path)
                                            : cfg.dataset;

  std::vector<ResultRow> rows;
  for (const std::string& algo : cfg.algorithms) {
    for (double budget : cfg.budgets) {
      std::uint64_t seed = detail::cell_seed(cfg.master_seed, algo, budget);
      auto t0 = std::chrono::steady_clock::now();

      AllocationResult alloc;
      if (algo == "GreedyFrac" || algo == "GreedyInt") {
        BudgetedProblem p;
        p.model = model;
        p.budget = budget;
        p.delta = algo == "GreedyInt" ? 1.0 : cfg.delta;
        p.estimator = {cfg.replicates, rng::hash_combine(seed, 2), false, cfg.workers};
        alloc = algo == "GreedyInt" ? greedy_integral(p) : greedy_fractional(p);
      } else {
        alloc = heuristic_allocate(algo, *graph, budget, rng::hash_combine(seed, 1));
      }

      std::uint64_t eval_seed = rng::hash_combine(seed, 3);
      SpreadEstimate est;
      if (algorithm_is_fractional(algo)) {
        est = estimate_spread(model, alloc.x, cfg.replicates, eval_seed, cfg.workers);
      } else {
        std::vector<NodeId> s = alloc.support();
        est = spread_of_set(model, s, cfg.replicates, eval_seed, cfg.workers);
      }

      auto t1 = std::chrono::steady_clock::now();
      ResultRow row;
      row.dataset = dataset;
      row.algorithm = algo;
      row.budget = budget;
      row.mean_spread = est.mean;
      row.std_error = est.std_error;
      row.wallclock_ms =
          cfg.measure_time
              ? std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()
              : 0;
      row.seed = seed;
      rows.push_back(std::move(row));
    }
  }
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.algorithm != b.algorithm) return a.algorithm < b.algorithm;
    return a.budget < b.budget;
  });
  return rows;
}

// Per-budget advantage of the best fractional algorithm over the best
// integral one: best_frac / best_int - 1.
struct GainTable {
  struct Entry {
    double budget = 0.0;
    double best_fractional = 0.0;
    double best_integral = 0.0;
    double gain = 0.0;
  };
  std::vector<Entry> by_budget;
  double mean_gain = 0.0;
  double median_gain = 0.0;
};

inline GainTable pointwise_gain(std::span<const ResultRow> rows) {
  std::vector<double> budgets;
  for (const auto& r : rows) budgets.push_back(r.budget);
  std::sort(budgets.begin(), budgets.end());
  budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());

  GainTable table;
  for (double b : budgets) {
    bool any_frac = false, any_int = false;
    double best_frac = 0.0, best_int = 0.0;
    for (const auto& r : rows) {
      if (r.budget != b) continue;
      if (algorithm_is_fractional(r.algorithm)) {
        best_frac = any_frac ? std::max(best_frac, r.mean_spread) : r.mean_spread;
        any_frac = true;
      } else {
        best_int = any_int ? std::max(best_int, r.mean_spread) : r.mean_spread;
        any_int = true;
      }
    }
    if (!any_frac || !any_int)
      throw std::domain_error("pointwise gain needs both a fractional and an integral "
                              "algorithm per budget");
    double gain;
    if (best_int > 0.0)
      gain = best_frac / best_int - 1.0;
    else
      gain = best_frac > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    table.by_budget.push_back({b, best_frac, best_int, gain});
  }

  std::vector<double> gains;
  for (const auto& e : table.by_budget) gains.push_back(e.gain);
  if (!gains.empty()) {
    double sum = 0.0;
    for (double g : gains) sum += g;
    table.mean_gain = sum / gains.size();
    std::sort(gains.begin(), gains.end());
    std::size_t mid = gains.size() / 2;
    table.median_gain = gains.size() % 2 == 1
                            ? gains[mid]
                            : 0.5 * (gains[mid - 1] + gains[mid]);
  }
  return table;
}

// --- CSV emission and parsing ---

namespace detail {

inline std::string csv_quote(std::string_view field) {
  bool needs = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::vector<std::string> csv_split(const std::string& line, std::size_t lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", lineno);
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace detail

inline constexpr std::string_view kResultCsvHeader =
    "dataset,algorithm,budget,mean_spread,stderr,wallclock_ms,seed";

inline void emit_csv(std::span<const ResultRow> rows, std::ostream& out) {
  std::vector<const ResultRow*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const ResultRow* a, const ResultRow* b) {
    if (a->algorithm != b->algorithm) return a->algorithm < b->algorithm;
    return a->budget < b->budget;
  });
  out << kResultCsvHeader << '\n';
  for (const ResultRow* r : sorted) {
    out << detail::csv_quote(r->dataset) << ',' << detail::csv_quote(r->algorithm) << ','
        << detail::format_double(r->budget) << ',' << detail::format_double(r->mean_spread)
        << ',' << detail::format_double(r->std_error) << ',' << r->wallclock_ms << ','
        << r->seed << '\n';
  }
}

inline void emit_csv(std::span<const ResultRow> rows, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write CSV: " + path);
  emit_csv(rows, f);
}

inline std::vector<ResultRow> parse_result_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty CSV", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultCsvHeader) throw ParseError("unexpected CSV header", 1);
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::csv_split(line, lineno);
    if (fields.size() != 7) throw ParseError("expected 7 CSV fields", lineno);
    ResultRow r;
    r.dataset = fields[0];
    r.algorithm = fields[1];
    std::uint64_t seed = 0;
    double wall = 0;
    if (!detail::parse_double(fields[2], r.budget) ||
        !detail::parse_double(fields[3], r.mean_spread) ||
        !detail::parse_double(fields[4], r.std_error) ||
        !detail::parse_double(fields[5], wall) || !detail::parse_u64(fields[6], seed))
      throw ParseError("unparsable CSV row", lineno);
    r.wallclock_ms = static_cast<std::int64_t>(wall);
    r.seed = seed;
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<ResultRow> parse_result_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open CSV: " + path);
  return parse_result_csv(f);
}

}  // namespace fracspread
