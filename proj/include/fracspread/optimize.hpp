#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <queue>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fracspread/cascade.hpp"
#include "fracspread/errors.hpp"
#include "fracspread/graph.hpp"
#include "fracspread/rng.hpp"

namespace fracspread {

struct EstimatorConfig {
  std::uint32_t replicates = 10000;
  std::uint64_t master_seed = 1;
  bool use_exact = false;  // exact enumeration instead of Monte Carlo (small n)
  unsigned workers = 0;
};

struct BudgetedProblem {
  CascadeModel model;
  double budget = 0.0;
  double delta = 1.0;  // grid step; 1/delta must be an integer
  EstimatorConfig estimator;
};

struct AllocationResult {
  InfluenceVector x;
  std::vector<std::pair<NodeId, double>> spend_log;  // replays to x
  std::optional<SpreadEstimate> estimated_spread;

  std::vector<NodeId> support() const {
    std::vector<NodeId> s;
    for (NodeId v = 0; v < x.values.size(); ++v)
      if (x.values[v] > 0.0) s.push_back(v);
    return s;
  }
};

// I(x): nodes with positive allocation.  S(x): nodes whose allocation plus
// total incoming weight exceeds 1.
struct SaturationSets {
  std::vector<NodeId> influenced;
  std::vector<NodeId> saturated;

  static SaturationSets of(const DirectedGraph& g, const InfluenceVector& x) {
    SaturationSets s;
    for (NodeId v = 0; v < g.node_count(); ++v) {
      if (x.values[v] > 0.0) s.influenced.push_back(v);
      if (x.values[v] + g.in_weight_sum(v) > 1.0) s.saturated.push_back(v);
    }
    return s;
  }
};

namespace detail {

// Evaluation with common random numbers: a fixed seed makes the estimate a
// deterministic function of the allocation, so marginal comparisons within a
// greedy round share their noise.
struct GreedyEvaluator {
  const CascadeModel* model;
  EstimatorConfig cfg;

  std::pair<double, double> value(const InfluenceVector& x, std::uint64_t seed,
                                  std::uint32_t replicates) const {
    if (cfg.use_exact) return {exact_spread_small(*model, x), 0.0};
    SpreadEstimate e = estimate_spread(*model, x, replicates, seed, cfg.workers);
    return {e.mean, e.std_error};
  }
};

struct LazyGain {
  double gain;
  NodeId node;
  std::uint64_t round;
  std::uint64_t tag;
};
struct LazyGainLess {
  bool operator()(const LazyGain& a, const LazyGain& b) const {
    if (a.gain != b.gain) return a.gain < b.gain;
    return a.node > b.node;  // equal gains: smaller id wins
  }
};

// Lazy greedy over delta-steps.  Stale gains are kept as upper bounds in a
// max-priority queue; the top is re-evaluated until a fresh gain still leads.
// Ties within one standard error of the leader get a single doubled-replicate
// re-evaluation, then the smallest node id wins.
inline AllocationResult greedy_steps(const CascadeModel& model, double delta,
                                     std::uint64_t total_steps,
                                     const EstimatorConfig& cfg) {
  const NodeId n = model.node_count();
  const std::uint64_t cap_steps = std::llround(1.0 / delta);
  GreedyEvaluator eval{&model, cfg};
  // Stale gains are upper bounds only under diminishing returns, which fixed
  // thresholds do not provide; re-evaluate everything per round in that case.
  const bool lazy = !model.fixed_thresholds.has_value();

  std::vector<std::uint64_t> steps(n, 0);
  auto vec_of = [&](std::span<const std::uint64_t> st) {
    InfluenceVector x = InfluenceVector::zeros(n);
    for (NodeId v = 0; v < n; ++v) x.values[v] = double(st[v]) / double(cap_steps);
    return x;
  };

  AllocationResult result;
  std::priority_queue<LazyGain, std::vector<LazyGain>, LazyGainLess> pq;
  std::vector<std::uint64_t> live_tag(n, 0);
  std::uint64_t tag_counter = 0;

  for (std::uint64_t round = 0; round < total_steps; ++round) {
    std::uint64_t seed_round = rng::hash_combine(cfg.master_seed, round);
    InfluenceVector x = vec_of(steps);
    auto [base_val, base_err] = eval.value(x, seed_round, cfg.replicates);
    (void)base_err;

    std::vector<double> round_gain(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> round_err(n, 0.0);
    auto fresh_gain = [&](NodeId v) {
      InfluenceVector xv = x;
      xv.values[v] = double(steps[v] + 1) / double(cap_steps);
      auto [val, err] = eval.value(xv, seed_round, cfg.replicates);
      round_gain[v] = val - base_val;
      round_err[v] = err;
      return round_gain[v];
    };

    if (!lazy) pq = {};
    if (pq.empty()) {
      for (NodeId v = 0; v < n; ++v) {
        if (steps[v] >= cap_steps) continue;
        double gn = fresh_gain(v);
        pq.push({gn, v, round, ++tag_counter});
        live_tag[v] = tag_counter;
      }
    }

    bool have_leader = false;
    LazyGain leader{};
    while (!pq.empty()) {
      LazyGain e = pq.top();
      pq.pop();
      if (e.tag != live_tag[e.node]) continue;       // superseded entry
      if (steps[e.node] >= cap_steps) continue;      // coordinate already full
      if (e.round == round) {
        leader = e;
        have_leader = true;
        break;
      }
      double gn = fresh_gain(e.node);
      pq.push({gn, e.node, round, ++tag_counter});
      live_tag[e.node] = tag_counter;
    }
    if (!have_leader) break;  // nothing left to fill

    // Contenders evaluated this round within one stderr of the leader.
    NodeId winner = leader.node;
    double winner_gain = leader.gain;
    std::vector<NodeId> contenders;
    for (NodeId v = 0; v < n; ++v) {
      if (std::isnan(round_gain[v]) || steps[v] >= cap_steps) continue;
      if (round_gain[v] >= leader.gain - round_err[leader.node]) contenders.push_back(v);
    }
    if (contenders.size() > 1) {
      std::uint64_t tb_seed = rng::hash3(cfg.master_seed, round, 0x7b1eu);
      auto [tb_base, tb_base_err] = eval.value(x, tb_seed, cfg.replicates * 2);
      (void)tb_base_err;
      winner_gain = -std::numeric_limits<double>::infinity();
      winner = n;
      for (NodeId v : contenders) {
        InfluenceVector xv = x;
        xv.values[v] = double(steps[v] + 1) / double(cap_steps);
        auto [val, err] = eval.value(xv, tb_seed, cfg.replicates * 2);
        (void)err;
        double gn = val - tb_base;
        if (gn > winner_gain || (gn == winner_gain && v < winner)) {
          winner_gain = gn;
          winner = v;
        }
      }
      for (NodeId v : contenders) {
        if (v == winner) continue;
        pq.push({round_gain[v], v, round, ++tag_counter});
        live_tag[v] = tag_counter;
      }
    }
    if (winner != leader.node) {
      pq.push({leader.gain, leader.node, round, ++tag_counter});
      live_tag[leader.node] = tag_counter;
    }

    ++steps[winner];
    result.spend_log.emplace_back(winner, delta);
    // The spent gain stays as the stale bound for the winner's next step.
    pq.push({winner_gain, winner, round, ++tag_counter});
    live_tag[winner] = tag_counter;
  }

  result.x = vec_of(steps);
  std::uint64_t final_seed = rng::hash_combine(cfg.master_seed, 0xF17A1u);
  if (cfg.use_exact) {
    result.estimated_spread =
        SpreadEstimate{exact_spread_small(model, result.x), 0.0, 1, final_seed};
  } else {
    result.estimated_spread =
        estimate_spread(model, result.x, cfg.replicates, final_seed, cfg.workers);
  }
  return result;
}

}  // namespace detail

// Discretized greedy: K/delta rounds, each adding delta to the coordinate
// with the best estimated marginal gain.
inline AllocationResult greedy_fractional(const BudgetedProblem& p) {
  if (p.budget < 0.0 || p.budget > double(p.model.node_count()))
    throw std::invalid_argument("budget must lie in [0, n]");
  double steps_d = p.budget / p.delta;
  long total_steps = std::lround(steps_d);
  if (std::abs(steps_d - double(total_steps)) > 1e-9 || total_steps < 0)
    throw std::domain_error("budget must be an integer number of delta steps");
  long per_node = std::lround(1.0 / p.delta);
  if (per_node < 1 || std::abs(per_node * p.delta - 1.0) > 1e-9)
    throw std::domain_error("delta must be 1/N for a positive integer N");
  return detail::greedy_steps(p.model, p.delta, total_steps, p.estimator);
}

// Lazy greedy over seed sets of size K: the delta = 1 case with integral
// semantics (seeding a set coincides with x = 1_S one stage later).
inline AllocationResult greedy_integral(const BudgetedProblem& p) {
  if (p.budget < 0.0 || p.budget > double(p.model.node_count()))
    throw std::invalid_argument("budget must lie in [0, n]");
  long k = std::lround(p.budget);
  if (std::abs(p.budget - double(k)) > 1e-9 || k < 0)
    throw std::domain_error("integral greedy needs an integer budget");
  return detail::greedy_steps(p.model, 1.0, k, p.estimator);
}

// Spend log as CSV: one row per greedy step or heuristic decision.  Nodes are
// written with their original labels when a graph is supplied.
inline void emit_spend_log_csv(const AllocationResult& r, std::ostream& out,
                               const DirectedGraph* g = nullptr) {
  out << "node,amount,cumulative_budget\n";
  double total = 0.0;
  for (auto [v, amt] : r.spend_log) {
    total += amt;
    out << (g ? g->original_ids()[v] : std::uint64_t(v)) << ','
        << detail::format_double(amt) << ',' << detail::format_double(total) << '\n';
  }
}

// --- degree-based and budget-splitting heuristics ---

namespace detail {

inline AllocationResult alloc_from_log(NodeId n,
                                       std::vector<std::pair<NodeId, double>> log) {
  AllocationResult r;
  r.x = InfluenceVector::zeros(n);
  for (auto [v, amt] : log) r.x.values[v] = std::min(1.0, r.x.values[v] + amt);
  r.spend_log = std::move(log);
  return r;
}

inline void require_integer_budget(double b) {
  if (std::abs(b - std::round(b)) > 1e-9)
    throw std::invalid_argument("this heuristic needs an integer budget");
}

inline AllocationResult degree_int(const DirectedGraph& g, double budget) {
  require_integer_budget(budget);
  long b = std::lround(budget);
  std::vector<NodeId> order(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) order[v] = v;
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId c) {
    return g.out_degree(a) > g.out_degree(c);
  });
  std::vector<std::pair<NodeId, double>> log;
  for (long i = 0; i < b && i < long(order.size()); ++i) log.emplace_back(order[i], 1.0);
  return alloc_from_log(g.node_count(), std::move(log));
}

inline AllocationResult discount_int(const DirectedGraph& g, double budget) {
  require_integer_budget(budget);
  long b = std::lround(budget);
  const NodeId n = g.node_count();
  std::vector<long> deg(n);
  for (NodeId v = 0; v < n; ++v) deg[v] = long(g.out_degree(v));
  std::vector<bool> picked(n, false);
  std::vector<std::pair<NodeId, double>> log;
  for (long i = 0; i < b && i < long(n); ++i) {
    NodeId best = n;
    long best_deg = std::numeric_limits<long>::min();
    for (NodeId v = 0; v < n; ++v) {
      if (picked[v]) continue;
      if (deg[v] > best_deg) {
        best_deg = deg[v];
        best = v;
      }
    }
    picked[best] = true;
    log.emplace_back(best, 1.0);
    // An arc into a chosen node no longer helps its source.
    for (NodeId z : g.in_neighbors(best))
      if (!picked[z]) --deg[z];
  }
  return alloc_from_log(n, std::move(log));
}

inline AllocationResult random_int(const DirectedGraph& g, double budget,
                                   std::uint64_t seed) {
  require_integer_budget(budget);
  long b = std::lround(budget);
  const NodeId n = g.node_count();
  std::vector<NodeId> ids(n);
  for (NodeId v = 0; v < n; ++v) ids[v] = v;
  rng::SplitMix64 gen(seed);
  std::vector<std::pair<NodeId, double>> log;
  for (long i = 0; i < b && i < long(n); ++i) {
    std::size_t j = i + gen.next_below(n - i);
    std::swap(ids[i], ids[j]);
    log.emplace_back(ids[i], 1.0);
  }
  return alloc_from_log(n, std::move(log));
}

inline AllocationResult uniform_frac(const DirectedGraph& g, double budget) {
  const NodeId n = g.node_count();
  std::vector<std::pair<NodeId, double>> log;
  double share = budget / double(n);
  for (NodeId v = 0; v < n; ++v) log.emplace_back(v, share);
  return alloc_from_log(n, std::move(log));
}

// x_v proportional to out-degree: B * d(v) / m, capped at 1 with the residual
// redistributed proportionally among the uncapped nodes.
inline AllocationResult degree_frac(const DirectedGraph& g, double budget) {
  const NodeId n = g.node_count();
  std::vector<double> x(n, 0.0);
  std::vector<bool> open(n, false);
  double remaining = budget;
  double deg_total = 0.0;
  for (NodeId v = 0; v < n; ++v) {
    if (g.out_degree(v) > 0) {
      open[v] = true;
      deg_total += double(g.out_degree(v));
    }
  }
  while (remaining > 1e-12 && deg_total > 0.0) {
    double scale = remaining / deg_total;
    bool capped_any = false;
    for (NodeId v = 0; v < n; ++v) {
      if (!open[v]) continue;
      if (x[v] + scale * double(g.out_degree(v)) >= 1.0) {
        remaining -= 1.0 - x[v];
        x[v] = 1.0;
        open[v] = false;
        deg_total -= double(g.out_degree(v));
        capped_any = true;
      }
    }
    if (!capped_any) {
      for (NodeId v = 0; v < n; ++v)
        if (open[v]) x[v] += scale * double(g.out_degree(v));
      remaining = 0.0;
    }
  }
  std::vector<std::pair<NodeId, double>> log;
  for (NodeId v = 0; v < n; ++v)
    if (x[v] > 0.0) log.emplace_back(v, x[v]);
  return alloc_from_log(n, std::move(log));
}

// Repeatedly pick the node with the largest outgoing weight into unselected
// territory and pay just enough to lift it over 1 given what the selected set
// already contributes.
inline AllocationResult discount_frac(const DirectedGraph& g, double budget) {
  const NodeId n = g.node_count();
  std::vector<double> gamma_out(n, 0.0);  // weight into unselected nodes
  std::vector<double> gamma_in(n, 0.0);   // weight from selected nodes
  for (NodeId v = 0; v < n; ++v) gamma_out[v] = g.out_weight_sum(v);
  std::vector<bool> selected(n, false);
  std::vector<std::pair<NodeId, double>> log;
  double b = budget;
  NodeId picked = 0;
  while (b > 1e-12 && picked < n) {
    NodeId u = n;
    double best = -1.0;
    for (NodeId v = 0; v < n; ++v) {
      if (selected[v]) continue;
      if (gamma_out[v] > best) {
        best = gamma_out[v];
        u = v;
      }
    }
    double spend = std::min(b, std::max(0.0, 1.0 - gamma_in[u]));
    log.emplace_back(u, spend);
    b -= spend;
    selected[u] = true;
    ++picked;
    auto nbrs = g.out_neighbors(u);
    auto wts = g.out_weights(u);
    for (std::size_t i = 0; i < nbrs.size(); ++i) gamma_in[nbrs[i]] += wts[i];
    auto innb = g.in_neighbors(u);
    auto inw = g.in_weights(u);
    for (std::size_t i = 0; i < innb.size(); ++i) gamma_out[innb[i]] -= inw[i];
  }
  return alloc_from_log(n, std::move(log));
}

}  // namespace detail

inline bool is_fractional_heuristic(std::string_view name) {
  return name == "DegreeFrac" || name == "DiscountFrac" || name == "UniformFrac";
}
inline bool is_integral_heuristic(std::string_view name) {
  return name == "DegreeInt" || name == "DiscountInt" || name == "RandomInt";
}

// Dispatch by algorithm name: DegreeInt, DiscountInt, RandomInt (integer
// budgets, seed-set semantics) and DegreeFrac, DiscountFrac, UniformFrac
// (fractional allocations).
inline AllocationResult heuristic_allocate(std::string_view name, const DirectedGraph& g,
                                           double budget, std::uint64_t seed = 0) {
  if (budget < 0.0 || budget > double(g.node_count()))
    throw std::invalid_argument("budget must lie in [0, n]");
  if (name == "DegreeInt") return detail::degree_int(g, budget);
  if (name == "DiscountInt") return detail::discount_int(g, budget);
  if (name == "RandomInt") return detail::random_int(g, budget, seed);
  if (name == "UniformFrac") return detail::uniform_frac(g, budget);
  if (name == "DegreeFrac") return detail::degree_frac(g, budget);
  if (name == "DiscountFrac") return detail::discount_frac(g, budget);
  throw std::domain_error("unknown heuristic: " + std::string(name));
}

// --- exact DAG routines under the linear model with uniform thresholds ---

namespace detail {

inline std::vector<NodeId> topo_or_throw(const DirectedGraph& g) {
  TopologicalOrder t = topological_order(g);
  if (!t.is_dag()) throw std::domain_error("graph has a directed cycle");
  return std::move(t.order);
}

inline double single_node_spread(const DirectedGraph& g, std::span<const NodeId> topo,
                                 NodeId source, std::vector<double>& p) {
  p.assign(g.node_count(), 0.0);
  p[source] = 1.0;
  double total = 0.0;
  for (NodeId u : topo) {
    if (u != source) {
      double acc = 0.0;
      auto srcs = g.in_neighbors(u);
      auto wts = g.in_weights(u);
      for (std::size_t i = 0; i < srcs.size(); ++i) acc += wts[i] * p[srcs[i]];
      p[u] = acc;
    }
    total += p[u];
  }
  return total;
}

}  // namespace detail

// sigma(1_v) on a DAG: activation probabilities satisfy
// p(u) = sum over in-arcs of w * p(source), with p(v) = 1.
inline double dag_single_node_spread(const DirectedGraph& g, NodeId v) {
  if (v >= g.node_count()) throw std::invalid_argument("node out of range");
  std::vector<NodeId> topo = detail::topo_or_throw(g);
  std::vector<double> p;
  return detail::single_node_spread(g, topo, v, p);
}

inline std::vector<double> dag_all_single_node_spreads(const DirectedGraph& g) {
  std::vector<NodeId> topo = detail::topo_or_throw(g);
  std::vector<double> out(g.node_count());
  std::vector<double> p;
  for (NodeId v = 0; v < g.node_count(); ++v)
    out[v] = detail::single_node_spread(g, topo, v, p);
  return out;
}

// Budget placement on a DAG where sigma is linear: fills nodes in decreasing
// sigma(1_v), stopping each fill at the largest amount that leaves no path
// from an influenced node to an (over-)saturated one.  Returns the allocation
// and the predicted spread sum x_v * sigma(1_v).
inline AllocationResult dag_linear_optimize(const DirectedGraph& g, double budget) {
  const NodeId n = g.node_count();
  if (budget < 0.0 || budget > double(n))
    throw std::invalid_argument("budget must lie in [0, n]");
  std::vector<double> sigma1 = dag_all_single_node_spreads(g);

  std::vector<NodeId> order(n);
  for (NodeId v = 0; v < n; ++v) order[v] = v;
  std::stable_sort(order.begin(), order.end(),
                   [&](NodeId a, NodeId b) { return sigma1[a] > sigma1[b]; });

  std::vector<double> inweight(n);
  for (NodeId v = 0; v < n; ++v) inweight[v] = g.in_weight_sum(v);

  std::vector<bool> influenced(n, false), saturated(n, false);
  for (NodeId v = 0; v < n; ++v)
    if (inweight[v] > 1.0) saturated[v] = true;  // saturated before any allocation

  std::vector<NodeId> stack;
  std::vector<bool> seen(n);
  auto forward_hits_saturated = [&](NodeId v) {
    std::fill(seen.begin(), seen.end(), false);
    stack.assign(1, v);
    seen[v] = true;
    while (!stack.empty()) {
      NodeId u = stack.back();
      stack.pop_back();
      for (NodeId w : g.out_neighbors(u)) {
        if (seen[w]) continue;
        if (saturated[w]) return true;
        seen[w] = true;
        stack.push_back(w);
      }
    }
    return false;
  };
  auto influenced_ancestor = [&](NodeId v) {
    std::fill(seen.begin(), seen.end(), false);
    stack.assign(1, v);
    seen[v] = true;
    while (!stack.empty()) {
      NodeId u = stack.back();
      stack.pop_back();
      for (NodeId z : g.in_neighbors(u)) {
        if (seen[z]) continue;
        if (influenced[z]) return true;
        seen[z] = true;
        stack.push_back(z);
      }
    }
    return false;
  };

  AllocationResult result;
  result.x = InfluenceVector::zeros(n);
  double remaining = budget;
  for (NodeId v : order) {
    if (remaining <= 1e-12) break;
    if (forward_hits_saturated(v)) continue;
    double cap = 1.0;
    if (influenced_ancestor(v)) cap = std::min(cap, std::max(0.0, 1.0 - inweight[v]));
    double amount = std::min(remaining, cap);
    if (amount <= 1e-12) continue;
    result.x.values[v] = amount;
    result.spend_log.emplace_back(v, amount);
    influenced[v] = true;
    if (amount + inweight[v] > 1.0) saturated[v] = true;
    remaining -= amount;
  }

  double predicted = 0.0;
  for (NodeId v = 0; v < n; ++v) predicted += result.x.values[v] * sigma1[v];
  result.estimated_spread = SpreadEstimate{predicted, 0.0, 1, 0};
  return result;
}

}  // namespace fracspread
