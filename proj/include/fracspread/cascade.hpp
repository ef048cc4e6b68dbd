#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "fracspread/errors.hpp"
#include "fracspread/graph.hpp"
#include "fracspread/rng.hpp"

namespace fracspread {

// Fractional allocation x in [0,1]^n.
struct InfluenceVector {
  std::vector<double> values;

  static InfluenceVector zeros(NodeId n) { return {std::vector<double>(n, 0.0)}; }

  static InfluenceVector indicator(NodeId n, std::span<const NodeId> set) {
    InfluenceVector x = zeros(n);
    for (NodeId v : set) {
      if (v >= n) throw std::invalid_argument("seed node out of range");
      x.values[v] = 1.0;
    }
    return x;
  }

  double budget_used() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }

  void validate() const {
    for (double v : values)
      if (!(v >= -1e-12 && v <= 1.0 + 1e-9))
        throw std::invalid_argument("influence entry outside [0,1]");
  }
};

struct ThresholdVector {
  enum class Origin { fixed, uniform };

  std::vector<double> values;
  Origin origin = Origin::fixed;
  std::uint64_t seed = 0;

  static ThresholdVector fixed_at(std::vector<double> vals) {
    ThresholdVector t;
    t.values = std::move(vals);
    for (double v : t.values)
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("threshold outside [0,1]");
    return t;
  }

  static ThresholdVector constant(NodeId n, double tau) {
    return fixed_at(std::vector<double>(n, tau));
  }

  // Replicate `rep` of the i.i.d. Unif(0,1) stream rooted at `master`.
  static ThresholdVector draw_uniform(NodeId n, std::uint64_t master, std::uint64_t rep) {
    ThresholdVector t;
    t.origin = Origin::uniform;
    t.seed = master;
    t.values.resize(n);
    for (NodeId v = 0; v < n; ++v) t.values[v] = rng::threshold_draw(master, rep, v);
    return t;
  }
};

// Triggering sets are subsets of in-neighbors.  With no sampler the fixed
// sets are used for every replicate (deterministic sets as a degenerate
// sampler); otherwise the sampler re-draws each node's set per replicate.
struct TriggeringSampler {
  std::vector<std::vector<NodeId>> fixed_sets;
  std::function<std::vector<NodeId>(NodeId node, std::uint64_t seed)> sample;

  bool deterministic() const noexcept { return !sample; }
};

class CascadeModel {
 public:
  enum class Kind { linear, capped_linear_activators, triggering };

  Kind kind = Kind::linear;
  std::shared_ptr<const DirectedGraph> graph;
  std::vector<double> activator_boost;     // extra additive influence per node
  TriggeringSampler triggering_sets;
  std::vector<double> objective_weights;   // empty: every node counts 1
  std::optional<ThresholdVector> fixed_thresholds;  // estimators use these when set

  static CascadeModel linear(std::shared_ptr<const DirectedGraph> g) {
    CascadeModel m;
    m.kind = Kind::linear;
    m.graph = std::move(g);
    return m;
  }
  static CascadeModel linear(DirectedGraph g) {
    return linear(std::make_shared<const DirectedGraph>(std::move(g)));
  }

  static CascadeModel capped_with_activators(std::shared_ptr<const DirectedGraph> g,
                                             std::vector<double> boost) {
    CascadeModel m;
    m.kind = Kind::capped_linear_activators;
    m.graph = std::move(g);
    if (boost.size() != m.graph->node_count())
      throw std::invalid_argument("activator boost size mismatch");
    m.activator_boost = std::move(boost);
    return m;
  }

  static CascadeModel triggering(std::shared_ptr<const DirectedGraph> g,
                                 TriggeringSampler sampler) {
    CascadeModel m;
    m.kind = Kind::triggering;
    m.graph = std::move(g);
    if (sampler.fixed_sets.size() != m.graph->node_count() && sampler.deterministic())
      throw std::invalid_argument("triggering set table size mismatch");
    for (auto& s : sampler.fixed_sets) std::sort(s.begin(), s.end());
    m.triggering_sets = std::move(sampler);
    return m;
  }
  static CascadeModel triggering(DirectedGraph g, TriggeringSampler sampler) {
    return triggering(std::make_shared<const DirectedGraph>(std::move(g)),
                      std::move(sampler));
  }

  NodeId node_count() const { return graph->node_count(); }

  double node_weight(NodeId v) const {
    return objective_weights.empty() ? 1.0 : objective_weights[v];
  }
};

// Final activated set plus the cumulative per-stage trace for one run.
struct CascadeOutcome {
  std::vector<NodeId> final_active;                 // sorted
  std::vector<std::vector<NodeId>> stage_trace;     // cumulative, sorted
  ThresholdVector thresholds_used;
};

struct SpreadEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample std / sqrt(replicates)
  std::uint32_t replicates = 0;
  std::uint64_t master_seed = 0;
};

namespace detail {

// Reusable per-worker buffers; stamps avoid O(n) clears between runs.
struct CascadeScratch {
  std::vector<double> influence, tau;
  std::vector<std::uint32_t> active_st, infl_st, tau_st, hit_st, cand_st;
  std::vector<NodeId> frontier, next_frontier, candidates;
  std::uint32_t run_id = 0;
  std::uint32_t stage_token = 0;

  void ensure(NodeId n) {
    if (influence.size() < n) {
      influence.resize(n);
      tau.resize(n);
      active_st.assign(n, 0);
      infl_st.assign(n, 0);
      tau_st.assign(n, 0);
      hit_st.assign(n, 0);
      cand_st.assign(n, 0);
      run_id = 0;
      stage_token = 0;
    }
  }
};

inline bool sorted_contains(const std::vector<NodeId>& v, NodeId x) {
  return std::binary_search(v.begin(), v.end(), x);
}

// One threshold-cascade run.  `base` is the per-node direct influence
// (x, plus any activator boost); `stage1` lists the candidates for the first
// activation check, or all inactive nodes when `scan_all` is set (needed for
// explicit threshold vectors, where a zero threshold can fire with zero
// influence).  A node activates at stage i+1 iff it is inactive and
// min(f(S_i) + base, 1) >= tau.  Stops at the first stage with no activation;
// at most n productive stages can occur.  Returns the objective-weighted size
// of the final set; appends newly-activated lists per stage to `trace`.
template <class TauFn>
double run_core(const CascadeModel& model, std::span<const double> base,
                std::span<const NodeId> stage1, bool scan_all,
                std::span<const NodeId> initial_active,
                const std::vector<std::vector<NodeId>>* trig,
                TauFn&& tau_of, CascadeScratch& ws,
                std::vector<NodeId>* final_out,
                std::vector<std::vector<NodeId>>* trace) {
  const DirectedGraph& g = *model.graph;
  const NodeId n = g.node_count();
  const bool triggering = model.kind == CascadeModel::Kind::triggering;
  ws.ensure(n);
  const std::uint32_t run = ++ws.run_id;
  ws.frontier.clear();
  ws.next_frontier.clear();
  ws.candidates.clear();

  double total = 0.0;
  auto weight_of = [&](NodeId v) { return model.node_weight(v); };
  auto tau_at = [&](NodeId v) {
    if (ws.tau_st[v] != run) {
      ws.tau_st[v] = run;
      ws.tau[v] = tau_of(v);
    }
    return ws.tau[v];
  };
  auto influence_at = [&](NodeId v) {
    if (triggering) return base[v] + (ws.hit_st[v] == run ? 1.0 : 0.0);
    return ws.infl_st[v] == run ? ws.influence[v] : base[v];
  };
  auto activate = [&](NodeId v) {
    ws.active_st[v] = run;
    total += weight_of(v);
    ws.next_frontier.push_back(v);
    if (final_out) final_out->push_back(v);
  };

  // Stage 0: externally seeded nodes (integral semantics).
  for (NodeId v : initial_active) {
    if (ws.active_st[v] != run) activate(v);
  }
  if (trace && !ws.next_frontier.empty()) trace->push_back(ws.next_frontier);
  std::swap(ws.frontier, ws.next_frontier);
  ws.next_frontier.clear();

  // Stage 1 candidates: directly influenced nodes (or everything, when the
  // caller supplied explicit thresholds).
  if (scan_all) {
    for (NodeId v = 0; v < n; ++v)
      if (ws.active_st[v] != run) ws.candidates.push_back(v);
  } else {
    for (NodeId v : stage1)
      if (ws.active_st[v] != run) ws.candidates.push_back(v);
  }

  for (NodeId stage = 0; stage <= n; ++stage) {
    const std::uint32_t tok = ++ws.stage_token;
    // Influence from the previous stage's activations.
    for (NodeId u : ws.frontier) {
      auto nbrs = g.out_neighbors(u);
      auto wts = g.out_weights(u);
      for (std::size_t i = 0; i < nbrs.size(); ++i) {
        NodeId v = nbrs[i];
        if (ws.active_st[v] == run) continue;
        if (triggering) {
          if (ws.hit_st[v] == run) continue;
          if (!sorted_contains((*trig)[v], u)) continue;
          ws.hit_st[v] = run;
        } else {
          if (ws.infl_st[v] != run) {
            ws.infl_st[v] = run;
            ws.influence[v] = base[v];
          }
          ws.influence[v] += wts[i];
        }
        if (ws.cand_st[v] != tok) {
          ws.cand_st[v] = tok;
          ws.candidates.push_back(v);
        }
      }
    }
    ws.frontier.clear();

    std::size_t newly_begin = final_out ? final_out->size() : 0;
    for (NodeId v : ws.candidates) {
      if (ws.active_st[v] == run) continue;
      double val = std::min(influence_at(v), 1.0);
      if (val >= tau_at(v)) activate(v);
    }
    ws.candidates.clear();
    if (ws.next_frontier.empty()) break;
    if (trace) {
      if (final_out)
        trace->emplace_back(final_out->begin() + newly_begin, final_out->end());
      else
        trace->push_back(ws.next_frontier);
    }
    std::swap(ws.frontier, ws.next_frontier);
    ws.next_frontier.clear();
  }
  return total;
}

// Materialized triggering sets for one replicate.
inline const std::vector<std::vector<NodeId>>* prepare_triggering(
    const CascadeModel& model, std::uint64_t seed,
    std::vector<std::vector<NodeId>>& buffer) {
  if (model.kind != CascadeModel::Kind::triggering) return nullptr;
  const auto& sampler = model.triggering_sets;
  if (sampler.deterministic()) return &sampler.fixed_sets;
  const NodeId n = model.node_count();
  buffer.resize(n);
  for (NodeId v = 0; v < n; ++v) {
    buffer[v] = sampler.sample(v, rng::hash_combine(seed, v));
    std::sort(buffer[v].begin(), buffer[v].end());
  }
  return &buffer;
}

inline std::vector<double> base_influence(const CascadeModel& model,
                                          const InfluenceVector& x) {
  if (x.values.size() != model.node_count())
    throw std::invalid_argument("influence vector size mismatch");
  x.validate();
  std::vector<double> base = x.values;
  if (model.kind == CascadeModel::Kind::capped_linear_activators)
    for (NodeId v = 0; v < base.size(); ++v) base[v] += model.activator_boost[v];
  return base;
}

inline std::vector<NodeId> positive_support(std::span<const double> base) {
  std::vector<NodeId> s;
  for (NodeId v = 0; v < base.size(); ++v)
    if (base[v] > 0.0) s.push_back(v);
  return s;
}

}  // namespace detail

// One cascade under explicit thresholds, starting from direct influence `x`
// with no pre-activated nodes.
inline CascadeOutcome run_cascade(const CascadeModel& model, const InfluenceVector& x,
                                  const ThresholdVector& t, std::uint64_t trig_seed = 0) {
  if (t.values.size() != model.node_count())
    throw std::invalid_argument("threshold vector size mismatch");
  std::vector<double> base = detail::base_influence(model, x);
  std::vector<std::vector<NodeId>> trig_buf;
  const auto* trig = detail::prepare_triggering(model, trig_seed, trig_buf);
  detail::CascadeScratch ws;
  CascadeOutcome out;
  out.thresholds_used = t;
  std::vector<std::vector<NodeId>> newly;
  detail::run_core(model, base, {}, /*scan_all=*/true, {}, trig,
                   [&](NodeId v) { return t.values[v]; }, ws, &out.final_active, &newly);
  std::sort(out.final_active.begin(), out.final_active.end());
  std::vector<NodeId> cum;
  for (auto& stage : newly) {
    cum.insert(cum.end(), stage.begin(), stage.end());
    std::sort(cum.begin(), cum.end());
    out.stage_trace.push_back(cum);
  }
  return out;
}

// One cascade with integral semantics: `seed_set` is active at stage 0 and no
// direct influence is applied afterwards.
inline CascadeOutcome run_cascade_set(const CascadeModel& model,
                                      std::span<const NodeId> seed_set,
                                      const ThresholdVector& t,
                                      std::uint64_t trig_seed = 0) {
  if (t.values.size() != model.node_count())
    throw std::invalid_argument("threshold vector size mismatch");
  for (NodeId v : seed_set)
    if (v >= model.node_count()) throw std::invalid_argument("seed node out of range");
  std::vector<double> base(model.node_count(), 0.0);
  std::vector<std::vector<NodeId>> trig_buf;
  const auto* trig = detail::prepare_triggering(model, trig_seed, trig_buf);
  detail::CascadeScratch ws;
  CascadeOutcome out;
  out.thresholds_used = t;
  std::vector<std::vector<NodeId>> newly;
  detail::run_core(model, base, {}, /*scan_all=*/true, seed_set, trig,
                   [&](NodeId v) { return t.values[v]; }, ws, &out.final_active, &newly);
  std::sort(out.final_active.begin(), out.final_active.end());
  std::vector<NodeId> cum;
  for (auto& stage : newly) {
    cum.insert(cum.end(), stage.begin(), stage.end());
    std::sort(cum.begin(), cum.end());
    out.stage_trace.push_back(cum);
  }
  return out;
}

namespace detail {

// Shared driver for the two Monte-Carlo estimators.  Per-replicate spreads
// are written into a slot per replicate index and reduced in index order, so
// the result does not depend on the worker count.
inline SpreadEstimate monte_carlo(const CascadeModel& model, std::span<const double> base,
                                  std::span<const NodeId> stage1,
                                  std::span<const NodeId> initial,
                                  std::uint32_t replicates, std::uint64_t master_seed,
                                  unsigned workers) {
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  const bool fixed = model.fixed_thresholds.has_value();
  if (fixed && model.fixed_thresholds->values.size() != model.node_count())
    throw std::invalid_argument("fixed threshold size mismatch");
  const bool trig_random = model.kind == CascadeModel::Kind::triggering &&
                           !model.triggering_sets.deterministic();

  // Fixed thresholds and deterministic sets: one run decides everything.
  if (fixed && !trig_random) {
    CascadeScratch ws;
    std::vector<std::vector<NodeId>> trig_buf;
    const auto* trig = prepare_triggering(model, master_seed, trig_buf);
    const auto& tv = model.fixed_thresholds->values;
    double val = run_core(model, base, stage1, /*scan_all=*/true, initial, trig,
                          [&](NodeId v) { return tv[v]; }, ws, nullptr, nullptr);
    return {val, 0.0, replicates, master_seed};
  }

  std::vector<double> results(replicates);
  auto run_range = [&](std::uint32_t lo, std::uint32_t hi) {
    CascadeScratch ws;
    std::vector<std::vector<NodeId>> trig_buf;
    for (std::uint32_t r = lo; r < hi; ++r) {
      const auto* trig =
          prepare_triggering(model, rng::hash3(master_seed, r, 0x7194u), trig_buf);
      if (fixed) {
        const auto& tv = model.fixed_thresholds->values;
        results[r] = run_core(model, base, stage1, /*scan_all=*/true, initial, trig,
                              [&](NodeId v) { return tv[v]; }, ws, nullptr, nullptr);
      } else {
        results[r] = run_core(
            model, base, stage1, /*scan_all=*/false, initial, trig,
            [&](NodeId v) { return rng::threshold_draw(master_seed, r, v); }, ws,
            nullptr, nullptr);
      }
    }
  };

  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  unsigned nworkers = workers == 0 ? hw : workers;
  std::size_t per_rep_cost = model.node_count() + model.graph->arc_count();
  if (nworkers > 1 && static_cast<std::size_t>(replicates) * per_rep_cost > (1u << 18)) {
    std::vector<std::thread> pool;
    std::uint32_t chunk = (replicates + nworkers - 1) / nworkers;
    for (unsigned t = 0; t < nworkers; ++t) {
      std::uint32_t lo = t * chunk;
      std::uint32_t hi = std::min(replicates, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(run_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  } else {
    run_range(0, replicates);
  }

  double sum = 0.0;
  for (double v : results) sum += v;
  double mean = sum / replicates;
  double stderr_val = 0.0;
  if (replicates >= 2) {
    double ss = 0.0;
    for (double v : results) ss += (v - mean) * (v - mean);
    stderr_val = std::sqrt(ss / (replicates - 1)) / std::sqrt(double(replicates));
  }
  return {mean, stderr_val, replicates, master_seed};
}

}  // namespace detail

// Monte-Carlo estimate of sigma(x): thresholds are drawn i.i.d. Unif(0,1) per
// node per replicate from streams derived from (master_seed, replicate,
// node), so the estimate is reproducible and order-free.
inline SpreadEstimate estimate_spread(const CascadeModel& model, const InfluenceVector& x,
                                      std::uint32_t replicates, std::uint64_t master_seed,
                                      unsigned workers = 0) {
  std::vector<double> base = detail::base_influence(model, x);
  std::vector<NodeId> stage1 = detail::positive_support(base);
  return detail::monte_carlo(model, base, stage1, {}, replicates, master_seed, workers);
}

// Monte-Carlo estimate with integral semantics (seed set active at stage 0).
inline SpreadEstimate spread_of_set(const CascadeModel& model, std::span<const NodeId> s,
                                    std::uint32_t replicates, std::uint64_t master_seed,
                                    unsigned workers = 0) {
  for (NodeId v : s)
    if (v >= model.node_count()) throw std::invalid_argument("seed node out of range");
  std::vector<double> base(model.node_count(), 0.0);
  return detail::monte_carlo(model, base, {}, s, replicates, master_seed, workers);
}

// Exact sigma(x) for small instances.  The final set is a constant function
// of tau within each cell of the product partition induced by the per-node
// attainable influence levels, so the expectation is a finite sum of
// (cascade at the cell midpoint) * (cell volume).
inline double exact_spread_small(const CascadeModel& model, const InfluenceVector& x) {
  const DirectedGraph& g = *model.graph;
  const NodeId n = g.node_count();
  if (model.kind == CascadeModel::Kind::triggering &&
      !model.triggering_sets.deterministic())
    throw std::invalid_argument("exact spread needs deterministic triggering sets");

  // Fixed thresholds leave nothing random: one cascade decides sigma.
  if (model.fixed_thresholds.has_value()) {
    if (model.fixed_thresholds->values.size() != n)
      throw std::invalid_argument("fixed threshold size mismatch");
    std::vector<double> base = detail::base_influence(model, x);
    const auto* trig = model.kind == CascadeModel::Kind::triggering
                           ? &model.triggering_sets.fixed_sets
                           : nullptr;
    detail::CascadeScratch ws;
    const auto& tv = model.fixed_thresholds->values;
    return detail::run_core(model, base, {}, /*scan_all=*/true, {}, trig,
                            [&](NodeId v) { return tv[v]; }, ws, nullptr, nullptr);
  }

  if (n > 10) throw SizeError("exact spread supports at most 10 nodes");

  std::vector<double> base = detail::base_influence(model, x);

  // Attainable influence levels per node (clamped at 1).
  std::vector<std::vector<double>> levels(n);
  for (NodeId v = 0; v < n; ++v) {
    std::vector<double>& ls = levels[v];
    if (model.kind == CascadeModel::Kind::triggering) {
      ls = {std::min(base[v], 1.0), std::min(base[v] + 1.0, 1.0)};
    } else {
      ls = {std::min(base[v], 1.0)};
      for (double w : g.in_weights(v)) {
        std::size_t sz = ls.size();
        for (std::size_t i = 0; i < sz; ++i) ls.push_back(std::min(ls[i] + w, 1.0));
        std::sort(ls.begin(), ls.end());
        ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
        if (ls.size() > 64) throw SizeError("too many influence breakpoints");
      }
    }
    std::sort(ls.begin(), ls.end());
    ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
  }

  // Threshold cells per node: consecutive points of {0} U levels U {1}.
  std::vector<std::vector<std::pair<double, double>>> cells(n);  // (length, midpoint)
  for (NodeId v = 0; v < n; ++v) {
    std::vector<double> pts = levels[v];
    pts.insert(pts.begin(), 0.0);
    pts.push_back(1.0);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      double len = pts[i + 1] - pts[i];
      if (len > 0.0) cells[v].push_back({len, 0.5 * (pts[i] + pts[i + 1])});
    }
    if (cells[v].empty()) cells[v].push_back({1.0, 0.5});  // degenerate: no levels in (0,1)
  }

  detail::CascadeScratch ws;
  const auto* trig = model.kind == CascadeModel::Kind::triggering
                         ? &model.triggering_sets.fixed_sets
                         : nullptr;
  std::vector<std::size_t> idx(n, 0);
  std::vector<double> tau(n);
  for (NodeId v = 0; v < n; ++v) tau[v] = cells[v][0].second;

  double acc = 0.0;
  while (true) {
    double volume = 1.0;
    for (NodeId v = 0; v < n; ++v) volume *= cells[v][idx[v]].first;
    double spread = detail::run_core(model, base, {}, /*scan_all=*/true, {}, trig,
                                     [&](NodeId v) { return tau[v]; }, ws, nullptr,
                                     nullptr);
    acc += spread * volume;

    NodeId pos = 0;
    while (pos < n) {
      if (++idx[pos] < cells[pos].size()) {
        tau[pos] = cells[pos][idx[pos]].second;
        break;
      }
      idx[pos] = 0;
      tau[pos] = cells[pos][0].second;
      ++pos;
    }
    if (pos == n) break;
  }
  return acc;
}

// Exact spread of a seed set: seeding S coincides with applying x = 1_S, one
// stage apart, so the final-set distribution (and sigma) is identical.
inline double exact_spread_of_set_small(const CascadeModel& model,
                                        std::span<const NodeId> s) {
  return exact_spread_small(model, InfluenceVector::indicator(model.node_count(), s));
}

}  // namespace fracspread
