#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fracspread/cascade.hpp"
#include "fracspread/errors.hpp"
#include "fracspread/graph.hpp"

namespace fracspread {

// Fractional instance rewritten as an integral one: each original node v gets
// 1/delta activator nodes, each feeding v a delta-weight arc.  Activators
// carry objective weight zero and have no incoming arcs, so the unmodified
// cascade engine runs the rewritten instance directly.
struct ReducedInstance {
  std::shared_ptr<const DirectedGraph> graph;       // originals 0..n-1, then activators
  std::vector<std::vector<NodeId>> activators;      // per original node, 1/delta ids
  double delta = 1.0;
  NodeId steps = 1;                                 // 1/delta
  NodeId original_count = 0;
  std::vector<double> objective_weights;            // 1 on originals, 0 on activators

  CascadeModel model() const {
    CascadeModel m = CascadeModel::linear(graph);
    m.objective_weights = objective_weights;
    return m;
  }

  // Grid allocation -> seed set: the first x_v/delta activators of each node.
  std::vector<NodeId> map_allocation(const InfluenceVector& x) const {
    if (x.values.size() != original_count)
      throw std::invalid_argument("allocation size mismatch");
    std::vector<NodeId> seeds;
    for (NodeId v = 0; v < original_count; ++v) {
      double s = x.values[v] * steps;
      long si = std::lround(s);
      if (std::abs(s - double(si)) > 1e-6 || si < 0 || si > long(steps))
        throw std::domain_error("allocation entry is not a grid multiple of delta");
      for (long j = 0; j < si; ++j) seeds.push_back(activators[v][j]);
    }
    return seeds;
  }
};

inline ReducedInstance reduce_fractional_to_integral(const DirectedGraph& g, double delta) {
  long steps = std::lround(1.0 / delta);
  if (!(delta > 0.0) || steps < 1 || std::abs(steps * delta - 1.0) > 1e-9)
    throw std::domain_error("delta must be 1/N for a positive integer N");
  if (auto bad = linear_contract_violation(g))
    throw std::invalid_argument("incoming weights of node " + std::to_string(*bad) +
                                " exceed 1");
  const NodeId n = g.node_count();
  ReducedInstance inst;
  inst.delta = delta;
  inst.steps = static_cast<NodeId>(steps);
  inst.original_count = n;
  std::vector<Arc> arcs = g.arcs();
  std::vector<std::uint64_t> labels = g.original_ids();
  std::uint64_t next_label = 0;
  for (std::uint64_t id : labels) next_label = std::max(next_label, id + 1);
  inst.activators.resize(n);
  NodeId next = n;
  for (NodeId v = 0; v < n; ++v) {
    for (long j = 0; j < steps; ++j) {
      inst.activators[v].push_back(next);
      arcs.push_back(Arc{next, v, delta});
      labels.push_back(next_label++);
      ++next;
    }
  }
  inst.graph =
      std::make_shared<const DirectedGraph>(next, std::move(arcs), true, std::move(labels));
  inst.objective_weights.assign(next, 0.0);
  for (NodeId v = 0; v < n; ++v) inst.objective_weights[v] = 1.0;
  return inst;
}

// Directed path where fixed thresholds sit just above the edge weight, so
// nothing activates without direct influence; the returned witness activates
// every node with total budget exactly 1 while any single integral seed
// reaches only itself.
struct PathGapInstance {
  DirectedGraph graph;
  ThresholdVector thresholds;
  InfluenceVector witness;
};

inline PathGapInstance make_path_gap(NodeId n) {
  if (n < 2) throw std::invalid_argument("path gap needs n >= 2");
  double w = 1.0 / (n + 1.0);
  std::vector<Arc> arcs;
  for (NodeId v = 0; v + 1 < n; ++v) arcs.push_back(Arc{v, v + 1, w});
  PathGapInstance inst{DirectedGraph(n, std::move(arcs), true),
                       ThresholdVector::constant(n, 2.0 / (n + 1.0)),
                       InfluenceVector::zeros(n)};
  inst.witness.values[0] = 2.0 / (n + 1.0);
  for (NodeId v = 1; v < n; ++v) inst.witness.values[v] = 1.0 / (n + 1.0);
  return inst;
}

// One-directional cycle with edge weight 1 - K/n; thresholds are left to the
// uniform draw.
inline DirectedGraph make_cycle_gap(NodeId n, double budget) {
  if (n < 1 || !(budget > 0.0) || budget > double(n))
    throw std::invalid_argument("cycle gap needs 0 < K <= n");
  double w = 1.0 - budget / double(n);
  std::vector<Arc> arcs;
  for (NodeId v = 0; v < n; ++v) arcs.push_back(Arc{v, (v + 1) % n, w});
  return DirectedGraph(n, std::move(arcs), true);
}

// Layered decision instance with fixed thresholds and known ground truth.
// Only the first layer1_count nodes are meant to be seeded; decode maps a
// layer-1 seed choice back to the source problem's objects.
struct HardnessInstance {
  enum class ModelKind { linear, triggering };

  std::shared_ptr<const DirectedGraph> graph;
  ThresholdVector thresholds;
  double budget = 0.0;
  double target = 0.0;
  NodeId layer1_count = 0;
  ModelKind model_kind = ModelKind::linear;
  std::vector<std::vector<NodeId>> triggering_sets;  // triggering instances only
  std::vector<NodeId> certificate_map;               // layer-1 node -> source index

  CascadeModel model() const {
    CascadeModel m;
    if (model_kind == ModelKind::linear) {
      m = CascadeModel::linear(graph);
    } else {
      TriggeringSampler s;
      s.fixed_sets = triggering_sets;
      m = CascadeModel::triggering(graph, std::move(s));
    }
    m.fixed_thresholds = thresholds;
    return m;
  }

  std::vector<NodeId> decode_certificate(std::span<const NodeId> seeds) const {
    std::vector<NodeId> out;
    for (NodeId v : seeds)
      if (v < layer1_count) out.push_back(certificate_map[v]);
    return out;
  }

  // Deterministic spread of a seed set under the instance's fixed thresholds.
  double spread_of(std::span<const NodeId> seeds) const {
    return spread_of_set(model(), seeds, 1, 0).mean;
  }
};

// Two-layer DAG built from an undirected graph: adjacent pairs share one
// child, non-adjacent pairs get one private child each; every weight and
// threshold is 1/2.  A layer-1 set S then reaches exactly
// n*|S| - #edges-inside-S nodes, so spread >= k*n iff S is independent.
inline HardnessInstance reduce_independent_set(
    NodeId n, std::span<const std::pair<NodeId, NodeId>> undirected_edges, NodeId k) {
  if (k == 0 || k > n) throw std::invalid_argument("budget must satisfy 0 < k <= n");
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (auto [u, v] : undirected_edges) {
    if (u >= n || v >= n || u == v)
      throw std::invalid_argument("bad undirected edge");
    adj[u][v] = adj[v][u] = true;
  }
  std::vector<Arc> arcs;
  NodeId next = n;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (adj[u][v]) {
        arcs.push_back(Arc{u, next, 0.5});
        arcs.push_back(Arc{v, next, 0.5});
        ++next;
      } else {
        arcs.push_back(Arc{u, next, 0.5});
        ++next;
        arcs.push_back(Arc{v, next, 0.5});
        ++next;
      }
    }
  }
  HardnessInstance inst;
  inst.graph = std::make_shared<const DirectedGraph>(next, std::move(arcs), true);
  inst.thresholds = ThresholdVector::constant(next, 0.5);
  inst.budget = k;
  inst.target = double(k) * double(n);
  inst.layer1_count = n;
  inst.model_kind = HardnessInstance::ModelKind::linear;
  inst.certificate_map.resize(n);
  for (NodeId v = 0; v < n; ++v) inst.certificate_map[v] = v;
  return inst;
}

// Sink count N = ceil((2 n^2)^(1/delta)) used by the amplified construction;
// fails loudly instead of overflowing.
inline std::uint64_t amplification_count(NodeId n, double delta_exponent) {
  if (!(delta_exponent > 0.0)) throw std::invalid_argument("exponent must be positive");
  double val = std::pow(2.0 * double(n) * double(n), 1.0 / delta_exponent);
  if (!std::isfinite(val) || val > 9.0e18)
    throw SizeError("amplification count overflows; pass an explicit sink count at desk scale");
  return static_cast<std::uint64_t>(std::ceil(val));
}

// Appends `sink_count` identical sinks, each fed by every embedded node with
// weight 1/n; a sink fires exactly when at least `target` embedded nodes are
// active.  Instances meeting the target gain all sinks (spread >= target +
// N); instances below it leave every sink short.  The threshold sits at the
// midpoint (target - 1/2)/n: the intended comparison is between integers, and
// the midpoint keeps accumulated 1/n summands from tipping it by an ulp.
inline HardnessInstance amplify_instance(const HardnessInstance& inst, double target,
                                         std::uint64_t sink_count) {
  if (inst.model_kind != HardnessInstance::ModelKind::linear)
    throw std::invalid_argument("amplification applies to linear instances");
  const NodeId n = inst.graph->node_count();
  if (!(inst.budget > 0.0) || !(inst.budget < target) || !(target <= double(n)))
    throw std::invalid_argument("amplification needs 0 < k < T <= n");
  if (sink_count == 0 || sink_count > 1u << 24)
    throw SizeError("sink count out of materializable range");
  std::vector<Arc> arcs = inst.graph->arcs();
  std::vector<double> taus = inst.thresholds.values;
  double w = 1.0 / double(n);
  double sink_tau = (target - 0.5) / double(n);
  std::vector<std::uint64_t> labels = inst.graph->original_ids();
  std::uint64_t next_label = 0;
  for (std::uint64_t id : labels) next_label = std::max(next_label, id + 1);
  for (std::uint64_t s = 0; s < sink_count; ++s) {
    NodeId sink = n + static_cast<NodeId>(s);
    for (NodeId u = 0; u < n; ++u) arcs.push_back(Arc{u, sink, w});
    taus.push_back(sink_tau);
    labels.push_back(next_label++);
  }
  HardnessInstance out;
  out.graph = std::make_shared<const DirectedGraph>(
      n + static_cast<NodeId>(sink_count), std::move(arcs), true, std::move(labels));
  out.thresholds = ThresholdVector::fixed_at(std::move(taus));
  out.budget = inst.budget;
  out.target = target + double(sink_count);
  out.layer1_count = inst.layer1_count;
  out.model_kind = HardnessInstance::ModelKind::linear;
  out.certificate_map = inst.certificate_map;
  return out;
}

// Two-layer triggering instance from a set system: layer 1 holds one node per
// set (empty triggering set), layer 2 holds `copies` nodes per element, each
// triggered by the sets containing it.  Seeding W therefore reaches
// |W| + copies * |union of chosen sets| nodes.  With `or_tree`, fan-in is
// routed through a binary tree of OR gates so every triggering set has size
// at most 2; the gates are real nodes and count toward spread.
inline HardnessInstance reduce_max_coverage(
    const std::vector<std::vector<NodeId>>& sets, NodeId k, NodeId copies,
    bool or_tree = false) {
  const NodeId m = static_cast<NodeId>(sets.size());
  if (k > m) throw std::invalid_argument("budget exceeds number of sets");
  if (copies < 1) throw std::invalid_argument("need at least one copy per element");
  NodeId n_elems = 0;
  for (const auto& s : sets)
    for (NodeId e : s) n_elems = std::max(n_elems, e + 1);

  std::vector<std::vector<NodeId>> containers(n_elems);
  for (NodeId j = 0; j < m; ++j)
    for (NodeId e : sets[j]) containers[e].push_back(j);
  for (auto& c : containers) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
  }

  std::vector<Arc> arcs;
  std::vector<std::vector<NodeId>> trig(m);  // layer-1 sets are empty
  NodeId next = m;
  auto add_node = [&](std::vector<NodeId> inputs) {
    NodeId id = next++;
    for (NodeId in : inputs) arcs.push_back(Arc{in, id, 1.0});
    trig.push_back(std::move(inputs));
    return id;
  };

  // Per element: a feed node whose activation means "element covered".
  std::vector<NodeId> feed(n_elems);
  std::vector<bool> feed_is_gate(n_elems, false);
  for (NodeId e = 0; e < n_elems; ++e) {
    const auto& cont = containers[e];
    if (cont.empty()) {
      feed[e] = m;  // sentinel, unused
      continue;
    }
    if (!or_tree || cont.size() == 1) {
      feed[e] = 0;  // copies wired straight to the containers
    } else {
      std::vector<NodeId> level(cont.begin(), cont.end());
      while (level.size() > 1) {
        std::vector<NodeId> up;
        for (std::size_t i = 0; i + 1 < level.size(); i += 2)
          up.push_back(add_node({level[i], level[i + 1]}));
        if (level.size() % 2 == 1) up.push_back(level.back());
        level.swap(up);
      }
      feed[e] = level[0];
      feed_is_gate[e] = true;
    }
  }

  for (NodeId e = 0; e < n_elems; ++e) {
    for (NodeId c = 0; c < copies; ++c) {
      if (containers[e].empty()) {
        add_node({});
      } else if (feed_is_gate[e]) {
        add_node({feed[e]});
      } else if (!or_tree || containers[e].size() == 1) {
        add_node(std::vector<NodeId>(containers[e]));
      }
    }
  }

  HardnessInstance inst;
  inst.graph = std::make_shared<const DirectedGraph>(next, std::move(arcs), true);
  inst.thresholds = ThresholdVector::constant(next, 1.0);
  inst.budget = k;
  inst.target = double(k) + double(copies) * double(n_elems);  // full-coverage target
  inst.layer1_count = m;
  inst.model_kind = HardnessInstance::ModelKind::triggering;
  inst.triggering_sets = std::move(trig);
  inst.certificate_map.resize(m);
  for (NodeId j = 0; j < m; ++j) inst.certificate_map[j] = j;
  return inst;
}

}  // namespace fracspread
