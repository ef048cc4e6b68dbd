#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fracspread/errors.hpp"
#include "fracspread/rng.hpp"

namespace fracspread {

using NodeId = std::uint32_t;

struct Arc {
  NodeId source = 0;
  NodeId target = 0;
  double weight = 1.0;

  friend bool operator==(const Arc&, const Arc&) = default;
};

// Weighted digraph over dense node ids 0..n-1.  Immutable after construction;
// adjacency is kept in both orientations.  Undirected inputs are stored as two
// directed arcs.  Original (file) ids are retained in a side table so output
// can be written back in the input's labeling.
class DirectedGraph {
 public:
  DirectedGraph() = default;

  DirectedGraph(NodeId node_count, std::vector<Arc> arcs, bool directed,
                std::vector<std::uint64_t> original_ids = {},
                bool explicit_weights = true)
      : n_(node_count), directed_(directed), explicit_weights_(explicit_weights),
        arcs_(std::move(arcs)), original_ids_(std::move(original_ids)) {
    if (original_ids_.empty()) {
      original_ids_.resize(n_);
      for (NodeId v = 0; v < n_; ++v) original_ids_[v] = v;
    }
    if (original_ids_.size() != n_)
      throw std::invalid_argument("original id table size mismatch");
    for (const Arc& a : arcs_) {
      if (a.source >= n_ || a.target >= n_)
        throw std::invalid_argument("arc endpoint out of range");
      if (a.source == a.target)
        throw std::invalid_argument("self-loops are not representable");
      if (!(a.weight >= 0.0 && a.weight <= 1.0))
        throw std::invalid_argument("arc weight outside [0,1]");
    }
    build_adjacency();
  }

  NodeId node_count() const noexcept { return n_; }
  std::size_t arc_count() const noexcept { return arcs_.size(); }
  bool directed() const noexcept { return directed_; }
  // False when the source file omitted weight columns (loader metadata, not
  // part of graph identity).
  bool weights_explicit() const noexcept { return explicit_weights_; }

  const std::vector<Arc>& arcs() const noexcept { return arcs_; }
  const std::vector<std::uint64_t>& original_ids() const noexcept { return original_ids_; }

  std::span<const NodeId> out_neighbors(NodeId v) const {
    return {out_nodes_.data() + out_off_[v], out_off_[v + 1] - out_off_[v]};
  }
  std::span<const double> out_weights(NodeId v) const {
    return {out_w_.data() + out_off_[v], out_off_[v + 1] - out_off_[v]};
  }
  std::span<const NodeId> in_neighbors(NodeId v) const {
    return {in_nodes_.data() + in_off_[v], in_off_[v + 1] - in_off_[v]};
  }
  std::span<const double> in_weights(NodeId v) const {
    return {in_w_.data() + in_off_[v], in_off_[v + 1] - in_off_[v]};
  }

  std::size_t out_degree(NodeId v) const { return out_off_[v + 1] - out_off_[v]; }
  std::size_t in_degree(NodeId v) const { return in_off_[v + 1] - in_off_[v]; }

  double in_weight_sum(NodeId v) const {
    double s = 0.0;
    for (double w : in_weights(v)) s += w;
    return s;
  }
  double out_weight_sum(NodeId v) const {
    double s = 0.0;
    for (double w : out_weights(v)) s += w;
    return s;
  }

  // Same topology, new arc weights (parallel to arcs()).
  DirectedGraph with_weights(std::span<const double> weights) const {
    if (weights.size() != arcs_.size())
      throw std::invalid_argument("weight list size mismatch");
    std::vector<Arc> arcs = arcs_;
    for (std::size_t i = 0; i < arcs.size(); ++i) arcs[i].weight = weights[i];
    return DirectedGraph(n_, std::move(arcs), directed_, original_ids_);
  }

  friend bool operator==(const DirectedGraph& a, const DirectedGraph& b) {
    return a.n_ == b.n_ && a.directed_ == b.directed_ && a.arcs_ == b.arcs_ &&
           a.original_ids_ == b.original_ids_;
  }

 private:
  void build_adjacency() {
    out_off_.assign(n_ + 1, 0);
    in_off_.assign(n_ + 1, 0);
    for (const Arc& a : arcs_) {
      ++out_off_[a.source + 1];
      ++in_off_[a.target + 1];
    }
    for (NodeId v = 0; v < n_; ++v) {
      out_off_[v + 1] += out_off_[v];
      in_off_[v + 1] += in_off_[v];
    }
    out_nodes_.resize(arcs_.size());
    out_w_.resize(arcs_.size());
    in_nodes_.resize(arcs_.size());
    in_w_.resize(arcs_.size());
    std::vector<std::size_t> onext(out_off_.begin(), out_off_.end() - 1);
    std::vector<std::size_t> inext(in_off_.begin(), in_off_.end() - 1);
    for (const Arc& a : arcs_) {
      std::size_t o = onext[a.source]++;
      out_nodes_[o] = a.target;
      out_w_[o] = a.weight;
      std::size_t i = inext[a.target]++;
      in_nodes_[i] = a.source;
      in_w_[i] = a.weight;
    }
  }

  NodeId n_ = 0;
  bool directed_ = true;
  bool explicit_weights_ = true;
  std::vector<Arc> arcs_;                  // original insertion order
  std::vector<std::uint64_t> original_ids_;
  std::vector<std::size_t> out_off_, in_off_;
  std::vector<NodeId> out_nodes_, in_nodes_;
  std::vector<double> out_w_, in_w_;
};

enum class WeightModel {
  from_file,         // keep weights as loaded
  weighted_cascade,  // w(u->v) = 1 / indegree(v)
  trivalency,        // i.i.d. uniform over {0.001, 0.01, 0.1}
};

inline std::optional<WeightModel> parse_weight_model(std::string_view s) {
  if (s == "file") return WeightModel::from_file;
  if (s == "wc") return WeightModel::weighted_cascade;
  if (s == "trivalency") return WeightModel::trivalency;
  return std::nullopt;
}

namespace detail {

inline bool parse_u64(std::string_view tok, std::uint64_t& out) {
  const char* b = tok.data();
  const char* e = b + tok.size();
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e;
}

inline bool parse_double(std::string_view tok, double& out) {
  const char* b = tok.data();
  const char* e = b + tok.size();
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e;
}

inline void split_ws(std::string_view line, std::vector<std::string_view>& toks) {
  toks.clear();
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) toks.push_back(line.substr(i, j - i));
    i = j;
  }
}

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

// Reads whitespace-separated "u v [w]" lines; '#' starts a comment, blank
// lines and CRLF endings are accepted.  Nodes are relabeled to dense ids in
// first-appearance order, duplicate edges keep the last weight, self-loops
// are dropped.  Missing weights default to 1.
inline DirectedGraph load_edge_list(std::istream& in, bool directed) {
  std::unordered_map<std::uint64_t, NodeId> dense;
  std::vector<std::uint64_t> original;
  std::vector<Arc> arcs;
  std::unordered_map<std::uint64_t, std::size_t> arc_index;  // packed key -> slot

  auto intern = [&](std::uint64_t id) {
    auto [it, fresh] = dense.try_emplace(id, static_cast<NodeId>(original.size()));
    if (fresh) original.push_back(id);
    return it->second;
  };

  std::string line;
  std::vector<std::string_view> toks;
  std::size_t lineno = 0;
  bool all_weighted = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view sv = line;
    if (auto pos = sv.find('#'); pos != std::string_view::npos) sv = sv.substr(0, pos);
    detail::split_ws(sv, toks);
    if (toks.empty()) continue;
    if (toks.size() != 2 && toks.size() != 3)
      throw ParseError("expected 'u v [w]'", lineno);
    std::uint64_t uraw, vraw;
    if (!detail::parse_u64(toks[0], uraw) || !detail::parse_u64(toks[1], vraw))
      throw ParseError("node ids must be non-negative integers", lineno);
    double w = 1.0;
    if (toks.size() == 3) {
      if (!detail::parse_double(toks[2], w))
        throw ParseError("unparsable edge weight", lineno);
      if (!(w >= 0.0 && w <= 1.0))
        throw DataError("line " + std::to_string(lineno) + ": edge weight outside [0,1]");
    } else {
      all_weighted = false;
    }
    if (uraw == vraw) continue;  // self-loop
    NodeId u = intern(uraw);
    NodeId v = intern(vraw);
    NodeId a = u, b = v;
    if (!directed && a > b) std::swap(a, b);
    std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | b;
    auto it = arc_index.find(key);
    if (it != arc_index.end()) {
      // duplicate edge: keep the last weight, first position
      arcs[it->second].weight = w;
      if (!directed) arcs[it->second + 1].weight = w;
      continue;
    }
    arc_index.emplace(key, arcs.size());
    arcs.push_back(Arc{u, v, w});
    if (!directed) arcs.push_back(Arc{v, u, w});
  }
  const NodeId n = static_cast<NodeId>(original.size());
  return DirectedGraph(n, std::move(arcs), directed, std::move(original), all_weighted);
}

inline DirectedGraph load_edge_list(const std::string& path, bool directed) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open edge list: " + path);
  return load_edge_list(f, directed);
}

// Mirrors the input format using the original node labels; weights are
// printed at full precision so a reload is bit-exact.  Isolated nodes have no
// arcs and therefore no representation in this format.
inline void save_edge_list(const DirectedGraph& g, std::ostream& out) {
  const auto& arcs = g.arcs();
  const auto& ids = g.original_ids();
  std::size_t step = g.directed() ? 1 : 2;  // undirected arcs are stored in mirrored pairs
  for (std::size_t i = 0; i < arcs.size(); i += step) {
    out << ids[arcs[i].source] << ' ' << ids[arcs[i].target] << ' '
        << detail::format_double(arcs[i].weight) << '\n';
  }
}

inline void save_edge_list(const DirectedGraph& g, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write edge list: " + path);
  save_edge_list(g, f);
}

// Reassigns arc weights according to `model`.  The weighted cascade sets
// every arc into v to 1/indegree(v); trivalency draws each arc weight
// independently from {0.001, 0.01, 0.1} using `seed`.
inline DirectedGraph assign_weights(const DirectedGraph& g, WeightModel model,
                                    std::uint64_t seed = 0) {
  switch (model) {
    case WeightModel::from_file:
      if (!g.weights_explicit())
        throw DataError("weight model 'file' requires explicit edge weights");
      return g;
    case WeightModel::weighted_cascade: {
      std::vector<double> w(g.arc_count());
      const auto& arcs = g.arcs();
      for (std::size_t i = 0; i < arcs.size(); ++i)
        w[i] = 1.0 / static_cast<double>(g.in_degree(arcs[i].target));
      return g.with_weights(w);
    }
    case WeightModel::trivalency: {
      static constexpr double kLevels[3] = {0.001, 0.01, 0.1};
      std::vector<double> w(g.arc_count());
      for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = kLevels[rng::hash_combine(seed, i) % 3];
      return g.with_weights(w);
    }
  }
  throw std::invalid_argument("unknown weight model");
}

struct TopologicalOrder {
  std::vector<NodeId> order;  // full ordering when the graph is acyclic
  std::vector<NodeId> cycle;  // otherwise: nodes along one directed cycle

  bool is_dag() const noexcept { return cycle.empty(); }
};

// Kahn's algorithm; a cyclic graph is a normal outcome reported with a
// concrete cycle witness, not a failure.
inline TopologicalOrder topological_order(const DirectedGraph& g) {
  NodeId n = g.node_count();
  std::vector<std::size_t> indeg(n);
  for (NodeId v = 0; v < n; ++v) indeg[v] = g.in_degree(v);
  TopologicalOrder result;
  result.order.reserve(n);
  std::vector<NodeId> stack;
  for (NodeId v = 0; v < n; ++v)
    if (indeg[v] == 0) stack.push_back(v);
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    result.order.push_back(v);
    for (NodeId w : g.out_neighbors(v))
      if (--indeg[w] == 0) stack.push_back(w);
  }
  if (result.order.size() == n) return result;

  // Some nodes remain on cycles: walk within the residual subgraph until a
  // node repeats, then cut the prefix.
  std::vector<int> mark(n, 0);
  NodeId start = 0;
  while (indeg[start] == 0) ++start;
  std::vector<NodeId> walk;
  NodeId cur = start;
  while (mark[cur] == 0) {
    mark[cur] = 1 + static_cast<int>(walk.size());
    walk.push_back(cur);
    for (NodeId w : g.out_neighbors(cur)) {
      if (indeg[w] > 0) {
        cur = w;
        break;
      }
    }
  }
  result.order.clear();
  result.cycle.assign(walk.begin() + (mark[cur] - 1), walk.end());
  return result;
}

// First node whose incoming weights sum past 1, if any.  Checked on demand:
// trivalency weights may legitimately violate this.
inline std::optional<NodeId> linear_contract_violation(const DirectedGraph& g,
                                                       double tol = 1e-9) {
  for (NodeId v = 0; v < g.node_count(); ++v)
    if (g.in_weight_sum(v) > 1.0 + tol) return v;
  return std::nullopt;
}

// --- "id value" sidecar files (thresholds, influence vectors) ---

inline std::vector<std::pair<std::uint64_t, double>> load_value_lines(std::istream& in) {
  std::vector<std::pair<std::uint64_t, double>> out;
  std::string line;
  std::vector<std::string_view> toks;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view sv = line;
    if (auto pos = sv.find('#'); pos != std::string_view::npos) sv = sv.substr(0, pos);
    detail::split_ws(sv, toks);
    if (toks.empty()) continue;
    if (toks.size() != 2) throw ParseError("expected 'node value'", lineno);
    std::uint64_t id;
    double val;
    if (!detail::parse_u64(toks[0], id) || !detail::parse_double(toks[1], val))
      throw ParseError("unparsable 'node value' pair", lineno);
    out.emplace_back(id, val);
  }
  return out;
}

// Densifies "id value" lines against a graph's original labels; nodes absent
// from the file take `fill`.
inline std::vector<double> load_node_values(std::istream& in, const DirectedGraph& g,
                                            double fill = 0.0) {
  std::unordered_map<std::uint64_t, NodeId> lookup;
  lookup.reserve(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) lookup.emplace(g.original_ids()[v], v);
  std::vector<double> vals(g.node_count(), fill);
  for (auto [id, val] : load_value_lines(in)) {
    auto it = lookup.find(id);
    if (it == lookup.end())
      throw DataError("value file names unknown node " + std::to_string(id));
    vals[it->second] = val;
  }
  return vals;
}

inline std::vector<double> load_node_values(const std::string& path, const DirectedGraph& g,
                                            double fill = 0.0) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open value file: " + path);
  return load_node_values(f, g, fill);
}

inline void save_node_values(std::span<const double> vals, const DirectedGraph& g,
                             std::ostream& out) {
  for (NodeId v = 0; v < g.node_count(); ++v)
    out << g.original_ids()[v] << ' ' << detail::format_double(vals[v]) << '\n';
}

inline void save_node_values(std::span<const double> vals, const DirectedGraph& g,
                             const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write value file: " + path);
  save_node_values(vals, g, f);
}

}  // namespace fracspread
