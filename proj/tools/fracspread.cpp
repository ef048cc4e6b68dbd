// Command-line front end: `run` sweeps algorithms over budgets and writes a
// CSV, `gen` materializes the benchmark instance families, `estimate` scores
// one allocation, `dp` prints exact single-node spreads on DAGs.

#include <cstdint>
#include <iostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>

#include "fracspread/fracspread.hpp"

namespace fs = fracspread;

namespace {

fs::DirectedGraph load_graph(const std::string& path, bool undirected,
                             const std::string& weights, std::uint64_t seed) {
  auto wm = fs::parse_weight_model(weights);
  if (!wm) throw fs::ConfigError("unknown weight model: " + weights);
  return fs::assign_weights(fs::load_edge_list(path, !undirected), *wm, seed);
}

std::vector<fs::NodeId> map_original_ids(const fs::DirectedGraph& g,
                                         const std::vector<std::uint64_t>& ids) {
  std::unordered_map<std::uint64_t, fs::NodeId> lookup;
  for (fs::NodeId v = 0; v < g.node_count(); ++v) lookup.emplace(g.original_ids()[v], v);
  std::vector<fs::NodeId> out;
  for (std::uint64_t id : ids) {
    auto it = lookup.find(id);
    if (it == lookup.end())
      throw fs::DataError("node " + std::to_string(id) + " not in graph");
    out.push_back(it->second);
  }
  return out;
}

void write_instance(const fs::DirectedGraph& g, const std::vector<double>* thresholds,
                    const std::string& base) {
  fs::save_edge_list(g, base + ".edges");
  std::cout << "wrote " << base << ".edges (" << g.node_count() << " nodes, "
            << g.arc_count() << " arcs)\n";
  if (thresholds) {
    fs::save_node_values(*thresholds, g, base + ".thresholds");
    std::cout << "wrote " << base << ".thresholds\n";
  }
}

struct RunFlags {
  std::string config, graph, weights = "wc", thresholds, dataset, out;
  bool undirected = false;
  bool no_timing = false;
  std::vector<std::string> algos;
  std::vector<double> budgets;
  std::uint32_t sims = 10000;
  std::uint64_t seed = 1;
  std::string delta = "1/10";
  unsigned workers = 0;
};

int cmd_run(const RunFlags& f, const CLI::App& sub) {
  fs::ExperimentConfig cfg;
  if (!f.config.empty()) cfg = fs::load_experiment_config(f.config);
  auto given = [&](const std::string& flag) { return sub.count(flag) > 0; };
  if (given("--graph")) cfg.graph_path = f.graph;
  if (given("--undirected")) cfg.undirected = f.undirected;
  if (given("--weights")) {
    auto wm = fs::parse_weight_model(f.weights);
    if (!wm) throw fs::ConfigError("unknown weight model: " + f.weights);
    cfg.weight_model = *wm;
  }
  if (given("--thresholds")) cfg.thresholds_path = f.thresholds;
  if (given("--dataset")) cfg.dataset = f.dataset;
  if (given("--algos")) cfg.algorithms = f.algos;
  if (given("--budgets")) cfg.budgets = f.budgets;
  if (given("--sims")) cfg.replicates = f.sims;
  if (given("--seed")) cfg.master_seed = f.seed;
  if (given("--delta")) cfg.delta = fs::parse_fraction(f.delta);
  if (given("--out")) cfg.out_path = f.out;
  if (given("--workers")) cfg.workers = f.workers;
  if (f.no_timing) cfg.measure_time = false;
  if (cfg.out_path.empty()) throw fs::ConfigError("no output path given");

  std::vector<fs::ResultRow> rows = fs::run_experiment(cfg);
  fs::emit_csv(rows, cfg.out_path);
  std::cout << "wrote " << cfg.out_path << " (" << rows.size() << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fractional influence maximization toolkit"};
  app.require_subcommand(1);

  // --- run ---
  RunFlags rf;
  CLI::App* run = app.add_subcommand("run", "sweep algorithms over budgets, emit CSV");
  run->add_option("--config", rf.config, "key = value config file");
  run->add_option("--graph", rf.graph, "edge list file");
  run->add_flag("--undirected", rf.undirected, "treat input edges as undirected");
  run->add_option("--weights", rf.weights, "wc | trivalency | file");
  run->add_option("--thresholds", rf.thresholds, "fixed thresholds sidecar");
  run->add_option("--dataset", rf.dataset, "dataset label for the CSV");
  run->add_option("--algos", rf.algos, "comma-separated algorithm names")->delimiter(',');
  run->add_option("--budgets", rf.budgets, "comma-separated budgets")->delimiter(',');
  run->add_option("--sims", rf.sims, "replicates per estimate");
  run->add_option("--seed", rf.seed, "master seed");
  run->add_option("--delta", rf.delta, "greedy grid step (1/N or decimal)");
  run->add_option("--out", rf.out, "output CSV path");
  run->add_option("--workers", rf.workers, "worker threads (0 = auto)");
  run->add_flag("--no-timing", rf.no_timing, "report wallclock_ms as 0");

  // --- gen ---
  CLI::App* gen = app.add_subcommand("gen", "generate benchmark instances");
  gen->require_subcommand(1);

  std::uint32_t gp_n = 4;
  std::string gp_out = "pathgap";
  CLI::App* gpath = gen->add_subcommand("path", "fixed-threshold path instance");
  gpath->add_option("--n", gp_n, "path length")->required();
  gpath->add_option("--out", gp_out, "output basename")->required();

  std::uint32_t gc_n = 4;
  double gc_k = 1.0;
  std::string gc_out = "cycle";
  CLI::App* gcycle = gen->add_subcommand("cycle", "uniform-threshold cycle instance");
  gcycle->add_option("--n", gc_n, "cycle length")->required();
  gcycle->add_option("--k", gc_k, "budget parameter K")->required();
  gcycle->add_option("--out", gc_out, "output basename")->required();

  std::string gi_graph, gi_out = "is";
  std::uint32_t gi_k = 1;
  CLI::App* gis = gen->add_subcommand("is", "two-layer DAG from an undirected graph");
  gis->add_option("--graph", gi_graph, "undirected edge list of the source graph")->required();
  gis->add_option("--k", gi_k, "seed budget")->required();
  gis->add_option("--out", gi_out, "output basename")->required();

  std::string gm_sets, gm_out = "maxcov";
  std::uint32_t gm_k = 1, gm_copies = 1;
  bool gm_tree = false;
  CLI::App* gmc = gen->add_subcommand("maxcov", "two-layer triggering instance from a set system");
  gmc->add_option("--sets", gm_sets, "file with one space-separated set per line")->required();
  gmc->add_option("--k", gm_k, "seed budget")->required();
  gmc->add_option("--copies", gm_copies, "element copies N")->required();
  gmc->add_flag("--or-tree", gm_tree, "bound triggering sets to size 2 via OR gates");
  gmc->add_option("--out", gm_out, "output basename")->required();

  std::string ga_graph, ga_thr, ga_out = "amplified";
  double ga_budget = 1, ga_target = 2;
  std::uint64_t ga_copies = 1;
  CLI::App* gamp = gen->add_subcommand("amplify", "append sink nodes that reward hitting a target");
  gamp->add_option("--graph", ga_graph, "embedded instance edge list")->required();
  gamp->add_option("--thresholds", ga_thr, "embedded instance thresholds")->required();
  gamp->add_option("--budget", ga_budget, "embedded seed budget k")->required();
  gamp->add_option("--target", ga_target, "embedded spread target T")->required();
  gamp->add_option("--copies", ga_copies, "sink count N")->required();
  gamp->add_option("--out", ga_out, "output basename")->required();

  // --- alloc ---
  std::string al_graph, al_weights = "wc", al_algo, al_out, al_thr;
  bool al_undirected = false;
  double al_budget = 1.0;
  std::string al_delta = "1/10";
  std::uint32_t al_sims = 10000;
  std::uint64_t al_seed = 1;
  CLI::App* alloc = app.add_subcommand("alloc", "run one allocator, export its spend log");
  alloc->add_option("--graph", al_graph, "edge list file")->required();
  alloc->add_flag("--undirected", al_undirected, "treat input edges as undirected");
  alloc->add_option("--weights", al_weights, "wc | trivalency | file");
  alloc->add_option("--algo", al_algo, "algorithm name (heuristics, GreedyFrac, GreedyInt, DagLinear)")
      ->required();
  alloc->add_option("--budget", al_budget, "budget B")->required();
  alloc->add_option("--delta", al_delta, "greedy grid step (1/N or decimal)");
  alloc->add_option("--sims", al_sims, "greedy estimator replicates");
  alloc->add_option("--seed", al_seed, "seed");
  alloc->add_option("--thresholds", al_thr, "fixed thresholds sidecar (greedy only)");
  alloc->add_option("--out", al_out, "spend log CSV path")->required();

  // --- estimate ---
  std::string es_graph, es_weights = "file", es_x, es_set, es_thr;
  bool es_undirected = false;
  std::uint32_t es_sims = 10000;
  std::uint64_t es_seed = 1;
  unsigned es_workers = 0;
  CLI::App* est = app.add_subcommand("estimate", "estimate the spread of one allocation");
  est->add_option("--graph", es_graph, "edge list file")->required();
  est->add_flag("--undirected", es_undirected, "treat input edges as undirected");
  est->add_option("--weights", es_weights, "wc | trivalency | file");
  est->add_option("--x", es_x, "fractional allocation file ('node value' lines)");
  est->add_option("--set", es_set, "comma-separated seed node ids (integral)");
  est->add_option("--thresholds", es_thr, "fixed thresholds sidecar (deterministic run)");
  est->add_option("--sims", es_sims, "replicates");
  est->add_option("--seed", es_seed, "master seed");
  est->add_option("--workers", es_workers, "worker threads (0 = auto)");

  // --- dp ---
  std::string dp_graph, dp_weights = "file";
  bool dp_undirected = false;
  std::int64_t dp_node = -1;
  CLI::App* dp = app.add_subcommand("dp", "exact single-node spreads on a DAG");
  dp->add_option("--graph", dp_graph, "edge list file")->required();
  dp->add_flag("--undirected", dp_undirected, "treat input edges as undirected");
  dp->add_option("--weights", dp_weights, "wc | trivalency | file");
  dp->add_option("--node", dp_node, "single source node (original id)");

  try {
    app.parse(argc, argv);

    if (run->parsed()) return cmd_run(rf, *run);

    if (gen->parsed()) {
      if (gpath->parsed()) {
        fs::PathGapInstance inst = fs::make_path_gap(gp_n);
        write_instance(inst.graph, &inst.thresholds.values, gp_out);
        fs::save_node_values(inst.witness.values, inst.graph, gp_out + ".x");
        std::cout << "wrote " << gp_out << ".x (witness, budget "
                  << inst.witness.budget_used() << ")\n";
      } else if (gcycle->parsed()) {
        fs::DirectedGraph g = fs::make_cycle_gap(gc_n, gc_k);
        write_instance(g, nullptr, gc_out);
        std::cout << "thresholds: uniform (none written)\n";
      } else if (gis->parsed()) {
        fs::DirectedGraph src = fs::load_edge_list(gi_graph, false);
        std::vector<std::pair<fs::NodeId, fs::NodeId>> edges;
        for (std::size_t i = 0; i < src.arcs().size(); i += 2)
          edges.emplace_back(src.arcs()[i].source, src.arcs()[i].target);
        fs::HardnessInstance inst =
            fs::reduce_independent_set(src.node_count(), edges, gi_k);
        write_instance(*inst.graph, &inst.thresholds.values, gi_out);
        std::cout << "layer1=" << inst.layer1_count << " budget=" << inst.budget
                  << " target=" << inst.target << "\n";
      } else if (gmc->parsed()) {
        std::ifstream f(gm_sets);
        if (!f) throw fs::DataError("cannot open set file: " + gm_sets);
        std::vector<std::vector<fs::NodeId>> sets;
        std::string line;
        std::vector<std::string_view> toks;
        std::size_t lineno = 0;
        while (std::getline(f, line)) {
          ++lineno;
          if (!line.empty() && line.back() == '\r') line.pop_back();
          std::string_view sv = line;
          if (auto pos = sv.find('#'); pos != std::string_view::npos) sv = sv.substr(0, pos);
          fs::detail::split_ws(sv, toks);
          if (toks.empty()) continue;
          std::vector<fs::NodeId> s;
          for (auto t : toks) {
            std::uint64_t e;
            if (!fs::detail::parse_u64(t, e))
              throw fs::ParseError("unparsable element id", lineno);
            s.push_back(static_cast<fs::NodeId>(e));
          }
          sets.push_back(std::move(s));
        }
        fs::HardnessInstance inst = fs::reduce_max_coverage(sets, gm_k, gm_copies, gm_tree);
        write_instance(*inst.graph, &inst.thresholds.values, gm_out);
        std::cout << "layer1=" << inst.layer1_count << " budget=" << inst.budget
                  << " target=" << inst.target << "\n";
      } else if (gamp->parsed()) {
        fs::HardnessInstance inst;
        inst.graph = std::make_shared<const fs::DirectedGraph>(
            fs::load_edge_list(ga_graph, true));
        inst.thresholds = fs::ThresholdVector::fixed_at(
            fs::load_node_values(ga_thr, *inst.graph, 0.0));
        inst.budget = ga_budget;
        inst.layer1_count = inst.graph->node_count();
        inst.certificate_map.resize(inst.layer1_count);
        for (fs::NodeId v = 0; v < inst.layer1_count; ++v) inst.certificate_map[v] = v;
        fs::HardnessInstance out = fs::amplify_instance(inst, ga_target, ga_copies);
        write_instance(*out.graph, &out.thresholds.values, ga_out);
        std::cout << "budget=" << out.budget << " target=" << out.target << "\n";
      }
      return 0;
    }

    if (alloc->parsed()) {
      fs::DirectedGraph g = load_graph(al_graph, al_undirected, al_weights,
                                       fs::rng::hash_combine(al_seed, 0x77E16475ULL));
      fs::AllocationResult r;
      if (al_algo == "GreedyFrac" || al_algo == "GreedyInt") {
        fs::BudgetedProblem p;
        p.model = fs::CascadeModel::linear(g);
        if (!al_thr.empty())
          p.model.fixed_thresholds = fs::ThresholdVector::fixed_at(
              fs::load_node_values(al_thr, *p.model.graph, 0.0));
        p.budget = al_budget;
        p.delta = al_algo == "GreedyInt" ? 1.0 : fs::parse_fraction(al_delta);
        p.estimator = {al_sims, al_seed, false, 0};
        const fs::DirectedGraph& gr = *p.model.graph;
        r = al_algo == "GreedyInt" ? fs::greedy_integral(p) : fs::greedy_fractional(p);
        std::ofstream f(al_out);
        if (!f) throw fs::DataError("cannot write spend log: " + al_out);
        fs::emit_spend_log_csv(r, f, &gr);
        std::cout << "budget_used=" << fs::detail::format_double(r.x.budget_used())
                  << " estimated_spread="
                  << fs::detail::format_double(r.estimated_spread->mean) << "\n";
      } else {
        if (al_algo == "DagLinear")
          r = fs::dag_linear_optimize(g, al_budget);
        else
          r = fs::heuristic_allocate(al_algo, g, al_budget, al_seed);
        std::ofstream f(al_out);
        if (!f) throw fs::DataError("cannot write spend log: " + al_out);
        fs::emit_spend_log_csv(r, f, &g);
        std::cout << "budget_used=" << fs::detail::format_double(r.x.budget_used());
        if (r.estimated_spread)
          std::cout << " predicted_spread="
                    << fs::detail::format_double(r.estimated_spread->mean);
        std::cout << "\n";
      }
      std::cout << "wrote " << al_out << " (" << r.spend_log.size() << " rows)\n";
      return 0;
    }

    if (est->parsed()) {
      fs::DirectedGraph g = load_graph(es_graph, es_undirected, es_weights,
                                       fs::rng::hash_combine(es_seed, 0x77E16475ULL));
      fs::CascadeModel model = fs::CascadeModel::linear(g);
      const fs::DirectedGraph& gr = *model.graph;
      if (!es_thr.empty())
        model.fixed_thresholds =
            fs::ThresholdVector::fixed_at(fs::load_node_values(es_thr, gr, 0.0));
      fs::SpreadEstimate r;
      if (!es_set.empty()) {
        std::vector<std::uint64_t> raw;
        for (const auto& tok : fs::detail::split_list(es_set, ',')) {
          std::uint64_t id;
          if (!fs::detail::parse_u64(tok, id))
            throw fs::ConfigError("unparsable seed id: " + tok);
          raw.push_back(id);
        }
        r = fs::spread_of_set(model, map_original_ids(gr, raw), es_sims, es_seed,
                              es_workers);
      } else if (!es_x.empty()) {
        fs::InfluenceVector x{fs::load_node_values(es_x, gr, 0.0)};
        r = fs::estimate_spread(model, x, es_sims, es_seed, es_workers);
      } else {
        throw fs::ConfigError("estimate needs --x or --set");
      }
      std::cout << "mean=" << fs::detail::format_double(r.mean)
                << " stderr=" << fs::detail::format_double(r.std_error)
                << " replicates=" << r.replicates << " seed=" << r.master_seed << "\n";
      return 0;
    }

    if (dp->parsed()) {
      fs::DirectedGraph g = load_graph(dp_graph, dp_undirected, dp_weights, 0);
      if (dp_node >= 0) {
        auto dense = map_original_ids(g, {static_cast<std::uint64_t>(dp_node)});
        std::cout << dp_node << ' '
                  << fs::detail::format_double(fs::dag_single_node_spread(g, dense[0]))
                  << "\n";
      } else {
        std::vector<double> s = fs::dag_all_single_node_spreads(g);
        for (fs::NodeId v = 0; v < g.node_count(); ++v)
          std::cout << g.original_ids()[v] << ' ' << fs::detail::format_double(s[v])
                    << "\n";
      }
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const fs::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const fs::SizeError& e) {
    std::cerr << "size error: " << e.what() << "\n";
    return 3;
  } catch (const fs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
