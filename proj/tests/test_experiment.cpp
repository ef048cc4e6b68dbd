#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fracspread/fracspread.hpp"
#include "support/synthetic.hpp"

using namespace fracspread;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("fracspread_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ExperimentConfig small_config(const TempDir& dir, const std::string& graph_file) {
  ExperimentConfig cfg;
  cfg.graph_path = graph_file;
  cfg.undirected = true;
  cfg.weight_model = WeightModel::weighted_cascade;
  cfg.algorithms = {"UniformFrac", "RandomInt", "DiscountFrac", "DegreeInt"};
  cfg.budgets = {0, 2, 5};
  cfg.replicates = 1500;
  cfg.master_seed = 99;
  cfg.out_path = dir.file("out.csv");
  cfg.measure_time = false;
  return cfg;
}

}  // namespace

TEST_CASE("experiment sweep") {
  TempDir dir;
  DirectedGraph g = testsupport::preferential_attachment(40, 2, 5);
  save_edge_list(g, dir.file("pa.edges"));
  ExperimentConfig cfg = small_config(dir, dir.file("pa.edges"));

  std::vector<ResultRow> rows = run_experiment(cfg);

  SECTION("one row per algorithm-budget cell, sorted") {
    REQUIRE(rows.size() == cfg.algorithms.size() * cfg.budgets.size());
    for (std::size_t i = 1; i < rows.size(); ++i) {
      REQUIRE(rows[i - 1].algorithm <= rows[i].algorithm);
      if (rows[i - 1].algorithm == rows[i].algorithm)
        REQUIRE(rows[i - 1].budget < rows[i].budget);
    }
  }

  SECTION("zero budget means zero spread; spreads never exceed n") {
    for (const ResultRow& r : rows) {
      if (r.budget == 0) REQUIRE(r.mean_spread == 0.0);
      REQUIRE(r.mean_spread <= 40.0);
    }
  }

  SECTION("budget monotonicity within noise") {
    for (const auto& algo : cfg.algorithms) {
      double prev = -1.0, prev_err = 0.0;
      for (const ResultRow& r : rows) {
        if (r.algorithm != algo) continue;
        REQUIRE(r.mean_spread >= prev - 4 * (r.std_error + prev_err));
        prev = r.mean_spread;
        prev_err = r.std_error;
      }
    }
  }

  SECTION("identical config reruns byte-identically") {
    emit_csv(rows, cfg.out_path);
    std::string first = slurp(cfg.out_path);
    std::vector<ResultRow> again = run_experiment(cfg);
    emit_csv(again, cfg.out_path);
    REQUIRE(slurp(cfg.out_path) == first);
  }

  SECTION("different master seeds change the estimates") {
    ExperimentConfig other = cfg;
    other.master_seed = 100;
    std::vector<ResultRow> rows2 = run_experiment(other);
    bool any_diff = false;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i].mean_spread != rows2[i].mean_spread) any_diff = true;
    REQUIRE(any_diff);
  }
}

TEST_CASE("experiment on a fixed-threshold dataset") {
  TempDir dir;
  PathGapInstance inst = make_path_gap(10);
  save_edge_list(inst.graph, dir.file("path.edges"));
  save_node_values(inst.thresholds.values, inst.graph, dir.file("path.thresholds"));

  ExperimentConfig cfg;
  cfg.graph_path = dir.file("path.edges");
  cfg.weight_model = WeightModel::from_file;
  cfg.thresholds_path = dir.file("path.thresholds");
  cfg.algorithms = {"GreedyFrac", "UniformFrac"};
  cfg.budgets = {1};
  cfg.replicates = 50;
  cfg.master_seed = 7;
  cfg.delta = 1.0 / 11.0;
  cfg.measure_time = false;

  std::vector<ResultRow> rows = run_experiment(cfg);
  REQUIRE(rows.size() == 2);
  const ResultRow& greedy = rows[0].algorithm == "GreedyFrac" ? rows[0] : rows[1];
  const ResultRow& uniform = rows[0].algorithm == "UniformFrac" ? rows[0] : rows[1];
  REQUIRE(greedy.mean_spread == 10.0);   // grid contains the witness
  REQUIRE(uniform.mean_spread == 0.0);   // 1/11 direct influence never fires
  REQUIRE(greedy.mean_spread > uniform.mean_spread);
}

TEST_CASE("baselines never beat the greedy by more than noise") {
  TempDir dir;
  DirectedGraph g = testsupport::preferential_attachment(14, 2, 21);
  save_edge_list(g, dir.file("pa.edges"));
  ExperimentConfig cfg;
  cfg.graph_path = dir.file("pa.edges");
  cfg.undirected = true;
  cfg.weight_model = WeightModel::weighted_cascade;
  cfg.algorithms = {"GreedyFrac", "RandomInt", "UniformFrac"};
  cfg.budgets = {2};
  cfg.replicates = 3000;
  cfg.master_seed = 13;
  cfg.delta = 0.5;
  cfg.measure_time = false;
  std::vector<ResultRow> rows = run_experiment(cfg);
  const ResultRow* greedy = nullptr;
  for (const ResultRow& r : rows)
    if (r.algorithm == "GreedyFrac") greedy = &r;
  REQUIRE(greedy != nullptr);
  for (const ResultRow& r : rows) {
    if (r.algorithm == "GreedyFrac") continue;
    REQUIRE(r.mean_spread <=
            greedy->mean_spread + 4 * (r.std_error + greedy->std_error));
  }
}

TEST_CASE("config validation") {
  ExperimentConfig cfg;
  cfg.graph_path = "g.edges";
  cfg.algorithms = {"UniformFrac"};
  cfg.budgets = {1, 2};

  SECTION("unknown algorithm") {
    cfg.algorithms = {"NotAnAlgo"};
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
  }
  SECTION("decreasing budgets") {
    cfg.budgets = {5, 1};
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
  }
  SECTION("zero replicates") {
    cfg.replicates = 0;
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
  }
  SECTION("unreadable graph is a data error") {
    cfg.graph_path = "/nonexistent/g.edges";
    REQUIRE_THROWS_AS(run_experiment(cfg), DataError);
  }
  SECTION("budget above n is a config error") {
    TempDir dir;
    DirectedGraph g = make_cycle_gap(3, 1.0);
    save_edge_list(g, dir.file("c.edges"));
    cfg.graph_path = dir.file("c.edges");
    cfg.weight_model = WeightModel::from_file;
    cfg.budgets = {5};
    REQUIRE_THROWS_AS(run_experiment(cfg), ConfigError);
  }
}

TEST_CASE("config file parsing") {
  std::istringstream in(
      "# sweep setup\n"
      "graph = data/net.edges\n"
      "undirected = true\n"
      "weights = trivalency\n"
      "algos = DegreeInt, DiscountFrac\n"
      "budgets = 1, 5, 10\n"
      "sims = 2500\n"
      "seed = 12\n"
      "delta = 1/4\n"
      "out = results.csv\n");
  ExperimentConfig cfg = load_experiment_config(in);
  REQUIRE(cfg.graph_path == "data/net.edges");
  REQUIRE(cfg.undirected);
  REQUIRE(cfg.weight_model == WeightModel::trivalency);
  REQUIRE(cfg.algorithms == std::vector<std::string>{"DegreeInt", "DiscountFrac"});
  REQUIRE(cfg.budgets == std::vector<double>{1, 5, 10});
  REQUIRE(cfg.replicates == 2500);
  REQUIRE(cfg.master_seed == 12);
  REQUIRE(cfg.delta == 0.25);
  REQUIRE(cfg.out_path == "results.csv");

  std::istringstream bad("mystery = 1\n");
  REQUIRE_THROWS_AS(load_experiment_config(bad), ConfigError);
  std::istringstream junk("no equals sign\n");
  REQUIRE_THROWS_AS(load_experiment_config(junk), ParseError);
}

TEST_CASE("fraction parsing") {
  REQUIRE(parse_fraction("1/5") == 0.2);
  REQUIRE(parse_fraction("0.125") == 0.125);
  REQUIRE(parse_fraction(" 1/2 ") == 0.5);
  REQUIRE_THROWS_AS(parse_fraction("1/0"), ConfigError);
  REQUIRE_THROWS_AS(parse_fraction("abc"), ConfigError);
}

TEST_CASE("pointwise gain") {
  auto row = [](std::string algo, double budget, double mean) {
    ResultRow r;
    r.dataset = "d";
    r.algorithm = std::move(algo);
    r.budget = budget;
    r.mean_spread = mean;
    return r;
  };

  SECTION("simple ratios") {
    std::vector<ResultRow> rows = {row("UniformFrac", 5, 115), row("DegreeInt", 5, 100),
                                   row("RandomInt", 5, 90)};
    GainTable t = pointwise_gain(rows);
    REQUIRE(t.by_budget.size() == 1);
    REQUIRE(t.by_budget[0].gain == Catch::Approx(0.15));
    REQUIRE(t.mean_gain == Catch::Approx(0.15));
  }

  SECTION("equal bests give zero gain") {
    std::vector<ResultRow> rows = {row("UniformFrac", 5, 100), row("DegreeInt", 5, 100)};
    REQUIRE(pointwise_gain(rows).by_budget[0].gain == 0.0);
  }

  SECTION("mean and median across budgets") {
    std::vector<ResultRow> rows = {row("UniformFrac", 1, 11), row("DegreeInt", 1, 10),
                                   row("UniformFrac", 2, 15), row("DegreeInt", 2, 10),
                                   row("UniformFrac", 3, 12), row("DegreeInt", 3, 10)};
    GainTable t = pointwise_gain(rows);
    REQUIRE(t.by_budget.size() == 3);
    REQUIRE(t.mean_gain == Catch::Approx((0.1 + 0.5 + 0.2) / 3.0));
    REQUIRE(t.median_gain == Catch::Approx(0.2));
  }

  SECTION("missing side is a domain error") {
    std::vector<ResultRow> rows = {row("UniformFrac", 5, 100)};
    REQUIRE_THROWS_AS(pointwise_gain(rows), std::domain_error);
  }
}

TEST_CASE("CSV emission") {
  auto row = [](std::string ds, std::string algo, double budget) {
    ResultRow r;
    r.dataset = std::move(ds);
    r.algorithm = std::move(algo);
    r.budget = budget;
    r.mean_spread = 1.25;
    r.std_error = 0.5;
    r.wallclock_ms = 3;
    r.seed = 42;
    return r;
  };

  SECTION("empty input still writes the header") {
    std::ostringstream out;
    emit_csv(std::vector<ResultRow>{}, out);
    REQUIRE(out.str() == std::string(kResultCsvHeader) + "\n");
  }

  SECTION("one row gives two lines") {
    std::ostringstream out;
    emit_csv(std::vector<ResultRow>{row("d", "DegreeInt", 1)}, out);
    REQUIRE(out.str() ==
            std::string(kResultCsvHeader) + "\nd,DegreeInt,1,1.25,0.5,3,42\n");
  }

  SECTION("round trip reproduces rows exactly") {
    std::vector<ResultRow> rows = {row("my,data", "DegreeInt", 1),
                                   row("quote\"y", "UniformFrac", 2.5),
                                   row("plain", "RandomInt", 10)};
    rows[0].mean_spread = 0.1 + 0.2;  // not exactly representable
    std::ostringstream out;
    emit_csv(rows, out);
    std::istringstream in(out.str());
    std::vector<ResultRow> back = parse_result_csv(in);
    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
      return a.algorithm < b.algorithm;
    });
    REQUIRE(back == rows);
  }

  SECTION("rows are emitted sorted by algorithm then budget") {
    std::vector<ResultRow> rows = {row("d", "UniformFrac", 2), row("d", "DegreeInt", 5),
                                   row("d", "DegreeInt", 1)};
    std::ostringstream out;
    emit_csv(rows, out);
    std::istringstream in(out.str());
    std::vector<ResultRow> back = parse_result_csv(in);
    REQUIRE(back[0].algorithm == "DegreeInt");
    REQUIRE(back[0].budget == 1.0);
    REQUIRE(back[1].budget == 5.0);
    REQUIRE(back[2].algorithm == "UniformFrac");
  }

  SECTION("bad header or row shape is a parse error") {
    std::istringstream bad1("nope\n");
    REQUIRE_THROWS_AS(parse_result_csv(bad1), ParseError);
    std::istringstream bad2(std::string(kResultCsvHeader) + "\na,b,c\n");
    REQUIRE_THROWS_AS(parse_result_csv(bad2), ParseError);
  }
}
