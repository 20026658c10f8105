#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "poal/experiment.hpp"
#include "test_support.hpp"

namespace poal {
namespace {

namespace fs = std::filesystem;

const Pool& small_pool() {
  static const Pool pool = [] {
    SyntheticParams p;
    p.num_nodes = 16;
    p.num_layers = 4;
    p.edge_prob = 0.4;
    p.noise = 1.0;
    p.seed = 5;
    return generate_synthetic(p);
  }();
  return pool;
}

// Every ordered pair over a random DAG, with random features.
Pool complete_pool(std::size_t n, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GroundTruth g = random_order(n, density, rng);
  std::vector<Pair> pairs;
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = 0; b < n; ++b)
      if (a != b) pairs.push_back({a, b});
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(pairs.size()), 3);
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < 3; ++j) X(i, j) = z(rng);
  return Pool(n, pairs, X, std::move(g));
}

ExperimentConfig quick(const std::string& strategy, bool no_reasoning = false) {
  ExperimentConfig c;
  c.strategy = parse_strategy(strategy, no_reasoning);
  c.budget = 25;
  c.n_trials = 3;
  c.n_seeds = 6;
  c.eval_every = 5;
  c.forest_trees = 15;
  c.logistic.epochs = 100;
  return c;
}

// ---------------------------------------------------------------------------
// Config

TEST(Config, Checkpoints) {
  ExperimentConfig c;
  c.budget = 150;
  c.eval_every = 50;
  EXPECT_EQ(c.checkpoints(), (std::vector<std::size_t>{0, 50, 100, 150}));
  c.budget = 7;
  c.eval_every = 3;
  EXPECT_EQ(c.checkpoints(), (std::vector<std::size_t>{0, 3, 6, 7}));
  c.budget = 0;
  EXPECT_EQ(c.checkpoints(), (std::vector<std::size_t>{0}));
  for (std::size_t b = 1; b < 40; ++b)
    for (std::size_t e = 1; e < 12; ++e) {
      c.budget = b;
      c.eval_every = e;
      EXPECT_EQ(c.checkpoints().size(), (b + e - 1) / e + 1);
    }
}

TEST(Config, Validation) {
  ExperimentConfig c;
  EXPECT_NO_THROW(c.validate());
  c.eval_every = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.n_trials = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.train_fraction = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.train_fraction = 1.0;
  EXPECT_NO_THROW(c.validate());
  c.strategy = {StrategyKind::CNT, false};
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c = quick("qbc", true);
  c.balanced_seeds = true;
  c.committee_size = 5;
  c.forest_tree.max_depth = 4;
  c.output_dir = "out/x";
  const std::string text = config_to_json(c);
  const ExperimentConfig d = config_from_json(text);
  EXPECT_EQ(d.strategy, c.strategy);
  EXPECT_EQ(d.committee_size, 5u);
  EXPECT_EQ(d.forest_tree.max_depth, 4);
  EXPECT_EQ(d.output_dir, fs::path("out/x"));
  EXPECT_EQ(config_to_json(d), text);
}

TEST(Config, RejectsUnknownFieldsAndBadValues) {
  EXPECT_THROW(config_from_json(R"({"budget": 5, "budgte": 6})"), std::invalid_argument);
  EXPECT_THROW(config_from_json(R"({"budget": "many"})"), std::invalid_argument);
  EXPECT_THROW(config_from_json(R"({"strategy": "cnt", "no_reasoning": true})"), std::invalid_argument);
  EXPECT_THROW(config_from_json(R"({"eval_every": 0})"), std::invalid_argument);
  EXPECT_EQ(config_from_json(R"({"strategy": "lc", "no_reasoning": true})").strategy.name(), "LC");
}

// ---------------------------------------------------------------------------
// Single trials

TEST(Trial, ZeroBudgetEvaluatesSeedsOnly) {
  ExperimentConfig c = quick("lc-r+");
  c.budget = 0;
  const TrialTrace t = run_trial(small_pool(), c, 1);
  ASSERT_EQ(t.rounds.size(), 1u);
  EXPECT_EQ(t.queries, 0u);
  EXPECT_TRUE(t.rounds[0].auc.has_value());
  EXPECT_GE(t.rounds[0].labeled_count, c.n_seeds);
}

TEST(Trial, BitIdenticalForSameSeed) {
  for (const char* s : {"random", "lc-r+", "qbc-r+", "cnt"}) {
    const ExperimentConfig c = quick(s);
    const TrialTrace a = run_trial(small_pool(), c, 77);
    const TrialTrace b = run_trial(small_pool(), c, 77);
    ASSERT_EQ(a.rounds.size(), b.rounds.size()) << s;
    for (std::size_t m = 0; m < a.rounds.size(); ++m) {
      EXPECT_EQ(a.rounds[m].pair, b.rounds[m].pair) << s << " round " << m;
      EXPECT_EQ(a.rounds[m].labeled_count, b.rounds[m].labeled_count) << s;
      EXPECT_EQ(a.rounds[m].closure_size, b.rounds[m].closure_size) << s;
      EXPECT_EQ(a.rounds[m].auc, b.rounds[m].auc) << s;
    }
  }
}

TEST(Trial, TraceInvariantsForEveryStrategy) {
  for (const Strategy& s : all_strategies()) {
    ExperimentConfig c = quick("lc");
    c.strategy = s;
    const TrialTrace t = run_trial(small_pool(), c, 3);
    EXPECT_EQ(t.rounds.size(), t.queries + 1) << s.name();
    EXPECT_EQ(t.queries, c.budget) << s.name();
    std::set<Pair> asked;
    for (std::size_t m = 0; m < t.rounds.size(); ++m) {
      const RoundRecord& r = t.rounds[m];
      EXPECT_EQ(r.query_index, m);
      if (m == 0) continue;
      ASSERT_TRUE(r.pair.has_value());
      EXPECT_TRUE(asked.insert(*r.pair).second) << s.name() << " asked twice";
      EXPECT_EQ(*r.label, oracle_label(small_pool().truth(), *r.pair));
      EXPECT_GE(r.labeled_count, t.rounds[m - 1].labeled_count + 1) << s.name();
      EXPECT_EQ(r.labeled_count, t.rounds[m - 1].labeled_count + 1 + r.deduced_count) << s.name();
      if (!s.reason_on_update) {
        EXPECT_EQ(r.deduced_count, 0u);
        EXPECT_EQ(r.labeled_count, c.n_seeds + m) << s.name();
      }
    }
    EXPECT_EQ(t.soundness_errors, 0u) << s.name();
    if (s.reason_on_update) EXPECT_GT(t.deduced_checked, 0u) << s.name();
  }
}

TEST(Trial, EvaluationCadence) {
  ExperimentConfig c = quick("lc", true);
  c.budget = 23;
  c.eval_every = 10;
  const TrialTrace t = run_trial(small_pool(), c, 4);
  for (std::size_t m = 0; m < t.rounds.size(); ++m)
    EXPECT_EQ(t.rounds[m].auc.has_value(), m == 0 || m == 10 || m == 20 || m == 23) << m;
}

TEST(Trial, ReasoningNeverLabelsFewer) {
  for (const char* s : {"random", "lc", "qbc"}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      ExperimentConfig plain = quick(s, true), rel = quick(s);
      plain.budget = rel.budget = 40;
      const TrialTrace a = run_trial(small_pool(), plain, seed);
      const TrialTrace b = run_trial(small_pool(), rel, seed);
      EXPECT_EQ(a.rounds[0].labeled_count, plain.n_seeds);
      for (std::size_t m = 0; m < a.rounds.size(); ++m)
        EXPECT_GE(b.at(m).labeled_count, a.rounds[m].labeled_count) << s << " seed " << seed << " m " << m;
    }
  }
}

TEST(Trial, ExhaustsACompletePool) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Pool pool = complete_pool(6, 0.5, seed);
    for (const char* s : {"random", "lc-r+", "cnt"}) {
      ExperimentConfig c = quick(s);
      c.train_fraction = 1.0;
      c.n_seeds = 0;
      c.budget = pool.size() + 5;
      const TrialTrace t = run_trial(pool, c, seed);
      EXPECT_TRUE(t.exhausted) << s;
      EXPECT_EQ(t.rounds.back().labeled_count, pool.size()) << s;
      EXPECT_GE(t.positive_queries, transitive_reduction(pool.truth()).size()) << s;
      EXPECT_LE(t.queries, pool.size()) << s;
      EXPECT_EQ(t.test_size, 0u);
      EXPECT_FALSE(t.rounds.back().auc.has_value());
    }
  }
}

TEST(Trial, PlainLoopQueriesEveryPairWhenExhausting) {
  const Pool pool = complete_pool(5, 0.5, 9);
  ExperimentConfig c = quick("lc", true);
  c.train_fraction = 1.0;
  c.n_seeds = 0;
  c.budget = 1000;
  const TrialTrace t = run_trial(pool, c, 1);
  EXPECT_EQ(t.queries, pool.size());
}

TEST(Trial, NeedsGroundTruth) {
  const Pool pool(3, {{0, 1}, {1, 2}}, Eigen::MatrixXd::Zero(2, 1), std::nullopt);
  EXPECT_THROW(run_trial(pool, quick("lc"), 1), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Experiments and statistics

TEST(Experiment, CurvesAndPairedTrials) {
  ExperimentConfig a = quick("lc", true), b = quick("qbc", true);
  const ExperimentResult ra = run_experiment(small_pool(), a);
  const ExperimentResult rb = run_experiment(small_pool(), b);
  EXPECT_EQ(ra.checkpoints, a.checkpoints());
  for (const auto& [name, pts] : ra.curves) EXPECT_EQ(pts.size(), ra.checkpoints.size()) << name;
  ASSERT_TRUE(ra.curves.count("auc"));
  // Same trial seeds: same split, seeds and evaluator before the first query.
  for (std::size_t t = 0; t < a.n_trials; ++t) {
    EXPECT_EQ(ra.traces[t].trial_seed, rb.traces[t].trial_seed);
    EXPECT_EQ(ra.traces[t].rounds[0].auc, rb.traces[t].rounds[0].auc);
  }
  // The result does not depend on completion order.
  const ExperimentResult again = run_experiment(small_pool(), a);
  EXPECT_EQ(again.curves.at("auc")[2].mean, ra.curves.at("auc")[2].mean);
}

TEST(Experiment, SingleTrialHasZeroWidth) {
  ExperimentConfig c = quick("lc-r+");
  c.n_trials = 1;
  const ExperimentResult r = run_experiment(small_pool(), c);
  for (const auto& [name, pts] : r.curves)
    for (const CurvePoint& p : pts) EXPECT_EQ(p.ci95, 0.0) << name;
}

TEST(Experiment, MissingValuesKeepTheCurve) {
  ExperimentConfig c = quick("lc-r+");
  c.n_seeds = 0;  // nothing to train the evaluator on before the first query
  const ExperimentResult r = run_experiment(small_pool(), c);
  ASSERT_TRUE(r.curves.count("auc"));
  EXPECT_EQ(r.curves.at("auc")[0].n, 0u);
  EXPECT_TRUE(std::isnan(r.curves.at("auc")[0].mean));
  EXPECT_EQ(r.curves.at("auc").back().n, c.n_trials);
}

TEST(Statistics, MeanAndInterval) {
  EXPECT_EQ(mean_ci95({}).n, 0u);
  const CurvePoint one = mean_ci95({0.7});
  EXPECT_DOUBLE_EQ(one.mean, 0.7);
  EXPECT_EQ(one.ci95, 0.0);
  const CurvePoint three = mean_ci95({1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(three.mean, 2.0);
  EXPECT_NEAR(three.ci95, 1.96 / std::sqrt(3.0), 1e-12);
  EXPECT_EQ(mean_ci95({4.0, 4.0, 4.0, 4.0}).ci95, 0.0);
}

TEST(Statistics, OrderIndependence) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 7)(rng);
    const GroundTruth g = random_order(n, 0.4, rng);
    const auto labels = random_labels(g, n * (n - 1) / 2, rng);
    EXPECT_TRUE(verify_corollary(n, labels, 5, rng));
  }
  std::mt19937_64 r2(1);
  EXPECT_TRUE(verify_corollary(3, {}, 3, r2));
  EXPECT_TRUE(verify_corollary(3, {{{0, 1}, Label::Positive}}, 1, r2));
}

TEST(Statistics, RuntimeProfile) {
  EXPECT_TRUE(runtime_profile({}).empty());
  EXPECT_FALSE(power_law_exponent({}).has_value());

  // Insert time growing as size^1.5.
  TrialTrace t;
  t.rounds.push_back({});
  for (std::size_t m = 1; m <= 200; ++m) {
    RoundRecord r;
    r.closure_size = 10 * m;
    r.insert_runtime_us = std::pow(static_cast<double>(t.rounds.back().closure_size), 1.5);
    t.rounds.push_back(r);
  }
  t.rounds[0].closure_size = 5;
  t.rounds[1].insert_runtime_us = std::pow(5.0, 1.5);
  const auto b = runtime_profile({t}, 200);
  std::size_t total = 0;
  for (const auto& x : b) total += x.count;
  EXPECT_EQ(total, 200u);
  ASSERT_TRUE(power_law_exponent(b).has_value());
  // buckets average a few sizes, so the slope is only close
  EXPECT_NEAR(*power_law_exponent(b), 1.5, 0.01);

  std::vector<RuntimeBucket> exact;
  for (double x : {10.0, 20.0, 40.0, 80.0}) exact.push_back({x, x, x, 3.0 * std::pow(x, 1.5), 1});
  EXPECT_NEAR(*power_law_exponent(exact), 1.5, 1e-9);

  RuntimeBucket single{0, 1, 3, 9, 1};
  EXPECT_FALSE(power_law_exponent({single}).has_value());
}

TEST(Statistics, ClosureCheckFindsNoMismatch) {
  const ClosureCheckResult r = closure_check(100, 6, 3);
  EXPECT_EQ(r.cases, 100u);
  EXPECT_EQ(r.mismatches, 0u);
  EXPECT_GT(r.labels, 100u);
}

TEST(Output, WritesTracesAndAggregates) {
  const fs::path dir = fs::temp_directory_path() / ("poal_out_" + std::to_string(std::random_device{}()));
  ExperimentConfig c = quick("cnt");
  c.n_trials = 2;
  write_outputs(run_experiment(small_pool(), c), dir);
  for (const char* f : {"trace_0.csv", "trace_1.csv", "aggregate.csv", "runtime_profile.csv"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  std::ifstream in(dir / "trace_0.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "query_index,src,dst,label,labeled_count,deduced_count,auc,insert_runtime_us,closure_size");
  std::size_t rows = 0;
  for (std::string s; std::getline(in, s);) ++rows;
  EXPECT_EQ(rows, c.budget + 1);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace poal
