#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "poal/closure.hpp"
#include "poal/dataset.hpp"
#include "poal/logistic.hpp"
#include "poal/strategy.hpp"
#include "poal/tree.hpp"

namespace poal {

struct ExperimentConfig {
  Strategy strategy{StrategyKind::LCRPlus, true};
  std::size_t budget = 150;
  std::size_t n_trials = 300;
  std::uint64_t rng_seed = 1;
  double train_fraction = 2.0 / 3.0;
  std::size_t n_seeds = 20;
  bool balanced_seeds = false;
  /// Rounds between test-set evaluations; the budget itself is always evaluated.
  std::size_t eval_every = 1;
  /// Rounds between retraining the selection models.
  std::size_t retrain_every = 1;
  std::size_t forest_trees = 200;
  TreeParams forest_tree;
  std::size_t committee_size = 3;
  TreeParams committee_tree;
  LogisticParams logistic;
  std::size_t candidate_cap = 0;
  bool normalize_scores = false;
  /// Check every deduced label against the ground truth.
  bool audit = true;
  std::filesystem::path output_dir;

  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;
  /// Query indices at which every trial reports: 0, e, 2e, ... and the budget.
  std::vector<std::size_t> checkpoints() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

struct RoundRecord {
  std::size_t query_index = 0;
  std::optional<Pair> pair;  // empty for the seed round
  std::optional<Label> label;
  std::size_t labeled_count = 0;  // |D_l ∩ D|, seeds included
  std::size_t deduced_count = 0;  // pairs of D labeled by deduction this round
  std::optional<double> auc;
  double insert_runtime_us = 0.0;
  std::size_t closure_size = 0;  // |H| after the round
  std::size_t test_labeled = 0;  // test pairs whose label the closure already knows
};

struct TrialTrace {
  std::uint64_t trial_seed = 0;
  std::vector<RoundRecord> rounds;
  std::size_t queries = 0;
  std::size_t positive_queries = 0;
  bool exhausted = false;  // D_u ran empty before the budget
  std::size_t deduced_checked = 0;
  std::size_t soundness_errors = 0;
  std::size_t test_size = 0;

  /// Record in force at query index m (the last one when the trial stopped early).
  const RoundRecord& at(std::size_t m) const;
};

/// One run of the pool-based loop with a simulated oracle.
TrialTrace run_trial(const Pool& pool, const ExperimentConfig& cfg, std::uint64_t trial_seed);

struct CurvePoint {
  double mean = 0.0;  // NaN when no trial reported a value
  double ci95 = 0.0;
  std::size_t n = 0;
};

struct ExperimentResult {
  std::vector<std::size_t> checkpoints;
  std::vector<TrialTrace> traces;
  /// metric name -> one point per checkpoint.
  std::map<std::string, std::vector<CurvePoint>> curves;
};

std::uint64_t trial_seed(std::uint64_t base, std::size_t trial);

/// Trials in parallel; the result does not depend on completion order.
ExperimentResult run_experiment(const Pool& pool, const ExperimentConfig& cfg);

/// Mean and 1.96 * sd / sqrt(n); the half-width is 0 for a single value.
/// An empty sample gives a NaN mean and n = 0.
CurvePoint mean_ci95(const std::vector<double>& xs);

/// True iff closing `labels` in k random orders always yields the same closure.
bool verify_corollary(std::size_t num_nodes, const std::vector<LabeledPair>& labels, std::size_t k,
                      std::mt19937_64& rng);

struct RuntimeBucket {
  double lo = 0.0, hi = 0.0;  // |H| range before the insert
  double mean_size = 0.0;
  double mean_runtime_us = 0.0;
  std::size_t count = 0;
};

/// Insert runtime against the closure size it started from, in equal-width buckets.
std::vector<RuntimeBucket> runtime_profile(const std::vector<TrialTrace>& traces, std::size_t num_buckets = 20);

/// Least-squares slope of log runtime on log size over non-empty buckets.
std::optional<double> power_law_exponent(const std::vector<RuntimeBucket>& buckets);

struct ClosureCheckResult {
  std::size_t cases = 0;
  std::size_t mismatches = 0;
  std::size_t labels = 0;
};

/// Random DAGs on 2..max_nodes nodes, random oracle label sequences; compares
/// insert-by-insert closure with the brute-force fixpoint.
ClosureCheckResult closure_check(std::size_t n_cases, std::size_t max_nodes, std::uint64_t seed);

void write_trace_csv(const TrialTrace& t, const std::filesystem::path& path);
void write_aggregate_csv(const ExperimentResult& r, const std::filesystem::path& path);
void write_runtime_profile_csv(const std::vector<RuntimeBucket>& b, const std::filesystem::path& path);
/// trace_<t>.csv for every trial plus aggregate.csv and runtime_profile.csv.
void write_outputs(const ExperimentResult& r, const std::filesystem::path& dir);

}  // namespace poal
