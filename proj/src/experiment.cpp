#include "poal/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <tbb/parallel_for.h>

#include "json.hpp"
#include "poal/auc.hpp"
#include "poal/random.hpp"
#include "poal/random_order.hpp"

namespace poal {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
  if (n_trials < 1) bad("n_trials must be >= 1");
  if (eval_every < 1) bad("eval_every must be >= 1");
  if (retrain_every < 1) bad("retrain_every must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) bad("train_fraction must be in (0, 1]");
  if (forest_trees < 1) bad("forest_trees must be >= 1");
  if (committee_size < 1) bad("committee_size must be >= 1");
  if (logistic.epochs < 0 || !(logistic.learning_rate > 0.0) || logistic.l2 < 0.0) bad("bad logistic settings");
  if (forest_tree.max_depth < 0 || committee_tree.max_depth < 0) bad("max_depth must be >= 0");
  if (strategy.relational_scoring() && !strategy.reason_on_update) bad(strategy.name() + " needs reasoning");
}

std::vector<std::size_t> ExperimentConfig::checkpoints() const {
  std::vector<std::size_t> out;
  for (std::size_t m = 0; m < budget; m += eval_every) out.push_back(m);
  out.push_back(budget);
  return out;
}

namespace {

json tree_to_json(const TreeParams& t) {
  return {{"max_depth", t.max_depth}, {"min_leaf", t.min_leaf}, {"max_features", t.max_features}};
}

TreeParams tree_from_json(const json& j, TreeParams t) {
  t.max_depth = j.value("max_depth", t.max_depth);
  t.min_leaf = j.value("min_leaf", t.min_leaf);
  t.max_features = j.value("max_features", t.max_features);
  return t;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& c) {
  json j{{"strategy", cli_name(c.strategy.kind)},
         {"no_reasoning", !c.strategy.reason_on_update},
         {"budget", c.budget},
         {"n_trials", c.n_trials},
         {"rng_seed", c.rng_seed},
         {"train_fraction", c.train_fraction},
         {"n_seeds", c.n_seeds},
         {"balanced_seeds", c.balanced_seeds},
         {"eval_every", c.eval_every},
         {"retrain_every", c.retrain_every},
         {"forest_trees", c.forest_trees},
         {"forest_tree", tree_to_json(c.forest_tree)},
         {"committee_size", c.committee_size},
         {"committee_tree", tree_to_json(c.committee_tree)},
         {"logistic",
          {{"learning_rate", c.logistic.learning_rate}, {"epochs", c.logistic.epochs}, {"l2", c.logistic.l2}}},
         {"candidate_cap", c.candidate_cap},
         {"normalize_scores", c.normalize_scores},
         {"audit", c.audit},
         {"output_dir", c.output_dir.string()}};
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  static const std::vector<std::string> known = {
      "strategy",     "no_reasoning",   "budget",         "n_trials",      "rng_seed",    "train_fraction",
      "n_seeds",      "balanced_seeds", "eval_every",     "retrain_every", "forest_trees", "forest_tree",
      "committee_size", "committee_tree", "logistic",     "candidate_cap", "normalize_scores", "audit",
      "output_dir"};
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw std::invalid_argument("config: unknown field '" + k + "'");

  ExperimentConfig c;
  try {
    if (j.contains("strategy"))
      c.strategy = parse_strategy(j.at("strategy").get<std::string>(), j.value("no_reasoning", false));
    c.budget = j.value("budget", c.budget);
    c.n_trials = j.value("n_trials", c.n_trials);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.n_seeds = j.value("n_seeds", c.n_seeds);
    c.balanced_seeds = j.value("balanced_seeds", c.balanced_seeds);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.retrain_every = j.value("retrain_every", c.retrain_every);
    c.forest_trees = j.value("forest_trees", c.forest_trees);
    if (j.contains("forest_tree")) c.forest_tree = tree_from_json(j.at("forest_tree"), c.forest_tree);
    c.committee_size = j.value("committee_size", c.committee_size);
    if (j.contains("committee_tree")) c.committee_tree = tree_from_json(j.at("committee_tree"), c.committee_tree);
    if (j.contains("logistic")) {
      const auto& l = j.at("logistic");
      c.logistic.learning_rate = l.value("learning_rate", c.logistic.learning_rate);
      c.logistic.epochs = l.value("epochs", c.logistic.epochs);
      c.logistic.l2 = l.value("l2", c.logistic.l2);
    }
    c.candidate_cap = j.value("candidate_cap", c.candidate_cap);
    c.normalize_scores = j.value("normalize_scores", c.normalize_scores);
    c.audit = j.value("audit", c.audit);
    c.output_dir = j.value("output_dir", std::string());
  } catch (const json::type_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_json(text);
}

void save_config(const ExperimentConfig& cfg, const fs::path& path) { std::ofstream(path) << config_to_json(cfg) << '\n'; }

// ---------------------------------------------------------------------------
// Trial

const RoundRecord& TrialTrace::at(std::size_t m) const {
  if (rounds.empty()) throw std::logic_error("empty trace");
  return rounds[std::min(m, rounds.size() - 1)];
}

namespace {

class TrialState {
 public:
  TrialState(const Pool& pool, const ExperimentConfig& cfg, std::uint64_t seed)
      : pool_(pool), cfg_(cfg), seed_(seed), labels_(pool.size(), 0), in_domain_(pool.size(), 0),
        in_test_(pool.size(), 0) {
    if (!pool.has_truth()) throw std::invalid_argument("simulated trials need ground truth");
    const Split s = split(pool, cfg.train_fraction, cfg.n_seeds, derive_seed(seed, streams::kSplit), cfg.balanced_seeds);
    for (const Pair& p : s.train) in_domain_[index(p)] = 1;
    for (const Pair& p : s.test) {
      in_test_[index(p)] = 1;
      test_rows_.push_back(index(p));
      test_labels_.push_back(pool.label(index(p)));
    }
    trace_.trial_seed = seed;
    trace_.test_size = s.test.size();
    if (reasoning()) closure_ = OrderClosure(pool.num_nodes());
    for (const Pair& p : s.seeds) add_label(p, oracle(p), LabelSource::seed());
    du_ = s.train;
    refresh_du();
  }

  TrialTrace run() {
    RoundRecord r0 = snapshot(0);
    r0.deduced_count = deduced_this_round_;
    r0.auc = evaluate(0);
    trace_.rounds.push_back(r0);

    std::mt19937_64 select_rng(derive_seed(seed_, streams::kSelection));
    for (std::size_t m = 1; m <= cfg_.budget && !du_.empty(); ++m) {
      if ((m - 1) % cfg_.retrain_every == 0) retrain(m);
      const ScoringContext ctx{&pool_, &in_domain_, reasoning() ? &closure_ : nullptr, &costs_,
                               cfg_.normalize_scores, true};
      const Pair p = select(cfg_.strategy, du_, ctx, select_rng, {cfg_.candidate_cap});
      const Label y = oracle(p);
      deduced_this_round_ = 0;
      const double us = add_label(p, y, LabelSource::queried());
      refresh_du();
      ++trace_.queries;
      trace_.positive_queries += y == Label::Positive;

      RoundRecord r = snapshot(m);
      r.pair = p;
      r.label = y;
      r.deduced_count = deduced_this_round_;
      r.insert_runtime_us = us;
      const bool stop = du_.empty() || m == cfg_.budget;
      if (m % cfg_.eval_every == 0 || stop) r.auc = evaluate(m);
      trace_.rounds.push_back(r);
    }
    trace_.exhausted = du_.empty() && trace_.queries < cfg_.budget;
    return std::move(trace_);
  }

 private:
  bool reasoning() const { return cfg_.strategy.reason_on_update; }
  std::size_t index(Pair p) const { return static_cast<std::size_t>(pool_.index_of(p)); }
  Label oracle(Pair p) const { return oracle_label(pool_.truth(), p); }

  // Returns the wall time of the update itself in microseconds.
  double add_label(Pair p, Label y, LabelSource origin) {
    using clock = std::chrono::steady_clock;
    if (!reasoning()) {
      const auto t0 = clock::now();
      const bool fresh = labels_[index(p)] == 0;
      labels_[index(p)] = static_cast<std::int8_t>(to_int(y));
      const auto t1 = clock::now();
      if (fresh) ++plain_size_;
      return std::chrono::duration<double, std::micro>(t1 - t0).count();
    }
    if (closure_.label(p) == y) return 0.0;
    const auto t0 = clock::now();
    const ClosureDelta delta = closure_.insert(p, y, origin);
    const auto t1 = clock::now();
    for (const DeltaEntry& e : delta.entries) {
      if (cfg_.audit && e.source.kind == LabelSource::Kind::Deduced) {
        ++trace_.deduced_checked;
        if (oracle_label(pool_.truth(), e.pair) != e.label) ++trace_.soundness_errors;
      }
      const std::int64_t i = pool_.index_of(e.pair);
      if (i < 0) continue;
      labels_[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(to_int(e.label));
      if (in_domain_[static_cast<std::size_t>(i)] && e.pair != p) ++deduced_this_round_;
    }
    return std::chrono::duration<double, std::micro>(t1 - t0).count();
  }

  void refresh_du() {
    std::erase_if(du_, [&](const Pair& p) { return labels_[index(p)] != 0; });
  }

  RoundRecord snapshot(std::size_t m) const {
    RoundRecord r;
    r.query_index = m;
    for (std::size_t i = 0; i < pool_.size(); ++i) {
      if (labels_[i] == 0) continue;
      r.labeled_count += in_domain_[i];
      r.test_labeled += in_test_[i];
    }
    r.closure_size = reasoning() ? closure_.size() : plain_size_;
    return r;
  }

  void training_set(Eigen::MatrixXd& X, std::vector<Label>& y) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < pool_.size(); ++i)
      if (in_domain_[i] && labels_[i] != 0) rows.push_back(i);
    X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(pool_.dim()));
    y.clear();
    for (std::size_t k = 0; k < rows.size(); ++k) {
      X.row(static_cast<Eigen::Index>(k)) = pool_.feature(rows[k]);
      y.push_back(label_from_int(labels_[rows[k]]));
    }
  }

  void retrain(std::size_t m) {
    if (!cfg_.strategy.needs_logistic() && !cfg_.strategy.needs_committee()) {
      if (costs_.size() == 0) costs_ = unit_costs(pool_.size());
      return;
    }
    Eigen::MatrixXd X;
    std::vector<Label> y;
    training_set(X, y);
    if (y.empty()) {
      // No labels yet: posteriors of one half, no committee disagreement.
      const double c = cfg_.strategy.needs_logistic() ? 0.5 : 0.0;
      costs_ = {std::vector<double>(pool_.size(), c), std::vector<double>(pool_.size(), c)};
      return;
    }
    if (cfg_.strategy.needs_logistic()) {
      costs_ = lc_costs(fit_logistic<double>(X, y, cfg_.logistic), pool_);
    } else {
      const auto c = fit_committee(X, y, cfg_.committee_size, derive_seed(seed_, streams::kCommittee + m),
                                   cfg_.committee_tree);
      costs_ = qbc_costs(c, pool_);
    }
  }

  std::optional<double> evaluate(std::size_t m) const {
    if (test_rows_.empty()) return std::nullopt;
    Eigen::MatrixXd X;
    std::vector<Label> y;
    training_set(X, y);
    if (y.empty()) return std::nullopt;
    const ForestModel f =
        fit_forest(X, y, cfg_.forest_trees, derive_seed(seed_, streams::kEvaluator + m), cfg_.forest_tree);
    std::vector<double> scores;
    scores.reserve(test_rows_.size());
    for (std::size_t i : test_rows_) scores.push_back(f.score(pool_.feature(i)));
    return auc(scores, test_labels_);
  }

  const Pool& pool_;
  const ExperimentConfig& cfg_;
  std::uint64_t seed_;
  std::vector<std::int8_t> labels_;  // per pool pair: 0 unknown, else the label
  std::vector<char> in_domain_, in_test_;
  std::vector<std::size_t> test_rows_;
  std::vector<Label> test_labels_;
  std::vector<Pair> du_;
  OrderClosure closure_;
  std::size_t plain_size_ = 0;
  std::size_t deduced_this_round_ = 0;
  LabelCosts costs_;
  TrialTrace trace_;
};

}  // namespace

TrialTrace run_trial(const Pool& pool, const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  return TrialState(pool, cfg, seed).run();
}

// ---------------------------------------------------------------------------
// Experiment

std::uint64_t trial_seed(std::uint64_t base, std::size_t trial) { return derive_seed(base, trial); }

CurvePoint mean_ci95(const std::vector<double>& xs) {
  CurvePoint p;
  p.n = xs.size();
  if (xs.empty()) {
    p.mean = std::numeric_limits<double>::quiet_NaN();
    return p;
  }
  const double n = static_cast<double>(xs.size());
  p.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) return p;
  double ss = 0.0;
  for (double x : xs) ss += (x - p.mean) * (x - p.mean);
  p.ci95 = 1.96 * std::sqrt(ss / (n - 1)) / std::sqrt(n);
  return p;
}

ExperimentResult run_experiment(const Pool& pool, const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult r;
  r.checkpoints = cfg.checkpoints();
  r.traces.resize(cfg.n_trials);
  tbb::parallel_for(std::size_t{0}, cfg.n_trials,
                    [&](std::size_t t) { r.traces[t] = run_trial(pool, cfg, trial_seed(cfg.rng_seed, t)); });

  auto curve = [&](const std::string& name, auto metric) {
    std::vector<CurvePoint> pts;
    bool any = false;
    for (std::size_t c : r.checkpoints) {
      std::vector<double> xs;
      for (const auto& t : r.traces)
        if (auto v = metric(t, t.at(c))) xs.push_back(*v);
      any |= !xs.empty();
      pts.push_back(mean_ci95(xs));
    }
    if (any) r.curves[name] = std::move(pts);
  };
  curve("auc", [](const TrialTrace&, const RoundRecord& x) { return x.auc; });
  curve("labeled_count", [](const TrialTrace&, const RoundRecord& x) {
    return std::optional<double>(static_cast<double>(x.labeled_count));
  });
  curve("closure_size", [](const TrialTrace&, const RoundRecord& x) {
    return std::optional<double>(static_cast<double>(x.closure_size));
  });
  curve("queries", [](const TrialTrace&, const RoundRecord& x) {
    return std::optional<double>(static_cast<double>(x.query_index));
  });
  curve("test_coverage", [](const TrialTrace& t, const RoundRecord& x) -> std::optional<double> {
    if (t.test_size == 0) return std::nullopt;
    return static_cast<double>(x.test_labeled) / static_cast<double>(t.test_size);
  });
  return r;
}

bool verify_corollary(std::size_t num_nodes, const std::vector<LabeledPair>& labels, std::size_t k,
                      std::mt19937_64& rng) {
  if (k == 0) return true;
  std::vector<LabeledPair> order = labels;
  const OrderClosure first = seed_closure(num_nodes, order);
  for (std::size_t i = 1; i < k; ++i) {
    std::shuffle(order.begin(), order.end(), rng);
    if (!seed_closure(num_nodes, order).same_labels(first)) return false;
  }
  return true;
}

std::vector<RuntimeBucket> runtime_profile(const std::vector<TrialTrace>& traces, std::size_t num_buckets) {
  struct Obs {
    double size, us;
  };
  std::vector<Obs> obs;
  for (const auto& t : traces)
    for (std::size_t i = 1; i < t.rounds.size(); ++i)
      obs.push_back({static_cast<double>(t.rounds[i - 1].closure_size), t.rounds[i].insert_runtime_us});
  if (obs.empty() || num_buckets == 0) return {};
  double lo = obs[0].size, hi = obs[0].size;
  for (const Obs& o : obs) {
    lo = std::min(lo, o.size);
    hi = std::max(hi, o.size);
  }
  const double width = hi > lo ? (hi - lo) / static_cast<double>(num_buckets) : 1.0;
  std::vector<RuntimeBucket> b(hi > lo ? num_buckets : 1);
  for (std::size_t i = 0; i < b.size(); ++i) {
    b[i].lo = lo + width * static_cast<double>(i);
    b[i].hi = lo + width * static_cast<double>(i + 1);
  }
  for (const Obs& o : obs) {
    auto i = static_cast<std::size_t>((o.size - lo) / width);
    i = std::min(i, b.size() - 1);
    b[i].mean_size += o.size;
    b[i].mean_runtime_us += o.us;
    ++b[i].count;
  }
  std::vector<RuntimeBucket> out;
  for (auto& x : b) {
    if (x.count == 0) continue;
    x.mean_size /= static_cast<double>(x.count);
    x.mean_runtime_us /= static_cast<double>(x.count);
    out.push_back(x);
  }
  return out;
}

std::optional<double> power_law_exponent(const std::vector<RuntimeBucket>& buckets) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& b : buckets)
    if (b.count > 0 && b.mean_size > 0 && b.mean_runtime_us > 0)
      pts.emplace_back(std::log(b.mean_size), std::log(b.mean_runtime_us));
  if (pts.size() < 2) return std::nullopt;
  Eigen::MatrixXd A(static_cast<Eigen::Index>(pts.size()), 2);
  Eigen::VectorXd y(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    A(static_cast<Eigen::Index>(i), 0) = 1.0;
    A(static_cast<Eigen::Index>(i), 1) = pts[i].first;
    y(static_cast<Eigen::Index>(i)) = pts[i].second;
  }
  return A.colPivHouseholderQr().solve(y)(1);
}

ClosureCheckResult closure_check(std::size_t n_cases, std::size_t max_nodes, std::uint64_t seed) {
  if (max_nodes < 2) throw std::invalid_argument("closure_check: max_nodes must be >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> nodes(2, max_nodes);
  std::uniform_real_distribution<double> density(0.1, 0.7);
  ClosureCheckResult r;
  for (std::size_t c = 0; c < n_cases; ++c) {
    const std::size_t n = nodes(rng);
    const GroundTruth g = random_order(n, density(rng), rng);
    std::uniform_int_distribution<std::size_t> count(1, n * (n - 1));
    const auto labels = random_labels(g, count(rng), rng);
    OrderClosure h(n);
    for (const auto& l : labels) h.insert(l.pair, l.label);
    r.mismatches += !h.same_labels(brute_force_closure(n, labels));
    r.labels += labels.size();
    ++r.cases;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Output

void write_trace_csv(const TrialTrace& t, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "query_index,src,dst,label,labeled_count,deduced_count,auc,insert_runtime_us,closure_size\n"
      << std::setprecision(10);
  for (const auto& r : t.rounds) {
    out << r.query_index << ',';
    if (r.pair) out << r.pair->src << ',' << r.pair->dst << ',' << to_int(*r.label);
    else out << ",,";
    out << ',' << r.labeled_count << ',' << r.deduced_count << ',';
    if (r.auc) out << *r.auc;
    out << ',' << r.insert_runtime_us << ',' << r.closure_size << '\n';
  }
}

void write_aggregate_csv(const ExperimentResult& r, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "checkpoint,metric,mean,ci95,n\n" << std::setprecision(10);
  for (std::size_t i = 0; i < r.checkpoints.size(); ++i)
    for (const auto& [name, pts] : r.curves)
      if (pts[i].n > 0)
        out << r.checkpoints[i] << ',' << name << ',' << pts[i].mean << ',' << pts[i].ci95 << ',' << pts[i].n << '\n';
}

void write_runtime_profile_csv(const std::vector<RuntimeBucket>& b, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "size_lo,size_hi,mean_size,mean_insert_runtime_us,count\n" << std::setprecision(10);
  for (const auto& x : b)
    out << x.lo << ',' << x.hi << ',' << x.mean_size << ',' << x.mean_runtime_us << ',' << x.count << '\n';
}

void write_outputs(const ExperimentResult& r, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t t = 0; t < r.traces.size(); ++t)
    write_trace_csv(r.traces[t], dir / ("trace_" + std::to_string(t) + ".csv"));
  write_aggregate_csv(r, dir / "aggregate.csv");
  write_runtime_profile_csv(runtime_profile(r.traces), dir / "runtime_profile.csv");
}

}  // namespace poal
