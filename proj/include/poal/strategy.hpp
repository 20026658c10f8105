#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "poal/closure.hpp"
#include "poal/dataset.hpp"
#include "poal/logistic.hpp"
#include "poal/tree.hpp"

namespace poal {

enum class StrategyKind { Random, LC, QBC, CNT, LCRPlus, QBCRPlus };

struct Strategy {
  StrategyKind kind = StrategyKind::Random;
  /// Apply closure reasoning when adding a label to D_l.
  bool reason_on_update = true;

  /// Deductions enter the selection score (CNT and the R+ kinds).
  bool relational_scoring() const {
    return kind == StrategyKind::CNT || kind == StrategyKind::LCRPlus || kind == StrategyKind::QBCRPlus;
  }
  bool needs_logistic() const { return kind == StrategyKind::LC || kind == StrategyKind::LCRPlus; }
  bool needs_committee() const { return kind == StrategyKind::QBC || kind == StrategyKind::QBCRPlus; }

  /// Display name: Random, Random-R, LC, LC-R, QBC, QBC-R, CNT, LC-R+, QBC-R+.
  std::string name() const;
  bool operator==(const Strategy&) const = default;
};

/// Accepts the CLI names (random, lc, qbc, cnt, lc-r+, qbc-r+) and the -R
/// spellings, case-insensitively. Reasoning is on unless `no_reasoning`, which
/// is rejected for kinds that need it. Throws std::invalid_argument.
Strategy parse_strategy(std::string_view name, bool no_reasoning = false);

/// CLI spelling of a kind: random, lc, qbc, cnt, lc-r+ or qbc-r+.
std::string cli_name(StrategyKind k);

/// All nine variants in display order.
std::vector<Strategy> all_strategies();

/// Per pool pair, the cost F charges for asserting each label.
struct LabelCosts {
  std::vector<double> if_negative;
  std::vector<double> if_positive;

  double cost(std::size_t i, Label y) const { return y == Label::Positive ? if_positive[i] : if_negative[i]; }
  std::size_t size() const { return if_positive.size(); }
};

/// 1 - P(y | x) from the logistic posterior.
LabelCosts lc_costs(const LogisticModel& m, const Pool& pool);
/// Number of committee members voting against y.
LabelCosts qbc_costs(const Committee& c, const Pool& pool);
/// Cost 1 for either label (CNT).
LabelCosts unit_costs(std::size_t pool_size);

double score_lc(const LogisticModel& m, const Eigen::Ref<const Eigen::RowVectorXd>& x, Label y);
int score_qbc(const Committee& c, const Eigen::Ref<const Eigen::RowVectorXd>& x, Label y);

/// Everything a score needs for one round. `in_domain[i]` marks pool pairs of
/// the training part D. `closure` may be null for non-relational scoring.
struct ScoringContext {
  const Pool* pool = nullptr;
  const std::vector<char>* in_domain = nullptr;
  const OrderClosure* closure = nullptr;
  const LabelCosts* costs = nullptr;
  /// Divide a relational F by |S| (off by default).
  bool normalize = false;
  /// When false, S(y) is the candidate alone, as if no deduction happened.
  bool deduce = true;
};

struct BranchScore {
  bool feasible = false;  // false when the closure already forces the other label
  double value = 0.0;
  std::vector<DeltaEntry> set;  // S(y) restricted to D \ D_l; filled on request
};

struct StrategyScore {
  Pair pair;
  double value = 0.0;                    // min over feasible branches
  std::array<BranchScore, 2> per_label;  // [0] for -1, [1] for +1
  const BranchScore& branch(Label y) const { return per_label[y == Label::Positive]; }
};

/// F(S(y)) for one branch. Relational scoring uses S(y) = delta restricted to
/// D; otherwise S(y) = {p}. Returns nullopt when the branch conflicts.
std::optional<double> branch_value(const ScoringContext& ctx, bool relational, Pair p, Label y, DeltaWorkspace& ws,
                                   std::vector<DeltaEntry>* set_out = nullptr);

/// Both branches and the min, with the inferred sets materialized.
StrategyScore score_candidate(const ScoringContext& ctx, bool relational, Pair p);

double score_cnt(const OrderClosure& h, const Pool& pool, const std::vector<char>& in_domain, Pair p, Label y);
double score_lcr(const OrderClosure& h, const Pool& pool, const std::vector<char>& in_domain, const LabelCosts& lc,
                 Pair p, Label y);
double score_qbcr(const OrderClosure& h, const Pool& pool, const std::vector<char>& in_domain,
                  const LabelCosts& qbc, Pair p, Label y);

struct SelectOptions {
  /// Score a uniform subsample of this many candidates; 0 scores all.
  std::size_t candidate_cap = 0;
};

/// Greedy argmax over `du` of the min-over-labels score; ties go to the
/// lexicographically smallest pair. Random draws uniformly. Throws
/// std::invalid_argument on an empty candidate list.
Pair select(const Strategy& s, std::span<const Pair> du, const ScoringContext& ctx, std::mt19937_64& rng,
            const SelectOptions& opt = {});

/// Scores every candidate; exposed for tests and diagnostics.
std::vector<double> candidate_values(const Strategy& s, std::span<const Pair> du, const ScoringContext& ctx);

}  // namespace poal
