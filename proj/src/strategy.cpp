#include "poal/strategy.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <stdexcept>

#include <tbb/enumerable_thread_specific.h>
#include <tbb/parallel_for.h>
#include <tbb/parallel_reduce.h>

namespace poal {

std::string Strategy::name() const {
  switch (kind) {
    case StrategyKind::Random: return reason_on_update ? "Random-R" : "Random";
    case StrategyKind::LC: return reason_on_update ? "LC-R" : "LC";
    case StrategyKind::QBC: return reason_on_update ? "QBC-R" : "QBC";
    case StrategyKind::CNT: return "CNT";
    case StrategyKind::LCRPlus: return "LC-R+";
    case StrategyKind::QBCRPlus: return "QBC-R+";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name, bool no_reasoning) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  Strategy out;
  bool forced_reasoning = false;
  if (s == "random") {
    out.kind = StrategyKind::Random;
  } else if (s == "lc") {
    out.kind = StrategyKind::LC;
  } else if (s == "qbc") {
    out.kind = StrategyKind::QBC;
  } else if (s == "random-r" || s == "lc-r" || s == "qbc-r") {
    if (no_reasoning) throw std::invalid_argument("strategy " + std::string(name) + " implies reasoning");
    return parse_strategy(s.substr(0, s.size() - 2), false);
  } else if (s == "cnt") {
    out.kind = StrategyKind::CNT;
    forced_reasoning = true;
  } else if (s == "lc-r+") {
    out.kind = StrategyKind::LCRPlus;
    forced_reasoning = true;
  } else if (s == "qbc-r+") {
    out.kind = StrategyKind::QBCRPlus;
    forced_reasoning = true;
  } else {
    throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
  }
  if (forced_reasoning && no_reasoning)
    throw std::invalid_argument("strategy " + std::string(name) + " cannot run without reasoning");
  out.reason_on_update = !no_reasoning;
  return out;
}

std::string cli_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::Random: return "random";
    case StrategyKind::LC: return "lc";
    case StrategyKind::QBC: return "qbc";
    case StrategyKind::CNT: return "cnt";
    case StrategyKind::LCRPlus: return "lc-r+";
    case StrategyKind::QBCRPlus: return "qbc-r+";
  }
  return "?";
}

std::vector<Strategy> all_strategies() {
  return {{StrategyKind::Random, false}, {StrategyKind::LC, false},      {StrategyKind::QBC, false},
          {StrategyKind::Random, true},  {StrategyKind::LC, true},       {StrategyKind::QBC, true},
          {StrategyKind::CNT, true},     {StrategyKind::LCRPlus, true}, {StrategyKind::QBCRPlus, true}};
}

LabelCosts lc_costs(const LogisticModel& m, const Pool& pool) {
  const Eigen::VectorXd p = m.predict_proba_rows(pool.features());
  LabelCosts c;
  c.if_positive.resize(pool.size());
  c.if_negative.resize(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    c.if_positive[i] = 1.0 - p(static_cast<Eigen::Index>(i));
    c.if_negative[i] = p(static_cast<Eigen::Index>(i));
  }
  return c;
}

LabelCosts qbc_costs(const Committee& com, const Pool& pool) {
  LabelCosts c;
  c.if_positive.resize(pool.size());
  c.if_negative.resize(pool.size());
  const auto members = static_cast<double>(com.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto pos = static_cast<double>(com.positive_votes(pool.feature(i)));
    c.if_positive[i] = members - pos;
    c.if_negative[i] = pos;
  }
  return c;
}

LabelCosts unit_costs(std::size_t pool_size) {
  return {std::vector<double>(pool_size, 1.0), std::vector<double>(pool_size, 1.0)};
}

double score_lc(const LogisticModel& m, const Eigen::Ref<const Eigen::RowVectorXd>& x, Label y) {
  const double p = m.predict_proba(x);
  return y == Label::Positive ? 1.0 - p : p;
}

int score_qbc(const Committee& c, const Eigen::Ref<const Eigen::RowVectorXd>& x, Label y) {
  const int pos = c.positive_votes(x);
  return y == Label::Positive ? static_cast<int>(c.size()) - pos : pos;
}

std::optional<double> branch_value(const ScoringContext& ctx, bool relational, Pair p, Label y, DeltaWorkspace& ws,
                                   std::vector<DeltaEntry>* set_out) {
  const Pool& pool = *ctx.pool;
  const auto& costs = *ctx.costs;
  const auto& dom = *ctx.in_domain;

  if (!relational || !ctx.deduce) {
    const std::int64_t i = pool.index_of(p);
    if (i < 0 || !dom[static_cast<std::size_t>(i)]) return 0.0;
    if (set_out) set_out->push_back({p, y, LabelSource::queried()});
    return costs.cost(static_cast<std::size_t>(i), y);
  }

  if (!ctx.closure) throw std::logic_error("relational scoring needs a closure");
  if (ctx.closure->compute_delta(p, y, ws)) return std::nullopt;
  double sum = 0.0;
  std::size_t count = 0;
  auto visit = [&](const BitMatrix& m, Label lab) {
    m.for_each([&](std::size_t r, std::size_t c) {
      const Pair q{static_cast<NodeId>(r), static_cast<NodeId>(c)};
      const std::int64_t i = pool.index_of(q);
      if (i < 0 || !dom[static_cast<std::size_t>(i)]) return;
      sum += costs.cost(static_cast<std::size_t>(i), lab);
      ++count;
    });
  };
  visit(ws.added_positive(), Label::Positive);
  visit(ws.added_negative(), Label::Negative);
  if (set_out) {
    for (const DeltaEntry& e : ctx.closure->to_delta(ws, p, LabelSource::queried()).entries) {
      const std::int64_t i = pool.index_of(e.pair);
      if (i >= 0 && dom[static_cast<std::size_t>(i)]) set_out->push_back(e);
    }
  }
  if (ctx.normalize && count > 0) sum /= static_cast<double>(count);
  return sum;
}

namespace {

double min_value(const ScoringContext& ctx, bool relational, Pair p, DeltaWorkspace& ws) {
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (Label y : {Label::Negative, Label::Positive}) {
    if (auto v = branch_value(ctx, relational, p, y, ws)) {
      best = std::min(best, *v);
      any = true;
    }
  }
  return any ? best : -std::numeric_limits<double>::infinity();
}

struct Best {
  double value = -std::numeric_limits<double>::infinity();
  Pair pair{};
  bool set = false;

  void offer(double v, Pair p) {
    if (!set || v > value || (v == value && p < pair)) {
      value = v;
      pair = p;
      set = true;
    }
  }
};

}  // namespace

StrategyScore score_candidate(const ScoringContext& ctx, bool relational, Pair p) {
  DeltaWorkspace ws(ctx.pool->num_nodes());
  StrategyScore s;
  s.pair = p;
  s.value = std::numeric_limits<double>::infinity();
  bool any = false;
  for (Label y : {Label::Negative, Label::Positive}) {
    BranchScore& b = s.per_label[y == Label::Positive];
    if (auto v = branch_value(ctx, relational, p, y, ws, &b.set)) {
      b.feasible = true;
      b.value = *v;
      s.value = std::min(s.value, *v);
      any = true;
    }
  }
  if (!any) s.value = -std::numeric_limits<double>::infinity();
  return s;
}

namespace {

double relational_branch(const OrderClosure& h, const Pool& pool, const std::vector<char>& dom,
                         const LabelCosts& costs, Pair p, Label y) {
  ScoringContext ctx{&pool, &dom, &h, &costs};
  DeltaWorkspace ws(pool.num_nodes());
  return branch_value(ctx, true, p, y, ws).value_or(0.0);
}

}  // namespace

double score_cnt(const OrderClosure& h, const Pool& pool, const std::vector<char>& in_domain, Pair p, Label y) {
  const LabelCosts c = unit_costs(pool.size());
  return relational_branch(h, pool, in_domain, c, p, y);
}

double score_lcr(const OrderClosure& h, const Pool& pool, const std::vector<char>& in_domain, const LabelCosts& lc,
                 Pair p, Label y) {
  return relational_branch(h, pool, in_domain, lc, p, y);
}

double score_qbcr(const OrderClosure& h, const Pool& pool, const std::vector<char>& in_domain,
                  const LabelCosts& qbc, Pair p, Label y) {
  return relational_branch(h, pool, in_domain, qbc, p, y);
}

std::vector<double> candidate_values(const Strategy& s, std::span<const Pair> du, const ScoringContext& ctx) {
  std::vector<double> out(du.size());
  tbb::enumerable_thread_specific<DeltaWorkspace> spaces([&] { return DeltaWorkspace(ctx.pool->num_nodes()); });
  tbb::parallel_for(std::size_t{0}, du.size(), [&](std::size_t i) {
    out[i] = min_value(ctx, s.relational_scoring(), du[i], spaces.local());
  });
  return out;
}

Pair select(const Strategy& s, std::span<const Pair> du, const ScoringContext& ctx, std::mt19937_64& rng,
            const SelectOptions& opt) {
  if (du.empty()) throw std::invalid_argument("select: no unlabeled candidates");
  if (s.kind == StrategyKind::Random) {
    std::uniform_int_distribution<std::size_t> pick(0, du.size() - 1);
    return du[pick(rng)];
  }
  std::vector<Pair> capped;
  if (opt.candidate_cap > 0 && opt.candidate_cap < du.size()) {
    std::sample(du.begin(), du.end(), std::back_inserter(capped), opt.candidate_cap, rng);
    du = capped;
  }
  const bool relational = s.relational_scoring();
  tbb::enumerable_thread_specific<DeltaWorkspace> spaces([&] { return DeltaWorkspace(ctx.pool->num_nodes()); });
  const Best best = tbb::parallel_reduce(
      tbb::blocked_range<std::size_t>(0, du.size()), Best{},
      [&](const tbb::blocked_range<std::size_t>& r, Best acc) {
        DeltaWorkspace& ws = spaces.local();
        for (std::size_t i = r.begin(); i != r.end(); ++i) acc.offer(min_value(ctx, relational, du[i], ws), du[i]);
        return acc;
      },
      [](Best a, const Best& b) {
        if (b.set) a.offer(b.value, b.pair);
        return a;
      });
  return best.pair;
}

}  // namespace poal
