#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "poal/bitmatrix.hpp"
#include "poal/order.hpp"

namespace poal {

struct LabeledPair {
  Pair pair;
  Label label;
};

struct DeltaEntry {
  Pair pair;
  Label label;
  LabelSource source;
  bool operator==(const DeltaEntry&) const = default;
};

/// Pairs newly labeled by one insertion, sorted by (src, dst).
struct ClosureDelta {
  std::vector<DeltaEntry> entries;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
  std::vector<Pair> positives() const;
  std::vector<Pair> negatives() const;
  std::size_t count(Rule r) const;
};

/// How the O set of a positive insertion is assembled.
enum class OMode {
  Unreduced,      // union of N'' over every pair of S and T
  Reduced,        // union of N''(b,d) over S and N''(c,a) over T
  ReducedPruned,  // Reduced, skipping roots already covered by an evaluated N''
};

/// Scratch space for delta computation. One per thread; reused across calls.
class DeltaWorkspace {
 public:
  DeltaWorkspace() = default;
  explicit DeltaWorkspace(std::size_t n);

  std::size_t num_nodes() const { return n_; }

  /// Newly added pairs tagged with the first rule that produced them.
  const BitMatrix& added(Rule r) const { return by_rule_[static_cast<std::size_t>(r)]; }
  const BitMatrix& added_positive() const { return pos_; }
  const BitMatrix& added_negative() const { return neg_; }
  /// Raw O set (including pairs that were already labeled).
  const BitMatrix& o_raw() const { return o_raw_; }
  /// Number of N'' sets evaluated while building O.
  std::size_t npp_evaluations() const { return npp_evaluations_; }
  std::size_t added_count() const { return added_count_; }
  bool is_empty() const { return added_count_ == 0; }

 private:
  friend class OrderClosure;
  void reset(std::size_t n);

  std::size_t n_ = 0;
  std::array<BitMatrix, kRuleCount> by_rule_;
  BitMatrix pos_, neg_, o_raw_;
  std::vector<Word> anc_a_, desc_b_, neg_targets_, neg_sources_, scratch_;
  std::vector<std::pair<std::size_t, std::size_t>> roots_;
  std::size_t npp_evaluations_ = 0;
  std::size_t added_count_ = 0;
};

/// Deductively complete labeled set over a strict order.
///
/// Positive labels are stored as descendant rows plus their transpose
/// (ancestor rows); they always form a transitively closed, asymmetric
/// relation. Negative labels are stored the same way so that rules which
/// pivot on a node's negative out- or in-neighbors are row unions.
class OrderClosure {
 public:
  OrderClosure() = default;
  explicit OrderClosure(std::size_t num_nodes);

  std::size_t num_nodes() const { return n_; }
  /// |H|: number of labeled pairs.
  std::size_t size() const { return num_pos_ + num_neg_; }
  std::size_t num_positives() const { return num_pos_; }
  std::size_t num_negatives() const { return num_neg_; }

  std::optional<Label> label(Pair p) const;
  bool contains(Pair p) const { return label(p).has_value(); }
  std::optional<LabelSource> source(Pair p) const;

  /// Row r holds the descendants of r within the positive labels.
  const BitMatrix& positives() const { return desc_; }
  /// Row c holds the ancestors of c within the positive labels.
  const BitMatrix& ancestors() const { return anc_; }
  const BitMatrix& negatives() const { return neg_out_; }

  std::vector<Pair> positive_pairs() const;
  std::vector<Pair> negative_pairs() const;

  /// Adds (p, y) and every pair it implies. Throws ConflictingLabel, leaving
  /// the closure untouched, when a deduction contradicts an existing label.
  ClosureDelta insert(Pair p, Label y, LabelSource origin = LabelSource::queried());

  /// Same delta as insert() without mutating the closure.
  ClosureDelta hypothetical_delta(Pair p, Label y, OMode mode = OMode::ReducedPruned) const;

  /// Low-level delta computation into a reusable workspace. Returns the
  /// conflict instead of throwing. Safe to call concurrently on a shared
  /// closure with distinct workspaces.
  std::optional<Conflict> compute_delta(Pair p, Label y, DeltaWorkspace& ws,
                                        OMode mode = OMode::ReducedPruned) const;

  /// Applies a workspace previously filled by compute_delta(p, y, ...).
  void commit(const DeltaWorkspace& ws, Pair p, LabelSource origin);

  /// Materializes a workspace into a delta; (p) itself is tagged with origin.
  ClosureDelta to_delta(const DeltaWorkspace& ws, Pair p, LabelSource origin) const;

  /// Builds a closure from a full label matrix that is already complete.
  /// Sources default to Seed for every pair.
  static OrderClosure from_matrices(const BitMatrix& positives, const BitMatrix& negatives);
  void set_source(Pair p, LabelSource s);

  /// Same positive and negative sets (sources ignored).
  bool same_labels(const OrderClosure& o) const {
    return n_ == o.n_ && desc_ == o.desc_ && neg_out_ == o.neg_out_;
  }

 private:
  void check_pair(Pair p) const;
  std::size_t idx(Pair p) const { return std::size_t{p.src} * n_ + p.dst; }

  std::size_t n_ = 0;
  BitMatrix desc_, anc_, neg_out_, neg_in_;
  std::vector<LabelSource> sources_;
  std::size_t num_pos_ = 0;
  std::size_t num_neg_ = 0;
};

/// Closure of a label list built by successive inserts (order-independent).
OrderClosure seed_closure(std::size_t num_nodes, std::span<const LabeledPair> labels);

/// Least fixpoint of the four completeness rules, computed by exhaustive
/// triple scans. Independent of the incremental algorithm; used as an oracle.
OrderClosure brute_force_closure(std::size_t num_nodes, std::span<const LabeledPair> labels);

/// One JSON object per labeled pair, sorted by (src, dst):
/// {"src":u,"dst":v,"label":1,"source":"N"}
std::string dump_closure_jsonl(const OrderClosure& h);

}  // namespace poal
