#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "poal/bitmatrix.hpp"
#include "poal/order.hpp"

namespace poal {

/// A strict order on {0..n-1}, stored transitively closed.
class GroundTruth {
 public:
  GroundTruth() = default;
  /// Accepts a reduced DAG or an already closed relation; closes it.
  /// Throws std::invalid_argument on reflexive edges or cycles.
  GroundTruth(std::size_t num_nodes, std::span<const Pair> edges);

  std::size_t num_nodes() const { return n_; }
  std::size_t size() const { return relation_.count(); }
  bool contains(Pair p) const { return p.src < n_ && p.dst < n_ && relation_.test(p.src, p.dst); }
  const BitMatrix& relation() const { return relation_; }
  std::vector<Pair> pairs() const;

 private:
  std::size_t n_ = 0;
  BitMatrix relation_;
};

/// Reads `src,dst` lines (header optional). The node count is the largest id
/// plus one, or `min_nodes` if larger.
GroundTruth load_ground_truth_csv(const std::filesystem::path& path, std::size_t min_nodes = 0);

/// True iff `pairs` is irreflexive, transitive and asymmetric.
bool is_strict_order(std::span<const Pair> pairs);

/// +1 iff p belongs to the order. Throws std::invalid_argument on reflexive pairs.
Label oracle_label(const GroundTruth& g, Pair p);

/// Minimal edge set with the same reachability, sorted by (src, dst).
std::vector<Pair> transitive_reduction(const GroundTruth& g);

struct QueryBounds {
  std::size_t lower = 0;  // |transitive reduction|
  std::size_t upper = 0;  // |closure of the relation|, positives plus implied negatives
  bool operator==(const QueryBounds&) const = default;
};

QueryBounds query_bounds(const GroundTruth& g);

}  // namespace poal
