#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <random>
#include <vector>

#include "poal/closure.hpp"
#include "poal/ground_truth.hpp"

namespace poal {

/// Random DAG: a random topological permutation with forward edges of probability p.
inline GroundTruth random_order(std::size_t n, double p, std::mt19937_64& rng) {
  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), NodeId{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::bernoulli_distribution edge(p);
  std::vector<Pair> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (edge(rng)) edges.push_back({perm[i], perm[j]});
  return GroundTruth(n, edges);
}

/// Random oracle-consistent label sequence of length k over distinct pairs.
inline std::vector<LabeledPair> random_labels(const GroundTruth& g, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = g.num_nodes();
  std::vector<Pair> all;
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = 0; b < n; ++b)
      if (a != b) all.push_back({a, b});
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::min(k, all.size()));
  std::vector<LabeledPair> out;
  for (const Pair& p : all) out.push_back({p, oracle_label(g, p)});
  return out;
}

}  // namespace poal
