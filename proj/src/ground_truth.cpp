#include "poal/ground_truth.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "poal/closure.hpp"
#include "poal/csv.hpp"

namespace poal {

GroundTruth::GroundTruth(std::size_t num_nodes, std::span<const Pair> edges)
    : n_(num_nodes), relation_(num_nodes) {
  std::vector<std::vector<NodeId>> children(n_);
  std::vector<std::size_t> indegree(n_, 0);
  for (const Pair& e : edges) {
    if (e.src >= n_ || e.dst >= n_)
      throw std::invalid_argument("edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                                  ") outside node range");
    if (e.reflexive()) throw std::invalid_argument("reflexive edge " + std::to_string(e.src));
    if (relation_.test(e.src, e.dst)) continue;
    relation_.set(e.src, e.dst);
    children[e.src].push_back(e.dst);
    ++indegree[e.dst];
  }

  // Kahn order; leftover nodes sit on a cycle.
  std::vector<NodeId> order;
  order.reserve(n_);
  for (std::size_t v = 0; v < n_; ++v)
    if (indegree[v] == 0) order.push_back(static_cast<NodeId>(v));
  for (std::size_t i = 0; i < order.size(); ++i)
    for (NodeId c : children[order[i]])
      if (--indegree[c] == 0) order.push_back(c);
  if (order.size() != n_) throw std::invalid_argument("relation contains a cycle; not a strict order");

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto row = relation_.row(*it);
    for (NodeId c : children[*it]) bits::or_into(row, relation_.row(c));
  }
}

std::vector<Pair> GroundTruth::pairs() const {
  std::vector<Pair> out;
  relation_.for_each([&](std::size_t r, std::size_t c) {
    out.push_back({static_cast<NodeId>(r), static_cast<NodeId>(c)});
  });
  return out;
}

GroundTruth load_ground_truth_csv(const std::filesystem::path& path, std::size_t min_nodes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<Pair> edges;
  std::size_t n = min_nodes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = csv::split(line);
    if (fields.empty()) continue;
    if (line_no == 1 && !csv::is_integer(fields[0])) continue;  // header
    if (fields.size() != 2) throw csv::ParseError(path, line_no, "expected 2 fields");
    const Pair e{csv::parse_node(fields[0], path, line_no), csv::parse_node(fields[1], path, line_no)};
    n = std::max<std::size_t>(n, std::max(e.src, e.dst) + std::size_t{1});
    edges.push_back(e);
  }
  return GroundTruth(n, edges);
}

bool is_strict_order(std::span<const Pair> pairs) {
  std::set<Pair> rel(pairs.begin(), pairs.end());
  for (const Pair& p : rel) {
    if (p.reflexive()) return false;
    if (rel.contains(p.reversed())) return false;
  }
  for (const Pair& ab : rel)
    for (auto it = rel.lower_bound(Pair{ab.dst, 0}); it != rel.end() && it->src == ab.dst; ++it)
      if (!rel.contains(Pair{ab.src, it->dst})) return false;
  return true;
}

Label oracle_label(const GroundTruth& g, Pair p) {
  if (p.reflexive()) throw std::invalid_argument("oracle is undefined on reflexive pairs");
  if (p.src >= g.num_nodes() || p.dst >= g.num_nodes()) throw std::out_of_range("pair outside node range");
  return g.contains(p) ? Label::Positive : Label::Negative;
}

std::vector<Pair> transitive_reduction(const GroundTruth& g) {
  // In a closed relation, (u,v) is redundant iff some w has u->w and w->v.
  const auto& rel = g.relation();
  const auto inv = rel.transposed();
  std::vector<Pair> out;
  rel.for_each([&](std::size_t u, std::size_t v) {
    if (!bits::intersects(rel.row(u), inv.row(v)))
      out.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
  });
  return out;
}

QueryBounds query_bounds(const GroundTruth& g) {
  std::vector<LabeledPair> labels;
  for (const Pair& p : g.pairs()) labels.push_back({p, Label::Positive});
  const OrderClosure h = seed_closure(g.num_nodes(), labels);
  return {transitive_reduction(g).size(), h.size()};
}

}  // namespace poal
