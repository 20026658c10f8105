#include <vector>

#include "poal/closure.hpp"

namespace poal {

namespace {

// Dense label matrix: 0 unlabeled, +1, -1. Tags record the completeness rule
// that first produced a deduced label, mapped onto the nearest delta rule.
struct Grid {
  std::size_t n;
  std::vector<int> v;
  std::vector<LabelSource> src;
  int get(std::size_t a, std::size_t b) const { return v[a * n + b]; }
};

[[noreturn]] void conflict_at(const Grid& g, Pair trigger, Label trigger_label, std::size_t a, std::size_t b,
                              Rule rule) {
  const Pair q{static_cast<NodeId>(a), static_cast<NodeId>(b)};
  const Label existing = a == b ? Label::Negative : label_from_int(g.get(a, b));
  throw ConflictingLabel(Conflict{trigger, trigger_label, q, existing, g.src[a * g.n + b], rule});
}

// Returns true when a new label was written.
bool put(Grid& g, std::size_t a, std::size_t b, int y, Rule rule, Pair trigger, Label trigger_label) {
  if (a == b) conflict_at(g, trigger, trigger_label, a, b, rule);
  int& cell = g.v[a * g.n + b];
  if (cell == y) return false;
  if (cell != 0) conflict_at(g, trigger, trigger_label, a, b, rule);
  cell = y;
  g.src[a * g.n + b] = LabelSource::deduced(rule);
  return true;
}

}  // namespace

OrderClosure brute_force_closure(std::size_t num_nodes, std::span<const LabeledPair> labels) {
  const std::size_t n = num_nodes;
  Grid g{n, std::vector<int>(n * n, 0), std::vector<LabelSource>(n * n, LabelSource::seed())};
  Pair trigger{};
  Label trigger_label = Label::Positive;

  for (const auto& [p, y] : labels) {
    if (p.src >= n || p.dst >= n) throw std::out_of_range("pair outside node range");
    if (p.reflexive()) throw std::invalid_argument("reflexive pair is never labeled");
    trigger = p;
    trigger_label = y;
    int& cell = g.v[p.src * n + p.dst];
    if (cell != 0 && cell != to_int(y))
      conflict_at(g, p, y, p.src, p.dst, y == Label::Positive ? Rule::N : Rule::NPrime);
    cell = to_int(y);
    g.src[p.src * n + p.dst] = LabelSource::seed();
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (g.get(a, b) != 1) continue;
        // (iv) asymmetry
        changed |= put(g, b, a, -1, Rule::R, trigger, trigger_label);
        for (std::size_t c = 0; c < n; ++c) {
          // (i) transitivity: (a,b)+, (b,c)+ => (a,c)+
          if (g.get(b, c) == 1) changed |= put(g, a, c, 1, Rule::N, trigger, trigger_label);
          // (ii) (a,b)+, (a,c)- => (b,c)-
          if (g.get(a, c) == -1 && b != c) changed |= put(g, b, c, -1, Rule::S, trigger, trigger_label);
          // (iii) (a,b)+ read as (b',c') = (a,b): (c,b)- => (c,a)-
          if (g.get(c, b) == -1 && c != a) changed |= put(g, c, a, -1, Rule::T, trigger, trigger_label);
        }
      }
    }
  }

  BitMatrix pos(n), neg(n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      if (g.get(a, b) == 1) pos.set(a, b);
      if (g.get(a, b) == -1) neg.set(a, b);
    }
  OrderClosure h = OrderClosure::from_matrices(pos, neg);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (g.get(a, b) != 0) h.set_source({static_cast<NodeId>(a), static_cast<NodeId>(b)}, g.src[a * n + b]);
  return h;
}

}  // namespace poal
