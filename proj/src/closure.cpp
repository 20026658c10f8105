#include "poal/closure.hpp"

#include <algorithm>
#include <sstream>

namespace poal {

// ---------------------------------------------------------------------------
// ClosureDelta

std::vector<Pair> ClosureDelta::positives() const {
  std::vector<Pair> out;
  for (const auto& e : entries)
    if (e.label == Label::Positive) out.push_back(e.pair);
  return out;
}

std::vector<Pair> ClosureDelta::negatives() const {
  std::vector<Pair> out;
  for (const auto& e : entries)
    if (e.label == Label::Negative) out.push_back(e.pair);
  return out;
}

std::size_t ClosureDelta::count(Rule r) const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [&](const DeltaEntry& e) {
    return e.source.is_deduced() && e.source.rule == r;
  }));
}

// ---------------------------------------------------------------------------
// DeltaWorkspace

DeltaWorkspace::DeltaWorkspace(std::size_t n) { reset(n); }

void DeltaWorkspace::reset(std::size_t n) {
  if (n != n_ || pos_.size() != n) {
    n_ = n;
    for (auto& m : by_rule_) m = BitMatrix(n);
    pos_ = BitMatrix(n);
    neg_ = BitMatrix(n);
    o_raw_ = BitMatrix(n);
    const std::size_t w = words_for(n);
    anc_a_.assign(w, 0);
    desc_b_.assign(w, 0);
    neg_targets_.assign(w, 0);
    neg_sources_.assign(w, 0);
    scratch_.assign(2 * w, 0);
  } else {
    for (auto& m : by_rule_) m.clear();
    pos_.clear();
    neg_.clear();
    o_raw_.clear();
  }
  roots_.clear();
  npp_evaluations_ = 0;
  added_count_ = 0;
}

// ---------------------------------------------------------------------------
// OrderClosure

OrderClosure::OrderClosure(std::size_t num_nodes)
    : n_(num_nodes),
      desc_(num_nodes),
      anc_(num_nodes),
      neg_out_(num_nodes),
      neg_in_(num_nodes),
      sources_(num_nodes * num_nodes) {}

void OrderClosure::check_pair(Pair p) const {
  if (p.src >= n_ || p.dst >= n_)
    throw std::out_of_range("pair (" + std::to_string(p.src) + "," + std::to_string(p.dst) +
                            ") outside node range " + std::to_string(n_));
  if (p.reflexive()) throw std::invalid_argument("reflexive pair (" + std::to_string(p.src) + "," +
                                                 std::to_string(p.dst) + ") is never labeled");
}

std::optional<Label> OrderClosure::label(Pair p) const {
  if (p.src >= n_ || p.dst >= n_) return std::nullopt;
  if (desc_.test(p.src, p.dst)) return Label::Positive;
  if (neg_out_.test(p.src, p.dst)) return Label::Negative;
  return std::nullopt;
}

std::optional<LabelSource> OrderClosure::source(Pair p) const {
  if (!contains(p)) return std::nullopt;
  return sources_[idx(p)];
}

void OrderClosure::set_source(Pair p, LabelSource s) {
  check_pair(p);
  sources_[idx(p)] = s;
}

std::vector<Pair> OrderClosure::positive_pairs() const {
  std::vector<Pair> out;
  desc_.for_each([&](std::size_t r, std::size_t c) {
    out.push_back({static_cast<NodeId>(r), static_cast<NodeId>(c)});
  });
  return out;
}

std::vector<Pair> OrderClosure::negative_pairs() const {
  std::vector<Pair> out;
  neg_out_.for_each([&](std::size_t r, std::size_t c) {
    out.push_back({static_cast<NodeId>(r), static_cast<NodeId>(c)});
  });
  return out;
}

std::optional<Conflict> OrderClosure::compute_delta(Pair p, Label y, DeltaWorkspace& ws,
                                                    OMode mode) const {
  check_pair(p);
  ws.reset(n_);
  const std::size_t a = p.src;
  const std::size_t b = p.dst;
  const std::size_t none = n_;

  auto existing = [&](std::size_t r, std::size_t c, Label lab, Rule rule) {
    const Pair q{static_cast<NodeId>(r), static_cast<NodeId>(c)};
    return Conflict{p, y, q, lab, sources_[idx(q)], rule};
  };

  if (y == Label::Negative) {
    if (neg_out_.test(a, b)) return std::nullopt;
    if (desc_.test(a, b)) return existing(a, b, Label::Positive, Rule::NPrime);

    // N' = (descendants of a, plus a) x (ancestors of b, plus b), as (d, c).
    auto& da = ws.desc_b_;  // reuse buffers
    auto& ab = ws.anc_a_;
    bits::copy(da, desc_.row(a));
    bits::set(da, a);
    bits::copy(ab, anc_.row(b));
    bits::set(ab, b);
    auto& out = ws.by_rule_[static_cast<std::size_t>(Rule::NPrime)];
    std::optional<Conflict> found;
    bits::for_each(std::span<const Word>(da), [&](std::size_t d) {
      if (found) return;
      const std::size_t c = bits::first_common(ab, desc_.row(d), none);
      if (c != none) found = existing(d, c, Label::Positive, Rule::NPrime);
    });
    if (found) return found;
    bits::for_each(std::span<const Word>(da), [&](std::size_t d) {
      auto row = out.row(d);
      auto negrow = neg_out_.row(d);
      for (std::size_t k = 0; k < row.size(); ++k) row[k] = ab[k] & ~negrow[k];
      bits::reset(row, d);
      bits::or_into(ws.neg_.row(d), row);
    });
    ws.added_count_ = ws.neg_.count();
    return std::nullopt;
  }

  // Positive insertion.
  if (desc_.test(a, b)) return std::nullopt;
  if (neg_out_.test(a, b)) return existing(a, b, Label::Negative, Rule::N);

  auto& aa = ws.anc_a_;
  auto& db = ws.desc_b_;
  bits::copy(aa, anc_.row(a));
  bits::set(aa, a);
  bits::copy(db, desc_.row(b));
  bits::set(db, b);
  const std::span<const Word> aa_c(aa), db_c(db);

  if (bits::intersects(aa, db)) return existing(b, a, Label::Positive, Rule::R);

  // N: (ancestors of a, plus a) x (descendants of b, plus b).
  {
    std::optional<Conflict> found;
    bits::for_each(aa_c, [&](std::size_t c) {
      if (found) return;
      const std::size_t d = bits::first_common(db, neg_out_.row(c), none);
      if (d != none) found = existing(c, d, Label::Negative, Rule::N);
    });
    if (found) return found;
  }
  auto& n_rows = ws.by_rule_[static_cast<std::size_t>(Rule::N)];
  bits::for_each(aa_c, [&](std::size_t c) {
    auto row = n_rows.row(c);
    auto prow = desc_.row(c);
    for (std::size_t k = 0; k < row.size(); ++k) row[k] = db[k] & ~prow[k];
    bits::copy(ws.pos_.row(c), row);
  });

  // Adds raw negatives `src` to row r under `rule`, keeping first-rule tags.
  auto add_negatives = [&](Rule rule, std::size_t r, std::span<const Word> src) {
    auto tag = ws.by_rule_[static_cast<std::size_t>(rule)].row(r);
    auto acc = ws.neg_.row(r);
    auto old = neg_out_.row(r);
    for (std::size_t k = 0; k < tag.size(); ++k) tag[k] |= src[k] & ~old[k] & ~acc[k];
    bits::reset(tag, r);
    bits::or_into(acc, tag);
  };

  // R: reversal of every N pair.
  {
    std::optional<Conflict> found;
    bits::for_each(db_c, [&](std::size_t d) {
      if (found) return;
      const std::size_t c = bits::first_common(aa, desc_.row(d), none);
      if (c != none) found = existing(d, c, Label::Positive, Rule::R);
    });
    if (found) return found;
  }
  bits::for_each(db_c, [&](std::size_t d) { add_negatives(Rule::R, d, aa_c); });

  // E: negative targets of ancestors of a; F: negative sources of descendants of b.
  auto& e_set = ws.neg_targets_;
  auto& f_set = ws.neg_sources_;
  bits::clear(e_set);
  bits::clear(f_set);
  bits::for_each(aa_c, [&](std::size_t c) { bits::or_into(e_set, neg_out_.row(c)); });
  bits::for_each(db_c, [&](std::size_t d) { bits::or_into(f_set, neg_in_.row(d)); });
  const std::span<const Word> e_c(e_set), f_c(f_set);

  // S = Db x E.
  {
    std::optional<Conflict> found;
    bits::for_each(db_c, [&](std::size_t d) {
      if (found) return;
      const std::size_t e = bits::first_common(e_set, desc_.row(d), none);
      if (e != none) found = existing(d, e, Label::Positive, Rule::S);
    });
    if (found) return found;
  }
  bits::for_each(db_c, [&](std::size_t d) { add_negatives(Rule::S, d, e_c); });

  // T = F x Aa.
  {
    std::optional<Conflict> found;
    bits::for_each(f_c, [&](std::size_t e) {
      if (found) return;
      const std::size_t c = bits::first_common(aa, desc_.row(e), none);
      if (c != none) found = existing(e, c, Label::Positive, Rule::T);
    });
    if (found) return found;
  }
  bits::for_each(f_c, [&](std::size_t e) { add_negatives(Rule::T, e, aa_c); });

  // O: unions of N''(c, d) = (D'_c + c) x (A'_d + d), where D' and A' are taken
  // over the positives extended by N.
  const std::size_t w = words_for(n_);
  std::span<Word> dprime(ws.scratch_.data(), w);
  std::span<Word> aprime(ws.scratch_.data() + w, w);
  auto fill_desc_prime = [&](std::size_t x) {
    bits::copy(dprime, desc_.row(x));
    if (bits::test(aa, x)) bits::or_into(dprime, db_c);
    bits::set(dprime, x);
  };
  auto fill_anc_prime = [&](std::size_t x) {
    bits::copy(aprime, anc_.row(x));
    if (bits::test(db, x)) bits::or_into(aprime, aa_c);
    bits::set(aprime, x);
  };
  auto evaluate = [&](std::size_t c, std::size_t d) {
    fill_desc_prime(c);
    fill_anc_prime(d);
    const std::span<const Word> ap(aprime);
    bits::for_each(std::span<const Word>(dprime), [&](std::size_t f) { bits::or_into(ws.o_raw_.row(f), ap); });
    ++ws.npp_evaluations_;
  };

  switch (mode) {
    case OMode::Unreduced: {
      // Every distinct pair of S u T is a root.
      BitMatrix st(n_);
      bits::for_each(db_c, [&](std::size_t d) { bits::or_into(st.row(d), e_c); });
      bits::for_each(f_c, [&](std::size_t e) { bits::or_into(st.row(e), aa_c); });
      st.for_each([&](std::size_t c, std::size_t d) { evaluate(c, d); });
      break;
    }
    case OMode::Reduced:
      bits::for_each(e_c, [&](std::size_t e) { evaluate(b, e); });
      bits::for_each(f_c, [&](std::size_t f) { evaluate(f, a); });
      break;
    case OMode::ReducedPruned: {
      // Visit roots with the largest N'' first so that covered roots are skipped.
      auto& roots = ws.roots_;
      roots.clear();
      bits::for_each(e_c, [&](std::size_t e) {
        fill_anc_prime(e);
        roots.emplace_back(bits::count(std::span<const Word>(aprime)), e);
      });
      std::sort(roots.begin(), roots.end(),
                [](auto& l, auto& r) { return l.first != r.first ? l.first > r.first : l.second < r.second; });
      for (auto [_, e] : roots)
        if (!ws.o_raw_.test(b, e)) evaluate(b, e);
      roots.clear();
      bits::for_each(f_c, [&](std::size_t f) {
        fill_desc_prime(f);
        roots.emplace_back(bits::count(std::span<const Word>(dprime)), f);
      });
      std::sort(roots.begin(), roots.end(),
                [](auto& l, auto& r) { return l.first != r.first ? l.first > r.first : l.second < r.second; });
      for (auto [_, f] : roots)
        if (!ws.o_raw_.test(f, a)) evaluate(f, a);
      break;
    }
  }

  for (std::size_t f = 0; f < n_; ++f) {
    auto orow = ws.o_raw_.row(f);
    if (!bits::any(orow)) continue;
    std::size_t e = bits::first_common(orow, desc_.row(f), none);
    if (e != none) return existing(f, e, Label::Positive, Rule::O);
    e = bits::first_common(orow, ws.pos_.row(f), none);
    if (e != none) {
      const Pair q{static_cast<NodeId>(f), static_cast<NodeId>(e)};
      return Conflict{p, y, q, Label::Positive, LabelSource::deduced(Rule::N), Rule::O};
    }
    add_negatives(Rule::O, f, orow);
  }

  ws.added_count_ = ws.pos_.count() + ws.neg_.count();
  return std::nullopt;
}

void OrderClosure::commit(const DeltaWorkspace& ws, Pair p, LabelSource origin) {
  if (ws.num_nodes() != n_) throw std::invalid_argument("workspace size mismatch");
  ws.pos_.for_each([&](std::size_t r, std::size_t c) {
    desc_.set(r, c);
    anc_.set(c, r);
    sources_[r * n_ + c] = LabelSource::deduced(Rule::N);
    ++num_pos_;
  });
  for (Rule rule : {Rule::R, Rule::S, Rule::T, Rule::O, Rule::NPrime}) {
    ws.added(rule).for_each([&](std::size_t r, std::size_t c) {
      neg_out_.set(r, c);
      neg_in_.set(c, r);
      sources_[r * n_ + c] = LabelSource::deduced(rule);
      ++num_neg_;
    });
  }
  if (ws.pos_.test(p.src, p.dst) || ws.neg_.test(p.src, p.dst)) sources_[idx(p)] = origin;
}

ClosureDelta OrderClosure::to_delta(const DeltaWorkspace& ws, Pair p, LabelSource origin) const {
  ClosureDelta delta;
  delta.entries.reserve(ws.added_count());
  for (std::size_t i = 0; i < kRuleCount; ++i) {
    const Rule rule = static_cast<Rule>(i);
    const Label lab = rule == Rule::N ? Label::Positive : Label::Negative;
    ws.added(rule).for_each([&](std::size_t r, std::size_t c) {
      const Pair q{static_cast<NodeId>(r), static_cast<NodeId>(c)};
      delta.entries.push_back({q, lab, q == p ? origin : LabelSource::deduced(rule)});
    });
  }
  std::sort(delta.entries.begin(), delta.entries.end(),
            [](const DeltaEntry& l, const DeltaEntry& r) { return l.pair < r.pair; });
  return delta;
}

ClosureDelta OrderClosure::insert(Pair p, Label y, LabelSource origin) {
  DeltaWorkspace ws(n_);
  if (auto c = compute_delta(p, y, ws)) throw ConflictingLabel(*c);
  ClosureDelta delta = to_delta(ws, p, origin);
  commit(ws, p, origin);
  return delta;
}

ClosureDelta OrderClosure::hypothetical_delta(Pair p, Label y, OMode mode) const {
  DeltaWorkspace ws(n_);
  if (auto c = compute_delta(p, y, ws, mode)) throw ConflictingLabel(*c);
  return to_delta(ws, p, LabelSource::queried());
}

OrderClosure OrderClosure::from_matrices(const BitMatrix& positives, const BitMatrix& negatives) {
  const std::size_t n = positives.size();
  if (negatives.size() != n) throw std::invalid_argument("label matrices differ in size");
  OrderClosure h(n);
  for (std::size_t r = 0; r < n; ++r) {
    if (positives.test(r, r) || negatives.test(r, r))
      throw std::invalid_argument("reflexive pair in label matrix");
    if (bits::intersects(positives.row(r), negatives.row(r)))
      throw std::invalid_argument("pair labeled both positive and negative");
  }
  h.desc_ = positives;
  h.anc_ = positives.transposed();
  h.neg_out_ = negatives;
  h.neg_in_ = negatives.transposed();
  h.num_pos_ = positives.count();
  h.num_neg_ = negatives.count();
  std::fill(h.sources_.begin(), h.sources_.end(), LabelSource::seed());
  return h;
}

OrderClosure seed_closure(std::size_t num_nodes, std::span<const LabeledPair> labels) {
  OrderClosure h(num_nodes);
  for (const auto& [p, y] : labels) h.insert(p, y, LabelSource::seed());
  return h;
}

std::string dump_closure_jsonl(const OrderClosure& h) {
  std::ostringstream os;
  const std::size_t n = h.num_nodes();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const Pair p{static_cast<NodeId>(r), static_cast<NodeId>(c)};
      const auto lab = h.label(p);
      if (!lab) continue;
      os << "{\"src\":" << r << ",\"dst\":" << c << ",\"label\":" << to_int(*lab) << ",\"source\":\""
         << to_string(*h.source(p)) << "\"}\n";
    }
  }
  return os.str();
}

}  // namespace poal
