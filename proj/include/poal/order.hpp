#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace poal {

/// Dense 0-based index into the element set.
using NodeId = std::uint32_t;

/// Ordered pair (src, dst). Candidate pairs are never reflexive.
struct Pair {
  NodeId src = 0;
  NodeId dst = 0;

  bool reflexive() const { return src == dst; }
  Pair reversed() const { return {dst, src}; }
  auto operator<=>(const Pair&) const = default;
};

struct PairHash {
  std::size_t operator()(const Pair& p) const noexcept {
    return std::hash<std::uint64_t>{}((std::uint64_t{p.src} << 32) | p.dst);
  }
};

/// +1: the pair belongs to the order; -1: it does not.
enum class Label : std::int8_t { Negative = -1, Positive = 1 };

inline constexpr Label flip(Label y) {
  return y == Label::Positive ? Label::Negative : Label::Positive;
}
inline constexpr int to_int(Label y) { return static_cast<int>(y); }
Label label_from_int(int v);

/// Deduction rule that produced a label. NPrime is the negative-insert rule.
enum class Rule : std::uint8_t { N, R, S, T, O, NPrime };
inline constexpr std::size_t kRuleCount = 6;

struct LabelSource {
  enum class Kind : std::uint8_t { Seed, Queried, Deduced };
  Kind kind = Kind::Queried;
  Rule rule = Rule::N;  // meaningful only for Deduced

  static constexpr LabelSource seed() { return {Kind::Seed, Rule::N}; }
  static constexpr LabelSource queried() { return {Kind::Queried, Rule::N}; }
  static constexpr LabelSource deduced(Rule r) { return {Kind::Deduced, r}; }

  bool is_deduced() const { return kind == Kind::Deduced; }
  bool operator==(const LabelSource& o) const {
    return kind == o.kind && (kind != Kind::Deduced || rule == o.rule);
  }
};

/// "Seed", "Queried", "N", "R", "S", "T", "O" or "Nprime".
std::string_view to_string(LabelSource s);
std::string_view to_string(Rule r);
LabelSource source_from_string(std::string_view s);

/// Everything needed to explain why a label could not be applied.
struct Conflict {
  Pair trigger;              // pair whose insertion was attempted
  Label trigger_label;
  Pair pair;                 // pair whose existing label is contradicted
  Label existing;
  LabelSource existing_source;
  Rule rule;                 // rule that would have produced the opposite label
};

class ConflictingLabel : public std::runtime_error {
 public:
  explicit ConflictingLabel(const Conflict& c);
  const Conflict& conflict() const { return conflict_; }

 private:
  Conflict conflict_;
};

}  // namespace poal
