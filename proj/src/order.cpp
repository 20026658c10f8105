#include "poal/order.hpp"

#include <array>
#include <sstream>

namespace poal {

namespace {
constexpr std::array<std::string_view, kRuleCount> kRuleNames = {"N", "R", "S", "T", "O", "Nprime"};
}

Label label_from_int(int v) {
  if (v == 1) return Label::Positive;
  if (v == -1) return Label::Negative;
  throw std::invalid_argument("label must be +1 or -1, got " + std::to_string(v));
}

std::string_view to_string(Rule r) { return kRuleNames[static_cast<std::size_t>(r)]; }

std::string_view to_string(LabelSource s) {
  switch (s.kind) {
    case LabelSource::Kind::Seed:
      return "Seed";
    case LabelSource::Kind::Queried:
      return "Queried";
    case LabelSource::Kind::Deduced:
      break;
  }
  return to_string(s.rule);
}

LabelSource source_from_string(std::string_view s) {
  if (s == "Seed") return LabelSource::seed();
  if (s == "Queried") return LabelSource::queried();
  for (std::size_t i = 0; i < kRuleCount; ++i)
    if (kRuleNames[i] == s) return LabelSource::deduced(static_cast<Rule>(i));
  throw std::invalid_argument("unknown label source '" + std::string(s) + "'");
}

namespace {
std::string describe(const Conflict& c) {
  std::ostringstream os;
  os << "labeling (" << c.trigger.src << "," << c.trigger.dst << ") as " << to_int(c.trigger_label)
     << " deduces (" << c.pair.src << "," << c.pair.dst << ") = " << -to_int(c.existing)
     << " via rule " << to_string(c.rule) << ", but it is already labeled " << to_int(c.existing)
     << " (" << to_string(c.existing_source) << ")";
  return os.str();
}
}  // namespace

ConflictingLabel::ConflictingLabel(const Conflict& c)
    : std::runtime_error(describe(c)), conflict_(c) {}

}  // namespace poal
