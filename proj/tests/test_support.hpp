#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <random>
#include <vector>

#include "poal/closure.hpp"
#include "poal/ground_truth.hpp"
#include "poal/random_order.hpp"

namespace poal::testing {

/// Counts violations of the four completeness rules by exhaustive triple scan.
inline std::size_t completeness_violations(const OrderClosure& h) {
  const std::size_t n = h.num_nodes();
  auto lab = [&](std::size_t a, std::size_t b) -> int {
    if (a == b) return 0;
    auto l = h.label({static_cast<NodeId>(a), static_cast<NodeId>(b)});
    return l ? to_int(*l) : 0;
  };
  std::size_t bad = 0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      if (lab(a, b) == 1 && lab(b, a) != -1) ++bad;
      for (std::size_t c = 0; c < n; ++c) {
        if (lab(a, b) == 1 && lab(b, c) == 1 && lab(a, c) != 1) ++bad;
        if (lab(a, b) == 1 && lab(a, c) == -1 && lab(b, c) != -1) ++bad;
        if (lab(b, c) == 1 && lab(a, c) == -1 && lab(a, b) != -1) ++bad;
      }
    }
  return bad;
}

}  // namespace poal::testing
