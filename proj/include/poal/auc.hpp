#pragma once

#include <span>

#include "poal/order.hpp"

namespace poal {

/// Area under the ROC curve via the rank-sum statistic; tied scores count
/// one half. Throws std::domain_error unless both classes are present.
double auc(std::span<const double> scores, std::span<const Label> labels);

}  // namespace poal
