#pragma once

#include <vector>

namespace awarenet {

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either input is constant.
double spearman_rank_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace awarenet
