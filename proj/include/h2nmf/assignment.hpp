#pragma once

#include <cstddef>
#include <vector>

#include "h2nmf/matrix.hpp"

namespace h2nmf {

// Minimum-cost perfect matching on a square cost matrix (Hungarian method
// with potentials, O(r^3)). Row i is matched to column result[i].
std::vector<std::size_t> min_cost_assignment(const Matrix& cost);

}  // namespace h2nmf
