#pragma once

#include <span>

namespace mlbm {

/// Adjusted Rand index between two labelings of the same items. Returns 1 when
/// both labelings are identical up to relabeling, including the degenerate
/// case where the index is undefined (e.g. both put everything in one cluster).
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

}  // namespace mlbm
