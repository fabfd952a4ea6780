#pragma once

#include <span>
#include <vector>

namespace kmax {

/// Weighted least-squares isotonic regression (pool adjacent violators).
/// Returns the nondecreasing fit; weights must be positive.
std::vector<double> isotonic_regression(std::span<const double> y, std::span<const double> w);

}  // namespace kmax
