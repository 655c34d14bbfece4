#pragma once

#include <span>
#include <vector>

namespace gwm {

/// Sample quantile by linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be non-empty and ascending; `p` in [0,1].
double quantile_sorted(std::span<const double> sorted, double p);

/// Same as quantile_sorted but sorts a copy first.
double quantile(std::span<const double> values, double p);

double median(std::span<const double> values);

}  // namespace gwm
