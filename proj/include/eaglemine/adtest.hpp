#pragma once

#include <vector>

namespace eaglemine {

/// Composite normality test with estimated mean and variance.
struct AdResult {
    double a2 = 0.0;       // Anderson-Darling statistic
    double a2_star = 0.0;  // small-sample adjusted statistic
    bool rejected = false;
    bool too_small = false;   // fewer than 8 samples: never rejected
    bool degenerate = false;  // zero sample variance: always rejected
};

/// Critical value of the adjusted statistic at the 1% level.
inline constexpr double kAdCritical1pc = 1.0348;
inline constexpr int kAdMinSamples = 8;

AdResult ad_statistic(std::vector<double> samples);

}  // namespace eaglemine
