#include "eaglemine/adtest.hpp"

#include <algorithm>
#include <cmath>

#include "eaglemine/bvn.hpp"

namespace eaglemine {

AdResult ad_statistic(std::vector<double> samples) {
    AdResult res;
    std::size_t n = samples.size();
    if (n < std::size_t(kAdMinSamples)) {
        res.too_small = true;
        return res;
    }
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= double(n);
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    var /= double(n - 1);
    if (!(var > 0.0)) {
        res.degenerate = true;
        res.rejected = true;
        return res;
    }
    double sd = std::sqrt(var);
    std::sort(samples.begin(), samples.end());

    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double lo = norm_cdf((samples[i] - mean) / sd);
        double hi = norm_cdf((samples[n - 1 - i] - mean) / sd);
        lo = std::clamp(lo, 1e-300, 1.0 - 1e-16);
        hi = std::clamp(hi, 0.0, 1.0 - 1e-16);
        s += double(2 * i + 1) * (std::log(lo) + std::log1p(-hi));
    }
    res.a2 = -double(n) - s / double(n);
    res.a2_star = res.a2 * (1.0 + 4.0 / double(n) - 25.0 / (double(n) * double(n)));
    res.rejected = res.a2_star > kAdCritical1pc;
    return res;
}

}  // namespace eaglemine
