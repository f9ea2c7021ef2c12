#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "oee/errors.hpp"

namespace oee_test {

// chi-square critical values at p = 0.001 for small dof; a goodness-of-fit
// statistic below the value passes at p > 0.001.
inline double chi2_crit_p001(int dof) {
    static const std::map<int, double> crit = {{1, 10.828}, {2, 13.816}, {3, 16.266},
                                               {4, 18.467}, {5, 20.515}, {6, 22.458},
                                               {7, 24.322}, {8, 26.124}};
    const auto it = crit.find(dof);
    if (it == crit.end()) throw oee::ArgumentError("chi2_crit_p001: dof out of table");
    return it->second;
}

inline double chi2_stat(const std::vector<double>& observed, const std::vector<double>& expected) {
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double diff = observed[i] - expected[i];
        stat += diff * diff / expected[i];
    }
    return stat;
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace oee_test
