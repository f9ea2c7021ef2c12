#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "oee/errors.hpp"
#include "oee/rng.hpp"

namespace oee {

struct Gaussian {
    double mean = 0.0;
    double std = 1.0;

    void validate() const {
        if (!(std > 0.0)) throw ArgumentError("Gaussian: std <= 0");
    }
};

// Sample-pair generator for the density-ratio benchmark.
struct GaussianPairSpec {
    Gaussian p;
    Gaussian q;
    int n = 0;

    void validate() const {
        p.validate();
        q.validate();
        if (n < 1) throw ArgumentError("GaussianPairSpec: n < 1");
    }
};

inline std::pair<std::vector<double>, std::vector<double>> gaussian_pair_sample(
    const GaussianPairSpec& spec, Rng& rng) {
    spec.validate();
    std::vector<double> sp(spec.n), sq(spec.n);
    for (int i = 0; i < spec.n; ++i) sp[i] = rng.normal(spec.p.mean, spec.p.std);
    for (int i = 0; i < spec.n; ++i) sq[i] = rng.normal(spec.q.mean, spec.q.std);
    return {std::move(sp), std::move(sq)};
}

inline double normal_pdf(double x, double mean, double std) {
    const double z = (x - mean) / std;
    return std::exp(-0.5 * z * z) / (std * std::sqrt(2.0 * 3.14159265358979323846));
}

// Analytic density ratio P(x) / Q(x).
inline double true_gaussian_ratio(const Gaussian& p, const Gaussian& q, double x) {
    p.validate();
    q.validate();
    return normal_pdf(x, p.mean, p.std) / normal_pdf(x, q.mean, q.std);
}

}  // namespace oee
