#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "oee/errors.hpp"

namespace oee {

// Inputs of the finite-sample guarantees. K is the inverse worst-case
// denominator mass (the proof fixes Q(x*) = 1/K at the unknown max-error
// point; callers conservatively use 1 / min Q). d_inf is the Renyi-infinity
// divergence log sup P/Q.
struct BoundInputs {
    double nu = 0.1;
    double mu = 10.0;
    double n = 1.0;       // sample count
    double delta = 0.1;   // failure probability
    double K = 1.0;
    double d_inf = 0.0;
    int T = 1;            // horizon
    double gamma = 0.99;
    double R = 1.0;       // reward sup-norm

    void validate() const {
        if (!(nu > 0.0 && nu < 1.0 && mu > 1.0))
            throw ArgumentError("BoundInputs: requires 0 < nu < 1 < mu");
        if (!(delta > 0.0 && delta < 1.0))
            throw ArgumentError("BoundInputs: delta not in (0,1)");
        if (!(n >= 1.0)) throw ArgumentError("BoundInputs: n < 1");
        if (!(K >= 1.0)) throw ArgumentError("BoundInputs: K < 1");
        if (d_inf < 0.0) throw ArgumentError("BoundInputs: d_inf < 0");
        if (T < 1) throw ArgumentError("BoundInputs: T < 1");
    }
};

struct BoundReport {
    double M = 0.0;              // estimation bound on ||g_hat - g*||_inf^2
    double zeta_err = 0.0;
    double return_err_sq = 0.0;
    std::string notes;
};

// The main-text statement and the supplementary derivation disagree on
// constants (4 vs 8 prefactor, an extra mu on the deviation term, and
// whether the log(1/delta) term carries 1/n); both are computable and the
// main-text form is the default.
enum class BoundForm { Main, Supplementary };

// High-probability upper bound on ||g_hat_n - g*||_inf^2.
// Main form:  K e^{d_inf} ( sqrt(1/n) (mu + max(log mu, -log nu))
//                           + sqrt(2 log(1/delta) / n) ).
inline double theorem_51_bound(const BoundInputs& in, BoundForm form = BoundForm::Main) {
    in.validate();
    const double dev = std::max(std::log(in.mu), -std::log(in.nu));
    const double scale = in.K * std::exp(in.d_inf);
    const double inv_sqrt_n = std::sqrt(1.0 / in.n);
    if (form == BoundForm::Main)
        return scale * (inv_sqrt_n * (in.mu + dev) + std::sqrt(2.0 * std::log(1.0 / in.delta) / in.n));
    return 8.0 * scale * inv_sqrt_n *
           (in.mu + dev + in.mu * std::sqrt(2.0 * std::log(1.0 / in.delta)));
}

// zeta-error lemma:  (mu (1 + nu mu) / nu^2) * M / n^{1/4}.
inline double zeta_error_bound(const BoundInputs& in, double M) {
    if (M < 0.0) throw ArgumentError("zeta_error_bound: M < 0");
    return in.mu * (1.0 + in.nu * in.mu) / (in.nu * in.nu) * M / std::pow(in.n, 0.25);
}

// Arithmetico-geometric sum  sum_{t=1}^T t r^t. Closed form away from
// r = 1; T(T+1)/2 on the r = 1 branch (|r - 1| < 1e-9, where the closed
// form cancels catastrophically).
inline double agp_sum(double r, int T) {
    if (T < 1) throw ArgumentError("agp_sum: T < 1");
    if (std::abs(r - 1.0) < 1e-9) return 0.5 * static_cast<double>(T) * (T + 1.0);
    const double rT1 = std::pow(r, T + 1);
    const double one_minus_r = 1.0 - r;
    return (r - (T + 1.0) * rT1 + static_cast<double>(T) * rT1 * r) / (one_minus_r * one_minus_r);
}

// Return-error theorem:
//   (T M^2 R^2 gamma / (nu sqrt(n)))
//   * (1 - (T+1)(gamma/nu)^T + T (gamma/nu)^{T+1}) / (1 - gamma/nu)^2,
// with the analytic r -> 1 limit T(T+1)/2 of the bracket.
inline double return_error_bound(const BoundInputs& in, double M, std::string* notes = nullptr) {
    if (M < 0.0) throw ArgumentError("return_error_bound: M < 0");
    if (in.gamma == 0.0) return 0.0;
    const double r = in.gamma / in.nu;
    double bracket;
    if (std::abs(r - 1.0) < 1e-9) {
        bracket = 0.5 * static_cast<double>(in.T) * (in.T + 1.0);
        if (notes) *notes = "gamma/nu ~ 1: analytic AGP limit T(T+1)/2";
    } else {
        const double rT = std::pow(r, in.T);
        bracket = (1.0 - (in.T + 1.0) * rT + static_cast<double>(in.T) * rT * r) /
                  ((1.0 - r) * (1.0 - r));
    }
    const double value = static_cast<double>(in.T) * M * M * in.R * in.R * in.gamma /
                         (in.nu * std::sqrt(in.n)) * bracket;
    if (notes && !std::isfinite(value)) *notes += "[overflow: bound vacuous at these inputs]";
    return value;
}

// First-order product-error lemma: |f(x') - f(x)| <= f(x) sum eps_i / x_i.
inline double product_error_bound(const std::vector<double>& values,
                                  const std::vector<double>& errors) {
    if (values.empty() || values.size() != errors.size())
        throw ArgumentError("product_error_bound: values/errors size mismatch");
    double prod = 1.0, sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] == 0.0) throw ArgumentError("product_error_bound: zero factor");
        prod *= values[i];
        sum += errors[i] / values[i];
    }
    return prod * sum;
}

// log sup_x P(x)/Q(x) over the sample space of two aligned discrete
// distributions.
inline double renyi_inf_divergence_tabular(const std::vector<double>& p,
                                           const std::vector<double>& q) {
    if (p.empty() || p.size() != q.size())
        throw ArgumentError("renyi_inf_divergence: size mismatch");
    double sup = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) throw ArgumentError("renyi_inf_divergence: negative mass");
        if (p[i] > 0.0) {
            if (q[i] <= 0.0)
                throw SupportViolationError("renyi_inf_divergence: P > 0 where Q = 0");
            sup = std::max(sup, p[i] / q[i]);
        }
    }
    if (sup <= 0.0) throw ArgumentError("renyi_inf_divergence: P has no mass");
    return std::log(sup);
}

inline BoundReport bound_report(const BoundInputs& in, BoundForm form = BoundForm::Main) {
    BoundReport rep;
    rep.M = theorem_51_bound(in, form);
    rep.zeta_err = zeta_error_bound(in, rep.M);
    rep.return_err_sq = return_error_bound(in, rep.M, &rep.notes);
    return rep;
}

}  // namespace oee
