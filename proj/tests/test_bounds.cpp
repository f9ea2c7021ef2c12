#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "oee/bounds.hpp"
#include "oee/gridworld.hpp"
#include "oee/ratio.hpp"
#include "oee/rng.hpp"

using namespace oee;

namespace {

BoundInputs base_inputs() {
    BoundInputs in;
    in.nu = 0.5;
    in.mu = 2.0;
    in.n = 1e4;
    in.delta = 0.1;
    in.K = 10.0;
    in.d_inf = 0.2;
    return in;
}

long double agp_loop(double r, int T) {
    long double s = 0.0L;
    long double rp = 1.0L;
    for (int t = 1; t <= T; ++t) {
        rp *= r;
        s += t * rp;
    }
    return s;
}

}  // namespace

TEST_CASE("theorem 5.1 bound, hand-evaluated instance") {
    const BoundInputs in = base_inputs();
    const double expected = 10.0 * std::exp(0.2) *
                            (0.01 * (2.0 + std::log(2.0)) + std::sqrt(2.0 * std::log(10.0) / 1e4));
    CHECK(theorem_51_bound(in) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(theorem_51_bound(in) == doctest::Approx(0.5911).epsilon(2e-4));
}

TEST_CASE("quadrupling n halves the bound exactly") {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        BoundInputs in;
        in.nu = rng.uniform(0.05, 0.95);
        in.mu = rng.uniform(1.05, 20.0);
        in.n = rng.uniform(10.0, 1e6);
        in.delta = rng.uniform(0.01, 0.5);
        in.K = rng.uniform(1.0, 50.0);
        in.d_inf = rng.uniform(0.0, 2.0);
        BoundInputs in4 = in;
        in4.n = 4.0 * in.n;
        for (BoundForm form : {BoundForm::Main, BoundForm::Supplementary}) {
            const double m = theorem_51_bound(in, form);
            const double m4 = theorem_51_bound(in4, form);
            CHECK(m4 == doctest::Approx(m / 2.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("bound is minimal at d_inf = 0, K = 1 and monotone in both") {
    BoundInputs in = base_inputs();
    in.K = 1.0;
    in.d_inf = 0.0;
    const double base = theorem_51_bound(in);
    for (double dinf : {0.1, 0.5, 1.0}) {
        BoundInputs j = in;
        j.d_inf = dinf;
        CHECK(theorem_51_bound(j) > base);
    }
    for (double k : {2.0, 5.0}) {
        BoundInputs j = in;
        j.K = k;
        CHECK(theorem_51_bound(j) > base);
    }
}

TEST_CASE("delta outside (0,1) is rejected") {
    BoundInputs in = base_inputs();
    in.delta = 0.0;
    CHECK_THROWS_AS(theorem_51_bound(in), ArgumentError);
    in.delta = 1.0;
    CHECK_THROWS_AS(theorem_51_bound(in), ArgumentError);
}

TEST_CASE("zeta error bound") {
    BoundInputs in = base_inputs();
    SUBCASE("vanishes with M = 0") { CHECK(zeta_error_bound(in, 0.0) == 0.0); }
    SUBCASE("hand instance: 16 M / n^(1/4)") {
        const double m = 0.5911;
        CHECK(zeta_error_bound(in, m) == doctest::Approx(16.0 * m / 10.0).epsilon(1e-12));
        CHECK(zeta_error_bound(in, m) == doctest::Approx(0.9458).epsilon(1e-3));
    }
    SUBCASE("monotone increasing in mu, decreasing in nu") {
        for (double nu : {0.1, 0.3, 0.6}) {
            for (double mu : {1.5, 3.0, 8.0}) {
                BoundInputs a = in;
                a.nu = nu;
                a.mu = mu;
                BoundInputs bigger_mu = a;
                bigger_mu.mu = mu * 1.5;
                CHECK(zeta_error_bound(bigger_mu, 1.0) > zeta_error_bound(a, 1.0));
                BoundInputs bigger_nu = a;
                bigger_nu.nu = nu * 1.2;
                CHECK(zeta_error_bound(bigger_nu, 1.0) < zeta_error_bound(a, 1.0));
            }
        }
    }
}

TEST_CASE("agp closed form") {
    CHECK(agp_sum(1.0, 4) == doctest::Approx(10.0));
    CHECK(agp_sum(0.5, 3) == doctest::Approx(1.375).epsilon(1e-14));
    for (int ri = 1; ri <= 20; ++ri) {
        const double r = 0.1 * ri;
        for (int T = 1; T <= 50; ++T) {
            const double closed = agp_sum(r, T);
            const double loop = static_cast<double>(agp_loop(r, T));
            CHECK(std::abs(closed - loop) <= 1e-12 * std::max(1.0, std::abs(loop)));
        }
    }
    CHECK_THROWS_AS(agp_sum(0.5, 0), ArgumentError);
}

TEST_CASE("return error bound") {
    BoundInputs in = base_inputs();
    in.T = 7;
    in.R = 2.0;

    SUBCASE("gamma = 0 kills the bound") {
        BoundInputs z = in;
        z.gamma = 0.0;
        CHECK(return_error_bound(z, 1.3) == 0.0);
    }
    SUBCASE("T = 1 reduces to M^2 R^2 gamma / (nu sqrt n)") {
        BoundInputs t1 = in;
        t1.T = 1;
        t1.gamma = 0.3;
        const double m = 0.7;
        const double expected = m * m * t1.R * t1.R * t1.gamma / (t1.nu * std::sqrt(t1.n));
        CHECK(return_error_bound(t1, m) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("gamma/nu = 1 uses the analytic AGP limit") {
        BoundInputs lim = in;
        lim.gamma = 0.5;
        lim.nu = 0.5;
        lim.T = 9;
        const double m = 0.4;
        const double bracket = 9.0 * 10.0 / 2.0;  // sum_{t=1}^{9} t
        const double expected =
            9.0 * m * m * lim.R * lim.R * lim.gamma / (lim.nu * std::sqrt(lim.n)) * bracket;
        std::string notes;
        CHECK(return_error_bound(lim, m, &notes) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(notes.find("AGP") != std::string::npos);
    }
    SUBCASE("bracket equals the AGP loop sum for generic gamma/nu") {
        Rng rng(2);
        for (int trial = 0; trial < 30; ++trial) {
            BoundInputs g = in;
            g.gamma = rng.uniform(0.05, 1.0);
            g.nu = rng.uniform(0.05, 0.95);
            g.T = 1 + static_cast<int>(rng.uniform_int(30));
            if (std::abs(g.gamma / g.nu - 1.0) < 1e-6) continue;
            const double m = rng.uniform(0.1, 2.0);
            const double r = g.gamma / g.nu;
            const double bracket = static_cast<double>(agp_loop(r, g.T)) / r;
            const double expected =
                g.T * m * m * g.R * g.R * g.gamma / (g.nu * std::sqrt(g.n)) * bracket;
            CHECK(return_error_bound(g, m) == doctest::Approx(expected).epsilon(1e-9));
        }
    }
}

TEST_CASE("all bound values are nonnegative and nonincreasing in n") {
    BoundInputs in = base_inputs();
    in.T = 20;
    double prev_m = std::numeric_limits<double>::infinity();
    double prev_z = prev_m, prev_r = prev_m;
    for (double n : {1e2, 1e3, 1e4, 1e5, 1e6}) {
        BoundInputs j = in;
        j.n = n;
        const double m = theorem_51_bound(j);
        const double z = zeta_error_bound(j, m);
        const double r = return_error_bound(j, m);
        CHECK(m >= 0.0);
        CHECK(z >= 0.0);
        CHECK(r >= 0.0);
        CHECK(m <= prev_m);
        CHECK(z <= prev_z);
        CHECK(r <= prev_r);
        prev_m = m;
        prev_z = z;
        prev_r = r;
    }
}

TEST_CASE("product error lemma") {
    CHECK(product_error_bound({2.0, 3.0}, {0.1, 0.1}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(product_error_bound({4.0, 5.0, 6.0}, {0.0, 0.0, 0.0}) == 0.0);
    CHECK(product_error_bound({5.0}, {0.2}) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK_THROWS_AS(product_error_bound({2.0, 0.0}, {0.1, 0.1}), ArgumentError);
    CHECK_THROWS_AS(product_error_bound({}, {}), ArgumentError);
}

TEST_CASE("renyi infinity divergence over tables") {
    CHECK(renyi_inf_divergence_tabular({0.5, 0.5}, {0.5, 0.5}) == doctest::Approx(0.0));
    CHECK(renyi_inf_divergence_tabular({0.8, 0.2}, {0.5, 0.5}) ==
          doctest::Approx(std::log(1.6)).epsilon(1e-12));
    CHECK(renyi_inf_divergence_tabular({0.8, 0.2}, {0.5, 0.5}) ==
          doctest::Approx(0.4700).epsilon(1e-3));
    CHECK_THROWS_AS(renyi_inf_divergence_tabular({0.5, 0.5}, {1.0, 0.0}),
                    SupportViolationError);

    // Exact slip-kernel rows: the worst ratio over any row is 0.9 / 0.7.
    const GridworldSpec tr{10, 0.3}, te{10, 0.1};
    double worst = 0.0;
    for (int a = 0; a < 4; ++a) {
        for (const gridworld::Cell c : {gridworld::Cell{4, 4}, gridworld::Cell{0, 4},
                                        gridworld::Cell{0, 0}}) {
            std::vector<double> p, q;
            for (const auto& [cell, ptr] : gridworld::next_dist(tr, c, a)) {
                q.push_back(ptr);
                p.push_back(gridworld_transition_prob(te, gridworld::to_state(c), a,
                                                      gridworld::to_state(cell)));
            }
            worst = std::max(worst, renyi_inf_divergence_tabular(p, q));
        }
    }
    CHECK(worst == doctest::Approx(std::log(9.0 / 7.0)).epsilon(1e-12));
    CHECK(worst == doctest::Approx(0.2513).epsilon(1e-3));
}

TEST_CASE("empirical estimation error stays under the theorem bound") {
    // Tabular ratio of two exact slip-kernel rows; K and D_inf computed
    // exactly. The bound holds with probability 1 - delta; across 20
    // seeded runs at n = 1e4 we require at least 18 successes.
    const std::vector<double> q = {0.7, 0.1, 0.1, 0.1};   // training row
    const std::vector<double> p = {0.9, 1.0 / 30, 1.0 / 30, 1.0 / 30};
    BoundInputs in;
    in.nu = 0.1;
    in.mu = 10.0;
    in.n = 1e4;
    in.delta = 0.1;
    in.K = 10.0;  // 1 / min Q
    in.d_inf = renyi_inf_divergence_tabular(p, q);
    const double M = theorem_51_bound(in);
    int ok = 0;
    for (int run = 0; run < 20; ++run) {
        Rng rng(1000 + run);
        SampleMatrix sp(1), sq(1);
        for (int i = 0; i < 10000; ++i) {
            auto draw = [&](const std::vector<double>& w) {
                const double u = rng.uniform01();
                double cum = 0.0;
                for (std::size_t k = 0; k < w.size(); ++k) {
                    cum += w[k];
                    if (u < cum) return static_cast<double>(k);
                }
                return static_cast<double>(w.size() - 1);
            };
            sp.push(std::vector<double>{draw(p)});
            sq.push(std::vector<double>{draw(q)});
        }
        TrainConfig tc;
        tc.model_class = ModelClass::Tabular;
        tc.full_batch = true;
        tc.iterations = 300;
        tc.lambda = 0.0;
        const RatioModel m = train_ratio(sp, sq, tc);
        double worst = 0.0;
        for (long k = 0; k < 4; ++k)
            worst = std::max(worst, std::abs(m.value_key({k}) - p[k] / q[k]));
        if (worst * worst <= M) ++ok;
    }
    CHECK(ok >= 18);
}
