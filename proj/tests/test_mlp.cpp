#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "oee/mlp.hpp"
#include "oee/ratio.hpp"

using namespace oee;

namespace {

MlpParams random_net(Rng& rng, int din, std::array<int, 3> hidden = {6, 5, 4}, double nu = 0.1,
                     double mu = 10.0) {
    return mlp_init(din, hidden, nu, mu, rng);
}

double fd_gradient(MlpParams p, int layer, std::size_t idx, bool bias,
                   const std::vector<double>& x, double h = 1e-6) {
    auto& v = bias ? p.b[layer][idx] : p.W[layer][idx];
    const double orig = v;
    v = orig + h;
    const double up = mlp_forward(p, x);
    v = orig - h;
    const double down = mlp_forward(p, x);
    return (up - down) / (2.0 * h);
}

bool close_rel(double a, double b, double tol = 1e-5) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("zero network outputs the midpoint of [nu, mu]") {
    Rng rng(1);
    MlpParams p = random_net(rng, 3, {4, 4, 4}, 0.1, 10.0);
    for (int l = 0; l < 4; ++l) {
        std::fill(p.W[l].begin(), p.W[l].end(), 0.0);
        std::fill(p.b[l].begin(), p.b[l].end(), 0.0);
    }
    CHECK(mlp_forward(p, {1.0, -2.0, 3.0}) == doctest::Approx(0.5 * (0.1 + 10.0)));
}

TEST_CASE("saturated output approaches mu monotonically") {
    Rng rng(2);
    MlpParams p = random_net(rng, 1, {4, 4, 4}, 0.1, 10.0);
    // Force a huge positive pre-activation at the output.
    std::fill(p.b[3].begin(), p.b[3].end(), 50.0);
    const double g = mlp_forward(p, {0.3});
    CHECK(g > 9.999999);
    CHECK(g < 10.0 + 1e-12);
}

TEST_CASE("outputs always live in [nu, mu], strictly inside away from saturation") {
    Rng rng(3);
    int strict = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        Rng net_rng = rng.child(trial);
        MlpParams p = random_net(net_rng, 2);
        const std::vector<double> x{net_rng.normal(0, 3), net_rng.normal(0, 3)};
        const double g = mlp_forward(p, x);
        // the bounds can be touched exactly when tanh rounds to +-1
        REQUIRE(g >= 0.1);
        REQUIRE(g <= 10.0);
        if (g > 0.1 && g < 10.0) ++strict;
    }
    CHECK(strict > 9900);
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(4);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Rng net_rng = rng.child(trial);
        MlpParams p = random_net(net_rng, 3);
        std::vector<double> x{net_rng.normal(), net_rng.normal(), net_rng.normal()};
        const double upstream = net_rng.uniform(0.5, 2.0);
        GradientBuffer buf = mlp_backward(p, x, upstream);
        // Probe a handful of parameters in every layer.
        for (int l = 0; l < 4; ++l) {
            const std::size_t step = std::max<std::size_t>(1, p.W[l].size() / 3);
            for (std::size_t i = 0; i < p.W[l].size(); i += step) {
                const double fd = upstream * fd_gradient(p, l, i, false, x);
                CHECK(close_rel(buf.W[l][i], fd));
                ++checked;
            }
            const double fd_b = upstream * fd_gradient(p, l, 0, true, x);
            CHECK(close_rel(buf.b[l][0], fd_b));
            ++checked;
        }
    }
    CHECK(checked > 1000);
}

TEST_CASE("zero upstream gives a zero buffer") {
    Rng rng(5);
    MlpParams p = random_net(rng, 2);
    GradientBuffer buf = mlp_backward(p, {0.4, -0.7}, 0.0);
    for (int l = 0; l < 4; ++l) {
        for (double g : buf.W[l]) CHECK(g == 0.0);
        for (double g : buf.b[l]) CHECK(g == 0.0);
    }
}

TEST_CASE("dead ReLU units have zero incoming weight gradients") {
    Rng rng(6);
    MlpParams p = random_net(rng, 2);
    p.b[0][0] = -1e6;  // unit 0 of the first hidden layer never fires
    GradientBuffer buf = mlp_backward(p, {0.5, 0.5}, 1.0);
    for (int i = 0; i < p.in_size(0); ++i) CHECK(buf.W[0][i] == 0.0);
    CHECK(buf.b[0][0] == 0.0);
}

TEST_CASE("sgd update arithmetic") {
    Rng rng(7);
    MlpParams p = random_net(rng, 1, {1, 1, 1});
    MlpParams before = p;
    GradientBuffer g(p);

    SUBCASE("lr = 0 leaves parameters unchanged") {
        for (int l = 0; l < 4; ++l)
            for (auto& v : g.W[l]) v = 1.0;
        sgd_update(p, g, 0.0);
        for (int l = 0; l < 4; ++l) CHECK(p.W[l] == before.W[l]);
    }

    SUBCASE("w = 1, grad = 2, lr = 0.1 -> 0.8") {
        p.W[3][0] = 1.0;
        g.W[3][0] = 2.0;
        sgd_update(p, g, 0.1);
        CHECK(p.W[3][0] == doctest::Approx(0.8));
    }

    SUBCASE("non-finite gradients are a training error") {
        g.W[2][0] = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(sgd_update(p, g, 0.1), TrainingError);
    }
}

TEST_CASE("one small-step update on a single-sample loss decreases it") {
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        Rng net_rng = rng.child(trial);
        MlpParams p = random_net(net_rng, 2);
        SampleMatrix bp(2), bq(2);
        bp.push(std::vector<double>{net_rng.normal(), net_rng.normal()});
        bq.push(std::vector<double>{net_rng.normal(), net_rng.normal()});
        double loss0 = 0.0;
        GradientBuffer buf = mlp_loss_gradient(p, bp, bq, 0.0, &loss0);
        sgd_update(p, buf, 1e-4);
        double loss1 = 0.0;
        mlp_loss_gradient(p, bp, bq, 0.0, &loss1);
        CHECK(loss1 <= loss0);
    }
}

TEST_CASE("identical seeds and data order give identical parameters") {
    SampleMatrix p(1), q(1);
    Rng data_rng(9);
    for (int i = 0; i < 200; ++i) {
        p.push(std::vector<double>{data_rng.normal(1.0, 1.0)});
        q.push(std::vector<double>{data_rng.normal(0.0, 1.0)});
    }
    TrainConfig tc;
    tc.widths = {8, 8, 8};
    tc.iterations = 300;
    tc.batch = 16;
    tc.lr = 1e-3;
    tc.seed = 77;
    const RatioModel a = train_ratio(p, q, tc);
    const RatioModel b = train_ratio(p, q, tc);
    for (int l = 0; l < 4; ++l) {
        CHECK(a.mlp.W[l] == b.mlp.W[l]);
        CHECK(a.mlp.b[l] == b.mlp.b[l]);
    }
}

TEST_CASE("model file round-trips exactly") {
    Rng rng(10);
    MlpParams p = random_net(rng, 4, {7, 3, 5}, 0.2, 8.0);
    std::ostringstream os;
    write_mlp(p, os);
    std::istringstream is(os.str());
    MlpParams back = read_mlp(is);
    CHECK(back.din == p.din);
    CHECK(back.hidden == p.hidden);
    CHECK(back.nu == p.nu);
    CHECK(back.mu == p.mu);
    for (int l = 0; l < 4; ++l) {
        CHECK(back.W[l] == p.W[l]);
        CHECK(back.b[l] == p.b[l]);
    }
}
