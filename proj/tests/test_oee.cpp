#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "oee/experiments.hpp"
#include "oee/oee.hpp"
#include "test_util.hpp"

using namespace oee;

namespace {

std::shared_ptr<RatioModel> constant_model(RatioDomain domain, double value) {
    auto m = std::make_shared<RatioModel>();
    m->cls = ModelClass::Mlp;
    m->nu = 0.1;
    m->mu = 10.0;
    m->fspec.d_s = 2;
    m->fspec.aspec = ActionSpec::discrete(4);
    m->fspec.domain = domain;
    Rng rng(1);
    m->mlp = mlp_init(m->fspec.mlp_dim(), {4, 4, 4}, 0.1, 10.0, rng);
    for (int l = 0; l < 4; ++l) {
        std::fill(m->mlp.W[l].begin(), m->mlp.W[l].end(), 0.0);
        std::fill(m->mlp.b[l].begin(), m->mlp.b[l].end(), 0.0);
    }
    // nu + (mu - nu)(tanh(b) + 1)/2 = value
    m->mlp.b[3][0] = std::atanh(2.0 * (value - 0.1) / (10.0 - 0.1) - 1.0);
    return m;
}

}  // namespace

TEST_CASE("effective sample size") {
    CHECK(effective_sample_size({2.0, 2.0, 2.0, 2.0}) == doctest::Approx(4.0));
    CHECK(effective_sample_size({0.0, 5.0, 0.0}) == doctest::Approx(1.0));
    CHECK(effective_sample_size({1.0, 1.0, 2.0}) == doctest::Approx(16.0 / 6.0));
    CHECK_THROWS_AS(effective_sample_size({}), ArgumentError);
    CHECK_THROWS_AS(effective_sample_size({0.0, 0.0}), ArgumentError);
    CHECK_THROWS_AS(effective_sample_size({1.0, -0.5}), ArgumentError);
}

TEST_CASE("zeta estimator variants") {
    SUBCASE("unit is identically one") {
        const ZetaEstimator z = ZetaEstimator::unit();
        CHECK(z.value({1, 2}, ActionId::discrete(0), {1, 3}) == 1.0);
    }
    SUBCASE("learned with equal constant models cancels to one") {
        auto sas = constant_model(RatioDomain::SAS, 3.0);
        auto sa = constant_model(RatioDomain::SA, 3.0);
        const ZetaEstimator z = ZetaEstimator::learned(sas, sa);
        CHECK(z.value({1, 2}, ActionId::discrete(0), {1, 3}) == doctest::Approx(1.0));
    }
    SUBCASE("oracle reproduces the exact gridworld ratio") {
        const ZetaEstimator z = oracle_zeta_gridworld({10, 0.3}, {10, 0.1});
        CHECK(z.value({4, 4}, ActionId::discrete(0), {4, 5}) == doctest::Approx(9.0 / 7.0));
    }
    SUBCASE("mismatched model domains are rejected") {
        auto sas = constant_model(RatioDomain::SAS, 2.0);
        auto sa = constant_model(RatioDomain::SA, 2.0);
        CHECK_THROWS_AS(ZetaEstimator::learned(sa, sas), ArgumentError);
    }
}

TEST_CASE("unit zeta reproduces plain Monte Carlo bit-exactly") {
    GridworldEnv env(GridworldSpec{8, 0.3});
    const Policy expert = gridworld_expert_policy(env.spec(), 0.99);
    const Policy policy = gridworld_mixture(0.5, expert);
    const DiscountSpec spec{0.99, 200, 64};
    const Rng rng(2024);
    const EvaluationReport mc = monte_carlo_return(env, policy, spec, rng);
    const EvaluationReport oee = oee_return(env, policy, ZetaEstimator::unit(), spec, rng);
    REQUIRE(mc.per_rollout.size() == oee.per_rollout.size());
    for (std::size_t i = 0; i < mc.per_rollout.size(); ++i)
        CHECK(mc.per_rollout[i] == oee.per_rollout[i]);  // identical doubles
    CHECK(mc.mean == oee.mean);
}

TEST_CASE("oracle zeta agrees with direct test-environment Monte Carlo") {
    const GridworldSpec tr{5, 0.3}, te{5, 0.1};
    GridworldEnv env_tr(tr), env_te(te);
    const Policy expert = gridworld_expert_policy(tr, 0.99);
    const Policy policy = gridworld_mixture(0.5, expert);
    const DiscountSpec spec{0.99, 200, 600};
    const Rng rng(7);
    const EvaluationReport tv = monte_carlo_return(env_te, policy, spec, rng.child(1));
    const EvaluationReport oee =
        oee_return(env_tr, policy, oracle_zeta_gridworld(tr, te), spec, rng.child(2));
    const double gap = std::abs(tv.mean - oee.mean);
    const double band = 4.0 * std::sqrt(tv.stderr_mean * tv.stderr_mean +
                                        oee.stderr_mean * oee.stderr_mean);
    CHECK(gap < band);
}

TEST_CASE("cumulative weights respect the per-step bounds") {
    const GridworldSpec tr{6, 0.3}, te{6, 0.1};
    GridworldEnv env_tr(tr, true);
    Policy uni = Policy::uniform(env_tr.action_spec());
    TransitionDataset dtr =
        collect_transitions(env_tr, uni, {1.0, 100, 1}, 20000, DatasetSource::Train, Rng(3));
    GridworldEnv env_te(te, true);
    TransitionDataset dte =
        collect_transitions(env_te, uni, {1.0, 100, 1}, 20000, DatasetSource::Test, Rng(4));
    TrainConfig tc;
    tc.model_class = ModelClass::Tabular;
    tc.full_batch = true;
    tc.iterations = 300;
    tc.lambda = 0.0;
    const ZetaEstimator zeta = learned_zeta(train_zeta_pair(dte, dtr, tc));
    const double nu = 0.1, mu = 10.0;
    Rng rng(5);
    GridworldEnv eval_env(tr);
    for (int episode = 0; episode < 20; ++episode) {
        Rng stream = rng.child(episode);
        Trajectory traj = rollout(eval_env, uni, {0.99, 60, 1}, stream);
        double w = 1.0;
        int t = 0;
        for (const auto& tr_ : traj.transitions) {
            w *= zeta.value(tr_.s, tr_.a, tr_.s_next);
            ++t;
            CHECK(w >= std::pow(nu / mu, t) * (1.0 - 1e-12));
            CHECK(w <= std::pow(mu / nu, t) * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("non-finite weights raise an evaluation error naming the step") {
    GridworldEnv env(GridworldSpec{5, 0.3});
    Policy uni = Policy::uniform(env.action_spec());
    const ZetaEstimator bad = ZetaEstimator::oracle(
        [](const StateVec&, const ActionId&, const StateVec&) { return 1e308; });
    try {
        oee_return(env, uni, bad, {0.99, 50, 4}, Rng(1));
        FAIL("expected EvaluationError");
    } catch (const EvaluationError& e) {
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("IS baseline: target equal to behavior is exact") {
    GridworldEnv env(GridworldSpec{6, 0.2});
    const Policy expert = gridworld_expert_policy(env.spec(), 0.99);
    const Policy behavior = gridworld_mixture(0.4, expert);
    const DiscountSpec spec{0.99, 100, 200};
    std::vector<Trajectory> trajs(spec.n_rollouts);
    const Rng rng(6);
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        Rng stream = rng.child(i);
        trajs[i] = rollout(env, behavior, spec, stream);
    }
    const EvaluationReport is = is_ope_baseline(trajs, behavior, behavior, spec);
    double plain = 0.0;
    for (const auto& t : trajs) plain += discounted_return(t, spec.gamma);
    plain /= static_cast<double>(trajs.size());
    CHECK(is.mean == plain);  // bit-exact: every ratio is exactly 1
    CHECK(is.ess == doctest::Approx(static_cast<double>(trajs.size())));
}

TEST_CASE("IS baseline: distant target policies collapse the ESS") {
    GridworldEnv env(GridworldSpec{10, 0.1});
    const Policy expert = gridworld_expert_policy(GridworldSpec{10, 0.3}, 0.99);
    const Policy behavior = gridworld_mixture(0.1, expert);
    const Policy target = gridworld_mixture(0.9, expert);
    const DiscountSpec spec{0.99, 200, 400};
    std::vector<Trajectory> trajs(spec.n_rollouts);
    const Rng rng(8);
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        Rng stream = rng.child(i);
        trajs[i] = rollout(env, behavior, spec, stream);
    }
    const EvaluationReport is = is_ope_baseline(trajs, target, behavior, spec);
    CHECK(is.ess / static_cast<double>(trajs.size()) < 0.2);
}

TEST_CASE("IS baseline: deterministic shared policy keeps weight one") {
    GridworldEnv env(GridworldSpec{5, 0.3});
    const Policy expert = gridworld_expert_policy(env.spec(), 0.99);
    const DiscountSpec spec{0.99, 100, 50};
    std::vector<Trajectory> trajs(spec.n_rollouts);
    const Rng rng(9);
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        Rng stream = rng.child(i);
        trajs[i] = rollout(env, expert, spec, stream);
    }
    const EvaluationReport is = is_ope_baseline(trajs, expert, expert, spec);
    CHECK(is.ess == doctest::Approx(static_cast<double>(trajs.size())));
}

TEST_CASE("IS baseline: zero behavior mass is a support violation") {
    GridworldEnv env(GridworldSpec{5, 0.3});
    const Policy expert = gridworld_expert_policy(env.spec(), 0.99);
    Policy uniform = Policy::uniform(env.action_spec());
    const DiscountSpec spec{0.99, 30, 20};
    std::vector<Trajectory> trajs(spec.n_rollouts);
    const Rng rng(10);
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        Rng stream = rng.child(i);
        trajs[i] = rollout(env, uniform, spec, stream);
    }
    // Deterministic behavior policy cannot have produced uniform data.
    CHECK_THROWS_AS(is_ope_baseline(trajs, uniform, expert, spec), SupportViolationError);
}

TEST_CASE("simulated baseline equals the true value only without model shift") {
    const GridworldSpec tr{8, 0.3};
    GridworldEnv env_tr(tr);
    const Policy expert = gridworld_expert_policy(tr, 0.99);
    const Policy policy = gridworld_mixture(0.9, expert);
    const DiscountSpec spec{0.99, 200, 800};
    const Rng rng(11);
    SUBCASE("identical environments agree within noise") {
        const EvaluationReport a = monte_carlo_return(env_tr, policy, spec, rng.child(1));
        const EvaluationReport b = simulated_baseline(env_tr, policy, spec, rng.child(2));
        const double band = 3.0 * std::sqrt(a.stderr_mean * a.stderr_mean +
                                            b.stderr_mean * b.stderr_mean);
        CHECK(std::abs(a.mean - b.mean) < band);
        CHECK(b.estimator == "Simulated");
    }
    SUBCASE("slip shift separates the estimates") {
        GridworldEnv env_te(GridworldSpec{8, 0.1});
        const EvaluationReport tv = monte_carlo_return(env_te, policy, spec, rng.child(3));
        const EvaluationReport sim = simulated_baseline(env_tr, policy, spec, rng.child(4));
        const double band = 3.0 * std::sqrt(tv.stderr_mean * tv.stderr_mean +
                                            sim.stderr_mean * sim.stderr_mean);
        CHECK(std::abs(tv.mean - sim.mean) > band);
    }
}

TEST_CASE("gridworld MLE recovers the kernel from abundant data") {
    // Single-step episodes from exploring starts spread the one million
    // transitions evenly over the rows, the infinite-data proxy.
    const GridworldSpec spec{3, 0.3};
    GridworldEnv env(spec, true);
    Policy uni = Policy::uniform(env.action_spec());
    TransitionDataset data =
        collect_transitions(env, uni, {1.0, 1, 1}, 1000000, DatasetSource::Test, Rng(12));
    detail::LearnedGridworldEnv learned(spec, data, 1.0);
    double max_err = 0.0;
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) {
            if (x == 2 && y == 2) continue;
            for (int a = 0; a < 4; ++a) {
                const auto fit = learned.learned_dist({x, y}, a);
                for (const auto& [cell, p] : fit) {
                    const double exact = gridworld_transition_prob(
                        spec, gridworld::to_state({x, y}), a, gridworld::to_state(cell));
                    max_err = std::max(max_err, std::abs(p - exact));
                }
            }
        }
    CHECK(max_err < 0.01);
    CHECK_FALSE(learned.fallback_used());
}

TEST_CASE("gridworld MLE smoothing falls back to uniform and flags it") {
    const GridworldSpec spec{5, 0.3};
    TransitionDataset tiny;
    tiny.d_s = 2;
    tiny.action_spec = ActionSpec::discrete(4);
    tiny.source = DatasetSource::Test;
    tiny.records.push_back({{0, 0}, ActionId::discrete(0), {0, 1}, -1.0, 0});
    detail::LearnedGridworldEnv learned(spec, tiny, 1.0);
    // Unvisited interior cell: Laplace smoothing alone, i.e. uniform.
    const auto dist = learned.learned_dist({2, 2}, 0);
    for (const auto& [cell, p] : dist) CHECK(p == doctest::Approx(0.25));
    CHECK(learned.fallback_used());

    GridworldEnv env(spec);
    Policy uni = Policy::uniform(env.action_spec());
    const EvaluationReport rep = mle_baseline(tiny, env, uni, {0.99, 20, 10}, Rng(13));
    CHECK(rep.estimator == "MLE");
    CHECK(rep.notes.find("fallback") != std::string::npos);
}

TEST_CASE("cartpole MLE linear fit predicts noiseless dynamics near upright") {
    CartpoleSpec spec;
    spec.noise_sigma = 0.0;
    CartpoleEnv env(spec);
    Policy uni = Policy::uniform(env.action_spec());
    TransitionDataset data =
        collect_transitions(env, uni, {1.0, 100, 1}, 20000, DatasetSource::Test, Rng(14));
    detail::LearnedCartpoleEnv learned(spec, data);
    for (int d = 0; d < 4; ++d) CHECK(learned.residual_sigma(d) < 1e-2);
    Rng rng(15);
    double max_err = 0.0;
    for (int i = 0; i < 200; ++i) {
        StateVec s(4);
        for (auto& v : s) v = rng.uniform(-0.05, 0.05);
        const ActionId a = ActionId::discrete(static_cast<int>(rng.uniform_int(2)));
        const StateVec truth = env.step_deterministic(s, a);
        const StateVec pred = learned.predict(s, a);
        for (int d = 0; d < 4; ++d) max_err = std::max(max_err, std::abs(truth[d] - pred[d]));
    }
    CHECK(max_err < 1e-2);
}
