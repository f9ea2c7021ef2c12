#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "oee/env.hpp"
#include "oee/errors.hpp"
#include "oee/parallel.hpp"
#include "oee/policy.hpp"
#include "oee/rng.hpp"

namespace oee {

struct CemConfig {
    int population = 64;
    int elites = 10;
    int generations = 50;
    int eval_episodes = 6;        // fitness episodes per candidate
    int check_episodes = 20;      // best-so-far tracking
    int final_eval_episodes = 100;
    double init_std = 1.0;
    double min_std = 0.05;
    double target_return = 95.0;  // mean return the expert must reach
    DiscountSpec eval_spec{1.0, 100, 1};
};

namespace detail {

inline Policy linear_policy_from(const Environment& env, const std::vector<double>& theta) {
    const int d = env.state_dim();
    std::vector<double> w(theta.begin(), theta.begin() + d);
    return Policy::expert_linear(env.action_spec(), std::move(w), theta[d]);
}

inline double cem_fitness(const Environment& env, const std::vector<double>& theta,
                          const DiscountSpec& spec, int episodes, const Rng& rng) {
    const Policy policy = detail::linear_policy_from(env, theta);
    double total = 0.0;
    for (int e = 0; e < episodes; ++e) {
        Rng stream = rng.child(e);
        total += discounted_return(rollout(env, policy, spec, stream), spec.gamma);
    }
    return total / episodes;
}

}  // namespace detail

// Cross-entropy search over deterministic linear-threshold policies.
// Succeeds when the returned policy's mean return on `env` reaches
// cfg.target_return over cfg.final_eval_episodes episodes; otherwise
// throws with the best-so-far statistics.
inline Policy cem_train_expert(const Environment& env, const CemConfig& cfg, const Rng& rng) {
    if (env.action_spec().kind != ActionSpec::Kind::Discrete || env.action_spec().count != 2)
        throw ArgumentError("cem_train_expert: expects a binary-action environment");
    const int dim = env.state_dim() + 1;
    std::vector<double> mean(dim, 0.0), stddev(dim, cfg.init_std);
    std::vector<double> best_theta(dim, 0.0);
    double best_check = -std::numeric_limits<double>::infinity();

    for (int gen = 0; gen < cfg.generations; ++gen) {
        Rng gen_rng = rng.child(1000 + gen);
        std::vector<std::vector<double>> pop(cfg.population);
        for (int i = 0; i < cfg.population; ++i) {
            Rng draw = gen_rng.child(i);
            pop[i].resize(dim);
            for (int d = 0; d < dim; ++d) pop[i][d] = mean[d] + stddev[d] * draw.normal();
        }
        std::vector<double> fitness(cfg.population);
        parallel_for(static_cast<std::size_t>(cfg.population), [&](std::size_t i) {
            fitness[i] = detail::cem_fitness(env, pop[i], cfg.eval_spec, cfg.eval_episodes,
                                             gen_rng.child(50000 + i));
        });
        std::vector<int> order(cfg.population);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return fitness[a] > fitness[b]; });
        const int n_elite = std::min(cfg.elites, cfg.population);
        for (int d = 0; d < dim; ++d) {
            double m = 0.0;
            for (int e = 0; e < n_elite; ++e) m += pop[order[e]][d];
            m /= n_elite;
            double v = 0.0;
            for (int e = 0; e < n_elite; ++e) {
                const double diff = pop[order[e]][d] - m;
                v += diff * diff;
            }
            mean[d] = m;
            stddev[d] = std::max(cfg.min_std, std::sqrt(v / n_elite));
        }
        const double check = detail::cem_fitness(env, mean, cfg.eval_spec, cfg.check_episodes,
                                                 rng.child(90000 + gen));
        if (check > best_check) {
            best_check = check;
            best_theta = mean;
        }
        if (best_check >= cfg.target_return + 1.0) break;
    }

    const double final_mean = detail::cem_fitness(env, best_theta, cfg.eval_spec,
                                                  cfg.final_eval_episodes, rng.child(777));
    if (final_mean < cfg.target_return)
        throw TrainingError("cem_train_expert: best policy reached " + std::to_string(final_mean) +
                            " / " + std::to_string(cfg.target_return) + " over " +
                            std::to_string(cfg.final_eval_episodes) + " episodes");
    return detail::linear_policy_from(env, best_theta);
}

}  // namespace oee
