#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "oee/errors.hpp"
#include "oee/parallel.hpp"
#include "oee/policy.hpp"
#include "oee/rng.hpp"
#include "oee/types.hpp"

namespace oee {

struct StepResult {
    StateVec s_next;
    double reward = 0.0;
    bool done = false;
};

// Stateless environment interface: all trajectory state lives in the
// StateVec, so one instance is shareable read-only across parallel
// rollouts with independent rng streams.
class Environment {
  public:
    virtual ~Environment() = default;

    virtual std::string name() const = 0;
    virtual int state_dim() const = 0;
    virtual ActionSpec action_spec() const = 0;
    virtual StateVec reset(Rng& rng) const = 0;
    virtual StepResult step(const StateVec& s, const ActionId& a, Rng& rng) const = 0;

    // True when the per-step reward is a function of the arrival state
    // s' rather than of (s, a). Importance weighting must then include
    // the transition that produced the reward.
    virtual bool reward_on_arrival() const { return false; }
};

inline Trajectory rollout(const Environment& env, const Policy& policy, const DiscountSpec& spec,
                          Rng& rng) {
    spec.validate();
    Trajectory traj;
    StateVec s = env.reset(rng);
    for (int t = 0; t < spec.horizon; ++t) {
        const ActionId a = sample_action(policy, s, rng);
        StepResult sr = env.step(s, a, rng);
        traj.transitions.push_back({s, a, sr.s_next, sr.reward, t});
        if (sr.done) break;
        s = std::move(sr.s_next);
    }
    return traj;
}

inline double discounted_return(const Trajectory& traj, double gamma) {
    double ret = 0.0;
    double gpow = 1.0;
    for (const auto& tr : traj.transitions) {
        ret += gpow * tr.r;
        gpow *= gamma;
    }
    return ret;
}

namespace detail {

// Mean / standard error / ESS aggregation shared by every estimator.
// Reduction runs in index order so results do not depend on thread count.
inline EvaluationReport aggregate_report(std::string estimator, std::vector<double> values,
                                         std::vector<double> weights, const DiscountSpec& spec,
                                         std::uint64_t seed) {
    EvaluationReport rep;
    rep.estimator = std::move(estimator);
    rep.per_rollout = std::move(values);
    rep.spec = spec;
    rep.seed = seed;
    const std::size_t n = rep.per_rollout.size();
    double sum = 0.0;
    for (double v : rep.per_rollout) sum += v;
    rep.mean = sum / static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (double v : rep.per_rollout) ss += (v - rep.mean) * (v - rep.mean);
        rep.stderr_mean = std::sqrt(ss / static_cast<double>(n - 1)) /
                          std::sqrt(static_cast<double>(n));
    }
    double wsum = 0.0, w2sum = 0.0;
    for (double w : weights) {
        wsum += w;
        w2sum += w * w;
    }
    rep.ess = w2sum > 0.0 ? wsum * wsum / w2sum : 0.0;
    return rep;
}

}  // namespace detail

// Plain Monte Carlo estimate of the discounted return, truncated at the
// horizon. Rollout i consumes the substream rng.child(i), so estimates are
// reproducible and thread-count independent.
inline EvaluationReport monte_carlo_return(const Environment& env, const Policy& policy,
                                           const DiscountSpec& spec, const Rng& rng,
                                           std::string estimator = "TrueValue") {
    spec.validate();
    const std::size_t n = static_cast<std::size_t>(spec.n_rollouts);
    std::vector<double> values(n);
    parallel_for(n, [&](std::size_t i) {
        Rng stream = rng.child(i);
        values[i] = discounted_return(rollout(env, policy, spec, stream), spec.gamma);
    });
    return detail::aggregate_report(std::move(estimator), std::move(values),
                                    std::vector<double>(n, 1.0), spec, rng.seed());
}

// Rolls the behavior policy until n_records transitions are collected.
// Episodes are truncated at spec.horizon; the tail episode is trimmed.
inline TransitionDataset collect_transitions(const Environment& env, const Policy& behavior,
                                             const DiscountSpec& spec, std::size_t n_records,
                                             DatasetSource source, const Rng& rng) {
    TransitionDataset ds;
    ds.d_s = env.state_dim();
    ds.action_spec = env.action_spec();
    ds.source = source;
    ds.policy_desc = behavior.describe();
    ds.seed = rng.seed();
    ds.records.reserve(n_records);
    std::uint64_t episode = 0;
    while (ds.records.size() < n_records) {
        Rng stream = rng.child(episode++);
        Trajectory traj = rollout(env, behavior, spec, stream);
        for (auto& tr : traj.transitions) {
            if (ds.records.size() >= n_records) break;
            ds.records.push_back(std::move(tr));
        }
    }
    return ds;
}

}  // namespace oee
