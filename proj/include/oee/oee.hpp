#pragma once

#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "oee/cartpole.hpp"
#include "oee/env.hpp"
#include "oee/errors.hpp"
#include "oee/gridworld.hpp"
#include "oee/parallel.hpp"
#include "oee/ratio.hpp"
#include "oee/types.hpp"

namespace oee {

// (sum w)^2 / sum w^2.
inline double effective_sample_size(const std::vector<double>& weights) {
    if (weights.empty()) throw ArgumentError("effective_sample_size: no weights");
    double sum = 0.0, sq = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw ArgumentError("effective_sample_size: negative weight");
        sum += w;
        sq += w * w;
    }
    if (sq == 0.0) throw ArgumentError("effective_sample_size: all weights zero");
    return sum * sum / sq;
}

// Per-transition correction zeta(s'|s,a): the learned ratio-of-ratios, an
// exact oracle, or the unit function.
class ZetaEstimator {
  public:
    enum class Kind { Unit, Oracle, Learned };

    static ZetaEstimator unit() { return ZetaEstimator(Kind::Unit); }

    static ZetaEstimator oracle(
        std::function<double(const StateVec&, const ActionId&, const StateVec&)> fn) {
        ZetaEstimator z(Kind::Oracle);
        z.oracle_ = std::move(fn);
        return z;
    }

    static ZetaEstimator learned(std::shared_ptr<const RatioModel> sas,
                                 std::shared_ptr<const RatioModel> sa) {
        if (!sas || !sa) throw ArgumentError("ZetaEstimator: null model");
        if (sas->fspec.domain != RatioDomain::SAS || sa->fspec.domain != RatioDomain::SA)
            throw ArgumentError("ZetaEstimator: model domains must be (sas, sa)");
        if (sas->nu != sa->nu || sas->mu != sa->mu)
            throw ArgumentError("ZetaEstimator: models must share (nu, mu)");
        if (sas->fspec.d_s != sa->fspec.d_s)
            throw DimensionError("ZetaEstimator: models disagree on state dimension");
        ZetaEstimator z(Kind::Learned);
        z.sas_ = std::move(sas);
        z.sa_ = std::move(sa);
        return z;
    }

    Kind kind() const { return kind_; }

    double value(const StateVec& s, const ActionId& a, const StateVec& s_next) const {
        switch (kind_) {
            case Kind::Unit: return 1.0;
            case Kind::Oracle: return oracle_(s, a, s_next);
            case Kind::Learned: return sas_->eval_sas(s, a, s_next) / sa_->eval_sa(s, a);
        }
        throw ArgumentError("ZetaEstimator: unknown kind");
    }

  private:
    explicit ZetaEstimator(Kind k) : kind_(k) {}
    Kind kind_;
    std::function<double(const StateVec&, const ActionId&, const StateVec&)> oracle_;
    std::shared_ptr<const RatioModel> sas_;
    std::shared_ptr<const RatioModel> sa_;
};

inline double zeta_value(const ZetaEstimator& est, const StateVec& s, const ActionId& a,
                         const StateVec& s_next) {
    return est.value(s, a, s_next);
}

namespace detail {

// Discounted return of one trajectory with cumulative zeta weights. The
// reward of step t is weighted by the product of zeta over the transitions
// already realized when the reward is paid: transitions 0..t-1 for r(s,a)
// rewards, and additionally the step's own transition when the environment
// pays on arrival (the reward then depends on s'). weight_out receives the
// full-trajectory product.
inline double weighted_return(const Trajectory& traj, const ZetaEstimator& zeta, double gamma,
                              bool reward_on_arrival, double* weight_out) {
    double ret = 0.0;
    double w = 1.0;
    double gpow = 1.0;
    for (const auto& tr : traj.transitions) {
        if (reward_on_arrival) {
            w *= zeta.value(tr.s, tr.a, tr.s_next);
            if (!std::isfinite(w))
                throw EvaluationError("oee_return: non-finite weight at step " +
                                      std::to_string(tr.t));
            ret += gpow * w * tr.r;
        } else {
            ret += gpow * w * tr.r;
            w *= zeta.value(tr.s, tr.a, tr.s_next);
            if (!std::isfinite(w))
                throw EvaluationError("oee_return: non-finite weight at step " +
                                      std::to_string(tr.t));
        }
        gpow *= gamma;
    }
    if (weight_out) *weight_out = w;
    return ret;
}

}  // namespace detail

// Off-environment estimate of the testing-MDP return: rollouts on the
// training environment, rewards reweighted by cumulative zeta products.
// With the unit zeta this reproduces monte_carlo_return on the same seed
// stream bit-exactly.
inline EvaluationReport oee_return(const Environment& env_tr, const Policy& policy,
                                   const ZetaEstimator& zeta, const DiscountSpec& spec,
                                   const Rng& rng, std::string estimator = "OEE") {
    spec.validate();
    const std::size_t n = static_cast<std::size_t>(spec.n_rollouts);
    std::vector<double> values(n), weights(n);
    const bool arrival = env_tr.reward_on_arrival();
    parallel_for(n, [&](std::size_t i) {
        Rng stream = rng.child(i);
        const Trajectory traj = rollout(env_tr, policy, spec, stream);
        values[i] = detail::weighted_return(traj, zeta, spec.gamma, arrival, &weights[i]);
    });
    return detail::aggregate_report(std::move(estimator), std::move(values), std::move(weights),
                                    spec, rng.seed());
}

// Plain Monte Carlo on the training environment, relabeled.
inline EvaluationReport simulated_baseline(const Environment& env_tr, const Policy& policy,
                                           const DiscountSpec& spec, const Rng& rng) {
    return monte_carlo_return(env_tr, policy, spec, rng, "Simulated");
}

// Trajectory-level importance sampling over the policy likelihood ratio:
// the reward at step t is weighted by prod_{k<=t} pi_target(a_k|s_k) /
// pi_behavior(a_k|s_k) (full-trajectory product, not per-decision
// truncation). The dataset must hold whole trajectories collected under
// the behavior policy on the environment being evaluated.
inline EvaluationReport is_ope_baseline(const std::vector<Trajectory>& dataset_te,
                                        const Policy& target_policy,
                                        const Policy& behavior_policy, const DiscountSpec& spec,
                                        std::uint64_t seed = 0) {
    spec.validate();
    if (dataset_te.empty()) throw ArgumentError("is_ope_baseline: no trajectories");
    std::vector<double> values, weights;
    values.reserve(dataset_te.size());
    weights.reserve(dataset_te.size());
    for (const auto& traj : dataset_te) {
        double rho = 1.0;
        double ret = 0.0;
        double gpow = 1.0;
        for (const auto& tr : traj.transitions) {
            const double pb = action_prob(behavior_policy, tr.s, tr.a);
            if (pb <= 0.0)
                throw SupportViolationError("is_ope_baseline: behavior policy has zero mass on "
                                            "an observed action");
            const double pt = action_prob(target_policy, tr.s, tr.a);
            rho *= pt / pb;
            ret += gpow * rho * tr.r;
            gpow *= spec.gamma;
        }
        values.push_back(ret);
        weights.push_back(rho);
    }
    DiscountSpec rep_spec = spec;
    rep_spec.n_rollouts = static_cast<int>(dataset_te.size());
    return detail::aggregate_report("IS", std::move(values), std::move(weights), rep_spec, seed);
}

namespace detail {

// Gridworld model-based baseline: count-based kernel with Laplace
// smoothing over the geometrically reachable next cells.
class LearnedGridworldEnv : public Environment {
  public:
    LearnedGridworldEnv(const GridworldSpec& spec, const TransitionDataset& data, double alpha)
        : spec_(spec), alpha_(alpha), fallback_(std::make_shared<std::atomic<bool>>(false)) {
        spec_.validate();
        for (const auto& tr : data.records) {
            const auto c = gridworld::to_cell(spec_, tr.s);
            const auto nc = gridworld::to_cell(spec_, tr.s_next);
            counts_[key(c, tr.a.index())][nc] += 1.0;
        }
    }

    std::string name() const override { return "gridworld-mle"; }
    int state_dim() const override { return 2; }
    ActionSpec action_spec() const override { return ActionSpec::discrete(gridworld::kNumActions); }
    StateVec reset(Rng&) const override { return gridworld::to_state({0, 0}); }

    bool fallback_used() const { return fallback_->load(); }

    std::vector<std::pair<gridworld::Cell, double>> learned_dist(gridworld::Cell c, int a) const {
        // Candidates: distinct wall-rule targets of the four moves.
        std::map<gridworld::Cell, double> cand;
        for (int dir = 0; dir < gridworld::kNumActions; ++dir)
            cand[gridworld::apply_move(spec_, c, dir)] = 0.0;
        double total = 0.0;
        const auto it = counts_.find(key(c, a));
        if (it != counts_.end()) {
            for (const auto& [nc, cnt] : it->second) {
                cand[nc] += cnt;  // observed cells are candidates by construction
                total += cnt;
            }
        }
        if (total == 0.0) fallback_->store(true);
        std::vector<std::pair<gridworld::Cell, double>> out;
        const double denom = total + alpha_ * static_cast<double>(cand.size());
        for (const auto& [nc, cnt] : cand) out.push_back({nc, (cnt + alpha_) / denom});
        return out;
    }

    StepResult step(const StateVec& s, const ActionId& a, Rng& rng) const override {
        const auto c = gridworld::to_cell(spec_, s);
        const auto dist = learned_dist(c, a.index());
        const double u = rng.uniform01();
        double cum = 0.0;
        gridworld::Cell next = dist.back().first;
        for (const auto& [cell, p] : dist) {
            cum += p;
            if (u < cum) {
                next = cell;
                break;
            }
        }
        const bool done = spec_.goal_absorbing && next == gridworld::goal_cell(spec_);
        return {gridworld::to_state(next), spec_.step_reward, done};
    }

  private:
    static long key(gridworld::Cell c, int a) {
        return (static_cast<long>(c.y) * 1000000 + c.x) * 4 + a;
    }

    GridworldSpec spec_;
    double alpha_;
    std::map<long, std::map<gridworld::Cell, double>> counts_;
    std::shared_ptr<std::atomic<bool>> fallback_;
};

// Solves A x = b for a small symmetric positive definite system in place.
inline std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b, int n) {
    // Cholesky with a small diagonal ridge for rank safety.
    for (int i = 0; i < n; ++i) a[i * n + i] += 1e-9;
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < j; ++k) a[j * n + j] -= a[j * n + k] * a[j * n + k];
        if (a[j * n + j] <= 0.0) throw ArgumentError("solve_spd: matrix not positive definite");
        a[j * n + j] = std::sqrt(a[j * n + j]);
        for (int i = j + 1; i < n; ++i) {
            for (int k = 0; k < j; ++k) a[i * n + j] -= a[i * n + k] * a[j * n + k];
            a[i * n + j] /= a[j * n + j];
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < i; ++k) b[i] -= a[i * n + k] * b[k];
        b[i] /= a[i * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        for (int k = i + 1; k < n; ++k) b[i] -= a[k * n + i] * b[k];
        b[i] /= a[i * n + i];
    }
    return b;
}

// Cartpole model-based baseline: least-squares linear-Gaussian dynamics
// s' = A [s, onehot(a)] + noise, fit per output coordinate.
class LearnedCartpoleEnv : public Environment {
  public:
    LearnedCartpoleEnv(const CartpoleSpec& spec, const TransitionDataset& data)
        : spec_(spec) {
        spec_.validate();
        if (data.records.empty()) throw ArgumentError("cartpole MLE: empty dataset");
        constexpr int kF = 6;  // 4 state coords + 2 action indicators
        std::vector<double> xtx(kF * kF, 0.0);
        std::array<std::vector<double>, 4> xty;
        for (auto& v : xty) v.assign(kF, 0.0);
        std::array<double, kF> f{};
        for (const auto& tr : data.records) {
            features(tr.s, tr.a, f);
            for (int i = 0; i < kF; ++i)
                for (int j = 0; j < kF; ++j) xtx[i * kF + j] += f[i] * f[j];
            for (int d = 0; d < 4; ++d)
                for (int i = 0; i < kF; ++i) xty[d][i] += f[i] * tr.s_next[d];
        }
        for (int d = 0; d < 4; ++d) coef_[d] = solve_spd(xtx, xty[d], kF);
        // Residual standard deviation per coordinate.
        std::array<double, 4> ss{};
        for (const auto& tr : data.records) {
            features(tr.s, tr.a, f);
            for (int d = 0; d < 4; ++d) {
                double pred = 0.0;
                for (int i = 0; i < kF; ++i) pred += coef_[d][i] * f[i];
                const double e = tr.s_next[d] - pred;
                ss[d] += e * e;
            }
        }
        for (int d = 0; d < 4; ++d)
            sigma_[d] = std::sqrt(ss[d] / static_cast<double>(data.records.size()));
    }

    std::string name() const override { return "cartpole-mle"; }
    int state_dim() const override { return 4; }
    ActionSpec action_spec() const override { return ActionSpec::discrete(2); }

    StateVec reset(Rng& rng) const override {
        StateVec s(4);
        for (auto& x : s) x = rng.uniform(-0.05, 0.05);
        return s;
    }

    StateVec predict(const StateVec& s, const ActionId& a) const {
        std::array<double, 6> f{};
        features(s, a, f);
        StateVec next(4);
        for (int d = 0; d < 4; ++d) {
            double pred = 0.0;
            for (int i = 0; i < 6; ++i) pred += coef_[d][i] * f[i];
            next[d] = pred;
        }
        return next;
    }

    double residual_sigma(int d) const { return sigma_[d]; }

    StepResult step(const StateVec& s, const ActionId& a, Rng& rng) const override {
        StateVec next = predict(s, a);
        for (int d = 0; d < 4; ++d)
            if (sigma_[d] > 0.0) next[d] += rng.normal(0.0, sigma_[d]);
        const bool done =
            std::abs(next[0]) > spec_.x_limit || std::abs(next[2]) > spec_.theta_limit;
        return {std::move(next), 1.0, done};
    }

  private:
    static void features(const StateVec& s, const ActionId& a, std::array<double, 6>& f) {
        if (s.size() != 4) throw DimensionError("cartpole MLE: state must be 4-d");
        for (int i = 0; i < 4; ++i) f[i] = s[i];
        f[4] = a.index() == 0 ? 1.0 : 0.0;
        f[5] = a.index() == 1 ? 1.0 : 0.0;
    }

    CartpoleSpec spec_;
    std::array<std::vector<double>, 4> coef_;
    std::array<double, 4> sigma_{};
};

}  // namespace detail

// Model-based baseline: fits a dynamics model to the testing-MDP data and
// evaluates the policy by Monte Carlo on the learned model. Gridworld
// templates get a Laplace-smoothed count table (alpha = 1); cartpole
// templates get a least-squares linear-Gaussian fit.
inline EvaluationReport mle_baseline(const TransitionDataset& dataset_te,
                                     const Environment& env_template, const Policy& policy,
                                     const DiscountSpec& spec, const Rng& rng,
                                     double laplace_alpha = 1.0) {
    if (dataset_te.records.empty()) throw ArgumentError("mle_baseline: empty dataset");
    if (const auto* gw = dynamic_cast<const GridworldEnv*>(&env_template)) {
        detail::LearnedGridworldEnv learned(gw->spec(), dataset_te, laplace_alpha);
        EvaluationReport rep = monte_carlo_return(learned, policy, spec, rng, "MLE");
        if (learned.fallback_used())
            rep.notes = "fallback:uniform-on-unvisited-state-actions";
        return rep;
    }
    if (const auto* cp = dynamic_cast<const CartpoleEnv*>(&env_template)) {
        detail::LearnedCartpoleEnv learned(cp->spec(), dataset_te);
        return monte_carlo_return(learned, policy, spec, rng, "MLE");
    }
    throw ArgumentError("mle_baseline: no model template for environment '" +
                        env_template.name() + "'");
}

}  // namespace oee
