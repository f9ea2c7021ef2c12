#pragma once

#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "oee/errors.hpp"
#include "oee/rng.hpp"
#include "oee/types.hpp"

namespace oee {

// Stationary policy over the action spec it was built for. Mixtures store
// an explicit (weight_uniform, weight_expert) pair; experiment configs set
// the pair to match their convention, so both orderings found in the
// literature map onto the same type.
class Policy {
  public:
    enum class Kind { Uniform, ExpertTable, ExpertLinear, DeltaMixture };

    static Policy uniform(ActionSpec spec) {
        Policy p;
        p.kind_ = Kind::Uniform;
        p.spec_ = std::move(spec);
        return p;
    }

    // Deterministic per-cell action for integer n x n grid states; the
    // state (x, y) maps to table index y * n + x.
    static Policy expert_table(ActionSpec spec, std::vector<int> table, int grid_n) {
        if (static_cast<int>(table.size()) != grid_n * grid_n)
            throw DimensionError("expert_table: table size != n*n");
        Policy p;
        p.kind_ = Kind::ExpertTable;
        p.spec_ = std::move(spec);
        p.table_ = std::move(table);
        p.grid_n_ = grid_n;
        return p;
    }

    // Deterministic linear policy. Discrete specs threshold w.s + b at 0
    // (action 1 iff nonnegative); 1-d continuous specs emit w.s + b.
    static Policy expert_linear(ActionSpec spec, std::vector<double> w, double b) {
        Policy p;
        p.kind_ = Kind::ExpertLinear;
        p.spec_ = std::move(spec);
        p.w_ = std::move(w);
        p.b_ = b;
        return p;
    }

    static Policy delta_mixture(double weight_uniform, double weight_expert, Policy expert) {
        if (weight_uniform < 0.0 || weight_expert < 0.0 ||
            std::abs(weight_uniform + weight_expert - 1.0) > 1e-9)
            throw ArgumentError("delta_mixture: weights must be nonnegative and sum to 1");
        Policy p;
        p.kind_ = Kind::DeltaMixture;
        p.spec_ = expert.spec_;
        p.wu_ = weight_uniform;
        p.we_ = weight_expert;
        p.expert_ = std::make_shared<Policy>(std::move(expert));
        return p;
    }

    Kind kind() const { return kind_; }
    const ActionSpec& action_spec() const { return spec_; }
    double weight_uniform() const { return wu_; }
    double weight_expert() const { return we_; }
    const Policy& expert() const { return *expert_; }

    bool deterministic() const {
        return kind_ == Kind::ExpertTable || kind_ == Kind::ExpertLinear;
    }

    std::string describe() const {
        switch (kind_) {
            case Kind::Uniform: return "uniform";
            case Kind::ExpertTable: return "expert-table";
            case Kind::ExpertLinear: return "expert-linear";
            case Kind::DeltaMixture:
                return "mixture(wu=" + std::to_string(wu_) + ",we=" + std::to_string(we_) + ")";
        }
        return "?";
    }

  private:
    Kind kind_ = Kind::Uniform;
    ActionSpec spec_;
    std::vector<int> table_;
    int grid_n_ = 0;
    std::vector<double> w_;
    double b_ = 0.0;
    double wu_ = 0.0, we_ = 0.0;
    std::shared_ptr<const Policy> expert_;

    friend ActionId sample_action(const Policy&, const StateVec&, Rng&);
    friend double action_prob(const Policy&, const StateVec&, const ActionId&);
    friend ActionId deterministic_action(const Policy&, const StateVec&);
};

// Action of a deterministic policy kind at state s.
inline ActionId deterministic_action(const Policy& p, const StateVec& s) {
    switch (p.kind_) {
        case Policy::Kind::ExpertTable: {
            if (s.size() != 2) throw DimensionError("expert_table policy expects 2-d states");
            const int x = static_cast<int>(std::llround(s[0]));
            const int y = static_cast<int>(std::llround(s[1]));
            if (x < 0 || y < 0 || x >= p.grid_n_ || y >= p.grid_n_)
                throw DomainError("expert_table policy: state outside grid");
            return ActionId::discrete(p.table_[static_cast<std::size_t>(y) * p.grid_n_ + x]);
        }
        case Policy::Kind::ExpertLinear: {
            if (s.size() != p.w_.size())
                throw DimensionError("expert_linear policy: state dimension mismatch");
            double z = p.b_;
            for (std::size_t i = 0; i < s.size(); ++i) z += p.w_[i] * s[i];
            if (p.spec_.kind == ActionSpec::Kind::Discrete)
                return ActionId::discrete(z >= 0.0 ? 1 : 0);
            return ActionId::continuous({z});
        }
        default: throw ArgumentError("deterministic_action: policy is stochastic");
    }
}

inline ActionId sample_action(const Policy& p, const StateVec& s, Rng& rng) {
    switch (p.kind_) {
        case Policy::Kind::Uniform: {
            if (p.spec_.kind == ActionSpec::Kind::Discrete) {
                if (p.spec_.count < 1) throw ArgumentError("uniform policy: empty action set");
                return ActionId::discrete(static_cast<int>(rng.uniform_int(p.spec_.count)));
            }
            std::vector<double> v;
            v.reserve(p.spec_.ranges.size());
            for (const auto& [lo, hi] : p.spec_.ranges) v.push_back(rng.uniform(lo, hi));
            return ActionId::continuous(std::move(v));
        }
        case Policy::Kind::ExpertTable:
        case Policy::Kind::ExpertLinear: return deterministic_action(p, s);
        case Policy::Kind::DeltaMixture: {
            const double u = rng.uniform01();
            if (u < p.wu_) {
                Policy uniform_part = Policy::uniform(p.spec_);
                return sample_action(uniform_part, s, rng);
            }
            return sample_action(*p.expert_, s, rng);
        }
    }
    throw ArgumentError("sample_action: unknown policy kind");
}

// pi(a | s) for discrete action specs.
inline double action_prob(const Policy& p, const StateVec& s, const ActionId& a) {
    if (p.spec_.kind != ActionSpec::Kind::Discrete)
        throw ArgumentError("action_prob: defined for discrete action specs only");
    if (!p.spec_.validate(a)) throw DimensionError("action_prob: action outside spec");
    switch (p.kind_) {
        case Policy::Kind::Uniform: return 1.0 / p.spec_.count;
        case Policy::Kind::ExpertTable:
        case Policy::Kind::ExpertLinear:
            return deterministic_action(p, s) == a ? 1.0 : 0.0;
        case Policy::Kind::DeltaMixture:
            return p.wu_ / p.spec_.count + p.we_ * action_prob(*p.expert_, s, a);
    }
    throw ArgumentError("action_prob: unknown policy kind");
}

}  // namespace oee
