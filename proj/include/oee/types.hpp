#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "oee/errors.hpp"

namespace oee {

// State as an ordered list of real coordinates. Gridworld stores its two
// integer cell coordinates as reals.
using StateVec = std::vector<double>;

inline bool all_finite(const StateVec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// Either a discrete action index or a real vector for continuous actions.
class ActionId {
  public:
    ActionId() = default;

    static ActionId discrete(int index) {
        ActionId a;
        a.discrete_ = true;
        a.index_ = index;
        return a;
    }

    static ActionId continuous(std::vector<double> values) {
        ActionId a;
        a.discrete_ = false;
        a.values_ = std::move(values);
        return a;
    }

    bool is_discrete() const { return discrete_; }

    int index() const {
        if (!discrete_) throw ArgumentError("ActionId: continuous action has no index");
        return index_;
    }

    const std::vector<double>& values() const {
        if (discrete_) throw ArgumentError("ActionId: discrete action has no value vector");
        return values_;
    }

    bool operator==(const ActionId& o) const {
        if (discrete_ != o.discrete_) return false;
        return discrete_ ? index_ == o.index_ : values_ == o.values_;
    }

  private:
    bool discrete_ = true;
    int index_ = 0;
    std::vector<double> values_;
};

// Declared action interface of an environment: a discrete count, or a
// continuous box (per-dimension ranges, used by uniform behavior policies).
struct ActionSpec {
    enum class Kind { Discrete, Continuous };
    Kind kind = Kind::Discrete;
    int count = 0;                                  // Discrete
    std::vector<std::pair<double, double>> ranges;  // Continuous, size = dim

    static ActionSpec discrete(int count) {
        ActionSpec s;
        s.kind = Kind::Discrete;
        s.count = count;
        return s;
    }

    static ActionSpec continuous(std::vector<std::pair<double, double>> ranges) {
        ActionSpec s;
        s.kind = Kind::Continuous;
        s.ranges = std::move(ranges);
        return s;
    }

    int dim() const { return kind == Kind::Discrete ? 1 : static_cast<int>(ranges.size()); }

    bool validate(const ActionId& a) const {
        if (kind == Kind::Discrete)
            return a.is_discrete() && a.index() >= 0 && a.index() < count;
        if (a.is_discrete() || static_cast<int>(a.values().size()) != dim()) return false;
        return all_finite(a.values());
    }

    std::string token() const {
        return (kind == Kind::Discrete ? "d" : "c") +
               std::to_string(kind == Kind::Discrete ? count : dim());
    }
};

struct Transition {
    StateVec s;
    ActionId a;
    StateVec s_next;
    double r = 0.0;
    int t = 0;
};

struct Trajectory {
    std::vector<Transition> transitions;

    std::size_t size() const { return transitions.size(); }
    bool empty() const { return transitions.empty(); }

    // Consecutive time indices from 0 and exact state chaining.
    bool chained() const {
        for (std::size_t i = 0; i < transitions.size(); ++i) {
            if (transitions[i].t != static_cast<int>(i)) return false;
            if (i + 1 < transitions.size() && transitions[i].s_next != transitions[i + 1].s)
                return false;
        }
        return true;
    }
};

enum class DatasetSource { Train, Test };

inline std::string to_string(DatasetSource s) {
    return s == DatasetSource::Train ? "train" : "test";
}

// Bag of transitions sampled from one environment under a behavior policy.
struct TransitionDataset {
    int d_s = 0;
    ActionSpec action_spec;
    std::vector<Transition> records;
    DatasetSource source = DatasetSource::Train;
    std::string policy_desc;  // no whitespace; serialized in the header line
    std::uint64_t seed = 0;

    std::size_t size() const { return records.size(); }

    void validate_consistent() const {
        for (const auto& tr : records) {
            if (static_cast<int>(tr.s.size()) != d_s ||
                static_cast<int>(tr.s_next.size()) != d_s)
                throw DimensionError("dataset record dimension mismatch");
            if (!action_spec.validate(tr.a)) throw DimensionError("dataset record action mismatch");
        }
    }
};

struct DiscountSpec {
    double gamma = 0.99;
    int horizon = 200;  // T
    int n_rollouts = 1;

    void validate() const {
        if (!(gamma > 0.0 && gamma <= 1.0)) throw ArgumentError("DiscountSpec: gamma not in (0,1]");
        if (horizon < 1) throw ArgumentError("DiscountSpec: horizon < 1");
        if (n_rollouts < 1) throw ArgumentError("DiscountSpec: n_rollouts < 1");
    }
};

// Return estimate with per-rollout values and weight diagnostics.
struct EvaluationReport {
    std::string estimator;  // OEE | TrueValue | Oracle | Simulated | IS | MLE
    double mean = 0.0;
    double stderr_mean = std::numeric_limits<double>::quiet_NaN();  // NaN when n = 1
    double ess = 0.0;
    std::vector<double> per_rollout;
    DiscountSpec spec;
    std::uint64_t seed = 0;
    double delta = std::numeric_limits<double>::quiet_NaN();  // policy mixture parameter, if any
    std::string notes;

    std::size_t n() const { return per_rollout.size(); }
};

}  // namespace oee
