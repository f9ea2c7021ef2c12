#pragma once

#include <cmath>
#include <string>

#include "oee/env.hpp"
#include "oee/errors.hpp"
#include "oee/types.hpp"

namespace oee {

// One-step MDP: the agent picks an angle of attack theta, the arrow lands
// at launch_speed * sin(2 theta) - drift_coeff * w with wind w drawn from
// the spec's normal distribution, and the episode ends with reward
// -|landing|. Environments differ only in the wind distribution.
struct ArcherySpec {
    double wind_mean = 4.0;
    double wind_std = 2.0;
    double launch_speed = 10.0;
    double drift_coeff = 0.5;
    double theta_lo = 0.0;
    double theta_hi = 3.14159265358979323846 / 2.0;

    void validate() const {
        if (!(wind_std > 0.0)) throw ArgumentError("ArcherySpec: wind_std <= 0");
        if (!(theta_lo < theta_hi)) throw ArgumentError("ArcherySpec: empty theta range");
    }
};

class ArcheryEnv : public Environment {
  public:
    explicit ArcheryEnv(ArcherySpec spec) : spec_(spec) { spec_.validate(); }

    const ArcherySpec& spec() const { return spec_; }

    std::string name() const override { return "archery"; }
    int state_dim() const override { return 1; }
    ActionSpec action_spec() const override {
        return ActionSpec::continuous({{spec_.theta_lo, spec_.theta_hi}});
    }

    StateVec reset(Rng&) const override { return {0.0}; }

    StepResult step(const StateVec& s, const ActionId& a, Rng& rng) const override {
        if (s.size() != 1) throw DimensionError("archery: state must be 1-d");
        if (a.is_discrete() || a.values().size() != 1)
            throw DomainError("archery: action must be a 1-d angle");
        const double theta = a.values()[0];
        if (theta < spec_.theta_lo || theta > spec_.theta_hi)
            throw DomainError("archery: theta out of range");
        const double wind = rng.normal(spec_.wind_mean, spec_.wind_std);
        const double landing = spec_.launch_speed * std::sin(2.0 * theta) -
                               spec_.drift_coeff * wind;
        return {{landing}, -std::abs(landing), true};
    }

    // The cost -|landing| depends on the arrival state, so importance
    // weighting must include the transition that produced it.
    bool reward_on_arrival() const override { return true; }

    // Landing position distribution at a fixed angle (normal).
    double landing_mean(double theta) const {
        return spec_.launch_speed * std::sin(2.0 * theta) - spec_.drift_coeff * spec_.wind_mean;
    }
    double landing_std() const { return spec_.drift_coeff * spec_.wind_std; }

  private:
    ArcherySpec spec_;
};

}  // namespace oee
