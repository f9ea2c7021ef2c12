#pragma once

#include <cmath>
#include <string>

#include "oee/env.hpp"
#include "oee/errors.hpp"
#include "oee/types.hpp"

namespace oee {

// Classic cart-pole with the conventional constants, a gravity parameter,
// and i.i.d. Gaussian noise added to every state coordinate after the
// Euler update. Reward is 1 per step until the pole or cart leaves the
// termination bounds.
struct CartpoleSpec {
    double gravity = 10.0;
    double mass_cart = 1.0;
    double mass_pole = 0.1;
    double half_length = 0.5;
    double force_mag = 10.0;
    double tau = 0.02;
    double noise_sigma = 1e-3;
    double theta_limit = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
    double x_limit = 2.4;

    void validate() const {
        if (noise_sigma < 0.0) throw ArgumentError("CartpoleSpec: noise_sigma < 0");
        if (!(tau > 0.0)) throw ArgumentError("CartpoleSpec: tau <= 0");
    }

    double total_mass() const { return mass_cart + mass_pole; }
    double polemass_length() const { return mass_pole * half_length; }
};

class CartpoleEnv : public Environment {
  public:
    explicit CartpoleEnv(CartpoleSpec spec) : spec_(spec) { spec_.validate(); }

    const CartpoleSpec& spec() const { return spec_; }

    std::string name() const override { return "cartpole"; }
    int state_dim() const override { return 4; }
    ActionSpec action_spec() const override { return ActionSpec::discrete(2); }

    StateVec reset(Rng& rng) const override {
        StateVec s(4);
        for (auto& x : s) x = rng.uniform(-0.05, 0.05);
        return s;
    }

    // Deterministic part of the dynamics, exposed for the noise tests and
    // the model-based baseline.
    StateVec step_deterministic(const StateVec& s, const ActionId& a) const {
        if (s.size() != 4) throw DimensionError("cartpole: state must be 4-d");
        if (!a.is_discrete() || a.index() < 0 || a.index() > 1)
            throw DomainError("cartpole: action must be 0 (left) or 1 (right)");
        double x = s[0], x_dot = s[1], theta = s[2], theta_dot = s[3];
        const double force = a.index() == 1 ? spec_.force_mag : -spec_.force_mag;
        const double cos_t = std::cos(theta);
        const double sin_t = std::sin(theta);
        const double temp =
            (force + spec_.polemass_length() * theta_dot * theta_dot * sin_t) / spec_.total_mass();
        const double theta_acc =
            (spec_.gravity * sin_t - cos_t * temp) /
            (spec_.half_length * (4.0 / 3.0 - spec_.mass_pole * cos_t * cos_t / spec_.total_mass()));
        const double x_acc = temp - spec_.polemass_length() * theta_acc * cos_t / spec_.total_mass();
        x += spec_.tau * x_dot;
        x_dot += spec_.tau * x_acc;
        theta += spec_.tau * theta_dot;
        theta_dot += spec_.tau * theta_acc;
        return {x, x_dot, theta, theta_dot};
    }

    bool terminal(const StateVec& s) const {
        return std::abs(s[0]) > spec_.x_limit || std::abs(s[2]) > spec_.theta_limit;
    }

    StepResult step(const StateVec& s, const ActionId& a, Rng& rng) const override {
        StateVec next = step_deterministic(s, a);
        if (spec_.noise_sigma > 0.0)
            for (auto& x : next) x += rng.normal(0.0, spec_.noise_sigma);
        const bool done = terminal(next);
        return {std::move(next), 1.0, done};
    }

  private:
    CartpoleSpec spec_;
};

}  // namespace oee
