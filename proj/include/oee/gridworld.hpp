#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "oee/env.hpp"
#include "oee/errors.hpp"
#include "oee/policy.hpp"
#include "oee/rng.hpp"
#include "oee/types.hpp"

namespace oee {

// n x n grid with slip dynamics: the intended move succeeds with
// probability 1 - eps, each of the three remaining directions gets eps/3.
// Any move (intended or slipped) that would leave the grid keeps the agent
// in place, and the displaced mass accrues to the stay outcome. Start is
// the bottom-left cell, the absorbing goal is the top-right cell.
struct GridworldSpec {
    int n = 10;
    double eps = 0.3;
    double step_reward = -1.0;
    bool goal_absorbing = true;

    void validate() const {
        if (n < 2) throw ArgumentError("GridworldSpec: n < 2");
        if (!(eps >= 0.0 && eps < 1.0)) throw ArgumentError("GridworldSpec: eps not in [0,1)");
    }
};

namespace gridworld {

// Actions: N, S, E, W.
constexpr int kNumActions = 4;
constexpr std::array<std::pair<int, int>, 4> kMoves = {{{0, 1}, {0, -1}, {1, 0}, {-1, 0}}};

struct Cell {
    int x = 0, y = 0;
    bool operator==(const Cell& o) const { return x == o.x && y == o.y; }
    bool operator<(const Cell& o) const { return y != o.y ? y < o.y : x < o.x; }
};

inline Cell goal_cell(const GridworldSpec& spec) { return {spec.n - 1, spec.n - 1}; }

inline bool in_grid(const GridworldSpec& spec, Cell c) {
    return c.x >= 0 && c.y >= 0 && c.x < spec.n && c.y < spec.n;
}

inline Cell to_cell(const GridworldSpec& spec, const StateVec& s) {
    if (s.size() != 2) throw DimensionError("gridworld state must be 2-d");
    Cell c{static_cast<int>(std::llround(s[0])), static_cast<int>(std::llround(s[1]))};
    if (!in_grid(spec, c)) throw DomainError("gridworld: state outside grid");
    return c;
}

inline StateVec to_state(Cell c) {
    return {static_cast<double>(c.x), static_cast<double>(c.y)};
}

inline int cell_index(const GridworldSpec& spec, Cell c) { return c.y * spec.n + c.x; }

// Apply the wall rule: blocked moves stay in place.
inline Cell apply_move(const GridworldSpec& spec, Cell c, int dir) {
    Cell target{c.x + kMoves[dir].first, c.y + kMoves[dir].second};
    return in_grid(spec, target) ? target : c;
}

// Exact next-cell distribution, mass accumulated per resulting cell.
inline std::vector<std::pair<Cell, double>> next_dist(const GridworldSpec& spec, Cell c, int a) {
    if (a < 0 || a >= kNumActions) throw DomainError("gridworld: action out of range");
    std::map<Cell, double> acc;
    for (int dir = 0; dir < kNumActions; ++dir) {
        const double p = dir == a ? 1.0 - spec.eps : spec.eps / 3.0;
        if (p > 0.0) acc[apply_move(spec, c, dir)] += p;
    }
    return {acc.begin(), acc.end()};
}

}  // namespace gridworld

// Exact transition probability P(s_next | s, a).
inline double gridworld_transition_prob(const GridworldSpec& spec, const StateVec& s, int a,
                                        const StateVec& s_next) {
    spec.validate();
    const auto c = gridworld::to_cell(spec, s);
    const auto target = gridworld::to_cell(spec, s_next);
    for (const auto& [cell, p] : gridworld::next_dist(spec, c, a))
        if (cell == target) return p;
    return 0.0;
}

// Exact transition ratio P_te(s'|s,a) / P_tr(s'|s,a) between two slip
// parameterizations of the same grid.
inline double true_zeta_gridworld(const GridworldSpec& spec_tr, const GridworldSpec& spec_te,
                                  const StateVec& s, int a, const StateVec& s_next) {
    if (spec_tr.n != spec_te.n)
        throw ArgumentError("true_zeta_gridworld: grid sizes differ");
    const double p_tr = gridworld_transition_prob(spec_tr, s, a, s_next);
    if (p_tr <= 0.0)
        throw SupportViolationError("true_zeta_gridworld: P_tr(s'|s,a) = 0");
    return gridworld_transition_prob(spec_te, s, a, s_next) / p_tr;
}

class GridworldEnv : public Environment {
  public:
    explicit GridworldEnv(GridworldSpec spec, bool exploring_starts = false)
        : spec_(spec), exploring_starts_(exploring_starts) {
        spec_.validate();
    }

    const GridworldSpec& spec() const { return spec_; }

    std::string name() const override { return "gridworld"; }
    int state_dim() const override { return 2; }
    ActionSpec action_spec() const override { return ActionSpec::discrete(gridworld::kNumActions); }

    StateVec reset(Rng& rng) const override {
        if (!exploring_starts_) return gridworld::to_state({0, 0});
        // Uniform non-goal start cell; used only for dataset collection.
        const auto goal = gridworld::goal_cell(spec_);
        for (;;) {
            gridworld::Cell c{static_cast<int>(rng.uniform_int(spec_.n)),
                              static_cast<int>(rng.uniform_int(spec_.n))};
            if (!(c == goal)) return gridworld::to_state(c);
        }
    }

    StepResult step(const StateVec& s, const ActionId& a, Rng& rng) const override {
        const auto c = gridworld::to_cell(spec_, s);
        if (!a.is_discrete()) throw DomainError("gridworld: expects discrete actions");
        const auto dist = gridworld::next_dist(spec_, c, a.index());
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
    GridworldSpec spec_;
    bool exploring_starts_;
};

// Greedy policy from value iteration on the exact kernel, converged to a
// 1e-10 span. Rewards: step_reward per step from non-goal states, goal
// absorbing with value 0. Ties break toward the lowest action index.
inline Policy gridworld_expert_policy(const GridworldSpec& spec, double gamma,
                                      double span_tol = 1e-10, int max_sweeps = 1000000) {
    spec.validate();
    const int n_states = spec.n * spec.n;
    const int goal = gridworld::cell_index(spec, gridworld::goal_cell(spec));
    // Precompute the kernel once.
    struct Row {
        std::vector<std::pair<int, double>> entries;
    };
    std::vector<std::array<Row, gridworld::kNumActions>> kernel(n_states);
    for (int y = 0; y < spec.n; ++y)
        for (int x = 0; x < spec.n; ++x) {
            const int idx = y * spec.n + x;
            for (int a = 0; a < gridworld::kNumActions; ++a)
                for (const auto& [cell, p] : gridworld::next_dist(spec, {x, y}, a))
                    kernel[idx][a].entries.push_back({gridworld::cell_index(spec, cell), p});
        }
    std::vector<double> v(n_states, 0.0);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double min_diff = std::numeric_limits<double>::infinity();
        double max_diff = -std::numeric_limits<double>::infinity();
        std::vector<double> nv(n_states);
        for (int s = 0; s < n_states; ++s) {
            if (s == goal) {
                nv[s] = 0.0;
            } else {
                double best = -std::numeric_limits<double>::infinity();
                for (int a = 0; a < gridworld::kNumActions; ++a) {
                    double q = spec.step_reward;
                    for (const auto& [sn, p] : kernel[s][a].entries) q += gamma * p * v[sn];
                    best = std::max(best, q);
                }
                nv[s] = best;
            }
            const double d = nv[s] - v[s];
            min_diff = std::min(min_diff, d);
            max_diff = std::max(max_diff, d);
        }
        v = std::move(nv);
        if (max_diff - min_diff < span_tol && sweep > 0) break;
    }
    std::vector<int> table(n_states, 0);
    for (int s = 0; s < n_states; ++s) {
        if (s == goal) continue;
        double best = -std::numeric_limits<double>::infinity();
        int best_a = 0;
        for (int a = 0; a < gridworld::kNumActions; ++a) {
            double q = spec.step_reward;
            for (const auto& [sn, p] : kernel[s][a].entries) q += gamma * p * v[sn];
            if (q > best + 1e-12) {
                best = q;
                best_a = a;
            }
        }
        table[s] = best_a;
    }
    return Policy::expert_table(ActionSpec::discrete(gridworld::kNumActions), std::move(table),
                                spec.n);
}

}  // namespace oee
