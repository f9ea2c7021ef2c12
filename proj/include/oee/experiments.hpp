#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "oee/archery.hpp"
#include "oee/bounds.hpp"
#include "oee/cartpole.hpp"
#include "oee/cem.hpp"
#include "oee/config.hpp"
#include "oee/csv.hpp"
#include "oee/dataset_io.hpp"
#include "oee/env.hpp"
#include "oee/gaussian.hpp"
#include "oee/gridworld.hpp"
#include "oee/oee.hpp"
#include "oee/parallel.hpp"
#include "oee/ratio.hpp"
#include "oee/svg.hpp"

namespace oee {

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Mixture conventions. The two experiment families weight the uniform and
// expert components oppositely; the Policy type stores the explicit pair.
// ---------------------------------------------------------------------------

// pi_delta = (1 - delta) U + delta pi_E.
inline Policy gridworld_mixture(double delta, const Policy& expert) {
    return Policy::delta_mixture(1.0 - delta, delta, expert);
}

// pi_delta = delta U + (1 - delta) pi_E.
inline Policy cartpole_mixture(double delta, const Policy& expert) {
    return Policy::delta_mixture(delta, 1.0 - delta, expert);
}

// ---------------------------------------------------------------------------
// Manifest: config hash, seeds, software version. Reruns with an identical
// manifest reproduce every CSV byte for byte.
// ---------------------------------------------------------------------------

inline void write_manifest(const std::string& out_dir, const Config& cfg,
                           const std::vector<long>& seeds) {
    std::ofstream os(out_dir + "/manifest.txt");
    if (!os) throw IoError("cannot write manifest in " + out_dir);
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(cfg.canonical())));
    os << "oee-manifest v1\n";
    os << "version = " << kVersion << "\n";
    os << "config_hash = " << hash << "\n";
    os << "seeds = ";
    for (std::size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : "") << seeds[i];
    os << "\n";
}

namespace detail {

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

inline std::vector<long> config_seeds(const Config& cfg) {
    std::vector<long> seeds = cfg.get_list_int("experiment.seeds");
    if (seeds.empty()) throw ArgumentError("config: experiment.seeds is empty");
    return seeds;
}

inline TrainConfig train_config_from(const Config& cfg) {
    TrainConfig tc;
    const std::string cls = cfg.get_string("train.class", "mlp");
    if (cls == "mlp") tc.model_class = ModelClass::Mlp;
    else if (cls == "tabular") tc.model_class = ModelClass::Tabular;
    else throw ArgumentError("config: train.class must be mlp or tabular");
    tc.batch = static_cast<int>(cfg.get_int("train.batch", 256));
    tc.iterations = static_cast<int>(cfg.get_int("train.iterations", 50000));
    tc.lr = cfg.get_double("train.lr", 1e-5);
    tc.lambda = cfg.get_double("train.lambda", tc.model_class == ModelClass::Mlp ? 1e-4 : 0.0);
    tc.nu = cfg.get_double("train.nu", 0.1);
    tc.mu = cfg.get_double("train.mu", 10.0);
    tc.full_batch = cfg.get_bool("train.full_batch", tc.model_class == ModelClass::Tabular);
    if (cfg.has("train.widths")) {
        const auto w = cfg.get_list_int("train.widths");
        if (w.size() != 3) throw ArgumentError("config: train.widths needs 3 entries");
        tc.widths = {static_cast<int>(w[0]), static_cast<int>(w[1]), static_cast<int>(w[2])};
    }
    return tc;
}

inline std::string compact_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

inline std::string report_estimator_row(CsvWriter& csv, const EvaluationReport& rep) {
    csv.add_row({rep.estimator, CsvWriter::cell(rep.delta), CsvWriter::cell(rep.mean),
                 std::isnan(rep.stderr_mean) ? "na" : CsvWriter::cell(rep.stderr_mean),
                 CsvWriter::cell(rep.ess), CsvWriter::cell(static_cast<long>(rep.n())),
                 CsvWriter::cell(rep.spec.horizon), CsvWriter::cell(rep.spec.gamma),
                 CsvWriter::cell(rep.seed), rep.notes});
    return rep.estimator;
}

inline const std::vector<std::string>& report_csv_header() {
    static const std::vector<std::string> h = {"estimator", "delta", "mean",  "stderr", "ess",
                                               "n",         "T",     "gamma", "seed",   "notes"};
    return h;
}

}  // namespace detail

// Mean absolute error between a zeta estimator and the exact transition
// ratio, averaged over every (s, a, s') with P_tr > 0.
inline double mean_l1_zeta_error(const GridworldSpec& spec_tr, const GridworldSpec& spec_te,
                                 const ZetaEstimator& zeta) {
    double err = 0.0;
    std::size_t count = 0;
    for (int y = 0; y < spec_tr.n; ++y)
        for (int x = 0; x < spec_tr.n; ++x)
            for (int a = 0; a < gridworld::kNumActions; ++a) {
                const StateVec s = gridworld::to_state({x, y});
                for (const auto& [cell, p_tr] : gridworld::next_dist(spec_tr, {x, y}, a)) {
                    const StateVec sn = gridworld::to_state(cell);
                    const double p_te = gridworld_transition_prob(spec_te, s, a, sn);
                    err += std::abs(zeta.value(s, ActionId::discrete(a), sn) - p_te / p_tr);
                    ++count;
                }
            }
    return err / static_cast<double>(count);
}

inline ZetaEstimator oracle_zeta_gridworld(const GridworldSpec& spec_tr,
                                           const GridworldSpec& spec_te) {
    return ZetaEstimator::oracle(
        [spec_tr, spec_te](const StateVec& s, const ActionId& a, const StateVec& sn) {
            return true_zeta_gridworld(spec_tr, spec_te, s, a.index(), sn);
        });
}

inline ZetaEstimator learned_zeta(ZetaPair pair) {
    auto sas = std::make_shared<RatioModel>(std::move(pair.sas));
    auto sa = std::make_shared<RatioModel>(std::move(pair.sa));
    return ZetaEstimator::learned(std::move(sas), std::move(sa));
}

// ---------------------------------------------------------------------------
// Gridworld experiment: (a) zeta L1 error against sample size per grid
// size, (b) delta-sweep return estimates with all baselines.
// ---------------------------------------------------------------------------

struct GridworldExperimentResult {
    struct ErrorCell {
        int grid_n = 0;
        long sample_size = 0;
        long seed = 0;
        double l1_error = 0.0;
    };
    std::vector<ErrorCell> error_cells;
    std::vector<EvaluationReport> reports;  // delta sweep, first grid size
    std::vector<std::string> files;
};

inline GridworldExperimentResult run_gridworld_experiment(const Config& cfg,
                                                          std::string out_dir = "") {
    if (out_dir.empty()) out_dir = cfg.get_string("experiment.out_dir", "out/gridworld");
    detail::ensure_dir(out_dir);
    const std::vector<long> seeds = detail::config_seeds(cfg);
    const auto grid_sizes = cfg.has("env.grid_sizes") ? cfg.get_list_int("env.grid_sizes")
                                                      : std::vector<long>{10};
    const double eps_tr = cfg.get_double("env.eps_train", 0.3);
    const double eps_te = cfg.get_double("env.eps_test", 0.1);
    const auto sample_sizes = cfg.has("data.sample_sizes")
                                  ? cfg.get_list_int("data.sample_sizes")
                                  : std::vector<long>{1000, 3162, 10000, 31623, 100000, 316228};
    const double delta_collect = cfg.get_double("data.delta_collect", 0.5);
    const bool exploring = cfg.get_bool("data.exploring_starts", true);
    const int collect_T = static_cast<int>(cfg.get_int("data.horizon", 200));
    TrainConfig tc = detail::train_config_from(cfg);
    DiscountSpec eval_spec;
    eval_spec.gamma = cfg.get_double("eval.gamma", 0.99);
    eval_spec.horizon = static_cast<int>(cfg.get_int("eval.T", 200));
    eval_spec.n_rollouts = static_cast<int>(cfg.get_int("eval.n_rollouts", 2000));
    const auto delta_grid = cfg.has("eval.delta_grid") ? cfg.get_list_double("eval.delta_grid")
                                                       : std::vector<double>{0.1, 0.5, 0.9};

    GridworldExperimentResult result;
    const long max_n = *std::max_element(sample_sizes.begin(), sample_sizes.end());

    // Part (a): error curves, all grid sizes; keep the largest-n pair of
    // the first grid size per seed for the delta sweep.
    std::map<long, ZetaEstimator> sweep_zeta;
    struct Cell {
        std::size_t size_idx, seed_idx;
    };
    std::vector<Cell> cells;
    for (std::size_t si = 0; si < grid_sizes.size(); ++si)
        for (std::size_t ki = 0; ki < seeds.size(); ++ki) cells.push_back({si, ki});
    std::vector<std::vector<GridworldExperimentResult::ErrorCell>> cell_results(cells.size());
    std::vector<std::pair<long, ZetaEstimator>> sweep_slots;
    sweep_slots.reserve(seeds.size());
    std::mutex sweep_mutex;

    parallel_for(cells.size(), [&](std::size_t ci) {
        const int n_grid = static_cast<int>(grid_sizes[cells[ci].size_idx]);
        const long seed = seeds[cells[ci].seed_idx];
        const GridworldSpec spec_tr{n_grid, eps_tr};
        const GridworldSpec spec_te{n_grid, eps_te};
        const GridworldEnv env_tr(spec_tr, exploring);
        const GridworldEnv env_te(spec_te, exploring);
        const Policy expert = gridworld_expert_policy(spec_tr, eval_spec.gamma);
        const Policy behavior = gridworld_mixture(delta_collect, expert);
        const Rng root(static_cast<std::uint64_t>(seed));
        DiscountSpec collect_spec{1.0, collect_T, 1};
        const TransitionDataset data_tr =
            collect_transitions(env_tr, behavior, collect_spec, max_n, DatasetSource::Train,
                                root.child(1));
        const TransitionDataset data_te =
            collect_transitions(env_te, behavior, collect_spec, max_n, DatasetSource::Test,
                                root.child(2));
        for (long n : sample_sizes) {
            TransitionDataset te = data_te, tr = data_tr;
            te.records.resize(static_cast<std::size_t>(n));
            tr.records.resize(static_cast<std::size_t>(n));
            TrainConfig c = tc;
            c.seed = root.child(3).seed();
            ZetaEstimator z = learned_zeta(train_zeta_pair(te, tr, c));
            cell_results[ci].push_back({n_grid, n, seed, mean_l1_zeta_error(spec_tr, spec_te, z)});
            if (n == max_n && cells[ci].size_idx == 0) {
                std::lock_guard<std::mutex> lock(sweep_mutex);
                sweep_slots.emplace_back(seed, std::move(z));
            }
        }
    });
    for (auto& cr : cell_results)
        result.error_cells.insert(result.error_cells.end(), cr.begin(), cr.end());
    for (auto& [seed, z] : sweep_slots) sweep_zeta.emplace(seed, std::move(z));

    CsvWriter err_csv({"grid_n", "sample_size", "seed", "l1_error"});
    for (const auto& c : result.error_cells)
        err_csv.add_row({CsvWriter::cell(c.grid_n), CsvWriter::cell(c.sample_size),
                         CsvWriter::cell(c.seed), CsvWriter::cell(c.l1_error)});
    const std::string err_path = out_dir + "/zeta_error_vs_samples.csv";
    err_csv.write_file(err_path);
    result.files.push_back(err_path);

    // Part (b): delta sweep on the first grid size.
    const int n0 = static_cast<int>(grid_sizes[0]);
    const GridworldSpec spec_tr{n0, eps_tr};
    const GridworldSpec spec_te{n0, eps_te};
    const GridworldEnv env_tr(spec_tr), env_te(spec_te);
    const Policy expert = gridworld_expert_policy(spec_tr, eval_spec.gamma);
    const ZetaEstimator oracle = oracle_zeta_gridworld(spec_tr, spec_te);
    struct SweepCell {
        std::size_t seed_idx, delta_idx;
    };
    std::vector<SweepCell> sweep_cells;
    for (std::size_t ki = 0; ki < seeds.size(); ++ki)
        for (std::size_t di = 0; di < delta_grid.size(); ++di) sweep_cells.push_back({ki, di});
    std::vector<std::vector<EvaluationReport>> sweep_results(sweep_cells.size());
    parallel_for(sweep_cells.size(), [&](std::size_t ci) {
        const long seed = seeds[sweep_cells[ci].seed_idx];
        const double delta = delta_grid[sweep_cells[ci].delta_idx];
        const Policy target = gridworld_mixture(delta, expert);
        const Policy behavior = gridworld_mixture(delta_collect, expert);
        const Rng root = Rng(static_cast<std::uint64_t>(seed)).child(100 + sweep_cells[ci].delta_idx);
        auto tag = [&](EvaluationReport rep) {
            rep.delta = delta;
            rep.seed = static_cast<std::uint64_t>(seed);
            return rep;
        };
        auto& out = sweep_results[ci];
        out.push_back(tag(monte_carlo_return(env_te, target, eval_spec, root.child(1))));
        out.push_back(tag(oee_return(env_tr, target, sweep_zeta.at(seed), eval_spec,
                                     root.child(2), "OEE")));
        out.push_back(tag(oee_return(env_tr, target, oracle, eval_spec, root.child(3), "Oracle")));
        out.push_back(tag(simulated_baseline(env_tr, target, eval_spec, root.child(4))));
        std::vector<Trajectory> te_trajs(static_cast<std::size_t>(eval_spec.n_rollouts));
        const Rng is_rng = root.child(5);
        for (std::size_t i = 0; i < te_trajs.size(); ++i) {
            Rng stream = is_rng.child(i);
            te_trajs[i] = rollout(env_te, behavior, eval_spec, stream);
        }
        out.push_back(tag(is_ope_baseline(te_trajs, target, behavior, eval_spec,
                                          is_rng.seed())));
    });
    for (auto& sr : sweep_results)
        result.reports.insert(result.reports.end(), sr.begin(), sr.end());

    CsvWriter sweep_csv(detail::report_csv_header());
    for (const auto& rep : result.reports) detail::report_estimator_row(sweep_csv, rep);
    const std::string sweep_path = out_dir + "/delta_sweep.csv";
    sweep_csv.write_file(sweep_path);
    result.files.push_back(sweep_path);

    write_manifest(out_dir, cfg, seeds);
    result.files.push_back(out_dir + "/manifest.txt");

    // Figures are rendered from the CSVs they summarize.
    {
        const CsvTable t = read_csv_file(err_path);
        FigureSpec fig;
        fig.xlabel = "log10 sample size";
        fig.ylabel = "L1 error";
        for (long g : grid_sizes) {
            std::map<long, std::vector<double>> by_n;
            for (std::size_t r = 0; r < t.rows.size(); ++r)
                if (static_cast<long>(t.number(r, "grid_n")) == g)
                    by_n[static_cast<long>(t.number(r, "sample_size"))].push_back(
                        t.number(r, "l1_error"));
            FigureSeries s;
            s.name = "[" + std::to_string(g) + ", " + std::to_string(g) + "]";
            s.color_role = "grid" + std::to_string(g);
            for (const auto& [n, vals] : by_n) {
                double m = 0.0;
                for (double v : vals) m += v;
                m /= static_cast<double>(vals.size());
                double sd = 0.0;
                for (double v : vals) sd += (v - m) * (v - m);
                sd = vals.size() > 1 ? std::sqrt(sd / static_cast<double>(vals.size() - 1)) : 0.0;
                s.x.push_back(std::log10(static_cast<double>(n)));
                s.y.push_back(m);
                s.band_lo.push_back(m - sd);
                s.band_hi.push_back(m + sd);
            }
            fig.series.push_back(std::move(s));
        }
        const std::string p = out_dir + "/zeta_error_vs_samples.svg";
        emit_svg_lineplot(fig, p);
        result.files.push_back(p);
    }
    {
        const CsvTable t = read_csv_file(sweep_path);
        FigureSpec fig;
        fig.xlabel = "delta";
        fig.ylabel = "average return";
        std::map<std::string, std::map<double, std::vector<double>>> series;
        for (std::size_t r = 0; r < t.rows.size(); ++r)
            series[t.text(r, "estimator")][t.number(r, "delta")].push_back(t.number(r, "mean"));
        const std::map<std::string, std::string> roles = {{"OEE", "oee"},
                                                          {"TrueValue", "true"},
                                                          {"Oracle", "oracle"},
                                                          {"Simulated", "simulated"},
                                                          {"IS", "is"}};
        for (const auto& [name, by_delta] : series) {
            FigureSeries s;
            s.name = name;
            s.color_role = roles.count(name) ? roles.at(name) : name;
            for (const auto& [d, vals] : by_delta) {
                double m = 0.0;
                for (double v : vals) m += v;
                m /= static_cast<double>(vals.size());
                double sd = 0.0;
                for (double v : vals) sd += (v - m) * (v - m);
                sd = vals.size() > 1 ? std::sqrt(sd / static_cast<double>(vals.size() - 1)) : 0.0;
                s.x.push_back(d);
                s.y.push_back(m);
                s.band_lo.push_back(m - sd);
                s.band_hi.push_back(m + sd);
            }
            fig.series.push_back(std::move(s));
        }
        const std::string p = out_dir + "/delta_sweep.svg";
        emit_svg_lineplot(fig, p);
        result.files.push_back(p);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Gaussian density-ratio benchmark: three P's against Q = N(4, 2) across
// sample sizes, MAE against the analytic ratio, plus a P = Q control.
// ---------------------------------------------------------------------------

struct GaussianExperimentResult {
    struct MaeCell {
        double p_mean = 0.0, p_std = 1.0;
        long n = 0;
        long seed = 0;
        double mae = 0.0;
    };
    std::vector<MaeCell> mae_cells;
    struct ControlCell {
        long seed = 0;
        double max_abs_dev = 0.0;  // max |beta_hat - 1| over the x grid
    };
    std::vector<ControlCell> control_cells;
    std::vector<std::string> files;
};

inline GaussianExperimentResult run_gaussian_experiment(const Config& cfg,
                                                        std::string out_dir = "") {
    if (out_dir.empty()) out_dir = cfg.get_string("experiment.out_dir", "out/gaussian");
    detail::ensure_dir(out_dir);
    const std::vector<long> seeds = detail::config_seeds(cfg);
    const auto p_means = cfg.has("pairs.p_means") ? cfg.get_list_double("pairs.p_means")
                                                  : std::vector<double>{2.0, 3.0, 4.0};
    const auto p_stds = cfg.has("pairs.p_stds") ? cfg.get_list_double("pairs.p_stds")
                                                : std::vector<double>(p_means.size(), 1.0);
    const Gaussian q{cfg.get_double("pairs.q_mean", 4.0), cfg.get_double("pairs.q_std", 2.0)};
    const auto sample_sizes = cfg.has("data.sample_sizes") ? cfg.get_list_int("data.sample_sizes")
                                                           : std::vector<long>{500, 2000, 8000};
    const long control_n = cfg.get_int("data.control_n", 4000);
    TrainConfig tc = detail::train_config_from(cfg);
    const double x_lo = cfg.get_double("eval.x_lo", 2.0);
    const double x_hi = cfg.get_double("eval.x_hi", 6.0);
    const double x_step = cfg.get_double("eval.x_step", 0.1);

    std::vector<double> grid;
    for (double x = x_lo; x <= x_hi + 1e-12; x += x_step) grid.push_back(x);

    GaussianExperimentResult result;
    struct Cell {
        std::size_t pair_idx, n_idx, seed_idx;
        bool control = false;
    };
    std::vector<Cell> cells;
    for (std::size_t pi = 0; pi < p_means.size(); ++pi)
        for (std::size_t ni = 0; ni < sample_sizes.size(); ++ni)
            for (std::size_t ki = 0; ki < seeds.size(); ++ki) cells.push_back({pi, ni, ki, false});
    for (std::size_t ki = 0; ki < seeds.size(); ++ki) cells.push_back({0, 0, ki, true});

    std::vector<GaussianExperimentResult::MaeCell> mae_out(cells.size());
    std::vector<GaussianExperimentResult::ControlCell> control_out(cells.size());
    std::vector<char> is_control(cells.size(), 0);
    // beta-hat curves for the figure: first seed only.
    std::map<std::pair<std::size_t, long>, std::vector<double>> curves;
    std::mutex curves_mutex;

    parallel_for(cells.size(), [&](std::size_t ci) {
        const Cell& cell = cells[ci];
        const long seed = seeds[cell.seed_idx];
        const Gaussian p = cell.control ? q : Gaussian{p_means[cell.pair_idx],
                                                       p_stds[cell.pair_idx]};
        const long n = cell.control ? control_n : sample_sizes[cell.n_idx];
        GaussianPairSpec pair{p, q, static_cast<int>(n)};
        Rng rng = Rng(static_cast<std::uint64_t>(seed))
                      .child(cell.control ? 900 : 10 + cell.pair_idx * 10 + cell.n_idx);
        const auto [sp, sq] = gaussian_pair_sample(pair, rng);
        TrainConfig c = tc;
        c.seed = rng.child(1).seed();
        const RatioModel model = train_ratio(SampleMatrix::from_scalars(sp),
                                             SampleMatrix::from_scalars(sq), c);
        double mae = 0.0, max_dev = 0.0;
        std::vector<double> curve(grid.size());
        for (std::size_t gi = 0; gi < grid.size(); ++gi) {
            const double est = model.value({grid[gi]});
            curve[gi] = est;
            mae += std::abs(est - true_gaussian_ratio(p, q, grid[gi]));
            max_dev = std::max(max_dev, std::abs(est - 1.0));
        }
        mae /= static_cast<double>(grid.size());
        if (cell.control) {
            is_control[ci] = 1;
            control_out[ci] = {seed, max_dev};
        } else {
            mae_out[ci] = {p.mean, p.std, n, seed, mae};
            if (cell.seed_idx == 0) {
                std::lock_guard<std::mutex> lock(curves_mutex);
                curves[{cell.pair_idx, n}] = std::move(curve);
            }
        }
    });
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        if (is_control[ci]) result.control_cells.push_back(control_out[ci]);
        else result.mae_cells.push_back(mae_out[ci]);
    }

    CsvWriter mae_csv({"p_mean", "p_std", "q_mean", "q_std", "n", "seed", "mae"});
    for (const auto& c : result.mae_cells)
        mae_csv.add_row({CsvWriter::cell(c.p_mean), CsvWriter::cell(c.p_std),
                         CsvWriter::cell(q.mean), CsvWriter::cell(q.std), CsvWriter::cell(c.n),
                         CsvWriter::cell(c.seed), CsvWriter::cell(c.mae)});
    const std::string mae_path = out_dir + "/beta_mae.csv";
    mae_csv.write_file(mae_path);
    result.files.push_back(mae_path);

    CsvWriter control_csv({"seed", "n", "max_abs_dev"});
    for (const auto& c : result.control_cells)
        control_csv.add_row({CsvWriter::cell(c.seed), CsvWriter::cell(control_n),
                             CsvWriter::cell(c.max_abs_dev)});
    const std::string control_path = out_dir + "/beta_control.csv";
    control_csv.write_file(control_path);
    result.files.push_back(control_path);

    CsvWriter curve_csv({"p_mean", "p_std", "n", "x", "beta_est", "beta_true"});
    for (const auto& [key, vals] : curves) {
        const Gaussian p{p_means[key.first], p_stds[key.first]};
        for (std::size_t gi = 0; gi < grid.size(); ++gi)
            curve_csv.add_row({CsvWriter::cell(p.mean), CsvWriter::cell(p.std),
                               CsvWriter::cell(key.second), CsvWriter::cell(grid[gi]),
                               CsvWriter::cell(vals[gi]),
                               CsvWriter::cell(true_gaussian_ratio(p, q, grid[gi]))});
    }
    const std::string curve_path = out_dir + "/beta_curves.csv";
    curve_csv.write_file(curve_path);
    result.files.push_back(curve_path);

    write_manifest(out_dir, cfg, seeds);
    result.files.push_back(out_dir + "/manifest.txt");

    // One estimate-vs-analytic figure per pair, from the curves CSV.
    const CsvTable t = read_csv_file(curve_path);
    for (std::size_t pi = 0; pi < p_means.size(); ++pi) {
        FigureSpec fig;
        fig.title = "P = N(" + detail::compact_num(p_means[pi]) + ", " +
                    detail::compact_num(p_stds[pi]) + "), Q = N(" + detail::compact_num(q.mean) +
                    ", " + detail::compact_num(q.std) + ")";
        fig.xlabel = "x";
        fig.ylabel = "beta(x)";
        std::map<long, FigureSeries> by_n;
        std::map<double, double> truth_points;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            if (t.number(r, "p_mean") != p_means[pi] || t.number(r, "p_std") != p_stds[pi])
                continue;
            const long n = static_cast<long>(t.number(r, "n"));
            auto& s = by_n[n];
            if (s.name.empty()) {
                s.name = "n = " + std::to_string(n);
                s.color_role = "estimate_n" + std::to_string(n);
            }
            s.x.push_back(t.number(r, "x"));
            s.y.push_back(t.number(r, "beta_est"));
            truth_points[t.number(r, "x")] = t.number(r, "beta_true");
        }
        FigureSeries truth;
        truth.name = "analytic";
        truth.color_role = "analytic";
        for (const auto& [x, y] : truth_points) {
            truth.x.push_back(x);
            truth.y.push_back(y);
        }
        fig.series.push_back(std::move(truth));
        for (auto& [n, s] : by_n) fig.series.push_back(std::move(s));
        const std::string p = out_dir + "/beta_pair" + std::to_string(pi) + ".svg";
        emit_svg_lineplot(fig, p);
        result.files.push_back(p);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Archery experiment: off-environment estimates across a theta grid for
// each test wind distribution, against the true value and the simulator.
// ---------------------------------------------------------------------------

struct ArcheryExperimentResult {
    struct ThetaCell {
        double test_wind_mean = 0.0, test_wind_std = 1.0;
        double theta = 0.0;
        long seed = 0;
        double true_value = 0.0, true_se = 0.0;
        double oee = 0.0, oee_se = 0.0;
        double simulated = 0.0, simulated_se = 0.0;
        bool sparse_flag = false;  // |OEE - TrueValue| > 3 combined SE
    };
    std::vector<ThetaCell> cells;
    std::vector<std::string> files;
};

inline ArcheryExperimentResult run_archery_experiment(const Config& cfg,
                                                      std::string out_dir = "") {
    if (out_dir.empty()) out_dir = cfg.get_string("experiment.out_dir", "out/archery");
    detail::ensure_dir(out_dir);
    const std::vector<long> seeds = detail::config_seeds(cfg);
    ArcherySpec train_spec;
    train_spec.wind_mean = cfg.get_double("env.train_wind_mean", 4.0);
    train_spec.wind_std = cfg.get_double("env.train_wind_std", 2.0);
    train_spec.launch_speed = cfg.get_double("env.launch_speed", 10.0);
    train_spec.drift_coeff = cfg.get_double("env.drift_coeff", 0.5);
    const auto test_means = cfg.has("env.test_wind_means")
                                ? cfg.get_list_double("env.test_wind_means")
                                : std::vector<double>{2.0, 3.0, 4.0};
    const auto test_stds = cfg.has("env.test_wind_stds")
                               ? cfg.get_list_double("env.test_wind_stds")
                               : std::vector<double>(test_means.size(), 1.0);
    const long n_transitions = cfg.get_int("data.n_transitions", 20000);
    TrainConfig tc = detail::train_config_from(cfg);
    DiscountSpec eval_spec;
    eval_spec.gamma = cfg.get_double("eval.gamma", 1.0);
    eval_spec.horizon = 1;
    eval_spec.n_rollouts = static_cast<int>(cfg.get_int("eval.n_rollouts", 4000));
    std::vector<double> theta_grid;
    if (cfg.has("eval.theta_grid")) {
        theta_grid = cfg.get_list_double("eval.theta_grid");
    } else {
        for (double th = 0.1; th <= 1.5 + 1e-12; th += 0.1) theta_grid.push_back(th);
    }

    ArcheryExperimentResult result;
    const ArcheryEnv env_tr(train_spec);
    const Policy behavior = Policy::uniform(env_tr.action_spec());

    struct Cell {
        std::size_t env_idx, seed_idx;
    };
    std::vector<Cell> cells;
    for (std::size_t ei = 0; ei < test_means.size(); ++ei)
        for (std::size_t ki = 0; ki < seeds.size(); ++ki) cells.push_back({ei, ki});
    std::vector<std::vector<ArcheryExperimentResult::ThetaCell>> cell_out(cells.size());

    parallel_for(cells.size(), [&](std::size_t ci) {
        const std::size_t ei = cells[ci].env_idx;
        const long seed = seeds[cells[ci].seed_idx];
        ArcherySpec test_spec = train_spec;
        test_spec.wind_mean = test_means[ei];
        test_spec.wind_std = test_stds[ei];
        const ArcheryEnv env_te(test_spec);
        const Rng root = Rng(static_cast<std::uint64_t>(seed)).child(200 + ei);
        const DiscountSpec collect_spec{1.0, 1, 1};
        const TransitionDataset data_tr =
            collect_transitions(env_tr, behavior, collect_spec,
                                static_cast<std::size_t>(n_transitions), DatasetSource::Train,
                                root.child(1));
        const TransitionDataset data_te =
            collect_transitions(env_te, behavior, collect_spec,
                                static_cast<std::size_t>(n_transitions), DatasetSource::Test,
                                root.child(2));
        TrainConfig c = tc;
        c.seed = root.child(3).seed();
        const ZetaEstimator zeta = learned_zeta(train_zeta_pair(data_te, data_tr, c));
        for (std::size_t ti = 0; ti < theta_grid.size(); ++ti) {
            const double theta = theta_grid[ti];
            const Policy aim = Policy::expert_linear(env_tr.action_spec(), {0.0}, theta);
            const Rng eval_rng = root.child(1000 + ti);
            const EvaluationReport tv = monte_carlo_return(env_te, aim, eval_spec,
                                                           eval_rng.child(1));
            const EvaluationReport oee = oee_return(env_tr, aim, zeta, eval_spec,
                                                    eval_rng.child(2), "OEE");
            const EvaluationReport sim = simulated_baseline(env_tr, aim, eval_spec,
                                                            eval_rng.child(3));
            ArcheryExperimentResult::ThetaCell cell;
            cell.test_wind_mean = test_spec.wind_mean;
            cell.test_wind_std = test_spec.wind_std;
            cell.theta = theta;
            cell.seed = seed;
            cell.true_value = tv.mean;
            cell.true_se = tv.stderr_mean;
            cell.oee = oee.mean;
            cell.oee_se = oee.stderr_mean;
            cell.simulated = sim.mean;
            cell.simulated_se = sim.stderr_mean;
            const double comb = 3.0 * std::sqrt(tv.stderr_mean * tv.stderr_mean +
                                                oee.stderr_mean * oee.stderr_mean);
            cell.sparse_flag = std::abs(oee.mean - tv.mean) > comb;
            cell_out[ci].push_back(cell);
        }
    });
    for (auto& co : cell_out) result.cells.insert(result.cells.end(), co.begin(), co.end());

    CsvWriter csv({"test_wind_mean", "test_wind_std", "theta", "seed", "true_value", "true_se",
                   "oee", "oee_se", "simulated", "simulated_se", "sparse_flag"});
    for (const auto& c : result.cells)
        csv.add_row({CsvWriter::cell(c.test_wind_mean), CsvWriter::cell(c.test_wind_std),
                     CsvWriter::cell(c.theta), CsvWriter::cell(c.seed),
                     CsvWriter::cell(c.true_value), CsvWriter::cell(c.true_se),
                     CsvWriter::cell(c.oee), CsvWriter::cell(c.oee_se),
                     CsvWriter::cell(c.simulated), CsvWriter::cell(c.simulated_se),
                     c.sparse_flag ? "1" : "0"});
    const std::string csv_path = out_dir + "/archery_eval.csv";
    csv.write_file(csv_path);
    result.files.push_back(csv_path);
    write_manifest(out_dir, cfg, seeds);
    result.files.push_back(out_dir + "/manifest.txt");

    const CsvTable t = read_csv_file(csv_path);
    for (std::size_t ei = 0; ei < test_means.size(); ++ei) {
        FigureSpec fig;
        fig.title = "test wind N(" + detail::compact_num(test_means[ei]) + ", " +
                    detail::compact_num(test_stds[ei]) + ")";
        fig.xlabel = "theta (rad)";
        fig.ylabel = "average return";
        struct Agg {
            std::map<double, std::vector<double>> by_theta;
        };
        std::map<std::string, Agg> agg;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            if (t.number(r, "test_wind_mean") != test_means[ei]) continue;
            const double theta = t.number(r, "theta");
            agg["TrueValue"].by_theta[theta].push_back(t.number(r, "true_value"));
            agg["OEE"].by_theta[theta].push_back(t.number(r, "oee"));
            agg["Simulated"].by_theta[theta].push_back(t.number(r, "simulated"));
        }
        const std::map<std::string, std::string> roles = {
            {"OEE", "oee"}, {"TrueValue", "true"}, {"Simulated", "simulated"}};
        for (const auto& [name, a] : agg) {
            FigureSeries s;
            s.name = name;
            s.color_role = roles.at(name);
            for (const auto& [theta, vals] : a.by_theta) {
                double m = 0.0;
                for (double v : vals) m += v;
                s.x.push_back(theta);
                s.y.push_back(m / static_cast<double>(vals.size()));
            }
            fig.series.push_back(std::move(s));
        }
        const std::string p = out_dir + "/archery_wind" + std::to_string(ei) + ".svg";
        emit_svg_lineplot(fig, p);
        result.files.push_back(p);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Cartpole experiment: delta sweep per test gravity with the learned zeta,
// true value, importance sampling, model-based, and simulator baselines.
// ---------------------------------------------------------------------------

struct CartpoleExperimentResult {
    std::vector<EvaluationReport> reports;  // delta/seed tagged; notes carry gravity
    std::vector<std::string> files;
    Policy expert = Policy::uniform(ActionSpec::discrete(2));
};

inline CartpoleExperimentResult run_cartpole_experiment(const Config& cfg,
                                                        std::string out_dir = "") {
    if (out_dir.empty()) out_dir = cfg.get_string("experiment.out_dir", "out/cartpole");
    detail::ensure_dir(out_dir);
    const std::vector<long> seeds = detail::config_seeds(cfg);
    CartpoleSpec train_spec;
    train_spec.gravity = cfg.get_double("env.gravity_train", 10.0);
    train_spec.noise_sigma = cfg.get_double("env.noise_sigma", 1e-3);
    const auto gravities = cfg.has("env.gravity_test")
                               ? cfg.get_list_double("env.gravity_test")
                               : std::vector<double>{7.5, 10.0, 12.5, 15.0};
    const double delta_collect = cfg.get_double("data.delta_collect", 0.5);
    const long n_transitions = cfg.get_int("data.n_transitions", 15000);
    TrainConfig tc = detail::train_config_from(cfg);
    DiscountSpec eval_spec;
    eval_spec.gamma = cfg.get_double("eval.gamma", 1.0);
    eval_spec.horizon = static_cast<int>(cfg.get_int("eval.T", 100));
    eval_spec.n_rollouts = static_cast<int>(cfg.get_int("eval.n_rollouts", 400));
    const auto delta_grid = cfg.has("eval.delta_grid")
                                ? cfg.get_list_double("eval.delta_grid")
                                : std::vector<double>{0.1, 0.3, 0.5, 0.7, 0.9};

    const CartpoleEnv env_tr(train_spec);
    CemConfig cem;
    cem.population = static_cast<int>(cfg.get_int("cem.population", 64));
    cem.elites = static_cast<int>(cfg.get_int("cem.elites", 10));
    cem.generations = static_cast<int>(cfg.get_int("cem.generations", 50));
    cem.target_return = cfg.get_double("cem.target_return", 95.0);
    cem.eval_spec = DiscountSpec{1.0, eval_spec.horizon, 1};
    const std::uint64_t master = static_cast<std::uint64_t>(cfg.get_int("experiment.seed", 1));
    const Policy expert = cem_train_expert(env_tr, cem, Rng(master).child(31));

    CartpoleExperimentResult result;
    result.expert = expert;

    struct Cell {
        std::size_t grav_idx, seed_idx;
    };
    std::vector<Cell> cells;
    for (std::size_t gi = 0; gi < gravities.size(); ++gi)
        for (std::size_t ki = 0; ki < seeds.size(); ++ki) cells.push_back({gi, ki});
    std::vector<std::vector<EvaluationReport>> cell_out(cells.size());

    parallel_for(cells.size(), [&](std::size_t ci) {
        const std::size_t gi = cells[ci].grav_idx;
        const long seed = seeds[cells[ci].seed_idx];
        CartpoleSpec test_spec = train_spec;
        test_spec.gravity = gravities[gi];
        const CartpoleEnv env_te(test_spec);
        const Policy behavior = cartpole_mixture(delta_collect, expert);
        const Rng root = Rng(static_cast<std::uint64_t>(seed)).child(300 + gi);
        const DiscountSpec collect_spec{1.0, eval_spec.horizon, 1};
        const TransitionDataset data_tr =
            collect_transitions(env_tr, behavior, collect_spec,
                                static_cast<std::size_t>(n_transitions), DatasetSource::Train,
                                root.child(1));
        const TransitionDataset data_te =
            collect_transitions(env_te, behavior, collect_spec,
                                static_cast<std::size_t>(n_transitions), DatasetSource::Test,
                                root.child(2));
        TrainConfig c = tc;
        c.seed = root.child(3).seed();
        const ZetaEstimator zeta = learned_zeta(train_zeta_pair(data_te, data_tr, c));
        // IS uses whole trajectories from the test environment.
        std::vector<Trajectory> te_trajs(static_cast<std::size_t>(eval_spec.n_rollouts));
        const Rng is_rng = root.child(4);
        for (std::size_t i = 0; i < te_trajs.size(); ++i) {
            Rng stream = is_rng.child(i);
            te_trajs[i] = rollout(env_te, behavior, eval_spec, stream);
        }
        const std::string gravity_note = "gravity=" + detail::compact_num(gravities[gi]);
        for (std::size_t di = 0; di < delta_grid.size(); ++di) {
            const double delta = delta_grid[di];
            const Policy target = cartpole_mixture(delta, expert);
            const Rng eval_rng = root.child(1000 + di);
            auto tag = [&](EvaluationReport rep) {
                rep.delta = delta;
                rep.seed = static_cast<std::uint64_t>(seed);
                rep.notes = rep.notes.empty() ? gravity_note : gravity_note + ";" + rep.notes;
                return rep;
            };
            auto& out = cell_out[ci];
            out.push_back(tag(monte_carlo_return(env_te, target, eval_spec, eval_rng.child(1))));
            out.push_back(tag(oee_return(env_tr, target, zeta, eval_spec, eval_rng.child(2),
                                         "OEE")));
            out.push_back(tag(simulated_baseline(env_tr, target, eval_spec, eval_rng.child(3))));
            out.push_back(tag(is_ope_baseline(te_trajs, target, behavior, eval_spec,
                                              is_rng.seed())));
            out.push_back(tag(mle_baseline(data_te, env_te, target, eval_spec,
                                           eval_rng.child(4))));
        }
    });
    for (auto& co : cell_out)
        result.reports.insert(result.reports.end(), co.begin(), co.end());

    CsvWriter csv(detail::report_csv_header());
    for (const auto& rep : result.reports) detail::report_estimator_row(csv, rep);
    const std::string csv_path = out_dir + "/cartpole_delta_sweep.csv";
    csv.write_file(csv_path);
    result.files.push_back(csv_path);
    write_manifest(out_dir, cfg, seeds);
    result.files.push_back(out_dir + "/manifest.txt");

    const CsvTable t = read_csv_file(csv_path);
    for (std::size_t gi = 0; gi < gravities.size(); ++gi) {
        const std::string gravity_note = "gravity=" + detail::compact_num(gravities[gi]);
        FigureSpec fig;
        fig.title = "cartpole, test " + gravity_note;
        fig.xlabel = "delta";
        fig.ylabel = "average return";
        std::map<std::string, std::map<double, std::vector<double>>> series;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            if (t.text(r, "notes").rfind(gravity_note, 0) != 0) continue;
            series[t.text(r, "estimator")][t.number(r, "delta")].push_back(t.number(r, "mean"));
        }
        const std::map<std::string, std::string> roles = {{"OEE", "oee"},
                                                          {"TrueValue", "true"},
                                                          {"Simulated", "simulated"},
                                                          {"IS", "is"},
                                                          {"MLE", "mle"}};
        for (const auto& [name, by_delta] : series) {
            FigureSeries s;
            s.name = name;
            s.color_role = roles.count(name) ? roles.at(name) : name;
            for (const auto& [d, vals] : by_delta) {
                double m = 0.0;
                for (double v : vals) m += v;
                s.x.push_back(d);
                s.y.push_back(m / static_cast<double>(vals.size()));
            }
            fig.series.push_back(std::move(s));
        }
        const std::string p = out_dir + "/cartpole_g" + std::to_string(gi) + ".svg";
        emit_svg_lineplot(fig, p);
        result.files.push_back(p);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Bounds experiment: the three guarantee formulas across a sample-size
// grid, in both constant conventions.
// ---------------------------------------------------------------------------

struct BoundsExperimentResult {
    std::vector<std::string> files;
};

inline BoundsExperimentResult run_bounds_experiment(const Config& cfg, std::string out_dir = "") {
    if (out_dir.empty()) out_dir = cfg.get_string("experiment.out_dir", "out/bounds");
    detail::ensure_dir(out_dir);
    BoundInputs in;
    in.nu = cfg.get_double("bounds.nu", 0.5);
    in.mu = cfg.get_double("bounds.mu", 2.0);
    in.delta = cfg.get_double("bounds.delta", 0.1);
    in.K = cfg.get_double("bounds.K", 10.0);
    in.d_inf = cfg.get_double("bounds.dinf", 0.2);
    in.T = static_cast<int>(cfg.get_int("bounds.T", 100));
    in.gamma = cfg.get_double("bounds.gamma", 0.99);
    in.R = cfg.get_double("bounds.R", 1.0);
    std::vector<long> n_grid;
    if (cfg.has("bounds.n_grid")) {
        n_grid = cfg.get_list_int("bounds.n_grid");
    } else {
        for (double e = 2.0; e <= 6.0 + 1e-12; e += 0.5)
            n_grid.push_back(static_cast<long>(std::llround(std::pow(10.0, e))));
    }

    BoundsExperimentResult result;
    CsvWriter csv({"n", "M_main", "M_supplementary", "zeta_err", "return_err_sq"});
    for (long n : n_grid) {
        BoundInputs bi = in;
        bi.n = static_cast<double>(n);
        const double m_main = theorem_51_bound(bi, BoundForm::Main);
        const double m_supp = theorem_51_bound(bi, BoundForm::Supplementary);
        csv.add_row({CsvWriter::cell(n), CsvWriter::cell(m_main), CsvWriter::cell(m_supp),
                     CsvWriter::cell(zeta_error_bound(bi, m_main)),
                     CsvWriter::cell(return_error_bound(bi, m_main))});
    }
    const std::string csv_path = out_dir + "/bounds_vs_n.csv";
    csv.write_file(csv_path);
    result.files.push_back(csv_path);
    write_manifest(out_dir, cfg, {static_cast<long>(cfg.get_int("experiment.seed", 0))});
    result.files.push_back(out_dir + "/manifest.txt");

    const CsvTable t = read_csv_file(csv_path);
    FigureSpec fig;
    fig.xlabel = "log10 n";
    fig.ylabel = "log10 bound";
    for (const std::string col : {"M_main", "M_supplementary", "zeta_err"}) {
        FigureSeries s;
        s.name = col;
        s.color_role = col;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            s.x.push_back(std::log10(t.number(r, "n")));
            s.y.push_back(std::log10(t.number(r, col)));
        }
        fig.series.push_back(std::move(s));
    }
    const std::string p = out_dir + "/bounds_vs_n.svg";
    emit_svg_lineplot(fig, p);
    result.files.push_back(p);
    return result;
}

}  // namespace oee
