#pragma once

#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oee/dataset_io.hpp"
#include "oee/experiments.hpp"

namespace oee {
namespace cli {

struct EnvBundle {
    std::string kind;
    std::unique_ptr<Environment> env_tr;
    std::unique_ptr<Environment> env_te;
    std::unique_ptr<Policy> expert;  // null for archery
    double delta_collect = 0.5;
    long n_transitions = 10000;
    int horizon = 200;
    DiscountSpec eval_spec;
};

inline EnvBundle build_envs(const Config& cfg) {
    EnvBundle b;
    b.kind = cfg.get_string("experiment.kind");
    b.delta_collect = cfg.get_double("data.delta_collect", 0.5);
    b.n_transitions = cfg.get_int("data.n_transitions", 10000);
    b.horizon = static_cast<int>(cfg.get_int("data.horizon", 200));
    b.eval_spec.gamma = cfg.get_double("eval.gamma", 0.99);
    b.eval_spec.horizon = static_cast<int>(cfg.get_int("eval.T", 200));
    b.eval_spec.n_rollouts = static_cast<int>(cfg.get_int("eval.n_rollouts", 2000));
    if (b.kind == "gridworld") {
        const int n = static_cast<int>(cfg.get_int("env.grid_n", cfg.has("env.grid_sizes")
                                                       ? cfg.get_list_int("env.grid_sizes")[0]
                                                       : 10));
        const GridworldSpec tr{n, cfg.get_double("env.eps_train", 0.3)};
        const GridworldSpec te{n, cfg.get_double("env.eps_test", 0.1)};
        const bool exploring = cfg.get_bool("data.exploring_starts", false);
        b.env_tr = std::make_unique<GridworldEnv>(tr, exploring);
        b.env_te = std::make_unique<GridworldEnv>(te, exploring);
        b.expert = std::make_unique<Policy>(gridworld_expert_policy(tr, b.eval_spec.gamma));
    } else if (b.kind == "cartpole") {
        CartpoleSpec tr;
        tr.gravity = cfg.get_double("env.gravity_train", 10.0);
        tr.noise_sigma = cfg.get_double("env.noise_sigma", 1e-3);
        CartpoleSpec te = tr;
        te.gravity = cfg.has("env.gravity_test") ? cfg.get_list_double("env.gravity_test")[0]
                                                 : 15.0;
        b.env_tr = std::make_unique<CartpoleEnv>(tr);
        b.env_te = std::make_unique<CartpoleEnv>(te);
        CemConfig cem;
        cem.eval_spec = DiscountSpec{1.0, b.eval_spec.horizon, 1};
        const auto master = static_cast<std::uint64_t>(cfg.get_int("experiment.seed", 1));
        b.expert = std::make_unique<Policy>(
            cem_train_expert(*b.env_tr, cem, Rng(master).child(31)));
    } else if (b.kind == "archery") {
        ArcherySpec tr;
        tr.wind_mean = cfg.get_double("env.train_wind_mean", 4.0);
        tr.wind_std = cfg.get_double("env.train_wind_std", 2.0);
        ArcherySpec te = tr;
        te.wind_mean = cfg.has("env.test_wind_means") ? cfg.get_list_double("env.test_wind_means")[0]
                                                      : 2.0;
        te.wind_std = cfg.has("env.test_wind_stds") ? cfg.get_list_double("env.test_wind_stds")[0]
                                                    : 1.0;
        b.env_tr = std::make_unique<ArcheryEnv>(tr);
        b.env_te = std::make_unique<ArcheryEnv>(te);
    } else {
        throw ArgumentError("config: experiment.kind '" + b.kind +
                            "' does not define environments");
    }
    return b;
}

inline Policy behavior_policy(const EnvBundle& b) {
    if (b.kind == "gridworld") return gridworld_mixture(b.delta_collect, *b.expert);
    if (b.kind == "cartpole") return cartpole_mixture(b.delta_collect, *b.expert);
    return Policy::uniform(b.env_tr->action_spec());
}

inline Policy target_policy(const EnvBundle& b, double delta) {
    if (b.kind == "gridworld") return gridworld_mixture(delta, *b.expert);
    if (b.kind == "cartpole") return cartpole_mixture(delta, *b.expert);
    throw ArgumentError("evaluate: delta policies are defined for gridworld/cartpole");
}

inline int run_gen_data(const std::string& config_path, const std::string& out,
                        const std::string& source, long n_override, long seed_override) {
    Config cfg = Config::parse_file(config_path);
    if (seed_override >= 0) cfg.set("experiment.seed", std::to_string(seed_override));
    EnvBundle b = build_envs(cfg);
    const bool train = source != "test";
    const Environment& env = train ? *b.env_tr : *b.env_te;
    const Policy behavior = behavior_policy(b);
    const long n = n_override > 0 ? n_override : b.n_transitions;
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("experiment.seed", 1));
    const Rng rng = Rng(seed).child(train ? 1 : 2);
    const DiscountSpec collect_spec{1.0, b.horizon, 1};
    TransitionDataset ds =
        collect_transitions(env, behavior, collect_spec, static_cast<std::size_t>(n),
                            train ? DatasetSource::Train : DatasetSource::Test, rng);
    write_dataset_file(ds, out);
    std::printf("wrote %zu %s transitions (ds=%d da=%s) to %s\n", ds.records.size(),
                to_string(ds.source).c_str(), ds.d_s, ds.action_spec.token().c_str(),
                out.c_str());
    return 0;
}

inline SampleMatrix dataset_to_matrix(const TransitionDataset& ds, RatioDomain domain,
                                      bool tabular) {
    FeatureSpec fs;
    fs.d_s = ds.d_s;
    fs.aspec = ds.action_spec;
    fs.domain = domain;
    return detail::encode_dataset(ds, fs, tabular);
}

inline int run_train_ratio(const std::string& p_path, const std::string& q_path,
                           const std::string& domain, const std::string& out,
                           const std::string& cls, TrainConfig tc,
                           const std::string& curve_path) {
    const TransitionDataset dp = read_dataset_file(p_path);
    const TransitionDataset dq = read_dataset_file(q_path);
    const RatioDomain dom = domain == "sa" ? RatioDomain::SA : RatioDomain::SAS;
    if (domain != "sa" && domain != "sas")
        throw ArgumentError("train-ratio: --domain must be sa or sas");
    tc.model_class = cls == "tabular" ? ModelClass::Tabular : ModelClass::Mlp;
    FeatureSpec fs;
    fs.d_s = dp.d_s;
    fs.aspec = dp.action_spec;
    fs.domain = dom;
    const SampleMatrix p = detail::encode_dataset(dp, fs, tc.model_class == ModelClass::Tabular);
    const SampleMatrix q = detail::encode_dataset(dq, fs, tc.model_class == ModelClass::Tabular);
    RatioModel model = train_ratio(p, q, tc);
    model.fspec = fs;
    write_ratio_model_file(model, out);
    if (!curve_path.empty()) {
        CsvWriter csv({"iteration", "loss"});
        for (const auto& pt : model.meta.curve)
            csv.add_row({CsvWriter::cell(pt.iteration), CsvWriter::cell(pt.loss)});
        csv.write_file(curve_path);
    }
    std::printf("trained %s ratio model on |P|=%zu |Q|=%zu samples; final loss %.6g -> %s\n",
                domain.c_str(), p.rows(), q.rows(), model.meta.curve.back().loss, out.c_str());
    return 0;
}

inline int run_zeta(const std::string& sas_path, const std::string& sa_path,
                    const std::string& dataset_path, const std::string& out) {
    auto sas = std::make_shared<RatioModel>(read_ratio_model_file(sas_path));
    auto sa = std::make_shared<RatioModel>(read_ratio_model_file(sa_path));
    const ZetaEstimator zeta = ZetaEstimator::learned(sas, sa);
    const TransitionDataset ds = read_dataset_file(dataset_path);
    CsvWriter csv({"record", "zeta"});
    double sum = 0.0, zmin = std::numeric_limits<double>::infinity(), zmax = -zmin;
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const auto& tr = ds.records[i];
        const double z = zeta.value(tr.s, tr.a, tr.s_next);
        csv.add_row({CsvWriter::cell(static_cast<long>(i)), CsvWriter::cell(z)});
        sum += z;
        zmin = std::min(zmin, z);
        zmax = std::max(zmax, z);
    }
    if (!out.empty()) csv.write_file(out);
    std::printf("zeta over %zu records: mean %.6g, min %.6g, max %.6g\n", ds.records.size(),
                sum / static_cast<double>(ds.records.size()), zmin, zmax);
    return 0;
}

inline int run_evaluate(const std::string& config_path, const std::string& out,
                        const std::string& zeta_kind, const std::string& sas_path,
                        const std::string& sa_path, double delta, long seed_override) {
    Config cfg = Config::parse_file(config_path);
    if (seed_override >= 0) cfg.set("experiment.seed", std::to_string(seed_override));
    EnvBundle b = build_envs(cfg);
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("experiment.seed", 1));
    const Rng root = Rng(seed).child(7);
    ZetaEstimator zeta = ZetaEstimator::unit();
    if (zeta_kind == "oracle") {
        const auto* tr = dynamic_cast<const GridworldEnv*>(b.env_tr.get());
        const auto* te = dynamic_cast<const GridworldEnv*>(b.env_te.get());
        if (!tr || !te)
            throw ArgumentError("evaluate: the oracle zeta exists only for gridworld");
        zeta = oracle_zeta_gridworld(tr->spec(), te->spec());
    } else if (zeta_kind == "learned") {
        if (sas_path.empty() || sa_path.empty())
            throw ArgumentError("evaluate: --zeta learned needs --sas and --sa model files");
        zeta = ZetaEstimator::learned(
            std::make_shared<RatioModel>(read_ratio_model_file(sas_path)),
            std::make_shared<RatioModel>(read_ratio_model_file(sa_path)));
    } else if (zeta_kind != "unit") {
        throw ArgumentError("evaluate: --zeta must be unit, oracle, or learned");
    }
    Policy target = b.kind == "archery"
                        ? Policy::expert_linear(b.env_tr->action_spec(), {0.0}, delta)
                        : target_policy(b, delta);
    std::vector<EvaluationReport> reports;
    reports.push_back(monte_carlo_return(*b.env_te, target, b.eval_spec, root.child(1)));
    reports.push_back(oee_return(*b.env_tr, target, zeta, b.eval_spec, root.child(2), "OEE"));
    reports.push_back(simulated_baseline(*b.env_tr, target, b.eval_spec, root.child(3)));
    CsvWriter csv(detail::report_csv_header());
    for (auto& rep : reports) {
        rep.delta = delta;
        rep.seed = seed;
        detail::report_estimator_row(csv, rep);
        std::printf("%-10s mean %.6g  se %.3g  ess %.1f\n", rep.estimator.c_str(), rep.mean,
                    rep.stderr_mean, rep.ess);
    }
    if (!out.empty()) csv.write_file(out);
    return 0;
}

inline int run_bounds(const BoundInputs& in, const std::string& form_name,
                      const std::string& out) {
    const BoundForm form =
        form_name == "supplementary" ? BoundForm::Supplementary : BoundForm::Main;
    if (form_name != "main" && form_name != "supplementary")
        throw ArgumentError("bounds: --form must be main or supplementary");
    BoundReport rep = bound_report(in, form);
    std::printf("M (estimation bound)      = %.6g\n", rep.M);
    std::printf("zeta error bound          = %.6g\n", rep.zeta_err);
    std::printf("return error bound (sq.)  = %.6g\n", rep.return_err_sq);
    if (!rep.notes.empty()) std::printf("note: %s\n", rep.notes.c_str());
    if (!out.empty()) {
        CsvWriter csv({"nu", "mu", "n", "delta", "K", "dinf", "T", "gamma", "R", "form", "M",
                       "zeta_err", "return_err_sq"});
        csv.add_row({CsvWriter::cell(in.nu), CsvWriter::cell(in.mu), CsvWriter::cell(in.n),
                     CsvWriter::cell(in.delta), CsvWriter::cell(in.K), CsvWriter::cell(in.d_inf),
                     CsvWriter::cell(in.T), CsvWriter::cell(in.gamma), CsvWriter::cell(in.R),
                     form_name, CsvWriter::cell(rep.M), CsvWriter::cell(rep.zeta_err),
                     CsvWriter::cell(rep.return_err_sq)});
        csv.write_file(out);
    }
    return 0;
}

inline int run_experiment(const std::string& kind, const std::string& config_path,
                          const std::string& out_dir, long seed_override) {
    Config cfg = Config::parse_file(config_path);
    if (seed_override >= 0) cfg.set("experiment.seed", std::to_string(seed_override));
    std::vector<std::string> files;
    if (kind == "gridworld") files = run_gridworld_experiment(cfg, out_dir).files;
    else if (kind == "gaussian") files = run_gaussian_experiment(cfg, out_dir).files;
    else if (kind == "archery") files = run_archery_experiment(cfg, out_dir).files;
    else if (kind == "cartpole") files = run_cartpole_experiment(cfg, out_dir).files;
    else if (kind == "bounds") files = run_bounds_experiment(cfg, out_dir).files;
    else throw ArgumentError("experiment: unknown kind '" + kind + "'");
    for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
    return 0;
}

inline int dispatch(int argc, const char* const* argv) {
    CLI::App app{"off-environment evaluation toolkit"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "collect a transition dataset");
    std::string gen_config, gen_out, gen_source = "train";
    long gen_n = 0, gen_seed = -1;
    gen->add_option("--config", gen_config)->required();
    gen->add_option("--out", gen_out)->required();
    gen->add_option("--source", gen_source)->check(CLI::IsMember({"train", "test"}));
    gen->add_option("--n", gen_n);
    gen->add_option("--seed", gen_seed);

    // train-ratio
    auto* tr = app.add_subcommand("train-ratio", "fit a density-ratio model");
    std::string tr_p, tr_q, tr_domain, tr_out, tr_class = "mlp", tr_curve;
    TrainConfig tc;
    long tr_batch = 256, tr_iters = 50000, tr_seed = 0;
    double tr_lr = 1e-5, tr_lambda = 1e-4, tr_nu = 0.1, tr_mu = 10.0;
    bool tr_full_batch = false;
    std::vector<long> tr_widths = {64, 64, 64};
    tr->add_option("--p", tr_p, "dataset sampled from P (testing MDP)")->required();
    tr->add_option("--q", tr_q, "dataset sampled from Q (training MDP)")->required();
    tr->add_option("--domain", tr_domain)->required()->check(CLI::IsMember({"sa", "sas"}));
    tr->add_option("--out", tr_out)->required();
    tr->add_option("--class", tr_class)->check(CLI::IsMember({"mlp", "tabular"}));
    tr->add_option("--curve", tr_curve, "training-curve CSV path");
    tr->add_option("--batch", tr_batch);
    tr->add_option("--iters", tr_iters);
    tr->add_option("--lr", tr_lr);
    tr->add_option("--lambda", tr_lambda);
    tr->add_option("--nu", tr_nu);
    tr->add_option("--mu", tr_mu);
    tr->add_option("--widths", tr_widths)->expected(3);
    tr->add_flag("--full-batch", tr_full_batch);
    tr->add_option("--seed", tr_seed);

    // zeta
    auto* zt = app.add_subcommand("zeta", "evaluate a composed zeta on a dataset");
    std::string zt_sas, zt_sa, zt_dataset, zt_out;
    zt->add_option("--sas", zt_sas)->required();
    zt->add_option("--sa", zt_sa)->required();
    zt->add_option("--dataset", zt_dataset)->required();
    zt->add_option("--out", zt_out);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "estimate returns with a zeta variant");
    std::string ev_config, ev_out, ev_zeta = "unit", ev_sas, ev_sa;
    double ev_delta = 0.5;
    long ev_seed = -1;
    ev->add_option("--config", ev_config)->required();
    ev->add_option("--out", ev_out);
    ev->add_option("--zeta", ev_zeta)->check(CLI::IsMember({"unit", "oracle", "learned"}));
    ev->add_option("--sas", ev_sas);
    ev->add_option("--sa", ev_sa);
    ev->add_option("--delta", ev_delta);
    ev->add_option("--seed", ev_seed);

    // bounds
    auto* bd = app.add_subcommand("bounds", "finite-sample guarantee calculators");
    BoundInputs bi;
    std::string bd_form = "main", bd_out;
    bd->add_option("--nu", bi.nu)->required();
    bd->add_option("--mu", bi.mu)->required();
    bd->add_option("--n", bi.n)->required();
    bd->add_option("--delta", bi.delta)->required();
    bd->add_option("--K", bi.K)->required();
    bd->add_option("--dinf", bi.d_inf)->required();
    bd->add_option("--T", bi.T);
    bd->add_option("--gamma", bi.gamma);
    bd->add_option("--R", bi.R);
    bd->add_option("--form", bd_form);
    bd->add_option("--out", bd_out);

    // experiment <kind>
    auto* ex = app.add_subcommand("experiment", "run a full experiment from a config");
    std::string ex_kind, ex_config, ex_out;
    long ex_seed = -1;
    ex->add_option("kind", ex_kind)
        ->required()
        ->check(CLI::IsMember({"gridworld", "gaussian", "archery", "cartpole", "bounds"}));
    ex->add_option("--config", ex_config)->required();
    ex->add_option("--out", ex_out);
    ex->add_option("--seed", ex_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "oee: " << e.what() << "\n";
        return 2;
    }

    try {
        if (gen->parsed()) return run_gen_data(gen_config, gen_out, gen_source, gen_n, gen_seed);
        if (tr->parsed()) {
            tc.batch = static_cast<int>(tr_batch);
            tc.iterations = static_cast<int>(tr_iters);
            tc.lr = tr_lr;
            tc.lambda = tr_lambda;
            tc.nu = tr_nu;
            tc.mu = tr_mu;
            tc.seed = static_cast<std::uint64_t>(tr_seed);
            tc.full_batch = tr_full_batch;
            tc.widths = {static_cast<int>(tr_widths[0]), static_cast<int>(tr_widths[1]),
                         static_cast<int>(tr_widths[2])};
            return run_train_ratio(tr_p, tr_q, tr_domain, tr_out, tr_class, tc, tr_curve);
        }
        if (zt->parsed()) return run_zeta(zt_sas, zt_sa, zt_dataset, zt_out);
        if (ev->parsed())
            return run_evaluate(ev_config, ev_out, ev_zeta, ev_sas, ev_sa, ev_delta, ev_seed);
        if (bd->parsed()) return run_bounds(bi, bd_form, bd_out);
        if (ex->parsed()) return run_experiment(ex_kind, ex_config, ex_out, ex_seed);
    } catch (const std::exception& e) {
        std::cerr << "oee: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "oee: no subcommand\n";
    return 2;
}

}  // namespace cli
}  // namespace oee
