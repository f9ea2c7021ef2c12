#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oee/cli.hpp"
#include "oee/config.hpp"
#include "oee/csv.hpp"
#include "oee/experiments.hpp"
#include "oee/svg.hpp"

using namespace oee;

namespace {

std::string temp_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / ("oee_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("oee");
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::dispatch(static_cast<int>(argv.size()), argv.data());
}

const char* kTinyGridworldConfig = R"(
# tiny run for harness tests
[experiment]
kind = gridworld
seeds = 1,2
seed = 1
out_dir = {OUT}

[env]
grid_sizes = 4
grid_n = 4
eps_train = 0.3
eps_test = 0.1

[data]
sample_sizes = 500,2000
delta_collect = 0.5
exploring_starts = true
horizon = 50
n_transitions = 400

[train]
class = tabular
lambda = 0
iterations = 300
full_batch = true

[eval]
gamma = 0.99
T = 50
n_rollouts = 60
delta_grid = 0.5
)";

std::string write_tiny_config(const std::string& dir) {
    std::string text = kTinyGridworldConfig;
    const auto pos = text.find("{OUT}");
    text.replace(pos, 5, dir);
    const std::string path = dir + "/grid.cfg";
    std::ofstream os(path);
    os << text;
    return path;
}

}  // namespace

TEST_CASE("config parser handles sections, lists, comments") {
    Config cfg = Config::parse_string(R"(
top = 1
[a]
x = 2.5        # trailing comment
names = n1, n2, n3
flag = true
[b]
x = -7
)");
    CHECK(cfg.get_int("top") == 1);
    CHECK(cfg.get_double("a.x") == doctest::Approx(2.5));
    CHECK(cfg.get_list("a.names") == std::vector<std::string>{"n1", "n2", "n3"});
    CHECK(cfg.get_bool("a.flag", false));
    CHECK(cfg.get_int("b.x") == -7);
    CHECK(cfg.get_int("missing", 9) == 9);
    CHECK_THROWS_AS(cfg.get_string("nope"), ArgumentError);
    CHECK_THROWS_AS(Config::parse_string("just a line\n"), IoError);
    CHECK_THROWS_AS(cfg.get_double("a.names"), ArgumentError);
}

TEST_CASE("csv round-trips numbers at full precision") {
    CsvWriter w({"name", "value"});
    w.add_row({"pi", CsvWriter::cell(3.141592653589793)});
    w.add_row({"tiny", CsvWriter::cell(1.2345678901234567e-13)});
    std::ostringstream os;
    w.write(os);
    std::istringstream is(os.str());
    CsvTable t = read_csv(is);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.number(0, "value") == 3.141592653589793);
    CHECK(t.number(1, "value") == 1.2345678901234567e-13);
    CHECK_THROWS_AS(w.add_row({"too", "many", "cells"}), ArgumentError);
}

TEST_CASE("svg lineplot output") {
    FigureSpec fig;
    fig.xlabel = "x";
    fig.ylabel = "y";
    FigureSeries s;
    s.name = "identity";
    s.color_role = "oee";
    s.x = {0.0, 1.0, 2.0};
    s.y = {0.0, 1.0, 2.0};
    fig.series.push_back(s);

    const std::string svg = render_svg_lineplot(fig);
    std::size_t polylines = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
        ++polylines;
        pos += 9;
    }
    CHECK(polylines == 1);
    // three coordinate pairs on the data polyline
    const auto points = svg.find("stroke-width=\"2\" points=\"");
    REQUIRE(points != std::string::npos);
    const auto end = svg.find('"', points + 25);
    const std::string coords = svg.substr(points + 25, end - points - 25);
    CHECK(std::count(coords.begin(), coords.end(), ',') == 3);

    SUBCASE("byte-identical for identical input") {
        CHECK(render_svg_lineplot(fig) == svg);
    }
    SUBCASE("empty series list rejected") {
        FigureSpec empty;
        CHECK_THROWS_AS(render_svg_lineplot(empty), ArgumentError);
    }
}

TEST_CASE("manifest reruns reproduce CSV bytes exactly") {
    const std::string dir_a = temp_dir("rerun_a");
    const std::string dir_b = temp_dir("rerun_b");
    const std::string cfg_path = write_tiny_config(dir_a);
    Config cfg = Config::parse_file(cfg_path);
    run_gridworld_experiment(cfg, dir_a + "/run");
    run_gridworld_experiment(cfg, dir_b + "/run");
    for (const char* f : {"/run/zeta_error_vs_samples.csv", "/run/delta_sweep.csv",
                          "/run/manifest.txt", "/run/zeta_error_vs_samples.svg"}) {
        CHECK(slurp(dir_a + f) == slurp(dir_b + f));
    }
}

TEST_CASE("experiment CSVs parse back into the plotted values") {
    const std::string dir = temp_dir("csvround");
    const std::string cfg_path = write_tiny_config(dir);
    Config cfg = Config::parse_file(cfg_path);
    const auto result = run_gridworld_experiment(cfg, dir + "/run");
    const CsvTable t = read_csv_file(dir + "/run/zeta_error_vs_samples.csv");
    REQUIRE(t.rows.size() == result.error_cells.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        CHECK(t.number(i, "l1_error") == result.error_cells[i].l1_error);
        CHECK(static_cast<long>(t.number(i, "sample_size")) == result.error_cells[i].sample_size);
    }
}

TEST_CASE("cem expert is deterministic and balances the pole") {
    CartpoleEnv env(CartpoleSpec{});
    CemConfig cem;
    cem.generations = 30;
    const Policy expert = cem_train_expert(env, cem, Rng(5));
    CHECK(expert.deterministic());
    Rng rng(6);
    const StateVec s{0.01, -0.02, 0.01, 0.03};
    const ActionId first = sample_action(expert, s, rng);
    for (int i = 0; i < 10; ++i) CHECK(sample_action(expert, s, rng) == first);
    const EvaluationReport rep = monte_carlo_return(env, expert, {1.0, 100, 100}, Rng(7));
    CHECK(rep.mean >= 95.0);

    // Determinism of the trained parameters.
    const Policy again = cem_train_expert(env, cem, Rng(5));
    Rng r2(8);
    for (int i = 0; i < 50; ++i) {
        StateVec probe(4);
        for (auto& v : probe) v = r2.uniform(-0.2, 0.2);
        CHECK(sample_action(expert, probe, r2) == sample_action(again, probe, r2));
    }
}

TEST_CASE("cli: bounds subcommand prints the hand value") {
    const std::string dir = temp_dir("cli_bounds");
    const std::string out = dir + "/bounds.csv";
    CHECK(run_cli({"bounds", "--nu", "0.5", "--mu", "2", "--n", "10000", "--delta", "0.1", "--K",
                   "10", "--dinf", "0.2", "--out", out}) == 0);
    const CsvTable t = read_csv_file(out);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.number(0, "M") == doctest::Approx(0.5911).epsilon(2e-4));
}

TEST_CASE("cli: gen-data writes a loadable dataset") {
    const std::string dir = temp_dir("cli_gen");
    const std::string cfg_path = write_tiny_config(dir);
    const std::string out = dir + "/d.tsv";
    CHECK(run_cli({"gen-data", "--config", cfg_path, "--out", out, "--n", "200"}) == 0);
    const TransitionDataset ds = read_dataset_file(out);
    CHECK(ds.records.size() == 200);
    CHECK(ds.d_s == 2);
    CHECK(ds.source == DatasetSource::Train);
}

TEST_CASE("cli: train-ratio and zeta pipeline") {
    const std::string dir = temp_dir("cli_train");
    const std::string cfg_path = write_tiny_config(dir);
    const std::string p_path = dir + "/te.tsv";
    const std::string q_path = dir + "/tr.tsv";
    REQUIRE(run_cli({"gen-data", "--config", cfg_path, "--out", q_path, "--source", "train",
                     "--n", "2000"}) == 0);
    REQUIRE(run_cli({"gen-data", "--config", cfg_path, "--out", p_path, "--source", "test",
                     "--n", "2000"}) == 0);
    const std::string sas = dir + "/sas.model";
    const std::string sa = dir + "/sa.model";
    REQUIRE(run_cli({"train-ratio", "--p", p_path, "--q", q_path, "--domain", "sas", "--out", sas,
                     "--class", "tabular", "--full-batch", "--iters", "300", "--lambda", "0",
                     "--curve", dir + "/curve.csv"}) == 0);
    REQUIRE(run_cli({"train-ratio", "--p", p_path, "--q", q_path, "--domain", "sa", "--out", sa,
                     "--class", "tabular", "--full-batch", "--iters", "300", "--lambda",
                     "0"}) == 0);
    CHECK(run_cli({"zeta", "--sas", sas, "--sa", sa, "--dataset", p_path, "--out",
                   dir + "/z.csv"}) == 0);
    const CsvTable z = read_csv_file(dir + "/z.csv");
    CHECK(z.rows.size() == 2000);
    const CsvTable curve = read_csv_file(dir + "/curve.csv");
    CHECK(curve.rows.size() >= 2);
}

TEST_CASE("cli: usage errors exit with 2, runtime failures with 1") {
    CHECK(run_cli({"no-such-command"}) == 2);
    CHECK(run_cli({"bounds", "--nu", "0.5"}) == 2);  // missing required flags
    CHECK(run_cli({"gen-data", "--config", "/nonexistent.cfg", "--out", "/tmp/x"}) == 1);
}
