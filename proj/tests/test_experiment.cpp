#include <doctest.h>

#include <json.hpp>
#include <qb/errors.hpp>
#include <qb/experiment.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

using namespace qb;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& stem) {
    fs::path p = fs::temp_directory_path() /
                 (stem + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

nlohmann::json manifest_sans_timings(const fs::path& dir) {
    nlohmann::json m = nlohmann::json::parse(slurp(dir / "manifest.json"));
    m.erase("timings");
    return m;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(QBLAB_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

} // namespace

TEST_SUITE("experiment") {

TEST_CASE("ensemble average and standard error") {
    Aggregate a = ensemble_average({1.0, 2.0, 3.0});
    CHECK(a.mean == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(a.se == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
    CHECK(a.n == 3);
    Aggregate single = ensemble_average({5.0});
    CHECK(single.mean == 5.0);
    CHECK(single.se == 0.0);
    CHECK_THROWS_AS(ensemble_average({}), InsufficientDataError);
}

TEST_CASE("parallel loop covers every index exactly once") {
    const std::size_t n = 1000;
    std::vector<std::atomic<int>> hits(n);
    parallel_for_indexed(n, 8, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (std::size_t i = 0; i < n; ++i) CHECK(hits[i].load() == 1);
    // Degenerate cases.
    parallel_for_indexed(0, 4, [&](std::size_t) { FAIL("must not be called"); });
    std::vector<int> serial(10, 0);
    parallel_for_indexed(10, 1, [&](std::size_t i) { serial[i] = 1; });
    for (int v : serial) CHECK(v == 1);
}

TEST_CASE("parallel loop rethrows the lowest-index failure") {
    try {
        parallel_for_indexed(64, 8, [&](std::size_t i) {
            if (i == 5) throw ValidationError("five", "boom at five");
            if (i == 40) throw NumericalError("boom at forty");
        });
        FAIL("expected an exception");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("five") != std::string::npos);
    } catch (...) {
        FAIL("wrong exception type won the race");
    }
}

TEST_CASE("runs are reproducible byte for byte") {
    RmtFactorParams p;
    p.n = 80;
    p.realizations = 3;
    p.pairs = 10;

    fs::path dir_a = temp_dir("qb_repro_a");
    fs::path dir_b = temp_dir("qb_repro_b");
    RunOptions run_a{7, 1, dir_a};
    RunOptions run_b{7, 1, dir_b};
    nlohmann::json res_a = run_rmt_factor(p, run_a);
    nlohmann::json res_b = run_rmt_factor(p, run_b);

    CHECK(res_a == res_b);
    CHECK(slurp(dir_a / "factors.csv") == slurp(dir_b / "factors.csv"));
    CHECK(manifest_sans_timings(dir_a) == manifest_sans_timings(dir_b));
    CHECK_FALSE(fs::exists(dir_a / "quarantine"));

    // A different seed must actually change the numbers.
    fs::path dir_c = temp_dir("qb_repro_c");
    RunOptions run_c{8, 1, dir_c};
    nlohmann::json res_c = run_rmt_factor(p, run_c);
    CHECK(res_c["factor"]["mean"] != res_a["factor"]["mean"]);

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    fs::remove_all(dir_c);
}

TEST_CASE("results do not depend on the worker count") {
    ModelBSweepParams p;
    p.n_alpha = 40;
    p.n_beta = 80;
    p.lambdas = {0.1, 0.5};
    p.realizations = 4;

    fs::path dir_a = temp_dir("qb_jobs_1");
    fs::path dir_b = temp_dir("qb_jobs_4");
    nlohmann::json res_a = run_model_b_sweep(p, RunOptions{3, 1, dir_a});
    nlohmann::json res_b = run_model_b_sweep(p, RunOptions{3, 4, dir_b});
    CHECK(res_a == res_b);
    CHECK(slurp(dir_a / "model_b_sweep.csv") == slurp(dir_b / "model_b_sweep.csv"));
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("aborted runs leave only quarantined output") {
    ModelASweepParams p;
    p.n_alpha = 10;
    p.n_c = 11; // corner larger than the block: rejected inside the sweep
    p.n_betas = {20};
    p.realizations = 1;
    fs::path dir = temp_dir("qb_abort");
    CHECK_THROWS_AS(run_model_a_sweep(p, RunOptions{1, 1, dir}), InvalidCouplingError);
    CHECK(fs::exists(dir / "quarantine"));
    CHECK_FALSE(fs::exists(dir / "manifest.json"));
    CHECK_FALSE(fs::exists(dir / "model_a_sweep.csv"));
    fs::remove_all(dir);
}

TEST_CASE("runners work without an output directory") {
    RmtFactorParams p;
    p.n = 60;
    p.realizations = 2;
    p.pairs = 5;
    nlohmann::json res = run_rmt_factor(p, RunOptions{1, 1, {}});
    CHECK(res.contains("factor"));
    CHECK(res["factor"]["n"] == 2);
}

TEST_CASE("standard launches cover the four protocols") {
    StadiumSpec ss{1.0, 2.0};
    auto launches = standard_launches(ss, 0.1, 62.832);
    REQUIRE(launches.size() == 4);
    CHECK(launches[0].name == "bounce");
    CHECK(launches[1].name == "axial");
    CHECK(launches[2].name == "generic");
    CHECK(launches[3].name == "offcenter");
    // Bouncing-ball: straight up from the center.
    CHECK(launches[0].packet.kx == 0.0);
    CHECK(launches[0].packet.ky == doctest::Approx(62.832));
    CHECK(launches[0].packet.x0 == 0.0);
    // Axial: along the long axis.
    CHECK(launches[1].packet.ky == 0.0);
    CHECK(launches[1].packet.kx == doctest::Approx(62.832));
    // Off-center launch starts away from both symmetry axes.
    CHECK(launches[3].packet.x0 != 0.0);
    CHECK(launches[3].packet.y0 != 0.0);
    for (const auto& l : launches) {
        CHECK(l.packet.sigma == 0.1);
        CHECK(std::hypot(l.packet.kx, l.packet.ky) == doctest::Approx(62.832).epsilon(1e-12));
        CHECK(ss.sdf(l.packet.x0, l.packet.y0) < 0.0);
    }
}

TEST_CASE("cli entry point reports structured exit codes") {
    CHECK(run_cli("--version") == 0);
    CHECK(run_cli("--help") == 0);
    // Parse error: unknown option.
    CHECK(run_cli("goe-factor --no-such-flag") == 2);
    // Validation error from the library: dimension too small to eigensolve.
    CHECK(run_cli("goe-factor --n 1 --realizations 1 --pairs 1") == 2);
    // Missing subcommand.
    CHECK(run_cli("") == 2);
}

TEST_CASE("cli runs a small experiment end to end") {
    fs::path dir = temp_dir("qb_cli_run");
    const std::string args = "--seed 5 goe-factor --n 60 --realizations 2 --pairs 5 --out " +
                             dir.string();
    CHECK(run_cli(args) == 0);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "factors.csv"));
    nlohmann::json m = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(m["experiment"] == "goe-factor");
    CHECK(m["seed"] == 5);
    CHECK(m["results"]["factor"]["n"] == 2);
    fs::remove_all(dir);
}

} // TEST_SUITE
