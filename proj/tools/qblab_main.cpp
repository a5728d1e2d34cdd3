#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qb/experiment.hpp"
#include "qb/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Exploration statistics of coupled-block random matrices and "
                 "stadium-billiard wavepackets"};
    app.require_subcommand(1);
    app.fallthrough();   // global options may follow the subcommand
    app.set_version_flag("--version", qb::kVersion);
    app.set_config("--config", "",
                   "read options from an INI/TOML file ([subcommand] sections)");

    qb::RunOptions run;
    std::string out;
    app.add_option("--seed", run.seed, "master RNG seed")->capture_default_str();
    app.add_option("--jobs", run.jobs, "worker threads")
        ->capture_default_str()
        ->check(CLI::Range(1u, 256u));
    app.add_option("--out", out, "output directory (omit to print results without files)");

    // --- ensemble self-return factor -------------------------------------
    qb::RmtFactorParams goe_p;
    qb::RmtFactorParams gue_p;
    gue_p.unitary = true;
    auto add_factor_opts = [](CLI::App* cmd, qb::RmtFactorParams& p) {
        cmd->add_option("--n", p.n, "matrix dimension")->capture_default_str();
        cmd->add_option("--realizations", p.realizations, "ensemble size")
            ->capture_default_str();
        cmd->add_option("--pairs", p.pairs, "random site pairs per realization")
            ->capture_default_str();
    };
    auto* goe_cmd = app.add_subcommand(
        "goe-factor", "infinite-time self-return enhancement, real symmetric ensemble");
    add_factor_opts(goe_cmd, goe_p);
    auto* gue_cmd = app.add_subcommand(
        "gue-factor", "infinite-time self-return enhancement, complex Hermitian ensemble");
    add_factor_opts(gue_cmd, gue_p);

    // --- coupled-block sweeps ---------------------------------------------
    qb::ModelASweepParams ma_p;
    auto* ma_cmd = app.add_subcommand(
        "model-a-sweep", "block-probability ratio vs n_beta for corner coupling");
    ma_cmd->add_option("--n-alpha", ma_p.n_alpha, "alpha block size")->capture_default_str();
    ma_cmd->add_option("--n-c", ma_p.n_c, "coupling corner size")->capture_default_str();
    ma_cmd->add_option("--n-beta", ma_p.n_betas, "beta block sizes (repeatable)")
        ->capture_default_str();
    ma_cmd->add_option("--realizations", ma_p.realizations, "draws per point")
        ->capture_default_str();
    ma_cmd->add_option("--launches", ma_p.launches_per_realization,
                       "launch sites averaged within each draw")
        ->capture_default_str();
    ma_cmd->add_option("--include-initial-site", ma_p.include_initial_site,
                       "keep the launch site in the alpha block average")
        ->capture_default_str();

    qb::ModelBSweepParams mb_p;
    auto* mb_cmd = app.add_subcommand(
        "model-b-sweep", "block-probability ratio vs coupling factor lambda");
    mb_cmd->add_option("--n-alpha", mb_p.n_alpha, "alpha block size")->capture_default_str();
    mb_cmd->add_option("--n-beta", mb_p.n_beta, "beta block size")->capture_default_str();
    mb_cmd->add_option("--lambda", mb_p.lambdas, "coupling factors (repeatable)")
        ->capture_default_str();
    mb_cmd->add_option("--realizations", mb_p.realizations, "draws per point")
        ->capture_default_str();
    mb_cmd->add_option("--launches", mb_p.launches_per_realization,
                       "launch sites averaged within each draw")
        ->capture_default_str();
    mb_cmd->add_option("--include-initial-site", mb_p.include_initial_site,
                       "keep the launch site in the alpha block average")
        ->capture_default_str();

    // --- exploration saturation --------------------------------------------
    qb::SaturationParams sat_p;
    std::string sat_model = "a";
    auto* sat_cmd = app.add_subcommand(
        "saturation", "participation and 1/IPR curves with saturation detection");
    sat_cmd->add_option("--model", sat_model, "coupling model")
        ->check(CLI::IsMember({"a", "b"}))
        ->capture_default_str();
    sat_cmd->add_option("--n-alpha", sat_p.n_alpha, "alpha block size")->capture_default_str();
    sat_cmd->add_option("--n-beta", sat_p.n_beta, "beta block size")->capture_default_str();
    sat_cmd->add_option("--n-c", sat_p.n_c, "coupling corner size (model a)")
        ->capture_default_str();
    sat_cmd->add_option("--lambda", sat_p.lambda, "coupling factor (model b)")
        ->capture_default_str();
    sat_cmd->add_option("--t-max-factor", sat_p.t_max_factor,
                        "series end in units of the Heisenberg time")
        ->capture_default_str();
    sat_cmd->add_option("--points", sat_p.points, "log-spaced sample count")
        ->capture_default_str();
    sat_cmd->add_option("--window-fraction", sat_p.window_fraction,
                        "relative width of the flatness windows")
        ->capture_default_str();
    sat_cmd->add_option("--epsilon-n", sat_p.epsilon_n, "flatness bound for N(t)")
        ->capture_default_str();
    sat_cmd->add_option("--epsilon-ipr", sat_p.epsilon_ipr, "flatness bound for 1/IPR")
        ->capture_default_str();
    sat_cmd->add_option("--realizations", sat_p.realizations, "independent draws")
        ->capture_default_str();

    // --- spectral audit ------------------------------------------------------
    qb::SpectralCharParams sc_p;
    auto* sc_cmd = app.add_subcommand(
        "spectral-characterization",
        "staircase, density of states, unfolded spacings, block weights");
    sc_cmd->add_option("--model", sc_p.model, "ensemble: goe, gue, a, b")
        ->check(CLI::IsMember({"goe", "gue", "a", "b"}))
        ->capture_default_str();
    sc_cmd->add_option("--n", sc_p.n, "dimension for plain ensembles")->capture_default_str();
    sc_cmd->add_option("--n-alpha", sc_p.n_alpha, "alpha block size (models a, b)")
        ->capture_default_str();
    sc_cmd->add_option("--n-beta", sc_p.n_beta, "beta block size (models a, b)")
        ->capture_default_str();
    sc_cmd->add_option("--n-c", sc_p.n_c, "coupling corner size (model a)")
        ->capture_default_str();
    sc_cmd->add_option("--lambda", sc_p.lambda, "coupling factor (model b)")
        ->capture_default_str();
    sc_cmd->add_option("--bins", sc_p.bins, "histogram bins")->capture_default_str();
    sc_cmd->add_option("--discard-fraction", sc_p.discard_fraction,
                       "spectrum fraction trimmed per edge before unfolding")
        ->capture_default_str();

    // --- long-time prediction from short-time dynamics -----------------------
    qb::QbPredictionParams qp_p;
    std::string qp_model = "a";
    auto* qp_cmd = app.add_subcommand(
        "qb-prediction", "predict the infinite-time joint probability from early transport");
    qp_cmd->add_option("--model", qp_model, "coupling model")
        ->check(CLI::IsMember({"a", "b"}))
        ->capture_default_str();
    qp_cmd->add_option("--n-alpha", qp_p.n_alpha, "alpha block size")->capture_default_str();
    qp_cmd->add_option("--n-beta", qp_p.n_beta, "beta block size")->capture_default_str();
    qp_cmd->add_option("--n-c", qp_p.n_c, "coupling corner size (model a)")
        ->capture_default_str();
    qp_cmd->add_option("--lambda", qp_p.lambda, "coupling factor (model b)")
        ->capture_default_str();
    qp_cmd->add_option("--a-index", qp_p.a_index, "launch site")->capture_default_str();
    qp_cmd->add_option("--b-index", qp_p.b_index, "target site")->capture_default_str();
    qp_cmd->add_option("--tau-factor", qp_p.tau_factor,
                       "integration cutoff in units of the Heisenberg time")
        ->capture_default_str();
    qp_cmd->add_option("--reference-count", qp_p.reference_count,
                       "featureless reference realizations")
        ->capture_default_str();

    // --- stadium wavepackets ---------------------------------------------
    qb::StadiumParams st_p;
    double st_sigma = 0.0;
    double st_k = 0.0;
    auto* st_cmd = app.add_subcommand(
        "stadium", "wavepacket launches in a stadium billiard (split-operator)");
    st_cmd->add_option("--radius", st_p.stadium.radius, "endcap radius")->capture_default_str();
    st_cmd->add_option("--length", st_p.stadium.length, "straight-wall length")
        ->capture_default_str();
    st_cmd->add_option("--nx", st_p.grid.nx, "grid columns (power of two)")
        ->capture_default_str();
    st_cmd->add_option("--ny", st_p.grid.ny, "grid rows (power of two)")->capture_default_str();
    st_cmd->add_option("--width", st_p.grid.width, "box width")->capture_default_str();
    st_cmd->add_option("--height", st_p.grid.height, "box height")->capture_default_str();
    st_cmd->add_option("--v0-factor", st_p.v0_factor, "wall height / packet mean energy")
        ->capture_default_str();
    st_cmd->add_option("--dt", st_p.dt, "time step (0 derives it from the phase budget)")
        ->capture_default_str();
    st_cmd->add_option("--t-total", st_p.t_total, "propagation time")->capture_default_str();
    st_cmd->add_option("--exclude-fraction", st_p.exclude_fraction,
                       "transient fraction dropped from the averaged density")
        ->capture_default_str();
    st_cmd->add_option("--series-points", st_p.series_points, "series sample count")
        ->capture_default_str();
    st_cmd->add_option("--window-fraction", st_p.window_fraction,
                       "relative width of the flatness windows")
        ->capture_default_str();
    st_cmd->add_option("--epsilon-n", st_p.epsilon_n, "flatness bound for N(t)")
        ->capture_default_str();
    st_cmd->add_option("--epsilon-ipr", st_p.epsilon_ipr, "flatness bound for 1/IPR")
        ->capture_default_str();
    st_cmd->add_option("--snapshot-times", st_p.snapshot_times,
                       "wavefunction snapshot times (repeatable)");
    st_cmd->add_option("--sigma", st_sigma, "packet width for the standard launches "
                                            "(0 scales with the radius)")
        ->capture_default_str();
    st_cmd->add_option("--k", st_k, "packet wavenumber for the standard launches "
                                    "(0 scales with the radius)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    run.out = out;
    sat_p.model = sat_model[0];
    qp_p.model = qp_model[0];
    if (st_sigma > 0.0 || st_k > 0.0) {
        const double sigma = st_sigma > 0.0 ? st_sigma : 0.1 * st_p.stadium.radius;
        const double k = st_k > 0.0 ? st_k : 62.832 / st_p.stadium.radius;
        st_p.launches = qb::standard_launches(st_p.stadium, sigma, k);
    }

    try {
        nlohmann::json res;
        if (app.got_subcommand(goe_cmd)) res = qb::run_rmt_factor(goe_p, run);
        else if (app.got_subcommand(gue_cmd)) res = qb::run_rmt_factor(gue_p, run);
        else if (app.got_subcommand(ma_cmd)) res = qb::run_model_a_sweep(ma_p, run);
        else if (app.got_subcommand(mb_cmd)) res = qb::run_model_b_sweep(mb_p, run);
        else if (app.got_subcommand(sat_cmd)) res = qb::run_saturation(sat_p, run);
        else if (app.got_subcommand(sc_cmd)) res = qb::run_spectral_characterization(sc_p, run);
        else if (app.got_subcommand(qp_cmd)) res = qb::run_qb_prediction(qp_p, run);
        else if (app.got_subcommand(st_cmd)) res = qb::run_stadium(st_p, run);
        std::cout << res.dump(2) << "\n";
        return 0;
    } catch (const qb::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
