#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qb/birthmark.hpp"
#include "qb/stadium.hpp"

namespace qb {

struct RunOptions {
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    std::filesystem::path out;
};

struct Aggregate {
    double mean = 0.0;
    double se = 0.0;       // standard error of the mean (ddof = 1); 0 for n = 1
    std::size_t n = 0;
};

// Mean and standard error over per-stream results. Callers pass the vector
// ordered by stream id so the reduction is scheduling-independent.
Aggregate ensemble_average(const std::vector<double>& values);

// Run fn(i) for i in [0, n) on up to `jobs` worker threads; results are
// written into slot i of the output, so the reduction order never depends on
// scheduling. Exceptions are rethrown (first index wins).
void parallel_for_indexed(std::size_t n, unsigned jobs,
                          const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Experiment kinds. Each run writes CSVs plus a manifest.json into its output
// directory; all files are staged and promoted on success, so an aborted run
// leaves its partial output under <out>/quarantine/ instead. Each runner
// returns the results summary that also lands in the manifest.
// ---------------------------------------------------------------------------

// Ensemble mean of the self-return enhancement mean(P_aa) / mean(P_ab) over
// random distinct basis pairs; 3 for the orthogonal class, 2 for unitary.
struct RmtFactorParams {
    std::size_t n = 600;
    std::size_t realizations = 20;
    std::size_t pairs = 50;
    bool unitary = false;
};
nlohmann::json run_rmt_factor(const RmtFactorParams& p, const RunOptions& opts);

// Infinite-time block-probability ratio versus n_beta at fixed corner size.
// Each realization averages the site profile over several alpha launch sites
// before taking the block ratio; a single launch inherits the full weight of
// one near-resonant energy denominator and scatters over decades.
struct ModelASweepParams {
    std::size_t n_alpha = 100;
    std::size_t n_c = 1;
    std::vector<std::size_t> n_betas = {200, 400, 800};
    std::size_t realizations = 10;
    std::size_t launches_per_realization = 8;
    bool include_initial_site = true;
};
nlohmann::json run_model_a_sweep(const ModelASweepParams& p, const RunOptions& opts);

// Infinite-time block-probability ratio versus coupling factor lambda.
struct ModelBSweepParams {
    std::size_t n_alpha = 100;
    std::size_t n_beta = 400;
    std::vector<double> lambdas = {0.05, 0.1, 0.2};
    std::size_t realizations = 10;
    std::size_t launches_per_realization = 8;
    bool include_initial_site = true;
};
nlohmann::json run_model_b_sweep(const ModelBSweepParams& p, const RunOptions& opts);

// Exploration curves 1/IPR(t) and N(t) for one coupled-block system, with
// saturation detection. Times are log-spaced over [t_h/1000, t_max_factor*t_h].
struct SaturationParams {
    char model = 'a';                  // 'a' corner-coupled, 'b' scale-coupled
    std::size_t n_alpha = 100;
    std::size_t n_beta = 400;
    std::size_t n_c = 1;
    double lambda = 0.1;
    double t_max_factor = 50.0;
    int points = 2000;
    double window_fraction = 0.5;
    double epsilon_n = 0.05;           // N(t) is a running average: tight tolerance
    double epsilon_ipr = 0.9;          // instantaneous 1/IPR never stops fluctuating;
                                       // weak-coupling plateaus show ~0.7 peak-to-peak
    std::size_t realizations = 1;
};
nlohmann::json run_saturation(const SaturationParams& p, const RunOptions& opts);

// Spectral audit of one ensemble: staircase, density of states, unfolded
// spacing statistics, per-eigenstate in/out ratios.
struct SpectralCharParams {
    std::string model = "goe";         // goe | gue | a | b
    std::size_t n = 1000;              // plain ensembles
    std::size_t n_alpha = 100;         // block models
    std::size_t n_beta = 1000;
    std::size_t n_c = 1;
    double lambda = 0.1;
    int bins = 50;
    double discard_fraction = 0.05;
};
nlohmann::json run_spectral_characterization(const SpectralCharParams& p, const RunOptions& opts);

// Long-time joint probability predicted from short-time dynamics against a
// featureless reference ensemble, for one coupled-block system.
struct QbPredictionParams {
    char model = 'a';
    std::size_t n_alpha = 60;
    std::size_t n_beta = 240;
    std::size_t n_c = 1;
    double lambda = 0.1;
    std::size_t a_index = 0;           // basis sites
    std::size_t b_index = 1;
    double tau_factor = 0.25;          // tau = tau_factor * t_heisenberg
    std::size_t reference_count = 8;
};
nlohmann::json run_qb_prediction(const QbPredictionParams& p, const RunOptions& opts);

// Wavepacket launches in the stadium: time-averaged densities (PGM + field
// dumps), exploration series, symmetry/contrast diagnostics, snapshots.
struct StadiumLaunch {
    std::string name;
    WavepacketSpec packet;
};
struct StadiumParams {
    StadiumSpec stadium;
    GridSpec grid;
    double v0_factor = 1000.0;          // wall height / packet mean energy
    double dt = 0.0;                    // 0: derive from the per-step phase budgets
    double t_total = 3.2;
    double exclude_fraction = 1.0 / 60; // transient dropped from the average
    int series_points = 512;
    double window_fraction = 0.5;
    double epsilon_n = 0.05;
    double epsilon_ipr = 0.25;
    std::vector<double> snapshot_times;
    std::vector<StadiumLaunch> launches;  // empty: the four standard launches
};
nlohmann::json run_stadium(const StadiumParams& p, const RunOptions& opts);

// The four standard launches scaled to a spec: bouncing-ball (center, 90 deg),
// axial scar (center, 0 deg), generic (center, 57 deg), and off-center
// (0.35 L, 0.3 R, 123 deg), all at wavenumber k.
std::vector<StadiumLaunch> standard_launches(const StadiumSpec& ss, double sigma, double k);

} // namespace qb
