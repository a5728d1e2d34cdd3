#include "qb/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <thread>
#include <utility>

#include "qb/io.hpp"
#include "qb/rmt.hpp"
#include "qb/version.hpp"

namespace qb {

namespace {

namespace fs = std::filesystem;

// Stream-id namespaces keep matrix draws, pair picks, and reference draws on
// disjoint generator streams.
constexpr std::uint64_t kAuxStreamBase = 0x1'0000'0000ULL;
constexpr std::uint64_t kRefStreamBase = 0x2'0000'0000ULL;

// Output files are written into <out>/quarantine/ and moved up only after the
// whole run succeeded, so an aborted run never leaves files that look final.
class Workspace {
public:
    explicit Workspace(const fs::path& out) : final_(out) {
        if (final_.empty()) return;
        stage_ = final_ / "quarantine";
        fs::remove_all(stage_);
        fs::create_directories(stage_);
    }

    bool enabled() const { return !final_.empty(); }

    fs::path file(const std::string& name) const {
        if (!enabled()) throw Error("no output directory configured");
        return stage_ / name;
    }

    std::vector<std::string> staged_files() const {
        std::vector<std::string> names;
        for (const auto& e : fs::directory_iterator(stage_))
            names.push_back(e.path().filename().string());
        std::sort(names.begin(), names.end());
        return names;
    }

    void promote() {
        if (!enabled()) return;
        for (const auto& name : staged_files())
            fs::rename(stage_ / name, final_ / name);
        fs::remove_all(stage_);
    }

private:
    fs::path final_, stage_;
};

nlohmann::json run_with_manifest(const std::string& name, const nlohmann::json& params,
                                 const RunOptions& opts,
                                 const std::function<nlohmann::json(Workspace&)>& body) {
    Workspace ws(opts.out);
    const auto t0 = std::chrono::steady_clock::now();
    nlohmann::json results = body(ws);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (ws.enabled()) {
        nlohmann::json manifest;
        manifest["experiment"] = name;
        manifest["jobs"] = opts.jobs;
        manifest["outputs"] = ws.staged_files();
        manifest["params"] = params;
        manifest["results"] = results;
        manifest["seed"] = opts.seed;
        manifest["timings"] = {{"wall_seconds", seconds}};
        manifest["version"] = kVersion;
        write_json(ws.file("manifest.json"), manifest);
        ws.promote();
    }
    return results;
}

std::size_t random_index(RandomStream& rs, std::size_t n) {
    const auto i = static_cast<std::size_t>(rs.uniform() * static_cast<double>(n));
    return std::min(i, n - 1);
}

nlohmann::json aggregate_json(const Aggregate& a) {
    return {{"mean", a.mean}, {"n", a.n}, {"se", a.se}};
}

double series_value_at(const TimeSeries& ts, double t) {
    const auto it = std::lower_bound(ts.times.begin(), ts.times.end(), t - 1e-12);
    if (it == ts.times.end()) return ts.values.back();
    return ts.values[static_cast<std::size_t>(it - ts.times.begin())];
}

nlohmann::json optional_json(const std::optional<double>& v) {
    if (v) return *v;
    return nullptr;
}

void check_launch_name(const std::string& name) {
    if (name.empty()) throw ValidationError("launches", "launch name must not be empty");
    for (char c : name)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_')
            throw ValidationError("launches", "launch name must be [A-Za-z0-9_-]: " + name);
}

} // namespace

Aggregate ensemble_average(const std::vector<double>& values) {
    if (values.empty()) throw InsufficientDataError("values", "empty ensemble");
    Aggregate a;
    a.n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    a.mean = sum / static_cast<double>(a.n);
    if (a.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - a.mean) * (v - a.mean);
        a.se = std::sqrt(ss / static_cast<double>(a.n - 1) / static_cast<double>(a.n));
    }
    return a;
}

void parallel_for_indexed(std::size_t n, unsigned jobs,
                          const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const auto workers =
        static_cast<unsigned>(std::min<std::size_t>(std::max(jobs, 1u), n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

nlohmann::json run_rmt_factor(const RmtFactorParams& p, const RunOptions& opts) {
    if (p.n < 2) throw InvalidDimensionError("n", "must be >= 2");
    if (p.realizations < 1) throw ValidationError("realizations", "must be >= 1");
    if (p.pairs < 1) throw ValidationError("pairs", "must be >= 1");

    const nlohmann::json params{
        {"n", p.n}, {"pairs", p.pairs}, {"realizations", p.realizations}, {"unitary", p.unitary}};
    return run_with_manifest(p.unitary ? "gue-factor" : "goe-factor", params, opts,
                             [&](Workspace& ws) {
        struct Row {
            double self_mean = 0.0, cross_mean = 0.0, factor = 0.0;
        };
        std::vector<Row> rows(p.realizations);
        parallel_for_indexed(p.realizations, opts.jobs, [&](std::size_t r) {
            RandomStream rs(opts.seed, r);
            const Hamiltonian h = p.unitary ? sample_gue(p.n, rs) : sample_goe(p.n, rs);
            const EigenSystem es = eigensolve(h);
            RandomStream pick(opts.seed, kAuxStreamBase + r);
            double self = 0.0, cross = 0.0;
            for (std::size_t q = 0; q < p.pairs; ++q) {
                const std::size_t a = random_index(pick, p.n);
                std::size_t b = random_index(pick, p.n);
                while (b == a) b = random_index(pick, p.n);
                const StateVector va = basis_state(p.n, a);
                const StateVector vb = basis_state(p.n, b);
                self += infinite_time_joint(es, va, va);
                cross += infinite_time_joint(es, va, vb);
            }
            rows[r].self_mean = self / static_cast<double>(p.pairs);
            rows[r].cross_mean = cross / static_cast<double>(p.pairs);
            rows[r].factor = rows[r].self_mean / rows[r].cross_mean;
        });

        std::vector<double> factors(p.realizations);
        std::vector<std::vector<double>> csv;
        double self_total = 0.0, cross_total = 0.0;
        for (std::size_t r = 0; r < p.realizations; ++r) {
            factors[r] = rows[r].factor;
            self_total += rows[r].self_mean;
            cross_total += rows[r].cross_mean;
            csv.push_back({static_cast<double>(r), rows[r].self_mean, rows[r].cross_mean,
                           rows[r].factor});
        }
        if (ws.enabled())
            write_csv(ws.file("factors.csv"),
                      {"realization", "p_self_mean", "p_cross_mean", "factor"}, csv);

        nlohmann::json res;
        res["expected"] =
            rmt_factor(p.unitary ? SymmetryClass::Unitary : SymmetryClass::Orthogonal);
        res["factor"] = aggregate_json(ensemble_average(factors));
        res["factor_pooled"] = self_total / cross_total;   // ratio of grand means
        return res;
    });
}

namespace {

// Shared sweep body: value_count parameter points, `realizations` draws each,
// blocks(point, realization) -> (alpha block mean, beta block mean) computed
// on worker threads in stream order.
nlohmann::json sweep_body(
    Workspace& ws, const RunOptions& opts, std::size_t value_count, std::size_t realizations,
    unsigned jobs,
    const std::function<std::pair<double, double>(std::size_t, RandomStream&)>& blocks_of,
    const std::function<double(std::size_t)>& value_of, const std::string& value_name,
    const std::string& csv_name, bool expect_increasing) {
    std::vector<double> alphas(value_count * realizations);
    std::vector<double> betas(value_count * realizations);
    parallel_for_indexed(value_count * realizations, jobs, [&](std::size_t id) {
        RandomStream rs(opts.seed, id);
        const auto [a, b] = blocks_of(id / realizations, rs);
        alphas[id] = a;
        betas[id] = b;
    });

    // Per-draw ratios alpha/beta are heavy-tailed: a draw without a
    // near-resonant energy denominator leaves almost no weight in the beta
    // block, and dividing by that occasionally-tiny number scatters single
    // draws over decades. The block means themselves are bounded (each lies
    // in [0, 1/block_size]), so the ensemble ratio is the ratio of pooled
    // block means -- grand mean over grand mean, not a mean of ratios --
    // with a leave-one-out (jackknife) standard error.
    std::vector<double> log_means(value_count);
    std::vector<std::vector<double>> csv;
    nlohmann::json points = nlohmann::json::array();
    for (std::size_t v = 0; v < value_count; ++v) {
        double sum_a = 0.0;
        double sum_b = 0.0;
        for (std::size_t r = 0; r < realizations; ++r) {
            const double a = alphas[v * realizations + r];
            const double b = betas[v * realizations + r];
            if (!(a > 0.0) || !std::isfinite(a) || !(b > 0.0) || !std::isfinite(b))
                throw NumericalError("block mean is not positive and finite");
            sum_a += a;
            sum_b += b;
        }
        const double pooled = sum_a / sum_b;
        double se = 0.0;
        double log_se = 0.0;
        if (realizations > 1) {
            std::vector<double> loo(realizations);
            double loo_mean = 0.0;
            double loo_log_mean = 0.0;
            for (std::size_t r = 0; r < realizations; ++r) {
                loo[r] = (sum_a - alphas[v * realizations + r]) /
                         (sum_b - betas[v * realizations + r]);
                loo_mean += loo[r];
                loo_log_mean += std::log(loo[r]);
            }
            loo_mean /= static_cast<double>(realizations);
            loo_log_mean /= static_cast<double>(realizations);
            double ss = 0.0;
            double ss_log = 0.0;
            for (std::size_t r = 0; r < realizations; ++r) {
                ss += (loo[r] - loo_mean) * (loo[r] - loo_mean);
                const double dl = std::log(loo[r]) - loo_log_mean;
                ss_log += dl * dl;
            }
            const double scale =
                static_cast<double>(realizations - 1) / static_cast<double>(realizations);
            se = std::sqrt(scale * ss);
            log_se = std::sqrt(scale * ss_log);
        }
        log_means[v] = std::log(pooled);
        csv.push_back({value_of(v), pooled, se, static_cast<double>(realizations)});
        nlohmann::json pt;
        pt["mean"] = pooled;
        pt["se"] = se;
        pt["log_mean"] = log_means[v];
        pt["log_se"] = log_se;
        pt["n"] = realizations;
        pt[value_name] = value_of(v);
        points.push_back(pt);
    }
    if (ws.enabled())
        write_csv(ws.file(csv_name), {value_name, "ratio_mean", "ratio_se", "realizations"},
                  csv);

    bool monotone = true;
    for (std::size_t v = 0; v + 1 < value_count; ++v) {
        const bool step_up = log_means[v + 1] > log_means[v];
        if (step_up != expect_increasing) monotone = false;
    }
    nlohmann::json res;
    res[expect_increasing ? "monotone_increasing" : "monotone_decreasing"] = monotone;
    res["ratios"] = points;
    return res;
}

// Block means for one disorder realization, averaged over several launch
// sites. A single launch inherits the full weight of whichever near-resonant
// energy denominator its site happens to couple to; averaging the block means
// over launches spread across the alpha sites tempers that within-draw noise.
std::pair<double, double> launch_averaged_blocks(const EigenSystem& es, std::size_t n_alpha,
                                                 std::size_t launches,
                                                 bool include_initial_site) {
    const std::size_t count = std::min(launches, n_alpha);
    double alpha_sum = 0.0;
    double beta_sum = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
        const std::size_t site = j * n_alpha / count;
        const InfiniteTimeProfile prof = infinite_time_profile(
            es, basis_state(es.dim(), site), n_alpha, include_initial_site);
        alpha_sum += prof.block_alpha;
        beta_sum += prof.block_beta;
    }
    const double n = static_cast<double>(count);
    return {alpha_sum / n, beta_sum / n};
}

} // namespace

nlohmann::json run_model_a_sweep(const ModelASweepParams& p, const RunOptions& opts) {
    if (p.n_betas.empty()) throw ValidationError("n_betas", "must not be empty");
    if (p.realizations < 1) throw ValidationError("realizations", "must be >= 1");
    if (p.launches_per_realization < 1)
        throw ValidationError("launches_per_realization", "must be >= 1");

    const nlohmann::json params{{"include_initial_site", p.include_initial_site},
                                {"launches_per_realization", p.launches_per_realization},
                                {"n_alpha", p.n_alpha},
                                {"n_betas", p.n_betas},
                                {"n_c", p.n_c},
                                {"realizations", p.realizations}};
    return run_with_manifest("model-a-sweep", params, opts, [&](Workspace& ws) {
        return sweep_body(
            ws, opts, p.n_betas.size(), p.realizations, opts.jobs,
            [&](std::size_t v, RandomStream& rs) {
                const Hamiltonian h = build_model_a(p.n_alpha, p.n_betas[v], p.n_c, rs);
                const EigenSystem es = eigensolve(h);
                return launch_averaged_blocks(es, p.n_alpha, p.launches_per_realization,
                                              p.include_initial_site);
            },
            [&](std::size_t v) { return static_cast<double>(p.n_betas[v]); }, "n_beta",
            "model_a_sweep.csv", true);
    });
}

nlohmann::json run_model_b_sweep(const ModelBSweepParams& p, const RunOptions& opts) {
    if (p.lambdas.empty()) throw ValidationError("lambdas", "must not be empty");
    if (p.realizations < 1) throw ValidationError("realizations", "must be >= 1");
    if (p.launches_per_realization < 1)
        throw ValidationError("launches_per_realization", "must be >= 1");

    const nlohmann::json params{{"include_initial_site", p.include_initial_site},
                                {"lambdas", p.lambdas},
                                {"launches_per_realization", p.launches_per_realization},
                                {"n_alpha", p.n_alpha},
                                {"n_beta", p.n_beta},
                                {"realizations", p.realizations}};
    return run_with_manifest("model-b-sweep", params, opts, [&](Workspace& ws) {
        return sweep_body(
            ws, opts, p.lambdas.size(), p.realizations, opts.jobs,
            [&](std::size_t v, RandomStream& rs) {
                const Hamiltonian h = build_model_b(p.n_alpha, p.n_beta, p.lambdas[v], rs);
                const EigenSystem es = eigensolve(h);
                return launch_averaged_blocks(es, p.n_alpha, p.launches_per_realization,
                                              p.include_initial_site);
            },
            [&](std::size_t v) { return p.lambdas[v]; }, "lambda", "model_b_sweep.csv",
            false);
    });
}

nlohmann::json run_saturation(const SaturationParams& p, const RunOptions& opts) {
    if (p.model != 'a' && p.model != 'b')
        throw ValidationError("model", "must be 'a' or 'b'");
    if (p.realizations < 1) throw ValidationError("realizations", "must be >= 1");
    if (!(p.t_max_factor > 0.0)) throw ValidationError("t_max_factor", "must be positive");

    const nlohmann::json params{{"epsilon_ipr", p.epsilon_ipr},
                                {"epsilon_n", p.epsilon_n},
                                {"lambda", p.lambda},
                                {"model", std::string(1, p.model)},
                                {"n_alpha", p.n_alpha},
                                {"n_beta", p.n_beta},
                                {"n_c", p.n_c},
                                {"points", p.points},
                                {"realizations", p.realizations},
                                {"t_max_factor", p.t_max_factor},
                                {"window_fraction", p.window_fraction}};
    return run_with_manifest("saturation", params, opts, [&](Workspace& ws) {
        std::vector<nlohmann::json> per(p.realizations);
        parallel_for_indexed(p.realizations, opts.jobs, [&](std::size_t r) {
            RandomStream rs(opts.seed, r);
            const Hamiltonian h = p.model == 'a'
                                      ? build_model_a(p.n_alpha, p.n_beta, p.n_c, rs)
                                      : build_model_b(p.n_alpha, p.n_beta, p.lambda, rs);
            const EigenSystem es = eigensolve(h);
            const StateVector a0 = basis_state(es.dim(), 0);
            const double t_h = heisenberg_time_bulk(es);

            const TimeSeries n_ts = participation_number_series(
                es, a0, t_h / 1000.0, p.t_max_factor * t_h, p.points);
            const TimeSeries ipr_ts = inverse_ipr_series(es, a0, n_ts.times);
            const auto sat_n = detect_saturation(n_ts, p.window_fraction, p.epsilon_n);
            const auto sat_ipr = detect_saturation(ipr_ts, p.window_fraction, p.epsilon_ipr);

            if (ws.enabled()) {
                std::vector<std::vector<double>> csv;
                for (std::size_t k = 0; k < n_ts.times.size(); ++k)
                    csv.push_back({n_ts.times[k], n_ts.values[k], ipr_ts.values[k]});
                write_csv(ws.file("series_r" + std::to_string(r) + ".csv"),
                          {"t", "n_of_t", "inv_ipr"}, csv);
            }

            nlohmann::json j;
            j["dim"] = es.dim();
            j["ipr_at_t_star"] = sat_ipr ? optional_json(series_value_at(ipr_ts, *sat_ipr))
                                         : nlohmann::json(nullptr);
            j["n_at_t_star"] =
                sat_n ? optional_json(series_value_at(n_ts, *sat_n)) : nlohmann::json(nullptr);
            j["realization"] = r;
            j["t_heisenberg"] = t_h;
            j["t_star_ipr"] = optional_json(sat_ipr);
            j["t_star_n"] = optional_json(sat_n);
            j["t_thouless"] = thouless_time_estimate(es);
            per[r] = std::move(j);
        });
        nlohmann::json res;
        res["realizations"] = per;
        return res;
    });
}

nlohmann::json run_spectral_characterization(const SpectralCharParams& p,
                                             const RunOptions& opts) {
    const bool block_model = (p.model == "a" || p.model == "b");
    if (!block_model && p.model != "goe" && p.model != "gue")
        throw ValidationError("model", "must be one of goe, gue, a, b");

    const nlohmann::json params{{"bins", p.bins},
                                {"discard_fraction", p.discard_fraction},
                                {"lambda", p.lambda},
                                {"model", p.model},
                                {"n", p.n},
                                {"n_alpha", p.n_alpha},
                                {"n_beta", p.n_beta},
                                {"n_c", p.n_c}};
    return run_with_manifest("spectral-characterization", params, opts, [&](Workspace& ws) {
        RandomStream rs(opts.seed, 0);
        Hamiltonian h = [&] {
            if (p.model == "goe") return sample_goe(p.n, rs);
            if (p.model == "gue") return sample_gue(p.n, rs);
            if (p.model == "a") return build_model_a(p.n_alpha, p.n_beta, p.n_c, rs);
            return build_model_b(p.n_alpha, p.n_beta, p.lambda, rs);
        }();
        const EigenSystem es = eigensolve(h);
        const Histogram dos = density_of_states(es, p.bins);
        const SpacingSeries sp = level_spacings(es, p.discard_fraction, 7);
        const double ks_w = ks_distance(sp.spacings, wigner_surmise_cdf);
        const double ks_p = ks_distance(sp.spacings, exponential_cdf);

        if (ws.enabled()) {
            std::vector<std::vector<double>> stairs;
            for (Eigen::Index k = 0; k < es.energies.size(); ++k)
                stairs.push_back({es.energies(k), static_cast<double>(k + 1)});
            write_csv(ws.file("staircase.csv"), {"energy", "count"}, stairs);

            const bool plain = !block_model;
            std::vector<std::vector<double>> dens;
            const double radius = 2.0 * std::sqrt(static_cast<double>(es.dim()));
            for (std::size_t b = 0; b < dos.centers.size(); ++b) {
                std::vector<double> row{dos.centers[b], dos.density[b]};
                if (plain) row.push_back(semicircle_density(dos.centers[b], radius));
                dens.push_back(std::move(row));
            }
            write_csv(ws.file("density.csv"),
                      plain ? std::vector<std::string>{"energy", "density", "semicircle"}
                            : std::vector<std::string>{"energy", "density"},
                      dens);

            std::vector<std::vector<double>> sprow;
            for (double s : sp.spacings) sprow.push_back({s});
            write_csv(ws.file("spacings.csv"), {"s"}, sprow);
        }

        nlohmann::json res;
        res["degenerate_warning"] = es.degenerate_warning;
        res["dim"] = es.dim();
        res["ks_poisson"] = ks_p;
        res["ks_wigner"] = ks_w;
        res["retained"] = sp.retained;
        res["t_heisenberg"] = heisenberg_time_bulk(es);

        if (block_model) {
            std::vector<double> ratios = in_out_ratio(es, p.n_alpha);
            if (ws.enabled()) {
                std::vector<std::vector<double>> rows;
                for (std::size_t k = 0; k < ratios.size(); ++k)
                    rows.push_back({es.energies(static_cast<Eigen::Index>(k)), ratios[k]});
                write_csv(ws.file("in_out.csv"), {"energy", "ratio"}, rows);
            }
            std::vector<double> sorted = ratios;
            std::sort(sorted.begin(), sorted.end());
            res["in_out_max"] = sorted.back();
            res["in_out_median"] = sorted[sorted.size() / 2];
            res["in_out_min"] = sorted.front();
        }
        return res;
    });
}

nlohmann::json run_qb_prediction(const QbPredictionParams& p, const RunOptions& opts) {
    if (p.model != 'a' && p.model != 'b')
        throw ValidationError("model", "must be 'a' or 'b'");
    if (p.reference_count < 1) throw ValidationError("reference_count", "must be >= 1");
    const std::size_t dim = p.n_alpha + p.n_beta;
    if (p.a_index >= dim || p.b_index >= dim)
        throw ValidationError("a_index", "site index outside the matrix dimension");

    const nlohmann::json params{{"a_index", p.a_index},
                                {"b_index", p.b_index},
                                {"lambda", p.lambda},
                                {"model", std::string(1, p.model)},
                                {"n_alpha", p.n_alpha},
                                {"n_beta", p.n_beta},
                                {"n_c", p.n_c},
                                {"reference_count", p.reference_count},
                                {"tau_factor", p.tau_factor}};
    return run_with_manifest("qb-prediction", params, opts, [&](Workspace& ws) {
        RandomStream rs(opts.seed, 0);
        const Hamiltonian h = p.model == 'a'
                                  ? build_model_a(p.n_alpha, p.n_beta, p.n_c, rs)
                                  : build_model_b(p.n_alpha, p.n_beta, p.lambda, rs);
        const EigenSystem es = eigensolve(h);
        const StateVector a = basis_state(dim, p.a_index);
        const StateVector b = basis_state(dim, p.b_index);
        const double tau = p.tau_factor * heisenberg_time_bulk(es);

        std::vector<EigenSystem> refs(p.reference_count);
        parallel_for_indexed(p.reference_count, opts.jobs, [&](std::size_t j) {
            RandomStream ref_rs(opts.seed, kRefStreamBase + j);
            refs[j] = eigensolve(sample_goe(dim, ref_rs));
        });

        const QbPrediction qb = qb_prediction(es, a, b, tau, refs);
        const double observed = infinite_time_joint(es, a, b);
        // The system's own golden-rule escape estimate can exceed t_H in the
        // confined regime; record it next to the gate edges.
        const double t_escape = thouless_time_estimate(es);

        if (ws.enabled()) {
            write_csv(ws.file("prediction.csv"),
                      {"tau", "t_thouless", "t_heisenberg", "t_escape", "p_rmt",
                       "correction", "predicted", "observed"},
                      {{qb.tau, qb.t_thouless, qb.t_heisenberg, t_escape, qb.p_rmt,
                        qb.correction, qb.predicted, observed}});
        }

        nlohmann::json res;
        res["correction"] = qb.correction;
        res["observed"] = observed;
        res["p_rmt"] = qb.p_rmt;
        res["predicted"] = qb.predicted;
        res["ratio_observed_to_predicted"] = observed / qb.predicted;
        res["t_escape"] = t_escape;
        res["t_heisenberg"] = qb.t_heisenberg;
        res["t_thouless"] = qb.t_thouless;
        res["tau"] = qb.tau;
        return res;
    });
}

std::vector<StadiumLaunch> standard_launches(const StadiumSpec& ss, double sigma, double k) {
    auto mk = [&](std::string name, double x0, double y0, double deg) {
        WavepacketSpec w;
        w.x0 = x0;
        w.y0 = y0;
        w.sigma = sigma;
        const double th = deg * std::numbers::pi / 180.0;
        // Snap the axis-aligned launches to exact zeros so the bounce and
        // axial packets carry no stray transverse momentum.
        const double c = std::cos(th), s = std::sin(th);
        w.kx = std::abs(c) < 1e-12 ? 0.0 : k * c;
        w.ky = std::abs(s) < 1e-12 ? 0.0 : k * s;
        return StadiumLaunch{std::move(name), w};
    };
    return {mk("bounce", 0.0, 0.0, 90.0), mk("axial", 0.0, 0.0, 0.0),
            mk("generic", 0.0, 0.0, 57.0),
            mk("offcenter", 0.35 * ss.length, 0.3 * ss.radius, 123.0)};
}

nlohmann::json run_stadium(const StadiumParams& p, const RunOptions& opts) {
    if (!(p.exclude_fraction >= 0.0 && p.exclude_fraction < 1.0))
        throw ValidationError("exclude_fraction", "must lie in [0, 1)");
    if (!(p.t_total > 0.0)) throw ValidationError("t_total", "must be positive");
    if (!(p.v0_factor > 0.0)) throw ValidationError("v0_factor", "must be positive");

    std::vector<StadiumLaunch> launches = p.launches;
    if (launches.empty())
        launches = standard_launches(p.stadium, 0.1 * p.stadium.radius,
                                     62.832 / p.stadium.radius);
    for (const auto& l : launches) check_launch_name(l.name);

    double e_max = 0.0;
    for (const auto& l : launches) e_max = std::max(e_max, l.packet.mean_energy());
    const double v0 = p.v0_factor * e_max;
    // Two phase budgets per step: 0.1 rad for the packet energy and 2 rad for
    // the wall top. The second one binds for tall walls; past roughly 4 rad
    // the smoothing ramp aliases mod 2 pi and the wall turns translucent.
    const double dt = p.dt > 0.0 ? p.dt : std::min(0.1 / e_max, 2.0 / v0);

    const nlohmann::json params{{"dt", p.dt},
                                {"exclude_fraction", p.exclude_fraction},
                                {"grid_nx", p.grid.nx},
                                {"grid_ny", p.grid.ny},
                                {"height", p.grid.height},
                                {"launch_count", launches.size()},
                                {"length", p.stadium.length},
                                {"radius", p.stadium.radius},
                                {"series_points", p.series_points},
                                {"t_total", p.t_total},
                                {"v0_factor", p.v0_factor},
                                {"width", p.grid.width}};
    return run_with_manifest("stadium", params, opts, [&](Workspace& ws) {
        const Domain dom = build_domain(p.stadium, p.grid, v0);
        if (ws.enabled()) {
            std::vector<double> mask_field(dom.cells());
            for (std::size_t i = 0; i < dom.cells(); ++i)
                mask_field[i] = static_cast<double>(dom.mask[i]);
            write_qbg1(ws.file("mask.qbg1"), dom.grid.nx, dom.grid.ny, mask_field);
        }

        PropagationOptions popts;
        popts.t_total = p.t_total;
        popts.t_exclude = p.exclude_fraction * p.t_total;
        popts.dt = dt;
        popts.series_points = p.series_points;
        popts.snapshot_times = p.snapshot_times;

        std::vector<nlohmann::json> per(launches.size());
        parallel_for_indexed(launches.size(), opts.jobs, [&](std::size_t li) {
            const StadiumLaunch& l = launches[li];
            const PropagationResult res = propagate_and_accumulate(dom, l.packet, popts);

            double l1 = 0.0;
            for (std::size_t i = 0; i < res.density.values.size(); ++i)
                l1 += std::abs(res.density.values[i] - res.density_full.values[i]);
            l1 *= dom.dA;

            if (ws.enabled()) {
                write_pgm16(ws.file("density_" + l.name + ".pgm"), res.density);
                write_qbg1(ws.file("density_" + l.name + ".qbg1"), res.density.nx,
                           res.density.ny, res.density.values);
                std::vector<std::vector<double>> csv;
                for (std::size_t k = 0; k < res.n_of_t.times.size(); ++k)
                    csv.push_back({res.n_of_t.times[k], res.n_of_t.values[k],
                                   res.inv_ipr.values[k]});
                write_csv(ws.file("series_" + l.name + ".csv"),
                          {"t", "n_of_t", "inv_ipr"}, csv);
                for (std::size_t s = 0; s < res.snapshots.size(); ++s)
                    write_qbg1(ws.file("snapshot_" + l.name + "_" + std::to_string(s) +
                                       ".qbg1"),
                               dom.grid.nx, dom.grid.ny, res.snapshots[s].second);
            }

            nlohmann::json j;
            j["contrast"] = contrast(res.density, dom.mask);
            j["effective_cells"] = effective_cells(res.density);
            j["exclusion_l1"] = l1;
            j["kx"] = l.packet.kx;
            j["ky"] = l.packet.ky;
            j["max_leakage"] = res.max_leakage;
            j["name"] = l.name;
            j["norm_drift"] = res.norm_drift;
            j["sigma"] = l.packet.sigma;
            j["steps"] = res.steps;
            j["symmetry_error"] = symmetry_error(res.density);
            j["t_star_ipr"] = optional_json(
                detect_saturation(res.inv_ipr, p.window_fraction, p.epsilon_ipr));
            j["t_star_n"] = optional_json(
                detect_saturation(res.n_of_t, p.window_fraction, p.epsilon_n));
            j["x0"] = l.packet.x0;
            j["y0"] = l.packet.y0;
            per[li] = std::move(j);
        });

        nlohmann::json res;
        res["dt"] = dt;
        res["launches"] = per;
        res["mask_area"] = dom.mask_area;
        res["mask_cells"] = dom.mask_cells;
        res["stadium_area"] = p.stadium.area();
        res["v0"] = v0;
        return res;
    });
}

} // namespace qb
