#include "qb/stadium.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>

#include <fftw3.h>

namespace qb {

namespace {

// FFTW plan creation and destruction are not thread-safe; execution is.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

bool power_of_two(int n) { return n >= 4 && (n & (n - 1)) == 0; }

} // namespace

double StadiumSpec::area() const noexcept {
    return std::numbers::pi * radius * radius + 2.0 * radius * length;
}

double StadiumSpec::sdf(double x, double y) const noexcept {
    const double cx = std::clamp(x, -0.5 * length, 0.5 * length);
    return std::hypot(x - cx, y) - radius;
}

double WavepacketSpec::k_norm() const noexcept { return std::hypot(kx, ky); }

double WavepacketSpec::mean_energy() const noexcept {
    return 0.5 * (kx * kx + ky * ky) + 1.0 / (4.0 * sigma * sigma);
}

Domain build_domain(const StadiumSpec& ss, const GridSpec& gs, double v0) {
    if (!(ss.radius > 0.0)) throw ValidationError("radius", "must be positive");
    if (!(ss.length >= 0.0)) throw ValidationError("length", "must be >= 0");
    if (!power_of_two(gs.nx) || !power_of_two(gs.ny))
        throw InvalidDimensionError("grid", "nx and ny must be powers of two (>= 4)");
    if (!(gs.width > 0.0) || !(gs.height > 0.0))
        throw ValidationError("grid", "box dimensions must be positive");
    if (!(v0 > 0.0)) throw ValidationError("v0", "wall height must be positive");
    if (!(ss.full_length() < gs.width) || !(2.0 * ss.radius < gs.height))
        throw ValidationError("grid", "stadium does not fit inside the box");

    Domain dom;
    dom.stadium = ss;
    dom.grid = gs;
    dom.v0 = v0;
    dom.dx = gs.width / gs.nx;
    dom.dy = gs.height / gs.ny;
    dom.dA = dom.dx * dom.dy;

    // Coordinates measured from the box center as (index - center) * step,
    // so the reflections ix <-> nx-1-ix and iy <-> ny-1-iy negate them
    // exactly and the rasterized potential is bitwise mirror-symmetric.
    dom.xs.resize(gs.nx);
    dom.ys.resize(gs.ny);
    for (int ix = 0; ix < gs.nx; ++ix) dom.xs[ix] = (ix - 0.5 * (gs.nx - 1)) * dom.dx;
    for (int iy = 0; iy < gs.ny; ++iy) dom.ys[iy] = (iy - 0.5 * (gs.ny - 1)) * dom.dy;

    const double ramp = 2.0 * std::max(dom.dx, dom.dy);
    const std::size_t cells = static_cast<std::size_t>(gs.nx) * gs.ny;
    dom.potential.resize(cells);
    dom.mask.resize(cells);
    dom.mask_cells = 0;
    for (int iy = 0; iy < gs.ny; ++iy) {
        for (int ix = 0; ix < gs.nx; ++ix) {
            const std::size_t i = static_cast<std::size_t>(iy) * gs.nx + ix;
            const double s = ss.sdf(dom.xs[ix], dom.ys[iy]);
            double v;
            if (s <= 0.0) {
                v = 0.0;
            } else if (s >= ramp) {
                v = v0;
            } else {
                const double u = s / ramp;
                v = v0 * u * u * (3.0 - 2.0 * u);
            }
            dom.potential[i] = v;
            dom.mask[i] = (v == 0.0) ? 1 : 0;
            if (dom.mask[i]) ++dom.mask_cells;
        }
    }
    dom.mask_area = static_cast<double>(dom.mask_cells) * dom.dA;
    return dom;
}

std::vector<std::complex<double>> init_wavepacket(const Domain& dom, const WavepacketSpec& ws) {
    if (!(ws.sigma > 0.0)) throw ValidationError("sigma", "must be positive");
    if (!(dom.stadium.sdf(ws.x0, ws.y0) < 0.0))
        throw ValidationError("center", "wavepacket center lies outside the stadium");
    if (ws.sigma / dom.dx < 8.0 || ws.sigma / dom.dy < 8.0)
        throw ValidationError("resolution", "fewer than 8 grid points per sigma");
    const double k = ws.k_norm();
    if (k > 0.0) {
        const double lambda = 2.0 * std::numbers::pi / k;
        if (lambda / dom.dx < 8.0 || lambda / dom.dy < 8.0)
            throw ValidationError("resolution", "fewer than 8 grid points per wavelength");
    }
    const double margin_x = 0.5 * (dom.grid.width - dom.stadium.full_length());
    const double margin_y = 0.5 * dom.grid.height - dom.stadium.radius;
    if (margin_x < 4.0 * ws.sigma || margin_y < 4.0 * ws.sigma)
        throw ValidationError("margin", "stadium-to-box margin is under 4 sigma");

    std::vector<std::complex<double>> psi(dom.cells(), 0.0);
    double norm = 0.0;
    const double inv_4s2 = 1.0 / (4.0 * ws.sigma * ws.sigma);
    for (int iy = 0; iy < dom.grid.ny; ++iy) {
        for (int ix = 0; ix < dom.grid.nx; ++ix) {
            const std::size_t i = static_cast<std::size_t>(iy) * dom.grid.nx + ix;
            if (!dom.mask[i]) continue;
            const double rx = dom.xs[ix] - ws.x0;
            const double ry = dom.ys[iy] - ws.y0;
            const double env = std::exp(-(rx * rx + ry * ry) * inv_4s2);
            psi[i] = std::polar(env, ws.kx * rx + ws.ky * ry);
            norm += env * env;
        }
    }
    norm *= dom.dA;
    if (!(norm > 0.0)) throw NumericalError("wavepacket has zero mass inside the mask");
    const double scale = 1.0 / std::sqrt(norm);
    for (auto& p : psi) p *= scale;
    return psi;
}

SplitOperator::SplitOperator(const Domain& dom, double dt) : dom_(&dom), dt_(dt) {
    if (!(dt > 0.0)) throw ValidationError("dt", "must be positive");
    n_ = dom.cells();
    const int nx = dom.grid.nx;
    const int ny = dom.grid.ny;

    buf_ = static_cast<std::complex<double>*>(fftw_malloc(n_ * sizeof(std::complex<double>)));
    if (!buf_) throw NumericalError("fftw_malloc failed");
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        auto* raw = reinterpret_cast<fftw_complex*>(buf_);
        fwd_ = fftw_plan_dft_2d(ny, nx, raw, raw, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_2d(ny, nx, raw, raw, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    if (!fwd_ || !bwd_) throw NumericalError("FFTW plan creation failed");

    half_v_phase_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i)
        half_v_phase_[i] = std::polar(1.0, -0.5 * dom.potential[i] * dt);

    kin_phase_.resize(n_);
    const double scale = 1.0 / (static_cast<double>(nx) * ny);
    const double fx = 2.0 * std::numbers::pi / dom.grid.width;
    const double fy = 2.0 * std::numbers::pi / dom.grid.height;
    for (int iy = 0; iy < ny; ++iy) {
        const double ky = fy * (iy <= ny / 2 ? iy : iy - ny);
        for (int ix = 0; ix < nx; ++ix) {
            const double kx = fx * (ix <= nx / 2 ? ix : ix - nx);
            const double energy = 0.5 * (kx * kx + ky * ky);
            kin_phase_[static_cast<std::size_t>(iy) * nx + ix] =
                std::polar(scale, -energy * dt);
        }
    }
}

SplitOperator::~SplitOperator() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    if (fwd_) fftw_destroy_plan(reinterpret_cast<fftw_plan>(fwd_));
    if (bwd_) fftw_destroy_plan(reinterpret_cast<fftw_plan>(bwd_));
    if (buf_) fftw_free(buf_);
}

void SplitOperator::load(const std::vector<std::complex<double>>& psi) {
    if (psi.size() != n_)
        throw DimensionMismatchError("psi", "state size does not match the grid");
    std::copy(psi.begin(), psi.end(), buf_);
}

void SplitOperator::step() {
    for (std::size_t i = 0; i < n_; ++i) buf_[i] *= half_v_phase_[i];
    fftw_execute(reinterpret_cast<fftw_plan>(fwd_));
    for (std::size_t i = 0; i < n_; ++i) buf_[i] *= kin_phase_[i];
    fftw_execute(reinterpret_cast<fftw_plan>(bwd_));
    for (std::size_t i = 0; i < n_; ++i) buf_[i] *= half_v_phase_[i];
}

double SplitOperator::norm_sq() const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += std::norm(buf_[i]);
    return s * dom_->dA;
}

double SplitOperator::mass_outside_mask() const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
        if (!dom_->mask[i]) s += std::norm(buf_[i]);
    return s * dom_->dA;
}

namespace {

DensityGrid finalize_density(const Domain& dom, const std::vector<double>& accum,
                             std::size_t count) {
    DensityGrid dg;
    dg.nx = dom.grid.nx;
    dg.ny = dom.grid.ny;
    dg.dx = dom.dx;
    dg.dy = dom.dy;
    dg.values.assign(accum.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < accum.size(); ++i) {
        if (!dom.mask[i]) continue;
        dg.values[i] = accum[i] / static_cast<double>(count);
        total += dg.values[i];
    }
    total *= dom.dA;
    if (!(total > 0.0)) throw NumericalError("time-averaged density has zero mass");
    for (double& v : dg.values) v /= total;
    return dg;
}

double effective_cells_of_probs(const std::vector<double>& p, double total) {
    double s2 = 0.0;
    for (double v : p) {
        const double q = v / total;
        s2 += q * q;
    }
    return 1.0 / s2;
}

} // namespace

PropagationResult propagate_and_accumulate(const Domain& dom, const WavepacketSpec& ws,
                                           const PropagationOptions& opts) {
    if (!(opts.t_total > 0.0)) throw ValidationError("t_total", "must be positive");
    if (!(opts.dt > 0.0)) throw ValidationError("dt", "must be positive");
    if (!(opts.t_exclude >= 0.0) || !(opts.t_exclude < opts.t_total))
        throw ValidationError("t_exclude", "must lie in [0, t_total)");
    if (opts.series_points < 2) throw ValidationError("series_points", "must be >= 2");

    const auto steps = static_cast<std::size_t>(std::ceil(opts.t_total / opts.dt - 1e-9));
    if (steps < 21)
        throw ValidationError("dt", "fewer than 21 steps over t_total; the series "
                                    "needs a resolvable time range");
    const auto exclude_steps = static_cast<std::size_t>(std::floor(opts.t_exclude / opts.dt));
    if (exclude_steps >= steps)
        throw ValidationError("t_exclude", "exclusion swallows every step");

    // Steps at which the series and leakage are sampled. The grid starts at
    // step 20 so a half-width log window anywhere on it spans 10+ whole steps;
    // earlier times cannot hold enough distinct samples for saturation
    // detection.
    std::vector<char> sampled(steps + 1, 0);
    for (double t : log_times(20.0 * opts.dt, static_cast<double>(steps) * opts.dt,
                              opts.series_points)) {
        auto k = static_cast<std::size_t>(std::llround(t / opts.dt));
        sampled[std::clamp<std::size_t>(k, 1, steps)] = 1;
    }
    std::vector<std::size_t> snapshot_steps;
    for (double t : opts.snapshot_times) {
        if (!(t > 0.0) || !(t <= opts.t_total + 0.5 * opts.dt))
            throw ValidationError("snapshot_times", "snapshot time outside (0, t_total]");
        auto k = static_cast<std::size_t>(std::llround(t / opts.dt));
        snapshot_steps.push_back(std::clamp<std::size_t>(k, 1, steps));
    }

    std::vector<std::complex<double>> psi0 = init_wavepacket(dom, ws);
    SplitOperator prop(dom, opts.dt);
    prop.load(psi0);

    PropagationResult res;
    res.steps = steps;
    const std::size_t cells = dom.cells();
    std::vector<double> accum_full(cells, 0.0);
    std::vector<double> accum_tail(cells, 0.0);
    std::size_t tail_count = 0;
    std::vector<double> prob(cells);

    for (std::size_t k = 1; k <= steps; ++k) {
        prop.step();
        const std::complex<double>* psi = prop.psi();
        for (std::size_t i = 0; i < cells; ++i) prob[i] = std::norm(psi[i]);
        const bool in_tail = k > exclude_steps;
        for (std::size_t i = 0; i < cells; ++i) accum_full[i] += prob[i];
        if (in_tail) {
            for (std::size_t i = 0; i < cells; ++i) accum_tail[i] += prob[i];
            ++tail_count;
        }

        if (sampled[k]) {
            const double t = static_cast<double>(k) * opts.dt;
            const double total_inst = std::accumulate(prob.begin(), prob.end(), 0.0);
            res.inv_ipr.times.push_back(t);
            res.inv_ipr.values.push_back(effective_cells_of_probs(prob, total_inst));
            const double total_avg = std::accumulate(accum_full.begin(), accum_full.end(), 0.0);
            res.n_of_t.times.push_back(t);
            res.n_of_t.values.push_back(effective_cells_of_probs(accum_full, total_avg));
            res.max_leakage = std::max(res.max_leakage, prop.mass_outside_mask());
        }
        for (std::size_t s = 0; s < snapshot_steps.size(); ++s) {
            if (snapshot_steps[s] != k) continue;
            std::vector<double> re(cells);
            for (std::size_t i = 0; i < cells; ++i) re[i] = psi[i].real();
            res.snapshots.emplace_back(static_cast<double>(k) * opts.dt, std::move(re));
        }
    }

    res.norm_drift = std::abs(prop.norm_sq() - 1.0);
    res.max_leakage = std::max(res.max_leakage, prop.mass_outside_mask());
    res.density_full = finalize_density(dom, accum_full, steps);
    res.density = finalize_density(dom, accum_tail, tail_count);
    return res;
}

double symmetry_error(const DensityGrid& dg) {
    if (dg.nx < 1 || dg.ny < 1 ||
        dg.values.size() != static_cast<std::size_t>(dg.nx) * static_cast<std::size_t>(dg.ny))
        throw DimensionMismatchError("density", "grid dimensions do not match the data");
    auto at = [&](int ix, int iy) -> double {
        return dg.values[static_cast<std::size_t>(iy) * dg.nx + ix];
    };
    double l1 = 0.0, total = 0.0;
    for (int iy = 0; iy < dg.ny; ++iy) {
        for (int ix = 0; ix < dg.nx; ++ix) {
            const double v = at(ix, iy);
            const double avg = 0.25 * (v + at(dg.nx - 1 - ix, iy) + at(ix, dg.ny - 1 - iy) +
                                       at(dg.nx - 1 - ix, dg.ny - 1 - iy));
            l1 += std::abs(v - avg);
            total += v;
        }
    }
    if (!(total > 0.0)) throw NumericalError("density has zero mass");
    return l1 / total;
}

double contrast(const DensityGrid& dg, const std::vector<std::uint8_t>& mask) {
    if (mask.size() != dg.values.size())
        throw DimensionMismatchError("mask", "mask size does not match the grid");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        sum += dg.values[i];
        ++count;
    }
    if (count < 2) throw InsufficientDataError("mask", "fewer than 2 masked cells");
    const double mean = sum / static_cast<double>(count);
    if (!(mean > 0.0)) throw NumericalError("masked density has zero mean");
    double var = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        const double d = dg.values[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(count);
    return std::sqrt(var) / mean;
}

double effective_cells(const DensityGrid& dg) {
    double total = 0.0;
    for (double v : dg.values) total += v;
    if (!(total > 0.0)) throw NumericalError("density has zero mass");
    return effective_cells_of_probs(dg.values, total);
}

} // namespace qb
