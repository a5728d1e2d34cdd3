#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include "qb/dynamics.hpp"   // TimeSeries
#include "qb/errors.hpp"

// Forward declarations so fftw3.h stays out of the public header.
struct fftw_plan_s;

namespace qb {

// Bunimovich stadium: rectangle of length `length` and height 2*radius,
// capped by two half-discs of `radius`. length = 0 degenerates to a circle.
struct StadiumSpec {
    double radius = 1.0;
    double length = 2.0;

    double area() const noexcept;        // pi r^2 + 2 r length
    double full_length() const noexcept { return length + 2.0 * radius; }
    // Signed distance to the boundary, negative inside.
    double sdf(double x, double y) const noexcept;
};

// Periodic simulation box [-width/2, width/2] x [-height/2, height/2],
// cell-centered so the reflection maps ix <-> nx-1-ix, iy <-> ny-1-iy are
// exact. nx, ny must be powers of two.
struct GridSpec {
    int nx = 512;
    int ny = 256;
    double width = 5.12;
    double height = 2.88;
};

struct WavepacketSpec {
    double x0 = 0.0, y0 = 0.0;
    double sigma = 0.1;           // |psi| ~ exp(-r^2 / (4 sigma^2))
    double kx = 0.0, ky = 0.0;

    double k_norm() const noexcept;
    // Mean energy <T> = |k|^2/2 + 1/(4 sigma^2); sets the step-size budget.
    double mean_energy() const noexcept;
};

struct Domain {
    StadiumSpec stadium;
    GridSpec grid;
    double v0 = 0.0;                    // wall height
    double dx = 0.0, dy = 0.0, dA = 0.0;
    std::vector<double> xs, ys;         // cell-center coordinates
    std::vector<double> potential;      // row-major [iy*nx + ix]
    std::vector<std::uint8_t> mask;     // potential == 0 (strict interior)
    std::size_t mask_cells = 0;
    double mask_area = 0.0;

    std::size_t cells() const noexcept { return potential.size(); }
};

// Rasterize the stadium into the box. The wall rises from 0 to v0 with a
// smoothstep ramp two cells wide starting at the boundary. Fails if the
// stadium does not fit inside the box.
Domain build_domain(const StadiumSpec& ss, const GridSpec& gs, double v0);

// Gaussian wavepacket exp(-r^2/(4 sigma^2)) * exp(i k.r), cut to the mask and
// normalized to sum |psi|^2 dA = 1. Enforces: center inside the stadium,
// >= 8 grid points per sigma and per de Broglie wavelength on both axes, and
// stadium-to-box margin >= 4 sigma.
std::vector<std::complex<double>> init_wavepacket(const Domain& dom, const WavepacketSpec& ws);

// Strang-split propagator  exp(-iV dt/2) FFT^-1 exp(-iT dt) FFT exp(-iV dt/2)
// with the kinetic factor exact in the plane-wave basis. Plans are created
// with FFTW_ESTIMATE so results are reproducible run to run.
class SplitOperator {
public:
    SplitOperator(const Domain& dom, double dt);
    ~SplitOperator();
    SplitOperator(const SplitOperator&) = delete;
    SplitOperator& operator=(const SplitOperator&) = delete;

    void load(const std::vector<std::complex<double>>& psi);
    const std::complex<double>* psi() const noexcept { return buf_; }
    std::size_t size() const noexcept { return n_; }
    double dt() const noexcept { return dt_; }

    void step();

    double norm_sq() const;            // sum |psi|^2 dA
    double mass_outside_mask() const;  // leakage diagnostic

private:
    const Domain* dom_;
    double dt_;
    std::size_t n_;
    std::complex<double>* buf_ = nullptr;
    fftw_plan_s* fwd_ = nullptr;
    fftw_plan_s* bwd_ = nullptr;
    std::vector<std::complex<double>> half_v_phase_;
    std::vector<std::complex<double>> kin_phase_;   // includes the 1/(nx ny) backward scale
};

// Time-averaged probability density on the grid, zero outside the mask and
// renormalized so that sum(values) * dA = 1.
struct DensityGrid {
    int nx = 0, ny = 0;
    double dx = 0.0, dy = 0.0;
    std::vector<double> values;   // row-major [iy*nx + ix]
};

struct PropagationOptions {
    double t_total = 0.0;                // must cover at least 21 steps
    double t_exclude = 0.0;              // transient dropped from `density`
    double dt = 0.0;
    int series_points = 512;             // log-spaced samples over [20 dt, t_total]
    std::vector<double> snapshot_times;  // Re(psi) snapshots (nearest step)
};

struct PropagationResult {
    DensityGrid density;        // average over (t_exclude, t_total]
    DensityGrid density_full;   // average over (0, t_total]
    TimeSeries inv_ipr;         // effective cell count of the instantaneous state
    TimeSeries n_of_t;          // cell participation of the running mean density
    double norm_drift = 0.0;    // |norm(T) - 1|
    double max_leakage = 0.0;   // max sampled mass outside the mask
    std::size_t steps = 0;
    std::vector<std::pair<double, std::vector<double>>> snapshots;
};

PropagationResult propagate_and_accumulate(const Domain& dom, const WavepacketSpec& ws,
                                           const PropagationOptions& opts);

// L1 distance between the density and its average over the reflection group
// {1, x-flip, y-flip, both}, normalized by the total mass.
double symmetry_error(const DensityGrid& dg);

// Coefficient of variation (population std / mean) over the masked cells.
double contrast(const DensityGrid& dg, const std::vector<std::uint8_t>& mask);

// Effective number of cells 1/sum(p_i^2) occupied by a density grid.
double effective_cells(const DensityGrid& dg);

} // namespace qb
