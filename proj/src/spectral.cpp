#include "qb/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace qb {

namespace {

constexpr double kDegeneracyTol = 1e-12;   // relative to the spectral radius

double spectral_radius(const Eigen::VectorXd& e) {
    if (e.size() == 0) return 0.0;
    return std::max(std::abs(e(0)), std::abs(e(e.size() - 1)));
}

} // namespace

EigenSystem eigensolve(const Hamiltonian& h) {
    EigenSystem es;
    es.blocks = h.blocks();
    const std::size_t n = h.dim();
    if (n < 1) throw InvalidDimensionError("n", "empty matrix");

    if (h.kind() == MatrixKind::Real) {
        if (!h.real_matrix().allFinite())
            throw SolverError("non-finite matrix entries", std::numeric_limits<double>::quiet_NaN());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> s(h.real_matrix());
        if (s.info() != Eigen::Success)
            throw SolverError("symmetric eigensolver failed to converge",
                              std::numeric_limits<double>::quiet_NaN());
        es.energies = s.eigenvalues();
        es.vectors = s.eigenvectors().cast<std::complex<double>>();
        es.real_vectors = true;
    } else {
        if (!h.complex_matrix().allFinite())
            throw SolverError("non-finite matrix entries", std::numeric_limits<double>::quiet_NaN());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> s(h.complex_matrix());
        if (s.info() != Eigen::Success)
            throw SolverError("Hermitian eigensolver failed to converge",
                              std::numeric_limits<double>::quiet_NaN());
        es.energies = s.eigenvalues();
        es.vectors = s.eigenvectors();
        es.real_vectors = false;
    }

    const double scale = std::max(spectral_radius(es.energies),
                                  std::numeric_limits<double>::min());
    for (Eigen::Index k = 0; k + 1 < es.energies.size(); ++k) {
        if (es.energies(k + 1) - es.energies(k) < kDegeneracyTol * scale) {
            es.degenerate_warning = true;
            break;
        }
    }
    return es;
}

double orthonormality_error(const EigenSystem& es) {
    const Eigen::Index n = es.vectors.cols();
    Eigen::MatrixXcd g = es.vectors.adjoint() * es.vectors;
    g -= Eigen::MatrixXcd::Identity(n, n);
    return g.cwiseAbs().maxCoeff();
}

double reconstruction_error(const Hamiltonian& h, const EigenSystem& es) {
    Eigen::MatrixXcd r = es.vectors * es.energies.asDiagonal() * es.vectors.adjoint();
    if (h.kind() == MatrixKind::Real)
        r -= h.real_matrix().cast<std::complex<double>>();
    else
        r -= h.complex_matrix();
    return r.cwiseAbs().maxCoeff();
}

Histogram density_of_states(const EigenSystem& es, int bins) {
    if (bins < 1) throw ValidationError("bins", "must be >= 1");
    const Eigen::Index n = es.energies.size();
    if (n < 2) throw InsufficientDataError("n", "need at least 2 levels");
    const double lo = es.energies(0);
    const double hi = es.energies(n - 1);
    if (!(hi > lo)) throw InsufficientDataError("spectrum", "zero spectral width");

    Histogram h;
    h.lo = lo;
    h.hi = hi;
    h.bin_width = (hi - lo) / bins;
    h.centers.resize(bins);
    h.density.assign(bins, 0.0);
    for (int b = 0; b < bins; ++b) h.centers[b] = lo + (b + 0.5) * h.bin_width;
    for (Eigen::Index k = 0; k < n; ++k) {
        int b = static_cast<int>((es.energies(k) - lo) / h.bin_width);
        b = std::clamp(b, 0, bins - 1);   // top edge falls into the last bin
        h.density[b] += 1.0;
    }
    const double norm = 1.0 / (static_cast<double>(n) * h.bin_width);
    for (double& d : h.density) d *= norm;
    return h;
}

SpacingSeries level_spacings(const EigenSystem& es, double discard_fraction, int degree) {
    if (!(discard_fraction >= 0.0 && discard_fraction < 0.5))
        throw ValidationError("discard_fraction", "must lie in [0, 0.5)");
    if (degree < 1 || degree > 16) throw ValidationError("degree", "must lie in [1, 16]");

    const Eigen::Index n = es.energies.size();
    const Eigen::Index trim = static_cast<Eigen::Index>(std::floor(discard_fraction * n));
    const Eigen::Index first = trim;
    const Eigen::Index last = n - 1 - trim;   // inclusive
    const Eigen::Index count = last - first + 1;
    if (count < 50) throw InsufficientDataError("n", "fewer than 50 levels after trimming");

    const double a = es.energies(first);
    const double b = es.energies(last);
    if (!(b > a)) throw InsufficientDataError("spectrum", "zero bulk spectral width");

    // Least-squares fit of the staircase k+1/2 against a Chebyshev expansion
    // in u = scaled energy; the fitted polynomial is the smooth integrated
    // density used for unfolding.
    Eigen::MatrixXd design(count, degree + 1);
    Eigen::VectorXd target(count);
    for (Eigen::Index r = 0; r < count; ++r) {
        const double u = (2.0 * es.energies(first + r) - (a + b)) / (b - a);
        design(r, 0) = 1.0;
        if (degree >= 1) design(r, 1) = u;
        for (int d = 2; d <= degree; ++d)
            design(r, d) = 2.0 * u * design(r, d - 1) - design(r, d - 2);
        target(r) = static_cast<double>(first + r) + 0.5;
    }
    Eigen::VectorXd coef = design.colPivHouseholderQr().solve(target);
    Eigen::VectorXd unfolded = design * coef;

    SpacingSeries out;
    out.retained = static_cast<std::size_t>(count);
    out.spacings.resize(count - 1);
    double mean = 0.0;
    for (Eigen::Index k = 0; k + 1 < count; ++k) {
        out.spacings[k] = unfolded(k + 1) - unfolded(k);
        mean += out.spacings[k];
    }
    mean /= static_cast<double>(count - 1);
    if (!(mean > 0.0) || !std::isfinite(mean))
        throw NumericalError("unfolding produced a non-increasing integrated density");
    for (double& s : out.spacings) s /= mean;
    return out;
}

std::vector<double> in_out_ratio(const EigenSystem& es, std::size_t n_alpha) {
    const std::size_t n = es.dim();
    if (n_alpha < 1 || n_alpha >= n)
        throw ValidationError("n_alpha", "must satisfy 1 <= n_alpha < dim");
    const std::size_t n_beta = n - n_alpha;

    std::vector<double> r(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto col = es.vectors.col(static_cast<Eigen::Index>(k));
        double win = 0.0;
        for (std::size_t i = 0; i < n_alpha; ++i) win += std::norm(col(static_cast<Eigen::Index>(i)));
        double wout = 0.0;
        for (std::size_t i = n_alpha; i < n; ++i) wout += std::norm(col(static_cast<Eigen::Index>(i)));
        // wout == 0 divides to +inf, the documented sentinel for fully
        // confined eigenstates.
        r[k] = (win / static_cast<double>(n_alpha)) / (wout / static_cast<double>(n_beta));
    }
    return r;
}

double heisenberg_time(const EigenSystem& es, double e_lo, double e_hi) {
    if (!(e_hi > e_lo)) throw ValidationError("window", "requires e_hi > e_lo");
    const Eigen::Index n = es.energies.size();
    Eigen::Index first = -1, last = -1;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double e = es.energies(k);
        if (e < e_lo || e > e_hi) continue;
        if (first < 0) first = k;
        last = k;
    }
    if (first < 0 || last - first + 1 < 2)
        throw InsufficientDataError("window", "fewer than 2 levels in window");
    const double width = es.energies(last) - es.energies(first);
    if (!(width > 0.0))
        throw InsufficientDataError("window", "window levels are all degenerate");
    const double mean_spacing = width / static_cast<double>(last - first);
    return 2.0 * std::numbers::pi / mean_spacing;
}

double bulk_mean_spacing(const EigenSystem& es) {
    const Eigen::Index n = es.energies.size();
    if (n < 4) throw InsufficientDataError("n", "need at least 4 levels");
    const Eigen::Index first = n / 4;
    const Eigen::Index last = (3 * n) / 4 - 1;
    const double width = es.energies(last) - es.energies(first);
    if (!(width > 0.0)) throw InsufficientDataError("spectrum", "bulk has zero width");
    return width / static_cast<double>(last - first);
}

double heisenberg_time_bulk(const EigenSystem& es) {
    return 2.0 * std::numbers::pi / bulk_mean_spacing(es);
}

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw InsufficientDataError("samples", "empty sample set");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

double wigner_surmise_cdf(double s) {
    if (s <= 0.0) return 0.0;
    return 1.0 - std::exp(-std::numbers::pi * s * s / 4.0);
}

double exponential_cdf(double s) {
    if (s <= 0.0) return 0.0;
    return 1.0 - std::exp(-s);
}

double semicircle_density(double e, double r) {
    if (!(r > 0.0)) throw ValidationError("r", "radius must be positive");
    const double x = r * r - e * e;
    if (x <= 0.0) return 0.0;
    return 2.0 / (std::numbers::pi * r * r) * std::sqrt(x);
}

} // namespace qb
