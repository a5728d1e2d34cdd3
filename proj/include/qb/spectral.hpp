#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "qb/hamiltonian.hpp"

namespace qb {

// Full eigendecomposition. energies ascending; vectors column n is the
// eigenvector of energies[n]. Vectors are stored complex even for real
// ensembles (imaginary part exactly zero, real_vectors flag set) so that the
// propagation code has a single path.
struct EigenSystem {
    Eigen::VectorXd energies;
    Eigen::MatrixXcd vectors;
    bool real_vectors = false;
    bool degenerate_warning = false;   // some gap < 1e-12 * spectral radius
    std::optional<BlockStructure> blocks;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(energies.size()); }
};

EigenSystem eigensolve(const Hamiltonian& h);

// Audit helpers for the decomposition invariants (O(n^3), test use).
double orthonormality_error(const EigenSystem& es);                      // max |V^dag V - I|
double reconstruction_error(const Hamiltonian& h, const EigenSystem& es); // max |V E V^dag - H|

struct Histogram {
    std::vector<double> centers;
    std::vector<double> density;   // normalized: sum(density) * bin_width == 1
    double bin_width = 0.0;
    double lo = 0.0, hi = 0.0;
};

Histogram density_of_states(const EigenSystem& es, int bins);

struct SpacingSeries {
    std::vector<double> spacings;  // unfolded, normalized to unit mean
    std::size_t retained = 0;      // levels kept after trimming
};

// Nearest-neighbour spacings of the unfolded bulk spectrum. The integrated
// density is fitted with a degree-`degree` polynomial (Chebyshev basis on the
// retained energy range) after discarding discard_fraction of the levels at
// each spectral edge; spacings are then rescaled to unit mean. Requires at
// least 50 retained levels.
SpacingSeries level_spacings(const EigenSystem& es, double discard_fraction = 0.05,
                             int degree = 7);

// Per-eigenstate weight ratio between the alpha block (first n_alpha sites)
// and the beta block (the rest), normalized per dimension:
//   r_n = (w_in / n_alpha) / (w_out / n_beta).
// A numerically zero out-weight yields +infinity.
std::vector<double> in_out_ratio(const EigenSystem& es, std::size_t n_alpha);

// 2*pi / (mean level spacing) computed from the levels inside [e_lo, e_hi].
double heisenberg_time(const EigenSystem& es, double e_lo, double e_hi);

// Convenience: Heisenberg time of the central half of the spectrum (by index).
double heisenberg_time_bulk(const EigenSystem& es);

// Mean level spacing of the central half of the spectrum (by index).
double bulk_mean_spacing(const EigenSystem& es);

// --- closed-form references and test statistics ---

// Kolmogorov-Smirnov distance between the sample ECDF and a reference CDF.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

double wigner_surmise_cdf(double s);   // 1 - exp(-pi s^2 / 4)
double exponential_cdf(double s);      // 1 - exp(-s)

// Semicircle spectral density with radius r, normalized to integral 1.
double semicircle_density(double e, double r);

} // namespace qb
