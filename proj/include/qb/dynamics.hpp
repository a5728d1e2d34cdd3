#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <vector>

#include "qb/spectral.hpp"

namespace qb {

using StateVector = Eigen::VectorXcd;

StateVector basis_state(std::size_t n, std::size_t i);

struct TimeSeries {
    std::vector<double> times;   // strictly increasing
    std::vector<double> values;
};

// Log-spaced time grid (inclusive endpoints).
std::vector<double> log_times(double t_min, double t_max, int points);

// |a(t)> = sum_n exp(-i E_n t) <phi_n|a0> |phi_n>
StateVector evolve(const EigenSystem& es, const StateVector& a0, double t);

// P(t) = |<a0|a(t)>|^2 at each time.
TimeSeries survival_probability(const EigenSystem& es, const StateVector& a0,
                                const std::vector<double>& times);

// P_ab(t) = |<b|a(t)>|^2 at each time.
TimeSeries cross_probability(const EigenSystem& es, const StateVector& a0,
                             const StateVector& b, const std::vector<double>& times);

// Infinite-time (diagonal-ensemble) joint probability
//   P_ab = N * sum_n |<a|phi_n>|^2 |<phi_n|b>|^2,
// generalized over degenerate subspaces:
//   P_ab = N * sum_g |<b| P_g |a>|^2  with P_g the spectral projectors.
// The two agree whenever the spectrum is nondegenerate.
double infinite_time_joint(const EigenSystem& es, const StateVector& a, const StateVector& b);

struct InfiniteTimeProfile {
    Eigen::VectorXd site_probs;   // P(a|b_i), sums to 1
    double block_alpha = 0.0;     // mean over alpha sites (optionally minus the launch site)
    double block_beta = 0.0;      // mean over beta sites
    double ratio = 0.0;           // block_alpha / block_beta
    std::optional<std::size_t> excluded_site;
};

// Site-resolved infinite-time probabilities and their per-dimension block
// averages. If include_initial_site is false, the launch site (a0 must then
// be a basis state) is left out of its block average; ergodic controls use
// this to remove the self-return enhancement.
InfiniteTimeProfile infinite_time_profile(const EigenSystem& es, const StateVector& a0,
                                          std::size_t n_alpha,
                                          bool include_initial_site = true);

// Inverse participation ratio of a normalized state in the site basis.
double ipr(const StateVector& v);

// Per-site running time average rho_i(t) = (1/t) int_0^t |<b_i|a(tau)>|^2 dtau,
// evaluated in closed form through the eigenbasis. t = 0 returns |a0|^2.
Eigen::VectorXd rho_av(const EigenSystem& es, const StateVector& a0, double t);

// Participation number of the exploration up to time t, defined through the
// purity of the time-averaged density matrix rhobar(t) = (1/t) int_0^t
// |a(tau)><a(tau)| dtau:
//
//   1/N(t) = Tr[rhobar(t)^2] = sum_nm |c_n|^2 |c_m|^2 sinc^2((E_n-E_m) t / 2).
//
// Closed form in the eigenbasis; no quadrature involved.
double participation_number_direct(const EigenSystem& es, const StateVector& a0, double t);

// Same quantity via the survival probability:
//   1/N(t) = (2/t) int_0^t (1 - tau/t) P(tau) dtau,
// composite Simpson quadrature with at least 20 points per shortest
// oscillation period 2*pi/(E_max - E_min). Independent route used to
// cross-check participation_number_direct.
double participation_number_integral(const EigenSystem& es, const StateVector& a0, double t);

// N(t) on a log grid of `points` times in [t_min, t_max], computed from
// cumulative trapezoid prefix integrals of P(tau) on a fine uniform grid
// (phase recurrence, 20 samples per shortest period and at least 20 below
// t_min, so saturation windows anywhere on the grid stay sampled). Requested
// times are snapped to the fine grid and deduplicated; the returned series
// carries the snapped times. Accuracy is curve-level (~1e-2), intended for
// saturation scans rather than point checks.
TimeSeries participation_number_series(const EigenSystem& es, const StateVector& a0,
                                       double t_min, double t_max, int points);

// 1/IPR of the instantaneous state a(t) at each requested time.
TimeSeries inverse_ipr_series(const EigenSystem& es, const StateVector& a0,
                              const std::vector<double>& times);

} // namespace qb
