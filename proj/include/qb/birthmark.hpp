#pragma once

#include <optional>
#include <vector>

#include "qb/dynamics.hpp"

namespace qb {

enum class SymmetryClass { Orthogonal, Unitary };

// Baseline self-return enhancement of the infinite-time probabilities:
// 3 with time-reversal symmetry (orthogonal class), 2 without (unitary).
double rmt_factor(SymmetryClass sc);

// Order-of-magnitude golden-rule estimate of the equilibration (Thouless)
// time: 1/Gamma with Gamma = 2*pi * <|V|^2> * rho_beta(0). Uses the block
// metadata when present, otherwise treats the matrix as a single chaotic
// block. Recorded alongside predictions, never silently assumed.
double thouless_time_estimate(const EigenSystem& es);

struct QbPrediction {
    double p_rmt = 0.0;        // reference-ensemble mean of the infinite-time joint probability
    double correction = 0.0;   // ratio of short-time transport integrals
    double predicted = 0.0;    // p_rmt * correction
    double tau = 0.0;
    double t_thouless = 0.0;   // window lower edge: reference equilibration scale
    double t_heisenberg = 0.0; // admissible window upper edge
};

// Long-time joint probability predicted from short-time dynamics:
//
//   P_ab(inf) ~= P_rmt_ab * [ int_{-tau}^{tau} P_ab(t) dt ]
//                         / [ int_{-tau}^{tau} P_rmt_ab(t) dt ]
//
// where the reference quantities are means over `reference`, an ensemble of
// featureless matrices of the same symmetry class whose spectra are rescaled
// to the system's bulk mean level spacing. For real systems the integrand is
// even in t and the integral is computed over [0, tau] and doubled. tau must
// lie strictly between the reference ensemble's equilibration estimate and
// the system's Heisenberg time; the system's own escape time may exceed t_H,
// which is the confined regime the correction quantifies.
QbPrediction qb_prediction(const EigenSystem& system, const StateVector& a,
                           const StateVector& b, double tau,
                           const std::vector<EigenSystem>& reference);

// Earliest time t* from which the series stays flat: relative spread
// (max - min) / mean below epsilon over every window [t, t*(1+window_fraction)]
// from t* through the end of the series. Windows that would extend past the
// last sample are not tested; every tested window must hold at least 10
// samples. Returns nullopt when the series never settles.
std::optional<double> detect_saturation(const TimeSeries& ts, double window_fraction = 0.5,
                                        double epsilon = 0.05);

} // namespace qb
