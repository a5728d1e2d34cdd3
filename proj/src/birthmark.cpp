#include "qb/birthmark.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "qb/errors.hpp"

namespace qb {

double rmt_factor(SymmetryClass sc) {
    return sc == SymmetryClass::Orthogonal ? 3.0 : 2.0;
}

double thouless_time_estimate(const EigenSystem& es) {
    const double n = static_cast<double>(es.dim());
    if (n < 2) throw InsufficientDataError("n", "need at least 2 levels");
    double gamma;
    if (es.blocks && es.blocks->coupling == BlockStructure::Coupling::Corner) {
        const double na = static_cast<double>(es.blocks->n_alpha);
        const double nb = static_cast<double>(es.blocks->n_beta);
        const double nc = static_cast<double>(es.blocks->n_c);
        // <|V|^2> ~ nc^2/(na*nb) between block eigenstates, rho_beta(0) =
        // sqrt(nb)/pi for unit entry variance.
        gamma = 2.0 * nc * nc / (na * std::sqrt(nb));
    } else if (es.blocks && es.blocks->coupling == BlockStructure::Coupling::Scaled) {
        const double nb = static_cast<double>(es.blocks->n_beta);
        gamma = 2.0 * es.blocks->lambda * es.blocks->lambda * std::sqrt(nb);
    } else {
        gamma = 2.0 * std::sqrt(n);   // single featureless block
    }
    if (gamma <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / gamma;
}

namespace {

// int_{-tau}^{tau} |<b| exp(-iHt) |a>|^2 dt by composite Simpson on [0, tau]
// of P(t) + P(-t), resolving the fastest oscillation with >= 20 samples.
double transport_integral(const Eigen::VectorXd& energies, const Eigen::VectorXcd& rho,
                          double tau) {
    const Eigen::Index n = energies.size();
    const double range = energies(n - 1) - energies(0);
    double dt = tau / 16.0;
    if (range > 0.0) dt = std::min(dt, 2.0 * std::numbers::pi / range / 20.0);
    std::size_t intervals = static_cast<std::size_t>(std::ceil(tau / dt));
    intervals += intervals % 2;
    intervals = std::max<std::size_t>(intervals, 8);
    if (intervals > 50'000'000)
        throw ValidationError("tau", "transport quadrature would need more than 5e7 samples");
    const double h = tau / static_cast<double>(intervals);

    double sum = 0.0;
    for (std::size_t k = 0; k <= intervals; ++k) {
        const double t = h * static_cast<double>(k);
        std::complex<double> fwd = 0.0, bwd = 0.0;
        for (Eigen::Index m = 0; m < n; ++m) {
            const std::complex<double> ph = std::polar(1.0, -energies(m) * t);
            fwd += rho(m) * ph;
            bwd += rho(m) * std::conj(ph);
        }
        const double f = std::norm(fwd) + std::norm(bwd);
        const double wgt = (k == 0 || k == intervals) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        sum += wgt * f;
    }
    return sum * h / 3.0;
}

Eigen::VectorXcd transition_coefficients(const EigenSystem& es, const StateVector& a,
                                         const StateVector& b) {
    const Eigen::VectorXcd c = es.vectors.adjoint() * a;
    const Eigen::VectorXcd d = es.vectors.adjoint() * b;
    return d.conjugate().cwiseProduct(c);   // amp(t) = sum_n rho_n exp(-i E_n t)
}

} // namespace

QbPrediction qb_prediction(const EigenSystem& system, const StateVector& a,
                           const StateVector& b, double tau,
                           const std::vector<EigenSystem>& reference) {
    if (reference.empty())
        throw ValidationError("reference", "need at least one reference realization");
    if (static_cast<std::size_t>(a.size()) != system.dim() ||
        static_cast<std::size_t>(b.size()) != system.dim())
        throw DimensionMismatchError("a", "state dimension does not match the system");
    for (const EigenSystem& ref : reference)
        if (ref.dim() != system.dim())
            throw DimensionMismatchError("reference", "reference dimension does not match");

    QbPrediction out;
    out.tau = tau;
    // The lower edge of the admissible window is the reference process's
    // equilibration scale, not the system's own escape time: weakly coupled
    // blocks can keep equilibrating far past t_H, and that persistent memory
    // is exactly what the correction term is meant to capture.
    out.t_thouless = thouless_time_estimate(reference.front());
    out.t_heisenberg = heisenberg_time_bulk(system);
    if (!(tau > out.t_thouless))
        throw CutoffError("tau", "cutoff below the equilibration-time estimate");
    if (!(tau < out.t_heisenberg))
        throw CutoffError("tau", "cutoff beyond the Heisenberg time");

    const double spacing_sys = bulk_mean_spacing(system);
    const double numerator = transport_integral(system.energies,
                                                transition_coefficients(system, a, b), tau);

    double denom = 0.0;
    double p_rmt = 0.0;
    for (const EigenSystem& ref : reference) {
        // Clock alignment: reference spectra are stretched so their bulk mean
        // spacing matches the system's before the short-time integral.
        const double scale = spacing_sys / bulk_mean_spacing(ref);
        denom += transport_integral(ref.energies * scale,
                                    transition_coefficients(ref, a, b), tau);
        p_rmt += infinite_time_joint(ref, a, b);
    }
    denom /= static_cast<double>(reference.size());
    p_rmt /= static_cast<double>(reference.size());
    if (!(denom > 0.0) || !std::isfinite(denom))
        throw NumericalError("reference transport integral vanished");

    out.p_rmt = p_rmt;
    out.correction = numerator / denom;
    out.predicted = p_rmt * out.correction;
    return out;
}

std::optional<double> detect_saturation(const TimeSeries& ts, double window_fraction,
                                        double epsilon) {
    if (!(window_fraction > 0.0)) throw ValidationError("window_fraction", "must be positive");
    if (!(epsilon > 0.0)) throw ValidationError("epsilon", "must be positive");
    const std::size_t n = ts.times.size();
    if (n != ts.values.size())
        throw DimensionMismatchError("ts", "times and values differ in length");
    if (n < 2) throw InsufficientDataError("ts", "need at least 2 samples");
    for (std::size_t k = 1; k < n; ++k)
        if (!(ts.times[k] > ts.times[k - 1]))
            throw ValidationError("ts", "times must be strictly increasing");

    const double t_last = ts.times[n - 1];
    // flat[s] answers whether the window starting at sample s stays within
    // the relative spread bound; only complete windows are examined.
    std::ptrdiff_t last_complete = -1;
    std::vector<char> flat;
    for (std::size_t s = 0; s < n; ++s) {
        const double t_end = ts.times[s] * (1.0 + window_fraction);
        if (t_end > t_last) break;
        std::size_t e = s;
        while (e + 1 < n && ts.times[e + 1] <= t_end) ++e;
        if (e - s + 1 < 10)
            throw InsufficientDataError("ts", "a window holds fewer than 10 samples");
        double lo = ts.values[s], hi = ts.values[s], sum = 0.0;
        for (std::size_t k = s; k <= e; ++k) {
            lo = std::min(lo, ts.values[k]);
            hi = std::max(hi, ts.values[k]);
            sum += ts.values[k];
        }
        const double mean = sum / static_cast<double>(e - s + 1);
        bool ok;
        if (mean == 0.0) ok = (hi == lo);
        else ok = ((hi - lo) / std::abs(mean) < epsilon);
        flat.push_back(ok ? 1 : 0);
        last_complete = static_cast<std::ptrdiff_t>(s);
    }
    if (last_complete < 0)
        throw InsufficientDataError("ts", "no complete window fits inside the series");

    // Earliest start whose every later complete window is also flat.
    std::ptrdiff_t first_good = -1;
    for (std::ptrdiff_t s = last_complete; s >= 0; --s) {
        if (!flat[static_cast<std::size_t>(s)]) break;
        first_good = s;
    }
    if (first_good < 0) return std::nullopt;
    return ts.times[static_cast<std::size_t>(first_good)];
}

} // namespace qb
