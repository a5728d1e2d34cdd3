#include "qb/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qb/errors.hpp"

namespace qb {

namespace {

constexpr double kDegeneracyTol = 1e-12;   // matches eigensolve's warning threshold

double stable_sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

void check_state(const EigenSystem& es, const StateVector& v, const char* key) {
    if (static_cast<std::size_t>(v.size()) != es.dim())
        throw DimensionMismatchError(key, "state dimension does not match the eigensystem");
}

// Indices of the first eigenvalue in each near-degenerate cluster, plus a
// terminating index equal to the spectrum size.
std::vector<Eigen::Index> cluster_starts(const Eigen::VectorXd& e) {
    const Eigen::Index n = e.size();
    double scale = 0.0;
    if (n > 0) scale = std::max(std::abs(e(0)), std::abs(e(n - 1)));
    const double tol = kDegeneracyTol * std::max(scale, 1e-300);
    std::vector<Eigen::Index> starts{0};
    for (Eigen::Index k = 1; k < n; ++k)
        if (e(k) - e(k - 1) >= tol) starts.push_back(k);
    starts.push_back(n);
    return starts;
}

// Eigenbasis amplitudes c_n = <phi_n|a0> and weights w_n = |c_n|^2 normalized
// to unit sum.
struct Decomposition {
    Eigen::VectorXcd c;
    Eigen::VectorXd w;
};

Decomposition decompose(const EigenSystem& es, const StateVector& a0) {
    Decomposition d;
    d.c = es.vectors.adjoint() * a0;
    d.w = d.c.cwiseAbs2();
    const double total = d.w.sum();
    if (!(total > 0.0)) throw ValidationError("a0", "state has zero norm");
    d.w /= total;
    return d;
}

} // namespace

StateVector basis_state(std::size_t n, std::size_t i) {
    if (n < 1) throw InvalidDimensionError("n", "must be >= 1");
    if (i >= n) throw ValidationError("i", "site index out of range");
    StateVector v = StateVector::Zero(static_cast<Eigen::Index>(n));
    v(static_cast<Eigen::Index>(i)) = 1.0;
    return v;
}

std::vector<double> log_times(double t_min, double t_max, int points) {
    if (!(t_min > 0.0)) throw ValidationError("t_min", "must be positive");
    if (!(t_max > t_min)) throw ValidationError("t_max", "must exceed t_min");
    if (points < 2) throw ValidationError("points", "must be >= 2");
    std::vector<double> t(points);
    const double l0 = std::log(t_min);
    const double l1 = std::log(t_max);
    for (int k = 0; k < points; ++k)
        t[k] = std::exp(l0 + (l1 - l0) * k / (points - 1));
    t.front() = t_min;
    t.back() = t_max;
    return t;
}

StateVector evolve(const EigenSystem& es, const StateVector& a0, double t) {
    check_state(es, a0, "a0");
    Eigen::VectorXcd c = es.vectors.adjoint() * a0;
    for (Eigen::Index n = 0; n < c.size(); ++n)
        c(n) *= std::polar(1.0, -es.energies(n) * t);
    return es.vectors * c;
}

TimeSeries survival_probability(const EigenSystem& es, const StateVector& a0,
                                const std::vector<double>& times) {
    check_state(es, a0, "a0");
    const Eigen::VectorXd w = (es.vectors.adjoint() * a0).cwiseAbs2();
    TimeSeries ts;
    ts.times = times;
    ts.values.resize(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        std::complex<double> amp = 0.0;
        for (Eigen::Index n = 0; n < w.size(); ++n)
            amp += w(n) * std::polar(1.0, -es.energies(n) * times[k]);
        ts.values[k] = std::norm(amp);
    }
    return ts;
}

TimeSeries cross_probability(const EigenSystem& es, const StateVector& a0,
                             const StateVector& b, const std::vector<double>& times) {
    check_state(es, a0, "a0");
    check_state(es, b, "b");
    const Eigen::VectorXcd c = es.vectors.adjoint() * a0;
    const Eigen::VectorXcd d = es.vectors.adjoint() * b;
    TimeSeries ts;
    ts.times = times;
    ts.values.resize(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        std::complex<double> amp = 0.0;
        for (Eigen::Index n = 0; n < c.size(); ++n)
            amp += std::conj(d(n)) * c(n) * std::polar(1.0, -es.energies(n) * times[k]);
        ts.values[k] = std::norm(amp);
    }
    return ts;
}

double infinite_time_joint(const EigenSystem& es, const StateVector& a, const StateVector& b) {
    check_state(es, a, "a");
    check_state(es, b, "b");
    const Eigen::VectorXcd c = es.vectors.adjoint() * a;
    const Eigen::VectorXcd d = es.vectors.adjoint() * b;
    const auto starts = cluster_starts(es.energies);
    double sum = 0.0;
    for (std::size_t g = 0; g + 1 < starts.size(); ++g) {
        std::complex<double> overlap = 0.0;   // <b| P_g |a>
        for (Eigen::Index n = starts[g]; n < starts[g + 1]; ++n)
            overlap += std::conj(d(n)) * c(n);
        sum += std::norm(overlap);
    }
    return static_cast<double>(es.dim()) * sum;
}

InfiniteTimeProfile infinite_time_profile(const EigenSystem& es, const StateVector& a0,
                                          std::size_t n_alpha, bool include_initial_site) {
    check_state(es, a0, "a0");
    const std::size_t n = es.dim();
    if (n_alpha < 1 || n_alpha >= n)
        throw ValidationError("n_alpha", "must satisfy 1 <= n_alpha < dim");
    const std::size_t n_beta = n - n_alpha;

    InfiniteTimeProfile prof;
    if (!include_initial_site) {
        // Launch-site exclusion only makes sense for a basis-state launch.
        Eigen::Index site = -1;
        for (Eigen::Index i = 0; i < a0.size(); ++i) {
            if (std::abs(a0(i)) > 1e-12) {
                if (site >= 0 || std::abs(a0(i) - std::complex<double>(1.0, 0.0)) > 1e-12)
                    throw ValidationError("a0", "launch-site exclusion requires a basis state");
                site = i;
            }
        }
        if (site < 0) throw ValidationError("a0", "state has zero norm");
        prof.excluded_site = static_cast<std::size_t>(site);
    }

    const Eigen::VectorXcd c = es.vectors.adjoint() * a0;
    const auto starts = cluster_starts(es.energies);
    prof.site_probs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t g = 0; g + 1 < starts.size(); ++g) {
        Eigen::VectorXcd w = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n));
        for (Eigen::Index m = starts[g]; m < starts[g + 1]; ++m)
            w += es.vectors.col(m) * c(m);   // P_g |a0> restricted to cluster g
        prof.site_probs += w.cwiseAbs2();
    }

    double sum_a = 0.0, sum_b = 0.0;
    std::size_t cnt_a = n_alpha, cnt_b = n_beta;
    for (std::size_t i = 0; i < n; ++i) {
        if (prof.excluded_site && *prof.excluded_site == i) {
            if (i < n_alpha) --cnt_a; else --cnt_b;
            continue;
        }
        if (i < n_alpha) sum_a += prof.site_probs(static_cast<Eigen::Index>(i));
        else sum_b += prof.site_probs(static_cast<Eigen::Index>(i));
    }
    if (cnt_a < 1 || cnt_b < 1)
        throw InsufficientDataError("n_alpha", "a block average has no sites left");
    prof.block_alpha = sum_a / static_cast<double>(cnt_a);
    prof.block_beta = sum_b / static_cast<double>(cnt_b);
    prof.ratio = prof.block_alpha / prof.block_beta;
    return prof;
}

double ipr(const StateVector& v) {
    const double n2 = v.squaredNorm();
    if (!(n2 > 0.0)) throw ValidationError("v", "state has zero norm");
    double n4 = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) n4 += std::norm(v(i)) * std::norm(v(i));
    return n4 / (n2 * n2);
}

Eigen::VectorXd rho_av(const EigenSystem& es, const StateVector& a0, double t) {
    check_state(es, a0, "a0");
    if (!(t >= 0.0)) throw ValidationError("t", "must be >= 0");
    const Eigen::Index n = static_cast<Eigen::Index>(es.dim());
    if (t == 0.0) return a0.cwiseAbs2();

    // rho_ii(t) = sum_nm M_in K_nm conj(M_im), with M = V diag(c) and
    // K_nm = exp(-i (E_n - E_m) t / 2) sinc((E_n - E_m) t / 2); K is the
    // time average of exp(-i (E_n - E_m) tau) over [0, t].
    const Eigen::VectorXcd c = es.vectors.adjoint() * a0;
    Eigen::MatrixXcd m = es.vectors * c.asDiagonal();
    Eigen::MatrixXcd k(n, n);
    for (Eigen::Index p = 0; p < n; ++p) {
        k(p, p) = 1.0;
        for (Eigen::Index q = p + 1; q < n; ++q) {
            const double half = 0.5 * (es.energies(p) - es.energies(q)) * t;
            const std::complex<double> val = std::polar(stable_sinc(half), -half);
            k(p, q) = val;
            k(q, p) = std::conj(val);
        }
    }
    Eigen::MatrixXcd mk = m * k;
    Eigen::VectorXd rho(n);
    for (Eigen::Index i = 0; i < n; ++i)
        rho(i) = mk.row(i).dot(m.row(i)).real();   // Eigen's dot conjugates the left factor
    return rho;
}

double participation_number_direct(const EigenSystem& es, const StateVector& a0, double t) {
    check_state(es, a0, "a0");
    if (!(t >= 0.0)) throw ValidationError("t", "must be >= 0");
    const Decomposition d = decompose(es, a0);
    const Eigen::Index n = d.w.size();
    double purity = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
        purity += d.w(p) * d.w(p);
        for (Eigen::Index q = p + 1; q < n; ++q) {
            const double s = stable_sinc(0.5 * (es.energies(p) - es.energies(q)) * t);
            purity += 2.0 * d.w(p) * d.w(q) * s * s;
        }
    }
    return 1.0 / purity;
}

namespace {

double survival_at(const Eigen::VectorXd& w, const Eigen::VectorXd& e, double tau) {
    std::complex<double> amp = 0.0;
    for (Eigen::Index n = 0; n < w.size(); ++n)
        amp += w(n) * std::polar(1.0, -e(n) * tau);
    return std::norm(amp);
}

// Uniform step resolving the fastest survival oscillation with at least 20
// samples per period; falls back to t/16 for a degenerate spectrum.
double fine_step(const Eigen::VectorXd& e, double t) {
    const double range = e(e.size() - 1) - e(0);
    double dt = t / 16.0;
    if (range > 0.0) dt = std::min(dt, 2.0 * std::numbers::pi / range / 20.0);
    return dt;
}

} // namespace

double participation_number_integral(const EigenSystem& es, const StateVector& a0, double t) {
    check_state(es, a0, "a0");
    if (!(t >= 0.0)) throw ValidationError("t", "must be >= 0");
    if (t == 0.0) return 1.0;
    const Decomposition d = decompose(es, a0);

    const double dt_target = fine_step(es.energies, t);
    std::size_t intervals = static_cast<std::size_t>(std::ceil(t / dt_target));
    intervals += intervals % 2;   // Simpson needs an even count
    intervals = std::max<std::size_t>(intervals, 8);
    if (intervals > 50'000'000)
        throw ValidationError("t", "quadrature would need more than 5e7 samples; "
                                   "use participation_number_direct at long times");
    const double h = t / static_cast<double>(intervals);

    double sum = 0.0;   // composite Simpson of f(tau) = (1 - tau/t) P(tau)
    for (std::size_t k = 0; k <= intervals; ++k) {
        const double tau = h * static_cast<double>(k);
        const double f = (1.0 - tau / t) * survival_at(d.w, es.energies, tau);
        double wgt = (k == 0 || k == intervals) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        sum += wgt * f;
    }
    const double integral = sum * h / 3.0;
    return t / (2.0 * integral);
}

TimeSeries participation_number_series(const EigenSystem& es, const StateVector& a0,
                                       double t_min, double t_max, int points) {
    check_state(es, a0, "a0");
    if (!(t_min > 0.0)) throw ValidationError("t_min", "must be positive");
    if (!(t_max > t_min)) throw ValidationError("t_max", "must exceed t_min");
    if (points < 2) throw ValidationError("points", "must be >= 2");
    const Decomposition d = decompose(es, a0);
    const Eigen::Index n = d.w.size();

    // Besides the oscillation criterion, the grid must resolve the earliest
    // requested time well enough that a saturation window [t_min, 1.5 t_min]
    // still holds 10+ distinct samples after snapping.
    const double dt = std::min(fine_step(es.energies, t_max), t_min / 20.0);
    const double samples_needed = std::ceil(t_max / dt) + 1.0;
    if (samples_needed > 5e7)
        throw ValidationError("t_max", "series grid would exceed 5e7 samples; "
                                       "reduce t_max or the spectral range");
    const std::size_t m = static_cast<std::size_t>(samples_needed);

    // Prefix integrals I1 = int_0^t P and I2 = int_0^t tau P by the
    // trapezoid rule; survival amplitudes advance by phase recurrence.
    std::vector<double> i1(m, 0.0), i2(m, 0.0);
    Eigen::VectorXcd z(n), step(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        z(j) = d.w(j);
        step(j) = std::polar(1.0, -es.energies(j) * dt);
    }
    double prev_p = 1.0;   // P(0) with unit-normalized weights
    double prev_tau = 0.0;
    for (std::size_t k = 1; k < m; ++k) {
        z.array() *= step.array();
        const double tau = dt * static_cast<double>(k);
        const double p = std::norm(z.sum());
        i1[k] = i1[k - 1] + 0.5 * (prev_p + p) * dt;
        i2[k] = i2[k - 1] + 0.5 * (prev_tau * prev_p + tau * p) * dt;
        prev_p = p;
        prev_tau = tau;
    }

    TimeSeries ts;
    std::size_t last_idx = 0;
    for (double t : log_times(t_min, t_max, points)) {
        std::size_t idx = static_cast<std::size_t>(std::llround(t / dt));
        idx = std::clamp<std::size_t>(idx, 1, m - 1);
        if (idx == last_idx) continue;
        last_idx = idx;
        const double tk = dt * static_cast<double>(idx);
        const double inv_n = (2.0 / tk) * i1[idx] - (2.0 / (tk * tk)) * i2[idx];
        ts.times.push_back(tk);
        ts.values.push_back(1.0 / inv_n);
    }
    return ts;
}

TimeSeries inverse_ipr_series(const EigenSystem& es, const StateVector& a0,
                              const std::vector<double>& times) {
    check_state(es, a0, "a0");
    const Eigen::VectorXcd c = es.vectors.adjoint() * a0;
    TimeSeries ts;
    ts.times = times;
    ts.values.resize(times.size());
    Eigen::VectorXcd phased(c.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        for (Eigen::Index j = 0; j < c.size(); ++j)
            phased(j) = c(j) * std::polar(1.0, -es.energies(j) * times[k]);
        ts.values[k] = 1.0 / ipr(es.vectors * phased);
    }
    return ts;
}

} // namespace qb
