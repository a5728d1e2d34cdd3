#include <doctest.h>

#include <qb/dynamics.hpp>
#include <qb/errors.hpp>
#include <qb/random.hpp>
#include <qb/rmt.hpp>
#include <qb/spectral.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

using namespace qb;
using std::numbers::pi;

namespace {

EigenSystem rabi_pair(double g) {
    Eigen::MatrixXd m(2, 2);
    m << 0.0, g, g, 0.0;
    return eigensolve(Hamiltonian::real(m));
}

} // namespace

TEST_SUITE("dynamics") {

TEST_CASE("log grid hits both endpoints exactly and increases strictly") {
    auto t = log_times(0.1, 1000.0, 17);
    REQUIRE(t.size() == 17);
    CHECK(t.front() == 0.1);
    CHECK(t.back() == 1000.0);
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] > t[i - 1]);
    CHECK_THROWS_AS(log_times(-1.0, 10.0, 5), ValidationError);
    CHECK_THROWS_AS(log_times(10.0, 1.0, 5), ValidationError);
    CHECK_THROWS_AS(log_times(0.1, 10.0, 1), ValidationError);
}

TEST_CASE("evolution at t = 0 is the identity") {
    RandomStream rs(31, 0);
    EigenSystem es = eigensolve(sample_goe(60, rs));
    StateVector a0 = basis_state(60, 7);
    StateVector a = evolve(es, a0, 0.0);
    CHECK((a - a0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("evolution is unitary and eigenstates are stationary") {
    RandomStream rs(32, 0);
    EigenSystem es = eigensolve(sample_gue(50, rs));
    StateVector a0 = basis_state(50, 3);
    for (double t : {0.5, 3.0, 40.0}) {
        CHECK(evolve(es, a0, t).squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
    }
    // An eigenvector only picks up a global phase: survival stays 1.
    StateVector phi = es.vectors.col(20);
    TimeSeries s = survival_probability(es, phi, {0.1, 1.0, 10.0, 100.0});
    for (double v : s.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("two-site flip-flop matches cos^2 / sin^2") {
    const double g = 0.7;
    EigenSystem es = rabi_pair(g);
    StateVector a0 = basis_state(2, 0);
    StateVector b = basis_state(2, 1);
    std::vector<double> times{0.3, 1.1, 2.9, pi / (2.0 * g)};
    TimeSeries stay = survival_probability(es, a0, times);
    TimeSeries flip = cross_probability(es, a0, b, times);
    for (std::size_t i = 0; i < times.size(); ++i) {
        double c = std::cos(g * times[i]), s = std::sin(g * times[i]);
        CHECK(stay.values[i] == doctest::Approx(c * c).epsilon(1e-12));
        CHECK(flip.values[i] == doctest::Approx(s * s).epsilon(1e-12));
    }
    // Quarter period: complete population transfer.
    CHECK(flip.values.back() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("late-time survival average equals the diagonal-ensemble value") {
    RandomStream rs(33, 0);
    const std::size_t n = 300;
    EigenSystem es = eigensolve(sample_goe(n, rs));
    StateVector a0 = basis_state(n, 0);
    double plateau = infinite_time_joint(es, a0, a0) / static_cast<double>(n);

    double th = heisenberg_time_bulk(es);
    RandomStream tdraw(33, 1);
    std::vector<double> times;
    for (int i = 0; i < 400; ++i) times.push_back(th * (50.0 + 100.0 * tdraw.uniform()));
    std::sort(times.begin(), times.end());
    TimeSeries s = survival_probability(es, a0, times);
    double mean = 0.0;
    for (double v : s.values) mean += v;
    mean /= s.values.size();
    CHECK(mean == doctest::Approx(plateau).epsilon(0.10));
    // Porter-Thomas statistics put the basis-state plateau near 3/n.
    CHECK(plateau == doctest::Approx(3.0 / n).epsilon(0.35));
}

TEST_CASE("late-time cross average equals the diagonal-ensemble value") {
    RandomStream rs(34, 0);
    const std::size_t n = 200;
    EigenSystem es = eigensolve(sample_goe(n, rs));
    StateVector a0 = basis_state(n, 2);
    StateVector b = basis_state(n, 150);
    double plateau = infinite_time_joint(es, a0, b) / static_cast<double>(n);

    double th = heisenberg_time_bulk(es);
    RandomStream tdraw(34, 1);
    std::vector<double> times;
    for (int i = 0; i < 600; ++i) times.push_back(th * (50.0 + 100.0 * tdraw.uniform()));
    std::sort(times.begin(), times.end());
    TimeSeries s = cross_probability(es, a0, b, times);
    double mean = 0.0;
    for (double v : s.values) mean += v;
    mean /= s.values.size();
    CHECK(mean == doctest::Approx(plateau).epsilon(0.15));
}

TEST_CASE("degenerate subspaces are averaged through projectors") {
    // Rotate a doubly degenerate level so per-eigenvector formulas would see
    // an arbitrary basis in the subspace; the projector form must not care.
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
    d.diagonal() << 1.0, 1.0, 2.0;
    double th = 0.83;
    Eigen::MatrixXd q = Eigen::MatrixXd::Identity(3, 3);
    q(0, 0) = std::cos(th);  q(0, 2) = -std::sin(th);
    q(2, 0) = std::sin(th);  q(2, 2) = std::cos(th);
    Eigen::MatrixXd m = q * d * q.transpose();
    EigenSystem es = eigensolve(Hamiltonian::real(m));
    REQUIRE(es.degenerate_warning);

    // P_g for the lambda = 1 subspace is q diag(1,1,0) q^T; the joint value
    // follows in closed form.
    Eigen::MatrixXd pg = q.leftCols(2) * q.leftCols(2).transpose();
    Eigen::MatrixXd p2 = q.col(2) * q.col(2).transpose();
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b) {
            double expected = 3.0 * (pg(b, a) * pg(b, a) + p2(b, a) * p2(b, a));
            double got = infinite_time_joint(es, basis_state(3, a), basis_state(3, b));
            CHECK(got == doctest::Approx(expected).epsilon(1e-9));
        }
}

TEST_CASE("site profile sums to one and matches the joint values") {
    RandomStream rs(35, 0);
    const std::size_t na = 30, nb = 60;
    EigenSystem es = eigensolve(build_model_a(na, nb, 1, rs));
    StateVector a0 = basis_state(na + nb, 4);
    InfiniteTimeProfile prof = infinite_time_profile(es, a0, na);
    CHECK(prof.site_probs.sum() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK_FALSE(prof.excluded_site.has_value());
    for (std::size_t i : {std::size_t(0), std::size_t(40), std::size_t(89)}) {
        double joint = infinite_time_joint(es, a0, basis_state(na + nb, i));
        CHECK(prof.site_probs(static_cast<Eigen::Index>(i)) ==
              doctest::Approx(joint / (na + nb)).epsilon(1e-9));
    }
    CHECK(prof.ratio == doctest::Approx((prof.block_alpha / prof.block_beta)));
    // Weak corner coupling confines the launch to its own block.
    CHECK(prof.ratio > 1.0);
}

TEST_CASE("excluding the launch site requires a basis state and skips it") {
    RandomStream rs(36, 0);
    const std::size_t n = 50;
    EigenSystem es = eigensolve(sample_goe(n, rs));
    StateVector a0 = basis_state(n, 10);
    InfiniteTimeProfile prof = infinite_time_profile(es, a0, 25, false);
    REQUIRE(prof.excluded_site.has_value());
    CHECK(*prof.excluded_site == 10);
    // Removing the self-return site lowers the alpha average.
    InfiniteTimeProfile full = infinite_time_profile(es, a0, 25, true);
    CHECK(prof.block_alpha < full.block_alpha);

    StateVector superpos = StateVector::Zero(n);
    superpos(0) = std::sqrt(0.5);
    superpos(1) = std::sqrt(0.5);
    CHECK_THROWS_AS(infinite_time_profile(es, superpos, 25, false), ValidationError);
}

TEST_CASE("ipr of simple states") {
    StateVector e0 = basis_state(8, 0);
    CHECK(ipr(e0) == doctest::Approx(1.0).epsilon(1e-15));
    StateVector flat = StateVector::Constant(8, std::complex<double>(1.0, 0.0));
    flat.normalize();
    CHECK(ipr(flat) == doctest::Approx(1.0 / 8.0).epsilon(1e-14));
}

TEST_CASE("goe eigenvector ipr follows porter-thomas") {
    RandomStream rs(37, 0);
    const std::size_t n = 300;
    EigenSystem es = eigensolve(sample_goe(n, rs));
    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) mean += ipr(es.vectors.col(k));
    mean /= n;
    // Exact finite-size value for real Gaussian vectors is 3/(n+2).
    CHECK(mean == doctest::Approx(3.0 / (n + 2.0)).epsilon(0.05));
}

TEST_CASE("running time average converges to the infinite-time profile") {
    RandomStream rs(38, 0);
    const std::size_t n = 200;
    EigenSystem es = eigensolve(sample_goe(n, rs));
    StateVector a0 = basis_state(n, 0);
    CHECK((rho_av(es, a0, 0.0) - a0.cwiseAbs2().real()).cwiseAbs().maxCoeff() < 1e-14);

    double th = heisenberg_time_bulk(es);
    Eigen::VectorXd rho = rho_av(es, a0, 200.0 * th);
    CHECK(rho.sum() == doctest::Approx(1.0).epsilon(1e-9));
    Eigen::VectorXd target = infinite_time_profile(es, a0, n / 2).site_probs;
    CHECK((rho - target).cwiseAbs().sum() < 0.02);
}

TEST_CASE("participation routes agree to a relative 1e-3") {
    RandomStream rs(39, 0);
    RandomStream pick(39, 1);
    for (int trial = 0; trial < 6; ++trial) {
        std::size_t n = 60 + static_cast<std::size_t>(pick.uniform() * 60);
        EigenSystem es = (trial % 2 == 0) ? eigensolve(sample_goe(n, rs))
                                          : eigensolve(sample_gue(n, rs));
        StateVector a0 = basis_state(n, static_cast<std::size_t>(pick.uniform() * n));
        double th = heisenberg_time_bulk(es);
        double t = th * std::pow(10.0, -2.0 + 3.0 * pick.uniform());
        double nd = participation_number_direct(es, a0, t);
        double ni = participation_number_integral(es, a0, t);
        CHECK(std::abs(nd - ni) / nd < 1e-3);
    }
}

TEST_CASE("participation of a two-level system follows the closed form") {
    // Eigenvalues 0 and 1, equal weights w = (1/2, 1/2):
    //   1/N(t) = 1/2 + sinc^2(t/2) / 2.
    // The interference term vanishes at t = 2 pi k, so N hits 2 exactly there
    // even though the state itself has returned to the launch site: the
    // window average has covered both eigenstates equally.
    Eigen::MatrixXd m(2, 2);
    m << 0.5, 0.5, 0.5, 0.5; // eigenvalues 0, 1
    EigenSystem es = eigensolve(Hamiltonian::real(m));
    StateVector a0 = basis_state(2, 0);
    CHECK(participation_number_direct(es, a0, 2.0 * pi) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(participation_number_direct(es, a0, 20.0 * pi) == doctest::Approx(2.0).epsilon(1e-6));
    auto closed = [](double t) {
        const double s = (t == 0.0) ? 1.0 : std::sin(0.5 * t) / (0.5 * t);
        return 1.0 / (0.5 + 0.5 * s * s);
    };
    for (double t : {0.7, 3.0, 11.0})
        CHECK(participation_number_direct(es, a0, t) == doctest::Approx(closed(t)).epsilon(1e-9));
    // Long-time limit: equal weights explore both eigenstates, N -> 2.
    CHECK(participation_number_direct(es, a0, 1e6) == doctest::Approx(2.0).epsilon(1e-3));
    // Small-t limit: nothing explored yet.
    CHECK(participation_number_direct(es, a0, 1e-6) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("participation saturates near the porter-thomas bound") {
    RandomStream rs(40, 0);
    const std::size_t n = 150;
    EigenSystem es = eigensolve(sample_goe(n, rs));
    StateVector a0 = basis_state(n, 5);
    double th = heisenberg_time_bulk(es);
    double n_inf = participation_number_direct(es, a0, 1e4 * th);
    // Saturation value 1 / sum w^2 with Porter-Thomas weights is ~ n/3.
    CHECK(n_inf > 0.2 * n);
    CHECK(n_inf < 0.55 * n);
    // Monotone growth before saturation.
    double n_early = participation_number_direct(es, a0, 0.01 * th);
    double n_mid = participation_number_direct(es, a0, 0.3 * th);
    CHECK(n_early < n_mid);
    CHECK(n_mid < n_inf);
}

TEST_CASE("series route tracks the direct route on a log grid") {
    RandomStream rs(41, 0);
    const std::size_t n = 120;
    EigenSystem es = eigensolve(sample_goe(n, rs));
    StateVector a0 = basis_state(n, 11);
    double th = heisenberg_time_bulk(es);
    TimeSeries series = participation_number_series(es, a0, 1e-2 * th, 10.0 * th, 40);
    REQUIRE(series.times.size() >= 30);
    for (std::size_t i = 0; i < series.times.size(); ++i) {
        double ref = participation_number_direct(es, a0, series.times[i]);
        CHECK(std::abs(series.values[i] - ref) / ref < 2e-2);
    }
    for (std::size_t i = 1; i < series.times.size(); ++i)
        CHECK(series.times[i] > series.times[i - 1]);
}

TEST_CASE("instantaneous inverse ipr series is bounded and normalized at t=0") {
    RandomStream rs(42, 0);
    const std::size_t n = 80;
    EigenSystem es = eigensolve(sample_goe(n, rs));
    StateVector a0 = basis_state(n, 0);
    TimeSeries s = inverse_ipr_series(es, a0, {0.0, 0.5, 5.0, 50.0});
    CHECK(s.values[0] == doctest::Approx(1.0).epsilon(1e-10));
    for (double v : s.values) {
        CHECK(v >= 1.0 - 1e-9);
        CHECK(v <= static_cast<double>(n) + 1e-9);
    }
}

TEST_CASE("dimension mismatches are rejected") {
    RandomStream rs(43, 0);
    EigenSystem es = eigensolve(sample_goe(10, rs));
    StateVector wrong = basis_state(11, 0);
    CHECK_THROWS_AS(evolve(es, wrong, 1.0), DimensionMismatchError);
    CHECK_THROWS_AS(infinite_time_joint(es, wrong, wrong), DimensionMismatchError);
    CHECK_THROWS_AS(participation_number_direct(es, wrong, 1.0), DimensionMismatchError);
    CHECK_THROWS_AS(basis_state(5, 9), ValidationError);
    StateVector zero = StateVector::Zero(10);
    CHECK_THROWS_AS(participation_number_direct(es, zero, 1.0), ValidationError);
}

} // TEST_SUITE
