#include "qb/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace qb {

// ---- Hamiltonian -----------------------------------------------------------

std::size_t Hamiltonian::dim() const {
    if (kind() == MatrixKind::Real)
        return static_cast<std::size_t>(std::get<Eigen::MatrixXd>(m_).rows());
    return static_cast<std::size_t>(std::get<Eigen::MatrixXcd>(m_).rows());
}

const Eigen::MatrixXd& Hamiltonian::real_matrix() const {
    if (kind() != MatrixKind::Real)
        throw ValidationError("kind", "matrix is complex, not real-symmetric");
    return std::get<Eigen::MatrixXd>(m_);
}

const Eigen::MatrixXcd& Hamiltonian::complex_matrix() const {
    if (kind() != MatrixKind::Complex)
        throw ValidationError("kind", "matrix is real-symmetric, not complex");
    return std::get<Eigen::MatrixXcd>(m_);
}

double Hamiltonian::hermiticity_error() const {
    if (kind() == MatrixKind::Real) {
        const auto& m = std::get<Eigen::MatrixXd>(m_);
        return (m - m.transpose()).cwiseAbs().maxCoeff();
    }
    const auto& m = std::get<Eigen::MatrixXcd>(m_);
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

// ---- sampling --------------------------------------------------------------

namespace {

Eigen::MatrixXd goe_matrix(std::size_t n, RandomStream& rs) {
    Eigen::MatrixXd m(n, n);
    const double sqrt2 = std::sqrt(2.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = rs.normal();
            if (i == j) {
                m(i, i) = sqrt2 * v;   // diagonal variance 2
            } else {
                m(i, j) = v;           // off-diagonal variance 1
                m(j, i) = v;
            }
        }
    }
    return m;
}

void check_dim(std::size_t n, const char* key) {
    if (n < 1) throw InvalidDimensionError(key, "must be >= 1");
}

} // namespace

Hamiltonian sample_goe(std::size_t n, RandomStream& rs) {
    check_dim(n, "n");
    return Hamiltonian::real(goe_matrix(n, rs));
}

Hamiltonian sample_gue(std::size_t n, RandomStream& rs) {
    check_dim(n, "n");
    Eigen::MatrixXcd m(n, n);
    const double s = std::sqrt(0.5);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            if (i == j) {
                m(i, i) = rs.normal();                   // real diagonal, variance 1
            } else {
                const double re = s * rs.normal();       // re drawn before im
                const double im = s * rs.normal();
                m(i, j) = std::complex<double>(re, im);
                m(j, i) = std::complex<double>(re, -im);
            }
        }
    }
    return Hamiltonian::complex(std::move(m));
}

Hamiltonian build_model_a(std::size_t n_alpha, std::size_t n_beta, std::size_t n_c,
                          RandomStream& rs) {
    check_dim(n_alpha, "n_alpha");
    check_dim(n_beta, "n_beta");
    if (n_c < 1 || n_c > std::min(n_alpha, n_beta))
        throw InvalidCouplingError("n_c", "must satisfy 1 <= n_c <= min(n_alpha, n_beta)");

    const std::size_t n = n_alpha + n_beta;
    Eigen::MatrixXd m = goe_matrix(n, rs);
    for (std::size_t r = 0; r < n_alpha; ++r) {
        const bool row_kept = r + n_c >= n_alpha;
        for (std::size_t c = n_alpha; c < n; ++c) {
            if (row_kept && c < n_alpha + n_c) continue;   // retained corner
            m(r, c) = 0.0;
            m(c, r) = 0.0;
        }
    }

    Hamiltonian h = Hamiltonian::real(std::move(m));
    BlockStructure b;
    b.n_alpha = n_alpha;
    b.n_beta = n_beta;
    b.coupling = BlockStructure::Coupling::Corner;
    b.n_c = n_c;
    h.set_blocks(b);
    return h;
}

Hamiltonian build_model_b(std::size_t n_alpha, std::size_t n_beta, double lambda,
                          RandomStream& rs) {
    check_dim(n_alpha, "n_alpha");
    check_dim(n_beta, "n_beta");
    if (!(lambda >= 0.0 && lambda <= 1.0) || !std::isfinite(lambda))
        throw InvalidCouplingError("lambda", "must lie in [0, 1]");

    const std::size_t n = n_alpha + n_beta;
    Eigen::MatrixXd m = goe_matrix(n, rs);
    for (std::size_t r = 0; r < n_alpha; ++r) {
        for (std::size_t c = n_alpha; c < n; ++c) {
            m(r, c) *= lambda;
            m(c, r) *= lambda;
        }
    }

    Hamiltonian h = Hamiltonian::real(std::move(m));
    BlockStructure b;
    b.n_alpha = n_alpha;
    b.n_beta = n_beta;
    b.coupling = BlockStructure::Coupling::Scaled;
    b.lambda = lambda;
    h.set_blocks(b);
    return h;
}

// ---- binary dump -----------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'Q', 'B', 'H', '1'};

void put_u32(std::ofstream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace

void save_matrix(const Hamiltonian& h, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    const bool cplx = h.kind() == MatrixKind::Complex;
    const std::uint32_t n = static_cast<std::uint32_t>(h.dim());
    os.write(kMagic, 4);
    put_u32(os, n);
    put_u32(os, cplx ? 1u : 0u);
    put_u32(os, 0u);   // reserved
    // Row-major doubles; Eigen stores column-major, so write by rows.
    if (!cplx) {
        const auto& m = h.real_matrix();
        for (std::uint32_t i = 0; i < n; ++i)
            for (std::uint32_t j = 0; j < n; ++j) {
                const double v = m(i, j);
                os.write(reinterpret_cast<const char*>(&v), sizeof v);
            }
    } else {
        const auto& m = h.complex_matrix();
        for (std::uint32_t i = 0; i < n; ++i)
            for (std::uint32_t j = 0; j < n; ++j) {
                const double re = m(i, j).real(), im = m(i, j).imag();
                os.write(reinterpret_cast<const char*>(&re), sizeof re);
                os.write(reinterpret_cast<const char*>(&im), sizeof im);
            }
    }
    if (!os) throw Error("short write to " + path.string());
}

Hamiltonian load_matrix(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw ValidationError("file", path.string() + ": bad magic, not a matrix dump");
    const std::uint32_t n = get_u32(is);
    const std::uint32_t flags = get_u32(is);
    get_u32(is);   // reserved
    if (n == 0) throw ValidationError("file", path.string() + ": zero dimension");
    if ((flags & 1u) == 0) {
        Eigen::MatrixXd m(n, n);
        for (std::uint32_t i = 0; i < n; ++i)
            for (std::uint32_t j = 0; j < n; ++j) {
                double v;
                is.read(reinterpret_cast<char*>(&v), sizeof v);
                m(i, j) = v;
            }
        if (!is) throw ValidationError("file", path.string() + ": truncated payload");
        return Hamiltonian::real(std::move(m));
    }
    Eigen::MatrixXcd m(n, n);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < n; ++j) {
            double re, im;
            is.read(reinterpret_cast<char*>(&re), sizeof re);
            is.read(reinterpret_cast<char*>(&im), sizeof im);
            m(i, j) = std::complex<double>(re, im);
        }
    if (!is) throw ValidationError("file", path.string() + ": truncated payload");
    return Hamiltonian::complex(std::move(m));
}

} // namespace qb
