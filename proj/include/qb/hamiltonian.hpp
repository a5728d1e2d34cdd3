#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <variant>

#include "qb/errors.hpp"

namespace qb {

enum class MatrixKind { Real, Complex };

// Two-block bookkeeping for the coupled-block ensembles. alpha occupies the
// first n_alpha basis sites, beta the remaining n_beta.
struct BlockStructure {
    enum class Coupling { None, Corner, Scaled };

    std::size_t n_alpha = 0;
    std::size_t n_beta = 0;
    Coupling coupling = Coupling::None;
    std::size_t n_c = 0;    // corner coupling: size of the retained block
    double lambda = 1.0;    // scaled coupling: off-diagonal factor

    std::size_t dim() const noexcept { return n_alpha + n_beta; }
};

// Dense Hermitian matrix, stored real-symmetric or complex-Hermitian
// depending on the ensemble that produced it.
class Hamiltonian {
public:
    static Hamiltonian real(Eigen::MatrixXd m) { return Hamiltonian(std::move(m)); }
    static Hamiltonian complex(Eigen::MatrixXcd m) { return Hamiltonian(std::move(m)); }

    std::size_t dim() const;
    MatrixKind kind() const noexcept {
        return std::holds_alternative<Eigen::MatrixXd>(m_) ? MatrixKind::Real
                                                           : MatrixKind::Complex;
    }

    const Eigen::MatrixXd& real_matrix() const;
    const Eigen::MatrixXcd& complex_matrix() const;

    // max |H - H^dag| entrywise; exactly 0 for matrices built by this library.
    double hermiticity_error() const;

    const std::optional<BlockStructure>& blocks() const noexcept { return blocks_; }
    void set_blocks(BlockStructure b) { blocks_ = b; }

private:
    explicit Hamiltonian(Eigen::MatrixXd m) : m_(std::move(m)) {}
    explicit Hamiltonian(Eigen::MatrixXcd m) : m_(std::move(m)) {}

    std::variant<Eigen::MatrixXd, Eigen::MatrixXcd> m_;
    std::optional<BlockStructure> blocks_;
};

// Binary matrix dump, magic "QBH1": little-endian header
// {char magic[4], u32 n, u32 flags, u32 reserved}, then n*n doubles
// row-major. flags bit 0 set means complex entries (re,im interleaved).
void save_matrix(const Hamiltonian& h, const std::filesystem::path& path);
Hamiltonian load_matrix(const std::filesystem::path& path);

} // namespace qb
