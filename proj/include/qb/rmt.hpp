#pragma once

#include "qb/hamiltonian.hpp"
#include "qb/random.hpp"

namespace qb {

// Gaussian orthogonal ensemble with off-diagonal variance 1 and diagonal
// variance 2, so the spectral density approaches a semicircle of radius
// 2*sqrt(n). Entries are drawn for the upper triangle in row-major order
// (diagonal included) and mirrored.
Hamiltonian sample_goe(std::size_t n, RandomStream& rs);

// Gaussian unitary ensemble: complex off-diagonal entries with variance 1/2
// in each of the real and imaginary parts (re drawn first), real diagonal
// with variance 1. Same semicircle radius convention as sample_goe.
Hamiltonian sample_gue(std::size_t n, RandomStream& rs);

// Corner-coupled two-block ensemble: one joint GOE draw of size
// n_alpha + n_beta whose alpha-beta off-diagonal block is zeroed except for
// the n_c x n_c corner adjacent to the block boundary (rows
// n_alpha-n_c .. n_alpha-1, columns n_alpha .. n_alpha+n_c-1, plus the
// symmetric mirror). Requires 1 <= n_c <= min(n_alpha, n_beta).
Hamiltonian build_model_a(std::size_t n_alpha, std::size_t n_beta, std::size_t n_c,
                          RandomStream& rs);

// Scale-coupled two-block ensemble: one joint GOE draw whose off-diagonal
// blocks are multiplied by lambda in [0, 1]. lambda = 1 reproduces the plain
// GOE draw bit-for-bit for the same stream.
Hamiltonian build_model_b(std::size_t n_alpha, std::size_t n_beta, double lambda,
                          RandomStream& rs);

} // namespace qb
