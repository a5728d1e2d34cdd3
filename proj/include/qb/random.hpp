#pragma once

#include <cstdint>

namespace qb {

// Counter-based deterministic PRNG: a splitmix64 walk whose starting point is
// derived from (seed, stream_id) by double avalanche mixing. Streams with
// distinct ids start at pseudo-random offsets of the common output sequence,
// so the chance of any overlap within s streams drawing d values each is
// ~ s^2 * d / 2^64.
//
// The draw order is part of the reproducibility contract: normals come from
// Box-Muller in pairs (cos first, sin cached), and matrix builders consume
// entries in a documented order. Bit-identical output is guaranteed for one
// build of this library; libm differences may change the last ulp across
// platforms.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform();

    // Standard normal via Box-Muller; consumes two uniforms every other call.
    double normal();

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace qb
