#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace sdvec {

/// Entity kinds used to derive independent sub-streams from one scenario seed.
enum class StreamKind : std::uint32_t {
    mobility = 1,
    uplink = 2,
    decode = 3,
    bandit = 4,
    downlink = 5,
    traffic = 6,
    edge = 7,
    cipher = 8,
    divergence = 9,
    eco = 10,
    master_key = 11,
    test = 0xffff,
};

constexpr std::uint64_t stream_id(StreamKind kind, std::uint64_t index) noexcept
{
    return (static_cast<std::uint64_t>(kind) << 40) ^ index;
}

/// Seeded pseudo-random stream. Identical (seed, stream_id) pairs replay
/// identical draws; the engine is std::mt19937_64, whose output sequence is
/// fixed by the standard, and the conversions below avoid the
/// implementation-defined std distributions.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t id() const noexcept { return stream_id_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n);

    bool bernoulli(double p) { return uniform() < p; }

    /// Index drawn from an (approximately) normalized probability vector.
    std::size_t categorical(std::span<const double> probs);

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

} // namespace sdvec
