#include "sdvec/rng.hpp"

#include <limits>
#include <stdexcept>

namespace sdvec {

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed)
    , stream_id_(stream_id)
    , engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL)))
{
}

double RngStream::uniform()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n)
{
    if (n == 0) {
        throw std::invalid_argument("uniform_index: empty range");
    }
    // rejection sampling removes modulo bias
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max()
        - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) {
        x = engine_();
    }
    return x % n;
}

std::size_t RngStream::categorical(std::span<const double> probs)
{
    if (probs.empty()) {
        throw std::invalid_argument("categorical: empty distribution");
    }
    const double u = uniform();
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) {
            continue;
        }
        acc += probs[i];
        last_positive = i;
        if (u < acc) {
            return i;
        }
    }
    // rounding slack: rows sum to 1 only within tolerance
    return last_positive;
}

} // namespace sdvec
