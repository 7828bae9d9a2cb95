#pragma once

#include <array>
#include <cstdint>
#include <cstddef>
#include <vector>

namespace rbmkit {

namespace detail {

// splitmix64 output function (Steele/Lea/Flood). Bijective avalanche mix,
// used for state seeding and stream derivation.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

// xoshiro256++ (Blackman/Vigna), seeded through splitmix64.
//
// Streams: Rng(seed, s) for distinct s yields unrelated sequences, so
// parallel chains keyed by (seed, chain-index) reproduce bit-identically
// whether they run serially or concurrently. Double output uses the top
// 53 bits, giving the same values on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {
        std::uint64_t s = seed ^ detail::mix64(0x0436b8a595b4c0acULL + stream);
        bool nonzero = false;
        for (auto& word : state_) {
            s += 0x9e3779b97f4a7c15ULL;
            word = detail::mix64(s);
            nonzero |= (word != 0);
        }
        if (!nonzero) {
            state_[0] = 0x1ULL;  // xoshiro must not start all-zero
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result =
            detail::rotl64(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // Uniform in [0, n) without modulo bias (rejection sampling).
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) {
                return r % n;
            }
        }
    }

    // Independent stream keyed by the current state and an index; does not
    // advance this generator. Lets dataset-wide operations hand each row
    // its own replayable substream.
    Rng child(std::uint64_t index) const {
        const std::uint64_t derived =
            detail::mix64(state_[0]) ^ detail::mix64(state_[2] + 0x6a09e667f3bcc908ULL);
        return Rng(derived, index);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    std::array<std::uint64_t, 4> state_{};
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
};

// Fisher-Yates with the library Rng, so epoch shuffles reproduce under seed.
template <typename T>
void shuffle(std::vector<T>& xs, Rng& rng) {
    for (std::size_t i = xs.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i));
        std::swap(xs[i - 1], xs[j]);
    }
}

} // namespace rbmkit
