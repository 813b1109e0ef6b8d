#pragma once

#include <bit>
#include <cstdint>
#include <limits>

namespace ergocap {

/// splitmix64 finalizer; used to derive independent stream keys.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
    return mix64(a ^ (mix64(b) + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

/// Stream tag derived from a short ASCII label, for separating the random
/// streams of different experiments that share one seed.
constexpr std::uint64_t tag(const char* label) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (; *label != '\0'; ++label) {
        h = (h ^ static_cast<unsigned char>(*label)) * 0x100000001b3ULL;
    }
    return h;
}

/// xoshiro256** keyed by (seed, stream, counter). Every Monte-Carlo trial
/// owns a generator built from its own counter, so results never depend on
/// which worker ran the trial. Satisfies UniformRandomBitGenerator.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t counter = 0) noexcept {
        std::uint64_t key = hash_combine(hash_combine(mix64(seed), stream), counter);
        for (auto& word : s_) {
            key += 0x9e3779b97f4a7c15ULL;
            word = mix64(key);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = std::rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t s_[4]{};
};

}  // namespace ergocap
