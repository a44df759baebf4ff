#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "fairkit/errors.hpp"

namespace fairkit {

// splitmix64 step; used to derive independent stream seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t s = seed ^ (salt * 0x9e3779b97f4a7c15ULL);
    return splitmix64(s);
}

// Deterministic RNG. The mt19937_64 output sequence is fixed by the standard;
// sampling helpers are hand-rolled because std distributions are not portable
// across library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform in [0, 1) with 53 random mantissa bits
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n)
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw InternalError("uniform_index: empty range");
        return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
    }

    // index sampled from a probability vector via cumulative scan
    std::size_t categorical(const std::vector<double>& probs) {
        double u = uniform01();
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return probs.size() - 1;
    }

    // Fisher-Yates shuffle of an index vector
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace fairkit
