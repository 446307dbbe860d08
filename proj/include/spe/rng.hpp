#pragma once

#include <cstdint>
#include <random>

namespace spe {

// splitmix64 step; used to derive independent streams from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Mixes (master, index, purpose) into a stream seed. Streams derived with
// distinct (index, purpose) are independent for practical purposes, so
// per-sample work can be scheduled on any thread without changing results.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                 std::uint64_t purpose) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s ^= index * 0xd1342543de82ef95ULL + purpose;
    std::uint64_t b = splitmix64(s);
    s ^= a;
    std::uint64_t c = splitmix64(s);
    return b ^ (c + 0x2545f4914f6cdd1dULL * purpose) ^ (a << 1);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return unit_(engine_); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
    }

    bool bernoulli(double p) { return unit_(engine_) < p; }

    double uniform_in(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }

    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

inline Rng derived_rng(std::uint64_t master, std::uint64_t index, std::uint64_t purpose) {
    return Rng(derive_seed(master, index, purpose));
}

// Stream purposes used by the experiment driver.
namespace stream {
inline constexpr std::uint64_t draws = 1;
inline constexpr std::uint64_t sample = 2;
inline constexpr std::uint64_t calibration = 3;
inline constexpr std::uint64_t compile = 4;
} // namespace stream

} // namespace spe
