#pragma once

#include <cstdint>
#include <random>

namespace hkt {

/// Seeded generator handle. Owned by one worker at a time.
///
/// Doubles are produced from the top 53 bits of a 64-bit Mersenne twister so
/// streams are identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream for sub-task `index` of a run seeded with `master`.
    static Rng derive(std::uint64_t master, std::uint64_t index) {
        return Rng(splitmix64(master ^ splitmix64(index + 0x9e3779b97f4a7c15ULL)));
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0, 1).
    double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t next_u64() { return engine_(); }

    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace hkt
