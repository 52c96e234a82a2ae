#pragma once

#include <bit>
#include <cstdint>
#include <random>

namespace ergolab {

/// SplitMix64 finalizer. Used both for seed derivation and as a stateless
/// bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for sub-task `stream` of a run seeded with `master`.
///
/// All randomness in the library flows through this function: a probe seeded
/// with s gives its i-th sampled point the generator `Rng(derive_seed(s, i))`,
/// and the runner hands each experiment `derive_seed(master, experiment_index)`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream)
{
    return mix64(mix64(master) ^ (0xd1b54a32d192ed03ULL * (stream + 1)));
}

/// Deterministic generator. The double conversion is done by hand so results
/// do not depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 engine_;
};

/// Stateless uniform in [0, 1) keyed on the bit pattern of a double.
inline double hash_unit(double key)
{
    return static_cast<double>(mix64(std::bit_cast<std::uint64_t>(key)) >> 11) * 0x1.0p-53;
}

} // namespace ergolab
