#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "har/tensor.hpp"

namespace har {

/// Seeded random source with a counted draw sequence.
///
/// All distributions are built on top of the raw mt19937_64 output stream,
/// so identical seeds and call sequences produce identical draws on every
/// platform (the standard pins the engine's output but not the library
/// distributions, hence the hand-rolled transforms here).
class RngState {
public:
    static constexpr const char* kAlgorithm = "mt19937_64/u53/box-muller";

    explicit RngState(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    /// Independent stream derived from a base seed, a stream label, and an
    /// index. Used for per-generation schedules where streams must not
    /// depend on how many draws earlier generations consumed.
    static RngState derive(std::uint64_t base_seed, std::string_view stream, std::uint64_t index);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t draw_count() const { return counter_; }

    std::uint64_t next_u64() {
        ++counter_;
        return engine_();
    }

    /// Uniform double in [0, 1), 53 significant bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), unbiased (rejection sampling). n >= 1.
    std::uint64_t uniform_index(std::uint64_t n);

    bool bernoulli(double p) { return uniform() < p; }

    /// Gaussian draw via Box-Muller; consumes exactly two raw draws.
    double normal(double mean, double stddev);

    void fill_uniform(Tensor& t, double lo, double hi);
    void fill_normal(Tensor& t, double mean, double stddev);

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace har
