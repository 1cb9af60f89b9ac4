#include "har/rng.hpp"

#include <cmath>

#include "har/errors.hpp"

namespace har {

namespace {

// splitmix64 finalizer; good avalanche for seed mixing.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_bytes(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

RngState RngState::derive(std::uint64_t base_seed, std::string_view stream, std::uint64_t index) {
    std::uint64_t s = mix64(base_seed ^ hash_bytes(stream));
    s = mix64(s ^ index);
    return RngState(s);
}

std::uint64_t RngState::uniform_index(std::uint64_t n) {
    if (n == 0) throw ValidationError("uniform_index: n must be >= 1");
    const std::uint64_t bound = n * ((~std::uint64_t{0}) / n);  // largest multiple of n
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= bound);
    return x % n;
}

double RngState::normal(double mean, double stddev) {
    // u1 in (0, 1] so the log is always finite.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * radius * std::cos(2.0 * M_PI * u2);
}

void RngState::fill_uniform(Tensor& t, double lo, double hi) {
    for (double& v : t.values()) v = uniform(lo, hi);
}

void RngState::fill_normal(Tensor& t, double mean, double stddev) {
    for (double& v : t.values()) v = normal(mean, stddev);
}

}  // namespace har
