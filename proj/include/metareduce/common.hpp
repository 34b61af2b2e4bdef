#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace metareduce {

// Raised for malformed user input: bad files, bad labels, bad flag values.
// The CLI maps it to exit code 1; everything else is an internal fault (2).
class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a statistic is mathematically undefined for the given data
// (constant vectors, max == min, sample too small to test).
class degenerate_input : public std::runtime_error {
public:
    explicit degenerate_input(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Deterministic RNG helpers. std::uniform_real_distribution et al. are
// implementation-defined, so simulation code uses these instead; outputs are
// reproducible for a given seed on any platform.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// xoshiro-free minimal engine: splitmix64 stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() { return splitmix64(state_); }

    // Uniform double in [0, 1).
    double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    // Standard normal via Box-Muller (two draws per call, no cached state).
    double normal() {
        double u1 = u01();
        double u2 = u01();
        while (u1 <= 0.0) u1 = u01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

private:
    std::uint64_t state_;
};

// Mixes string/int keys into a per-cell seed for simulation runs.
inline std::uint64_t mix_seed(std::uint64_t master, const std::string& a, const std::string& b,
                              std::uint64_t n) {
    std::uint64_t s = master ^ (fnv1a(a) * 0x9e3779b97f4a7c15ull) ^ (fnv1a(b) << 1) ^ (n * 0xda942042e4dd58b5ull);
    return splitmix64(s);
}

// ---------------------------------------------------------------------------
// Number formatting for reports. %.17g round-trips doubles exactly (used for
// record serialization); %.12g keeps derived reports readable.
// ---------------------------------------------------------------------------

std::string format_exact(double x);
std::string format_report(double x);

// Parses a double, rejecting trailing garbage; returns nullopt on failure.
std::optional<double> parse_double(const std::string& s);
std::optional<long long> parse_int(const std::string& s);

}  // namespace metareduce
