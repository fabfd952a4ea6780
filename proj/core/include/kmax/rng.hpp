#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace kmax {

/// splitmix64 finalizer; bijective 64-bit mix used for stream-key derivation.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives a child stream key from a parent key and a salt. All parallel
/// substreams are preassigned via this map, so results never depend on
/// scheduling or worker count.
constexpr std::uint64_t derive_stream(std::uint64_t key, std::uint64_t salt) noexcept {
    return mix64(key ^ mix64(salt ^ 0xd1b54a32d192ed03ULL));
}

/// FNV-1a hash of a string, used to fold scenario ids into stream keys.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Purpose salts, one per sampling consumer. Keeping them distinct guarantees
// estimators sharing a sampler never reuse draws.
inline constexpr std::uint64_t kSaltSample = 0x01;
inline constexpr std::uint64_t kSaltCoupling = 0x02;
inline constexpr std::uint64_t kSaltSupInterval = 0x03;
inline constexpr std::uint64_t kSaltEMaxNorm = 0x04;
inline constexpr std::uint64_t kSaltWMinVar = 0x05;
inline constexpr std::uint64_t kSaltDiagnostics = 0x06;
inline constexpr std::uint64_t kSaltKfwer = 0x07;
inline constexpr std::uint64_t kSaltDirectQuantile = 0x08;

/// Seeded random stream: mt19937_64 plus a Box-Muller normal generator.
///
/// The engine and the normal method are fixed so that a (key, call sequence)
/// pair yields bit-identical output across runs; report metadata records them
/// as "mt19937_64" / "box_muller".
class RngStream {
public:
    explicit RngStream(std::uint64_t key) : eng_(mix64(key ^ 0xa0761d6478bd642fULL)) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform draw in (0, 1]; never returns 0 so log() stays finite.
    double uniform01() {
        return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the paired value is cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    /// Uniform integer in [0, n); exact via rejection sampling.
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t rem = (max % n + 1) % n;
        const std::uint64_t limit = max - rem;
        std::uint64_t x = eng_();
        while (x > limit) x = eng_();
        return x % n;
    }

private:
    std::mt19937_64 eng_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace kmax
