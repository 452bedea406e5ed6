#pragma once
#include <cmath>
#include <cstdint>

namespace spincell {

// splitmix64: tiny, seedable, stable across platforms. Used everywhere so
// result files are byte-identical regardless of stdlib or thread count.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in (0,1)
    double next_double() {
        double u;
        do {
            u = (next_u64() >> 11) * 0x1.0p-53;
        } while (u <= 0.0);
        return u;
    }

    // standard normal, Box-Muller
    double next_gauss() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double(), u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // stateless derivation for per-point seeds: order of evaluation never matters
    static std::uint64_t derive(std::uint64_t master, std::uint64_t point, std::uint64_t repeat) {
        Rng r(master ^ (0x9E3779B97F4A7C15ull * (point + 1)) ^ (0xC2B2AE3D27D4EB4Full * (repeat + 1)));
        return r.next_u64();
    }

  private:
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace spincell
