#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace oca::detail {

// Seeded generator with a fixed bit-to-double mapping so that streams are
// reproducible across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // (0, 1)
    double uniform_open() {
        double u = uniform();
        return u > 0.0 ? u : 0x1.0p-53;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // [0, bound)
    std::uint64_t integer(std::uint64_t bound) { return gen_() % bound; }

    std::int64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean < 60.0) {
            const double limit = std::exp(-mean);
            std::int64_t k = 0;
            double p = 1.0;
            do {
                ++k;
                p *= uniform_open();
            } while (p > limit);
            return k - 1;
        }
        const double draw = mean + std::sqrt(mean) * normal();
        return draw > 0.0 ? static_cast<std::int64_t>(std::llround(draw)) : 0;
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// splitmix64; used to derive independent sub-stream seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace oca::detail
