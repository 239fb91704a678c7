#ifndef RCRTE_RNG_HPP
#define RCRTE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace rcrte {

// Deterministic random source. The engine (mt19937_64) is fully specified by
// the standard and all variate transforms are implemented here, so a given
// seed yields the same stream on every platform. Library distributions are
// avoided on purpose: their sequences are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform() < p; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Exponential with given rate; guards against log(0).
    double exponential(double rate = 1.0) {
        double u = uniform();
        if (u <= 0.0) u = 0x1.0p-53;
        return -std::log(u) / rate;
    }

    // Standard normal via the Marsaglia polar method (second value cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Gamma(shape, rate) by Marsaglia-Tsang squeeze; shape < 1 handled by
    // the boosting identity Ga(a) = Ga(a+1) * U^{1/a}.
    double gamma(double shape, double rate) {
        if (shape < 1.0) {
            const double u = std::max(uniform(), 0x1.0p-53);
            return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return d * v / rate;
        }
    }

    // Derives an independent stream seed from (base, index); used for
    // counter-based per-unit / per-path seeding.
    static std::uint64_t derive(std::uint64_t base, std::uint64_t index) {
        std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (index + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace rcrte

#endif
