#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace klnmf {

/// Seedable random source with fixed, engine-level transforms so that a
/// seed produces the same stream on every platform (the standard library's
/// distribution objects are implementation-defined and are avoided here).
/// Engine: mt19937_64.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t bits() { return gen_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform01() {
        return static_cast<double>(bits() >> 11) * 0x1.0p-53;
    }

    /// Uniform in (0, 1); exact zeros are redrawn.
    double uniform_pos() {
        double u = uniform01();
        while (u == 0.0) u = uniform01();
        return u;
    }

    /// Uniform integer in [0, n) by rejection.
    std::uint64_t index(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("rng: index(0)");
        const std::uint64_t bound = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x = bits();
        while (x >= bound) x = bits();
        return x % n;
    }

    /// Standard normal via the polar method.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    /// Gamma(alpha, 1) via Marsaglia-Tsang; alpha = 1 reduces to the
    /// exponential shortcut.
    double gamma(double alpha) {
        if (alpha <= 0.0) throw std::invalid_argument("rng: gamma(alpha<=0)");
        if (alpha == 1.0) return -std::log(uniform_pos());
        if (alpha < 1.0)
            return gamma(alpha + 1.0) *
                   std::pow(uniform_pos(), 1.0 / alpha);
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_pos();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return d * v;
        }
    }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace klnmf
