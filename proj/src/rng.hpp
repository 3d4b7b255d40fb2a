#ifndef PLCSEC_RNG_HPP
#define PLCSEC_RNG_HPP

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>

namespace plcsec {

// SplitMix64 finalizer, used both to seed the generator and to derive
// independent stream seeds from (master seed, coordinate path).
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ with hand-rolled distributions. The C++ standard does not pin
// down distribution algorithms, and reproducibility of every ensemble is a
// hard requirement here, so nothing from <random> is used.
class Rng {
public:
    static Rng seeded(uint64_t seed) {
        Rng r;
        uint64_t s = seed;
        for (auto& w : r.state_) {
            s = mix64(s);
            w = s;
        }
        if ((r.state_[0] | r.state_[1] | r.state_[2] | r.state_[3]) == 0) r.state_[0] = 1;
        return r;
    }

    // Independent stream addressed by (master, path...). Streams with
    // different paths never collide in practice; generation across ensemble
    // indices relies on this for thread-count independence.
    static Rng stream(uint64_t master, std::initializer_list<uint64_t> path) {
        uint64_t s = mix64(master ^ 0x9d5f3c1ab4e02d67ULL);
        for (uint64_t p : path) s = mix64(s ^ mix64(p ^ 0xc2b2ae3d27d4eb4fULL));
        return seeded(s);
    }

    uint64_t next_u64() {
        uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + uniform01() * (b - a); }

    int uniform_int(int lo, int hi) {
        if (hi < lo) throw std::invalid_argument("uniform_int: hi < lo");
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(next_u64() % span);
    }

    // Box-Muller; one fresh pair of uniforms per sample.
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Circularly-symmetric complex Gaussian with E|z|^2 = 1.
    std::complex<double> complex_normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-std::log(u1));
        return {r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
    }

    // Truncated normal on [lo, hi] by rejection. Callers keep the bounds
    // within a few sigma of the mean, so the loop terminates quickly.
    double truncated_normal(double mean, double sd, double lo, double hi) {
        if (!(hi >= lo)) throw std::invalid_argument("truncated_normal: hi < lo");
        if (sd <= 0.0) return std::min(hi, std::max(lo, mean));
        for (int i = 0; i < 100000; ++i) {
            double x = normal(mean, sd);
            if (x >= lo && x <= hi) return x;
        }
        throw std::runtime_error("truncated_normal: acceptance region too small");
    }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<uint64_t, 4> state_{};
};

} // namespace plcsec

#endif
