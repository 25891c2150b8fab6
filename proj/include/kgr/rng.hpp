#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace kgr {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// mt19937_64 with hand-rolled distributions so that streams are identical
// across standard libraries, not just across runs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : mix_(splitmix64(seed)), eng_(mix_) {}

    // Independent substream, e.g. one per walk or per search trial.
    Rng derive(std::uint64_t stream) const {
        Rng r(0);
        r.mix_ = splitmix64(mix_ ^ splitmix64(stream));
        r.eng_.seed(r.mix_);
        return r;
    }

    std::uint64_t next_u64() { return eng_(); }

    // Unbiased integer in [0, bound).
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % bound;
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Box-Muller, spare discarded to keep the state a pure function of draw count.
    double normal() {
        double u1;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[next_below(i)]);
        }
    }

private:
    std::uint64_t mix_;
    std::mt19937_64 eng_;
};

}  // namespace kgr
