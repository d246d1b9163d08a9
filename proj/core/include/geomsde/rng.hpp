#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace geomsde {

// Counter-based randomness. Every draw is a pure function of a 64-bit key
// chain, so any replica / tree node / step can be generated out of order and
// results do not depend on worker scheduling.

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix2(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2)) ^ splitmix64(b));
}

// uniform in (0,1]; never returns 0 so log() is safe
inline double u64_to_unit(std::uint64_t x) {
    return (static_cast<double>(x >> 11) + 1.0) * (1.0 / 9007199254740992.0);
}

} // namespace detail

// Stateless keyed gaussian: Box-Muller over two hashed uniforms.
inline double keyed_gaussian(std::uint64_t key) {
    const double u1 = detail::u64_to_unit(detail::splitmix64(key));
    const double u2 = detail::u64_to_unit(detail::splitmix64(key ^ 0xd1b54a32d192ed03ULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                std::uint64_t c = 0) {
    return detail::mix2(detail::mix2(detail::mix2(seed, a), b), c);
}

// Sequential stream (xoshiro256++), seeded from a derived key.
class RngStream {
public:
    explicit RngStream(std::uint64_t key) {
        std::uint64_t s = key;
        for (auto& w : state_) {
            s = detail::splitmix64(s + 0x9e3779b97f4a7c15ULL);
            w = s;
        }
        spare_valid_ = false;
    }

    static RngStream substream(std::uint64_t seed, std::uint64_t replica, std::uint64_t tag = 0) {
        return RngStream(derive_key(seed, replica, tag));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in (0,1]
    double uniform() { return detail::u64_to_unit(next_u64()); }

    double gaussian() {
        if (spare_valid_) {
            spare_valid_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        spare_valid_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    Eigen::VectorXd gaussian_vector(int d) {
        Eigen::VectorXd v(d);
        for (int i = 0; i < d; ++i) v[i] = gaussian();
        return v;
    }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool spare_valid_ = false;
};

} // namespace geomsde
