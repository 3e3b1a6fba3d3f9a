#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "noelab/spacetime.hpp"

namespace noelab {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Deterministic stream: mt19937_64 is pinned by the standard, and uniforms
// are extracted manually so outputs are bit-identical across platforms.
struct RngStream {
    std::mt19937_64 eng;

    explicit RngStream(std::uint64_t seed) : eng(seed) {}

    // Independent substream seeds derived from a master seed.
    static std::uint64_t derive(std::uint64_t master, std::uint64_t index) {
        return splitmix64(master ^ splitmix64(index + 0x51ED2701));
    }

    double uniform() { return std::ldexp(static_cast<double>(eng() >> 11), -53); }  // [0,1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int n) { return static_cast<int>(eng() % static_cast<std::uint64_t>(n)); }
};

// First four dimensions of the Sobol sequence (Joe-Kuo direction numbers),
// Gray-code order, 32-bit precision.
class Sobol4 {
  public:
    Sobol4() {
        // dim 0: van der Corput
        for (int k = 0; k < kBits; ++k) v_[0][k] = 1u << (31 - k);
        init_dim(1, 1, 0, {1});
        init_dim(2, 2, 1, {1, 3});
        init_dim(3, 3, 1, {1, 3, 1});
    }

    Vec4 next() {
        if (count_ > 0) {
            unsigned c = 0;
            std::uint32_t n = count_ - 1;
            while (n & 1u) {
                n >>= 1;
                ++c;
            }
            for (int d = 0; d < 4; ++d) x_[d] ^= v_[d][c];
        }
        ++count_;
        Vec4 out;
        for (int d = 0; d < 4; ++d) out[d] = std::ldexp(static_cast<double>(x_[d]), -32);
        return out;
    }

  private:
    static constexpr int kBits = 32;

    void init_dim(int d, int s, std::uint32_t a, std::initializer_list<std::uint32_t> m) {
        int i = 0;
        for (std::uint32_t mv : m) {
            v_[d][i] = mv << (31 - i);
            ++i;
        }
        for (int k = s; k < kBits; ++k) {
            std::uint32_t val = v_[d][k - s] ^ (v_[d][k - s] >> s);
            for (int j = 1; j < s; ++j)
                if ((a >> (s - 1 - j)) & 1u) val ^= v_[d][k - j];
            v_[d][k] = val;
        }
    }

    std::uint32_t v_[4][kBits] = {};
    std::uint32_t x_[4] = {};
    std::uint32_t count_ = 0;
};

// Axis-aligned sampling box of events around a center.
struct SampleBox {
    Vec4 center = Vec4::Zero();
    double half_width = 10.0;

    Vec4 map(const Vec4& unit) const {
        Vec4 out;
        for (int i = 0; i < 4; ++i) out[i] = center[i] + half_width * (2.0 * unit[i] - 1.0);
        return out;
    }
};

// Future-like direction with a comfortable margin from the cone.
inline Vec4 sample_future_direction(RngStream& rng, ModelKind model) {
    Vec4 w;
    if (model == ModelKind::NonRelativistic) {
        w[0] = rng.uniform(0.5, 2.0);
        for (int i = 1; i < 4; ++i) w[i] = rng.uniform(-1.5, 1.5);
    } else {
        w[0] = rng.uniform(1.0, 2.0);
        for (int i = 1; i < 4; ++i) w[i] = rng.uniform(-0.45, 0.45) * w[0];
    }
    return w;
}

}  // namespace noelab
