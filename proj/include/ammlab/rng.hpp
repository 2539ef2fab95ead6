#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace amm {

// Philox4x32-10 counter-based generator. Pure integer state, so streams are
// reproducible across platforms and sub-streams (stream id in the high
// counter words) are independent by construction.
class Philox {
public:
    explicit Philox(std::uint64_t seed, std::uint64_t stream = 0)
        : key_{static_cast<std::uint32_t>(seed),
               static_cast<std::uint32_t>(seed >> 32)},
          stream_lo_(static_cast<std::uint32_t>(stream)),
          stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

    // uniform in (0,1), 53-bit resolution
    double uniform() {
        if (buffered_) {
            buffered_ = false;
            return to_unit(buffer_);
        }
        const auto r = block(counter_++);
        buffer_ = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
        buffered_ = true;
        return to_unit((static_cast<std::uint64_t>(r[0]) << 32) | r[1]);
    }

    // standard normal via Box-Muller (pair cached)
    double normal() {
        if (have_normal_) {
            have_normal_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_normal_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint32_t mulhi(std::uint32_t a, std::uint32_t b) {
        return static_cast<std::uint32_t>(
            (static_cast<std::uint64_t>(a) * b) >> 32);
    }

    std::array<std::uint32_t, 4> block(std::uint64_t n) const {
        std::array<std::uint32_t, 4> c{static_cast<std::uint32_t>(n),
                                       static_cast<std::uint32_t>(n >> 32),
                                       stream_lo_, stream_hi_};
        std::uint32_t k0 = key_[0], k1 = key_[1];
        for (int round = 0; round < 10; ++round) {
            const std::uint32_t lo0 = 0xD2511F53u * c[0];
            const std::uint32_t hi0 = mulhi(0xD2511F53u, c[0]);
            const std::uint32_t lo1 = 0xCD9E8D57u * c[2];
            const std::uint32_t hi1 = mulhi(0xCD9E8D57u, c[2]);
            c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        return c;
    }

    static double to_unit(std::uint64_t v) {
        return (static_cast<double>(v >> 11) + 0.5) * 0x1.0p-53;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint32_t stream_lo_, stream_hi_;
    std::uint64_t counter_ = 0;
    std::uint64_t buffer_ = 0;
    bool buffered_ = false;
    double spare_ = 0.0;
    bool have_normal_ = false;
};

} // namespace amm
