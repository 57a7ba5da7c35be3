#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace affine
{
//---------------------------------------------------------------------------//
//! Philox4x32-10 block function.
inline std::array<std::uint32_t, 4>
philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key)
{
    constexpr std::uint32_t m0 = 0xD2511F53u;
    constexpr std::uint32_t m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u;
    constexpr std::uint32_t w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round)
    {
        std::uint64_t p0 = std::uint64_t(m0) * ctr[0];
        std::uint64_t p1 = std::uint64_t(m1) * ctr[2];
        auto hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
        auto hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += w0;
        key[1] += w1;
    }
    return ctr;
}

//! Independent noise sources; each gets its own counter lane.
enum class Stream : std::uint32_t
{
    W0 = 0,
    W1,
    W2,
    N,
    M,
    Mdiff,
    W1diff,
    W2diff,
    Nsmall,
    Msmall,
    Mdiffsmall,
    bootstrap,
    sampler_test,
};

//---------------------------------------------------------------------------//
/*!
 * Counter-based generator addressed by (seed, stream, path, step).
 *
 * The draw index is the fourth counter word, so the numbers consumed by one
 * (path, step, stream) cell never depend on how paths are spread over
 * threads.
 */
class CounterRng
{
  public:
    CounterRng(std::uint64_t seed,
               Stream stream,
               std::uint32_t path,
               std::uint32_t step)
        : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
          step_(step),
          path_(path),
          stream_(static_cast<std::uint32_t>(stream))
    {
    }

    std::uint32_t next_u32()
    {
        if (avail_ == 0)
        {
            block_ = philox4x32({index_++, step_, path_, stream_}, key_);
            avail_ = 4;
        }
        return block_[4 - avail_--];
    }

    //! Uniform on the open interval (0, 1).
    double uniform()
    {
        std::uint64_t hi = next_u32();
        std::uint64_t lo = next_u32();
        std::uint64_t bits = ((hi << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    //! Standard normal by Box-Muller; the second variate is cached.
    double normal()
    {
        if (has_spare_)
        {
            has_spare_ = false;
            return spare_;
        }
        double r = std::sqrt(-2.0 * std::log(uniform()));
        double t = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    //! Poisson by inversion; large means are split into chunks.
    std::uint64_t poisson(double mean)
    {
        if (!(mean > 0))
            return 0;
        std::uint64_t total = 0;
        while (mean > 0)
        {
            double chunk = std::min(mean, 500.0);
            mean -= chunk;
            double u = uniform();
            double p = std::exp(-chunk);
            double cdf = p;
            std::uint64_t k = 0;
            while (u > cdf && k < 100000)
            {
                ++k;
                p *= chunk / static_cast<double>(k);
                cdf += p;
                if (p == 0 && cdf < u)
                    break;
            }
            total += k;
        }
        return total;
    }

  private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t index_ = 0;
    std::uint32_t step_;
    std::uint32_t path_;
    std::uint32_t stream_;
    std::array<std::uint32_t, 4> block_{};
    int avail_ = 0;
    bool has_spare_ = false;
    double spare_ = 0;
};

}  // namespace affine
