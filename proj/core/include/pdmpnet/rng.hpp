#pragma once

#include <cstdint>
#include <random>

namespace pdmpnet {

/// Reproducible random stream identified by (seed, stream_id).  Built on
/// std::mt19937_64 seeded through std::seed_seq, both of which have
/// implementation-independent output; floating-point draws are derived from
/// raw 64-bit words here so results are identical across standard libraries.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    std::uint64_t next_u64() { return gen_(); }
    /// Uniform on [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    int index(int n);
    /// Exponential variate with the given rate (> 0).
    double exponential(double rate);
    double normal();

    /// Callable returning uniform() draws.
    auto uniform_fn() {
        return [this] { return uniform(); };
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 gen_;
};

}  // namespace pdmpnet
