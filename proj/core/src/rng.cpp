#include "pdmpnet/rng.hpp"

#include <cmath>

namespace pdmpnet {

namespace {
std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x70646d70u};
    return std::mt19937_64(seq);
}
}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_(stream_id), gen_(make_engine(seed, stream_id)) {}

int RngStream::index(int n) {
    return static_cast<int>(uniform() * n) % n;
}

double RngStream::exponential(double rate) {
    return -std::log1p(-uniform()) / rate;
}

double RngStream::normal() {
    // Box-Muller on two fresh uniforms (no cached second variate, so the
    // stream position depends only on the number of calls).
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace pdmpnet
