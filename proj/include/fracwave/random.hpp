#pragma once

// Counter-based SplitMix64 streams.  A stream is keyed by (seed, index) so that
// parallel work items draw the same numbers regardless of scheduling.

#include <cstdint>

namespace fracwave {

class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t index);

    std::uint64_t next_u64();
    /// Uniform in (0, 1).
    double uniform();
    /// Standard normal by Box-Muller.
    double normal();

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace fracwave
