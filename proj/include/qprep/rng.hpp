#pragma once

#include <cstdint>

namespace qprep {

// Counter-seeded SplitMix64 stream. Each Monte Carlo trajectory gets its own
// stream derived from (master seed, trajectory index), so results do not
// depend on how trajectories are scheduled across threads.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    static RngStream for_trajectory(std::uint64_t master_seed, std::uint64_t index);

    std::uint64_t next_u64();

    // Uniform double in [0, 1), 53-bit resolution.
    double next_double();

  private:
    std::uint64_t state_;
};

}  // namespace qprep
