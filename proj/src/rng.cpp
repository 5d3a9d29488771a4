#include "qprep/rng.hpp"

namespace qprep {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

}  // namespace

RngStream RngStream::for_trajectory(std::uint64_t master_seed, std::uint64_t index) {
    // Hash the pair so neighbouring trajectory indices land on uncorrelated
    // streams regardless of the master seed.
    return RngStream(mix(master_seed ^ mix(index + kGolden)));
}

std::uint64_t RngStream::next_u64() {
    state_ += kGolden;
    return mix(state_);
}

double RngStream::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

}  // namespace qprep
