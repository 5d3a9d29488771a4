#pragma once

#include <array>
#include <cstdint>
#include <variant>
#include <vector>

#include "qprep/protocols.hpp"

namespace qprep {

struct GuidedConfig {
    PureState initial = PureState::up();
    PureState target = PureState::down();
    int n_steps = 10;
};

struct ThreeAxisConfig {
    TargetSpec target;
    AxisTriple axes = AxisTriple::orthogonal();
    long max_steps = 1000;
};

struct SicWalkConfig {
    TargetSpec target;
    double epsilon = 0.5;
    long max_steps = 100000;
    PureState initial = PureState::up();
};

// A batch of independent protocol runs. Every trajectory draws from its own
// counter-seeded stream, so the result is a pure function of the config:
// thread count and scheduling cannot change a single bit of it.
struct EnsembleConfig {
    std::variant<GuidedConfig, ThreeAxisConfig, SicWalkConfig> protocol;
    long trajectories = 10000;
    std::uint64_t master_seed = 1;
    int threads = 0;  // 0 = hardware concurrency
};

struct TrajectorySummary {
    bool success;
    long steps;
    double final_theta;
    double final_phi;
};

// Step-count distribution of the successful runs.
struct Histogram {
    std::vector<long> counts;  // counts[s] = successes that took exactly s steps
    long total_runs = 0;
    long successes = 0;

    double success_rate() const;
    double success_rate_se() const;  // binomial standard error
    double mean_steps() const;       // over successes, computed from counts
    // fraction of all runs that succeeded in at most the given step count
    double cumulative_rate(long steps_inclusive) const;
};

struct EnsembleResult {
    Histogram histogram;
    std::vector<TrajectorySummary> summaries;  // trajectory order, not schedule order
};

EnsembleResult run_ensemble(const EnsembleConfig& config);

// Lambert cylindrical equal-area projection: u is the azimuth, v = cos(theta).
// Equal sphere areas map to equal (u, v) areas, so uniform occupancy of the
// grid below is the right null hypothesis for an ergodic walk.
struct EqualAreaPoint {
    double u;
    double v;
};

EqualAreaPoint project_equal_area(double theta, double phi);

// 8 azimuth columns x 4 latitude rows.
constexpr int kEqualAreaCells = 32;
int equal_area_cell(const EqualAreaPoint& p);

struct SpherePoint {
    long step;
    double theta;
    double phi;
    double u;
    double v;
};

// One long tetrahedral-measurement walk with no target, recording the state
// every sample_every steps once burn_in steps have passed. Strength 1 is
// allowed here: the walk then hops among the four vertex states.
std::vector<SpherePoint> steady_state_samples(MeasurementStrength strength, long total_steps,
                                              long sample_every, std::uint64_t seed,
                                              long burn_in = 0,
                                              const PureState& initial = PureState::up());

// One walk ensemble for the independence check below.
struct WalkSpec {
    double epsilon;
    std::uint64_t seed;
    PureState initial = PureState::up();
};

struct IndependenceCheck {
    double chi2 = 0.0;
    int dof = 0;
    double threshold = 0.0;  // dof + 3 sqrt(2 dof), a 3-sigma limit
    bool consistent = false;
    std::array<long, kEqualAreaCells> counts_a{};
    std::array<long, kEqualAreaCells> counts_b{};
};

// Compares the long-run sphere occupancy of two walks via a two-sample
// chi-square over the equal-area grid. Walks of equal strength started from
// different states should pass; walks of different strength should not.
IndependenceCheck initial_state_independence_check(const WalkSpec& a, const WalkSpec& b,
                                                   long n_samples = 4000, long sample_every = 25,
                                                   long burn_in = 1000);

// Haar-uniform random pure state.
PureState random_state(RngStream& rng);

}  // namespace qprep
