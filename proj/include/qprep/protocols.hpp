#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "qprep/measurement.hpp"
#include "qprep/qubit_state.hpp"
#include "qprep/rng.hpp"

namespace qprep {

// Target direction on the Bloch sphere plus the success radius delta
// (angular distance at which a run counts as converged).
struct TargetSpec {
    TargetSpec(double theta, double phi, double delta = 1e-6);

    double theta_t;
    double phi_t;
    double delta;

    PureState state() const;
};

// One measurement actually performed during a run, with enough information
// to replay it deterministically.
struct RecordEntry {
    enum class Kind { Axis, Sic };

    Kind kind;
    BlochVector axis;  // meaningful for Kind::Axis only
    double epsilon;
    std::size_t outcome;
    double probability;  // Born probability the outcome had when it occurred
};

using MeasurementRecord = std::vector<RecordEntry>;

struct ProtocolResult {
    bool success = false;
    long steps = 0;
    PureState final_state = PureState::up();
    MeasurementRecord record;               // empty if keep_record is off
    std::vector<BlochVector> trajectory;    // states after each step, if kept
};

// What a protocol run should retain besides the outcome. Ensemble drivers
// switch the record off to keep memory flat.
struct RunOptions {
    bool keep_record = true;
    bool keep_trajectory = false;
};

// Reapplies a record step by step; bit-identical to the original run's
// final state because sampling and replay share one update path.
PureState replay_record(const PureState& initial, const MeasurementRecord& record);

// Walks |initial> to |target> through n_steps projective measurements onto
// interpolated states along the connecting geodesic. Succeeds only if every
// outcome is the favorable one; the first unfavorable outcome aborts the
// run. Requires overlap2(initial, target) < 1e-12 (orthogonal endpoints);
// success probability is cos(pi/(2 n))^(2 n).
ProtocolResult guided_sequence(const PureState& initial, const PureState& target, int n_steps,
                               RngStream& rng, const RunOptions& options = {});

// Same walk for an arbitrary target: interpolates along the geodesic toward
// the target's projection orthogonal to |initial>. A target parallel to the
// initial state succeeds in zero steps.
ProtocolResult guided_sequence_toward(const PureState& initial, const PureState& target,
                                      int n_steps, RngStream& rng, const RunOptions& options = {});

// All-favorable-path probability of the guided walk: cos(alpha/n)^(2 n)
// with alpha the angle between the state vectors, arccos |<initial|target>|.
double guided_success_probability(const PureState& initial, const PureState& target, int n_steps);

// Three linearly independent measurement axes. `phase` and `polar` carry
// the tuned steps; `reset` provides the re-randomizing strong measurement
// and its +1 eigenstate is the protocol's starting point.
struct AxisTriple {
    BlochVector phase;
    BlochVector reset;
    BlochVector polar;

    static AxisTriple orthogonal();  // x, y, z
};

// Adaptive preparation using measurements along three fixed axes only.
// From a reset eigenstate, a tuned partial measurement along the phase (or
// reset) axis lands exactly on the launch point for the target's azimuth
// plane; a tuned polar measurement then lands exactly on the target.
// Unfavorable outcomes trigger a strong reset measurement and another
// attempt. Fails only if max_steps measurements pass without convergence.
ProtocolResult three_axis_prepare(const TargetSpec& target, const AxisTriple& axes,
                                  RngStream& rng, long max_steps = 1000,
                                  const RunOptions& options = {});
ProtocolResult three_axis_prepare(const TargetSpec& target, RngStream& rng,
                                  long max_steps = 1000, const RunOptions& options = {});

// Repeats one fixed-strength four-outcome tetrahedral measurement until the
// random walk it induces enters the target's delta-neighborhood. Requires
// strength strictly inside (0, 1): the projective walk hops between the
// four vertex states forever.
ProtocolResult sic_walk_prepare(const TargetSpec& target, MeasurementStrength strength,
                                RngStream& rng, long max_steps = 100000,
                                const PureState& initial = PureState::up(),
                                const RunOptions& options = {});

// Order-of-magnitude expected hitting time of the walk into a radius-delta
// neighborhood: the inverse fractional area 4 / delta^2.
double hitting_time_estimate(double delta);

class PlannerFailure : public std::runtime_error {
  public:
    explicit PlannerFailure(const std::string& what) : std::runtime_error(what) {}
};

// One step of a planned measurement sequence: perform the four-outcome
// tetrahedral measurement at this strength and post-select on the required
// outcome, which occurs with `probability` given all previous steps went
// as planned.
struct PlanStep {
    double epsilon;
    std::size_t outcome_index;
    std::string outcome_label;
    double probability;
};

// Shortest sequence (at most max_depth tetrahedral measurements) whose
// favorable branch carries |initial> to within 1e-6 rad of |target|.
// Strengths for intermediate hops are searched on a grid of the given
// resolution and refined by bisection; the final hop is solved in closed
// form. Among same-depth solutions the most probable branch wins.
// Identical endpoints yield an empty plan; throws PlannerFailure when no
// sequence within max_depth reaches the target.
std::vector<PlanStep> plan_sic_sequence(const PureState& initial, const PureState& target,
                                        int max_depth = 3, double grid = 1e-3);

}  // namespace qprep
