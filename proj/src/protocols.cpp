#include "qprep/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qprep {

namespace {

// Euclidean tolerance for recognizing the handful of special points the
// three-axis walk lands on. Landings are exact up to roundoff (~1e-15), so
// this has nine orders of magnitude of slack.
constexpr double kLandingTol = 1e-9;

struct StepRunner {
    PureState state;
    long steps = 0;
    MeasurementRecord record;
    std::vector<BlochVector> trajectory;
    RngStream* rng;
    RunOptions options;

    StepRunner(const PureState& initial, RngStream& r, const RunOptions& opts)
        : state(initial), rng(&r), options(opts) {}

    Outcome step(const Povm& povm, RecordEntry::Kind kind, const BlochVector& axis, double eps) {
        Outcome out = apply(povm, state, rng->next_double());
        state = out.post_state;
        steps++;
        if (options.keep_record) {
            record.push_back({kind, axis, eps, out.index, out.probability});
        }
        if (options.keep_trajectory) {
            trajectory.push_back(to_bloch(state));
        }
        return out;
    }

    Outcome axis_step(const BlochVector& axis, double eps) {
        return step(axis_measurement(axis, MeasurementStrength(eps)), RecordEntry::Kind::Axis,
                    axis, eps);
    }

    ProtocolResult finish(bool success) {
        ProtocolResult result;
        result.success = success;
        result.steps = steps;
        result.final_state = state;
        result.record = std::move(record);
        result.trajectory = std::move(trajectory);
        return result;
    }
};

// Strength that moves the axis component from c to t in one favorable
// outcome: solves (c + s*eps) / (1 + s*eps*c) = t with s the outcome sign.
// Always lands in [0, 1] for |c|, |t| <= 1.
double tuned_strength(double c, double t) {
    double eps = std::abs(t - c) / (1.0 - c * t);
    return std::clamp(eps, 0.0, 1.0);
}

struct Frame {
    BlochVector phase, reset, polar;  // the three axes, unit length
    BlochVector nu;                   // unit normal of span(phase, reset)
    BlochVector w_phase;              // in-plane unit orthogonal to phase
    BlochVector w_reset;              // in-plane unit orthogonal to reset
    PureState reset_state;            // +1 eigenstate of the reset axis

    explicit Frame(const AxisTriple& axes)
        : phase(axes.phase),
          reset(axes.reset),
          polar(axes.polar),
          nu(cross(axes.phase, axes.reset)),
          w_phase{},
          w_reset{},
          reset_state(PureState::up()) {
        for (const BlochVector* a : {&axes.phase, &axes.reset, &axes.polar}) {
            if (std::isnan(a->x) || std::isnan(a->y) || std::isnan(a->z) ||
                std::abs(a->norm() - 1.0) > 1e-9) {
                throw std::invalid_argument("measurement axes must be unit Bloch vectors");
            }
        }
        if (std::abs(dot(axes.phase, cross(axes.reset, axes.polar))) < 1e-9) {
            throw std::invalid_argument("measurement axes must be linearly independent");
        }
        nu = nu.normalized();
        w_phase = cross(nu, phase);
        w_reset = cross(nu, reset);
        reset_state = from_angles(reset.theta(), reset.phi());
    }
};

enum class Landing { AtPoint, Opposite, Elsewhere };

Landing classify(const BlochVector& r, const BlochVector& point) {
    if (distance(r, point) < kLandingTol) {
        return Landing::AtPoint;
    }
    if (distance(r, -1.0 * point) < kLandingTol) {
        return Landing::Opposite;
    }
    return Landing::Elsewhere;
}

}  // namespace

TargetSpec::TargetSpec(double theta, double phi, double delta_in)
    : theta_t(theta), phi_t(0.0), delta(delta_in) {
    if (std::isnan(theta) || theta < 0.0 || theta > std::numbers::pi) {
        throw std::invalid_argument("target polar angle must lie in [0, pi]");
    }
    if (!(delta > 0.0 && delta <= std::numbers::pi)) {
        throw std::invalid_argument("convergence radius must lie in (0, pi]");
    }
    phi_t = wrap_angle(phi);
}

PureState TargetSpec::state() const {
    return from_angles(theta_t, phi_t);
}

PureState replay_record(const PureState& initial, const MeasurementRecord& record) {
    PureState state = initial;
    for (const RecordEntry& entry : record) {
        Povm povm = (entry.kind == RecordEntry::Kind::Axis)
                        ? axis_measurement(entry.axis, MeasurementStrength(entry.epsilon))
                        : sic_povm(MeasurementStrength(entry.epsilon));
        state = apply_outcome(povm, state, entry.outcome).post_state;
    }
    return state;
}

namespace {

ProtocolResult guided_core(const PureState& initial, const PureState& target, int n_steps,
                           RngStream& rng, const RunOptions& options) {
    if (n_steps < 1) {
        throw std::invalid_argument("guided walk needs at least one step");
    }
    StepRunner run(initial, rng, options);

    auto ia = initial.amplitudes();
    auto ta = target.amplitudes();
    cplx inner = std::conj(ia[0]) * ta[0] + std::conj(ia[1]) * ta[1];
    double c = std::min(std::abs(inner), 1.0);
    double alpha = std::acos(c);
    if (alpha < 1e-9) {
        return run.finish(true);  // already there
    }

    // Phase the target so <initial|target> is real and non-negative, then
    // split off the component orthogonal to the initial state. The walk
    // interpolates between these two raw amplitude vectors; global phase is
    // irrelevant to the projectors built from them.
    cplx phase = (c > 0.0) ? std::conj(inner) / std::abs(inner) : cplx(1.0);
    std::array<cplx, 2> perp = {phase * ta[0] - c * ia[0], phase * ta[1] - c * ia[1]};
    double pnorm = std::sqrt(std::norm(perp[0]) + std::norm(perp[1]));
    perp = {perp[0] / pnorm, perp[1] / pnorm};

    for (int i = 1; i <= n_steps; i++) {
        double angle = alpha * static_cast<double>(i) / static_cast<double>(n_steps);
        double cs = std::cos(angle);
        double sn = std::sin(angle);
        PureState waypoint(cs * ia[0] + sn * perp[0], cs * ia[1] + sn * perp[1]);
        Outcome out = run.axis_step(to_bloch(waypoint), 1.0);
        if (out.index != 0) {
            return run.finish(false);  // knocked off the geodesic; run is lost
        }
    }
    return run.finish(true);
}

}  // namespace

ProtocolResult guided_sequence(const PureState& initial, const PureState& target, int n_steps,
                               RngStream& rng, const RunOptions& options) {
    if (overlap2(initial, target) >= 1e-12) {
        throw std::invalid_argument("guided walk endpoints must be orthogonal");
    }
    return guided_core(initial, target, n_steps, rng, options);
}

ProtocolResult guided_sequence_toward(const PureState& initial, const PureState& target,
                                      int n_steps, RngStream& rng, const RunOptions& options) {
    return guided_core(initial, target, n_steps, rng, options);
}

double guided_success_probability(const PureState& initial, const PureState& target, int n_steps) {
    if (n_steps < 1) {
        throw std::invalid_argument("guided walk needs at least one step");
    }
    double alpha = std::acos(std::min(std::sqrt(overlap2(initial, target)), 1.0));
    return std::pow(std::cos(alpha / n_steps), 2.0 * n_steps);
}

AxisTriple AxisTriple::orthogonal() {
    return {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
}

ProtocolResult three_axis_prepare(const TargetSpec& target, const AxisTriple& axes,
                                  RngStream& rng, long max_steps, const RunOptions& options) {
    Frame frame(axes);
    PureState target_state = target.state();
    BlochVector t_dir = to_bloch(target_state);

    // A target on the polar axis needs no phase stage at all; everything
    // else gets a launch point: the unit vector in span(phase, reset) lying
    // in the target's half-plane around the polar axis. Landing there fixes
    // the azimuth, and one tuned polar measurement then fixes the latitude.
    bool polar_target = cross(t_dir, frame.polar).norm() < kLandingTol;
    double t_polar = dot(t_dir, frame.polar);
    BlochVector launch{};
    if (!polar_target) {
        BlochVector transverse = (t_dir - t_polar * frame.polar).normalized();
        double a = dot(frame.polar, frame.nu);  // nonzero: axes are independent
        double b = dot(transverse, frame.nu);
        double s = (a >= 0.0) ? 1.0 : -1.0;
        launch = ((-s * b) * frame.polar + (s * a) * transverse).normalized();
    }

    StepRunner run(frame.reset_state, rng, options);
    while (true) {
        if (angular_distance(run.state, target_state) <= target.delta) {
            return run.finish(true);
        }
        if (run.steps >= max_steps) {
            return run.finish(false);
        }

        BlochVector r = to_bloch(run.state);
        if (polar_target) {
            if (distance(r, -1.0 * t_dir) < kLandingTol) {
                run.axis_step(frame.reset, 1.0);  // stuck on the wrong pole
            } else {
                run.axis_step(frame.polar, 1.0);
            }
            continue;
        }

        if (distance(r, launch) < kLandingTol) {
            // Latitude hop: favorable outcome lands exactly on the target.
            run.axis_step(frame.polar, tuned_strength(dot(r, frame.polar), t_polar));
            continue;
        }

        if (std::abs(dot(r, frame.nu)) < kLandingTol) {
            // Somewhere on the phase circle. Tuned hops toward the launch
            // point are only taken from axis eigenstates; the launch point
            // must lie on the reachable side of the measured axis.
            Landing at_reset = classify(r, frame.reset);
            Landing at_phase = classify(r, frame.phase);
            const bool at_reset_eigen = at_reset != Landing::Elsewhere;
            const bool at_phase_eigen = at_phase != Landing::Elsewhere;
            if (at_reset_eigen || at_phase_eigen) {
                const BlochVector& axis = at_reset_eigen ? frame.phase : frame.reset;
                const BlochVector& w = at_reset_eigen ? frame.w_phase : frame.w_reset;
                double launch_side = dot(launch, w);
                double state_side = dot(r, w);
                bool reachable = std::abs(launch_side) <= 1e-12 ||
                                 (launch_side > 0.0) == (state_side > 0.0);
                if (reachable) {
                    run.axis_step(axis, tuned_strength(dot(r, axis), dot(launch, axis)));
                } else if (at_reset_eigen) {
                    run.axis_step(frame.phase, 1.0);  // cross to a phase eigenstate first
                } else {
                    run.axis_step(frame.reset, 1.0);
                }
                continue;
            }
        }

        // Unfavorable landing: re-randomize with a strong reset measurement.
        run.axis_step(frame.reset, 1.0);
    }
}

ProtocolResult three_axis_prepare(const TargetSpec& target, RngStream& rng, long max_steps,
                                  const RunOptions& options) {
    return three_axis_prepare(target, AxisTriple::orthogonal(), rng, max_steps, options);
}

ProtocolResult sic_walk_prepare(const TargetSpec& target, MeasurementStrength strength,
                                RngStream& rng, long max_steps, const PureState& initial,
                                const RunOptions& options) {
    if (strength.value() <= 0.0 || strength.value() >= 1.0) {
        throw std::invalid_argument(
            "walk strength must lie strictly inside (0, 1): a projective walk only hops "
            "between the four vertex states and never converges elsewhere");
    }
    Povm povm = sic_povm(strength);
    PureState target_state = target.state();
    StepRunner run(initial, rng, options);
    while (true) {
        if (angular_distance(run.state, target_state) <= target.delta) {
            return run.finish(true);
        }
        if (run.steps >= max_steps) {
            return run.finish(false);
        }
        run.step(povm, RecordEntry::Kind::Sic, BlochVector{}, strength.value());
    }
}

double hitting_time_estimate(double delta) {
    if (!(delta > 0.0)) {
        throw std::invalid_argument("convergence radius must be positive");
    }
    return 4.0 / (delta * delta);
}

}  // namespace qprep
