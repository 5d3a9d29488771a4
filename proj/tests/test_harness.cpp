#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qprep/harness.hpp"

using namespace qprep;

namespace {

constexpr double kPi = std::numbers::pi;

bool summaries_identical(const std::vector<TrajectorySummary>& a,
                         const std::vector<TrajectorySummary>& b) {
    if (a.size() != b.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); i++) {
        if (a[i].success != b[i].success || a[i].steps != b[i].steps ||
            a[i].final_theta != b[i].final_theta || a[i].final_phi != b[i].final_phi) {
            return false;
        }
    }
    return true;
}

double min_vertex_distance(double theta, double phi) {
    BlochVector r = to_bloch(from_angles(theta, phi));
    double best = 10.0;
    for (const BlochVector& n : sic_directions()) {
        best = std::min(best, std::acos(std::clamp(dot(r, n), -1.0, 1.0)));
    }
    return best;
}

}  // namespace

TEST_CASE("rng streams are deterministic and trajectory-separated") {
    RngStream a(42);
    RngStream b(42);
    for (int i = 0; i < 100; i++) {
        CHECK(a.next_u64() == b.next_u64());
    }
    RngStream s1 = RngStream::for_trajectory(7, 1);
    RngStream s2 = RngStream::for_trajectory(7, 2);
    CHECK(s1.next_u64() != s2.next_u64());
    RngStream s3(99);
    for (int i = 0; i < 1000; i++) {
        double d = s3.next_double();
        CHECK(d >= 0.0);
        CHECK(d < 1.0);
    }
}

TEST_CASE("ensembles are reproducible and thread-count invariant") {
    EnsembleConfig config;
    config.protocol = ThreeAxisConfig{TargetSpec(kPi / 3.0, 1.1), AxisTriple::orthogonal(), 1000};
    config.trajectories = 4000;
    config.master_seed = 2718;

    config.threads = 1;
    EnsembleResult serial = run_ensemble(config);
    config.threads = 8;
    EnsembleResult parallel = run_ensemble(config);
    CHECK(summaries_identical(serial.summaries, parallel.summaries));
    CHECK(serial.histogram.counts == parallel.histogram.counts);

    EnsembleResult again = run_ensemble(config);
    CHECK(summaries_identical(parallel.summaries, again.summaries));
}

TEST_CASE("histogram bookkeeping is conserved and consistent") {
    EnsembleConfig config;
    config.protocol = SicWalkConfig{TargetSpec(kPi / 4.0, kPi / 4.0, 0.3), 0.5, 100000};
    config.trajectories = 2000;
    config.master_seed = 5;
    EnsembleResult result = run_ensemble(config);

    const Histogram& h = result.histogram;
    CHECK(h.total_runs == 2000);
    long counted = 0;
    double weighted = 0.0;
    for (std::size_t s = 0; s < h.counts.size(); s++) {
        counted += h.counts[s];
        weighted += static_cast<double>(s) * static_cast<double>(h.counts[s]);
    }
    CHECK(counted == h.successes);
    CHECK(std::abs(h.mean_steps() - weighted / static_cast<double>(h.successes)) < 1e-9);
    CHECK(h.cumulative_rate(static_cast<long>(h.counts.size())) ==
          doctest::Approx(h.success_rate()).epsilon(1e-12));
    CHECK(h.success_rate_se() ==
          doctest::Approx(std::sqrt(h.success_rate() * (1.0 - h.success_rate()) / 2000.0))
              .epsilon(1e-12));
}

TEST_CASE("guided ensembles track the analytic success curve") {
    EnsembleConfig config;
    config.protocol = GuidedConfig{PureState::up(), PureState::down(), 10};
    config.trajectories = 20000;
    config.master_seed = 31;
    EnsembleResult result = run_ensemble(config);
    double expected = guided_success_probability(PureState::up(), PureState::down(), 10);
    double se = std::sqrt(expected * (1.0 - expected) / 20000.0);
    CHECK(std::abs(result.histogram.success_rate() - expected) < 4.0 * se);
    // All successful runs take exactly ten steps.
    for (std::size_t s = 0; s < result.histogram.counts.size(); s++) {
        if (result.histogram.counts[s] > 0) {
            CHECK(s == 10);
        }
    }
}

TEST_CASE("a satisfied target yields an all-zero-step histogram") {
    EnsembleConfig config;
    config.protocol = ThreeAxisConfig{TargetSpec(kPi / 2.0, kPi / 2.0)};
    config.trajectories = 50;
    config.master_seed = 1;
    EnsembleResult result = run_ensemble(config);
    CHECK(result.histogram.successes == 50);
    REQUIRE(result.histogram.counts.size() == 1);
    CHECK(result.histogram.counts[0] == 50);
}

TEST_CASE("ensemble validation errors surface before any thread spawns") {
    EnsembleConfig config;
    config.protocol = SicWalkConfig{TargetSpec(1.0, 1.0, 0.3), 1.0};  // projective walk: invalid
    config.trajectories = 100;
    CHECK_THROWS_AS(run_ensemble(config), std::invalid_argument);
    config.protocol = SicWalkConfig{TargetSpec(1.0, 1.0, 0.3), 0.5};
    config.trajectories = 0;
    CHECK_THROWS_AS(run_ensemble(config), std::invalid_argument);
}

TEST_CASE("equal-area projection basics") {
    CHECK(project_equal_area(0.0, 0.5).v == doctest::Approx(1.0));
    CHECK(project_equal_area(kPi, 0.5).v == doctest::Approx(-1.0));
    CHECK(project_equal_area(kPi / 2.0, 0.5).v == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(project_equal_area(1.0, 0.5).u == doctest::Approx(0.5));
    CHECK(project_equal_area(1.0, 2.0 * kPi + 0.5).u == doctest::Approx(0.5));

    CHECK(equal_area_cell({-kPi + 1e-9, -1.0}) == 0);
    CHECK(equal_area_cell({kPi, 1.0}) == 31);
    CHECK(equal_area_cell({0.1, 0.1}) == 2 * 8 + 4);
}

TEST_CASE("uniform states occupy all equal-area cells uniformly") {
    RngStream rng(271828);
    const long n = 100000;
    std::array<long, kEqualAreaCells> counts{};
    for (long i = 0; i < n; i++) {
        PureState s = random_state(rng);
        counts[static_cast<std::size_t>(
            equal_area_cell(project_equal_area(s.theta(), s.phi())))]++;
    }
    double p = 1.0 / kEqualAreaCells;
    double se = std::sqrt(p * (1.0 - p) * static_cast<double>(n));
    for (long c : counts) {
        CHECK(std::abs(static_cast<double>(c) - n * p) < 4.0 * se);
    }
}

TEST_CASE("random states have Haar moments") {
    RngStream rng(161803);
    const long n = 100000;
    double sum_z = 0.0;
    double sum_z2 = 0.0;
    for (long i = 0; i < n; i++) {
        double z = to_bloch(random_state(rng)).z;
        sum_z += z;
        sum_z2 += z * z;
    }
    CHECK(std::abs(sum_z / n) < 4.0 / std::sqrt(3.0 * n));  // var(z) = 1/3
    CHECK(std::abs(sum_z2 / n - 1.0 / 3.0) < 0.01);
}

TEST_CASE("walk sampling honors cadence and burn-in") {
    auto samples = steady_state_samples(MeasurementStrength(0.5), 10000, 250, 1, 500);
    CHECK(samples.size() == (10000 - 500) / 250);
    for (std::size_t i = 0; i < samples.size(); i++) {
        CHECK(samples[i].step == 500 + static_cast<long>(i + 1) * 250);
        EqualAreaPoint p = project_equal_area(samples[i].theta, samples[i].phi);
        CHECK(samples[i].u == doctest::Approx(p.u));
        CHECK(samples[i].v == doctest::Approx(p.v));
    }
    CHECK_THROWS_AS(steady_state_samples(MeasurementStrength(0.0), 100, 10, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(steady_state_samples(MeasurementStrength(0.5), 0, 10, 1),
                    std::invalid_argument);
}

TEST_CASE("projective walk lives on the four vertices") {
    auto samples = steady_state_samples(MeasurementStrength(1.0), 2000, 10, 77);
    REQUIRE(!samples.empty());
    for (const SpherePoint& s : samples) {
        CHECK(min_vertex_distance(s.theta, s.phi) < 1e-7);
    }
}

TEST_CASE("near-projective walk clusters around the sixteen landing points") {
    // One weak hop from a vertex lands ~0.2 rad away, so the attractor set is
    // every outcome applied to every vertex state, not the vertices alone.
    Povm povm = sic_povm(MeasurementStrength(0.99));
    std::vector<BlochVector> centers;
    for (int i = 0; i < 4; i++) {
        for (const PureState& vertex : sic_states()) {
            centers.push_back(to_bloch(apply_outcome(povm, vertex, i).post_state));
        }
    }
    auto samples = steady_state_samples(MeasurementStrength(0.99), 100000, 250, 3);
    REQUIRE(samples.size() == 400);
    long close = 0;
    for (const SpherePoint& s : samples) {
        BlochVector r = to_bloch(from_angles(s.theta, s.phi));
        double best = 10.0;
        for (const BlochVector& c : centers) {
            best = std::min(best, std::acos(std::clamp(dot(r, c), -1.0, 1.0)));
        }
        if (best < 0.15) {
            close++;
        }
    }
    CHECK(static_cast<double>(close) / static_cast<double>(samples.size()) >= 0.95);
}

TEST_CASE("moderate-strength walk covers the whole sphere") {
    auto samples = steady_state_samples(MeasurementStrength(0.5), 100000, 250, 1);
    REQUIRE(samples.size() == 400);
    std::array<bool, kEqualAreaCells> seen{};
    for (const SpherePoint& s : samples) {
        seen[static_cast<std::size_t>(equal_area_cell({s.u, s.v}))] = true;
    }
    int visited = 0;
    for (bool b : seen) {
        visited += b ? 1 : 0;
    }
    CHECK(visited == kEqualAreaCells);
}

TEST_CASE("long-run occupancy forgets the initial state") {
    WalkSpec from_up{0.5, 10, PureState::up()};
    WalkSpec from_down{0.5, 11, PureState::down()};
    IndependenceCheck same = initial_state_independence_check(from_up, from_down);
    CHECK(same.dof == kEqualAreaCells - 1);
    CHECK(same.threshold == doctest::Approx(31.0 + 3.0 * std::sqrt(62.0)).epsilon(1e-12));
    CHECK(same.consistent);

    // Different strengths have visibly different occupancy: rejected.
    WalkSpec weak{0.1, 12, PureState::up()};
    WalkSpec strong{0.9, 13, PureState::up()};
    IndependenceCheck different = initial_state_independence_check(weak, strong);
    CHECK(!different.consistent);
    CHECK(different.chi2 > 10.0 * different.threshold / 3.0);

    // Identical walks agree exactly.
    WalkSpec twin{0.5, 21, PureState::up()};
    IndependenceCheck identical = initial_state_independence_check(twin, twin);
    CHECK(identical.chi2 == 0.0);
}
