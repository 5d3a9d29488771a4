#include "qprep/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace qprep {

namespace {

TrajectorySummary summarize(const ProtocolResult& result) {
    return {result.success, result.steps, result.final_state.theta(), result.final_state.phi()};
}

TrajectorySummary run_one(const EnsembleConfig& config, long index) {
    RngStream rng = RngStream::for_trajectory(config.master_seed, static_cast<std::uint64_t>(index));
    RunOptions lean{.keep_record = false, .keep_trajectory = false};
    if (const auto* guided = std::get_if<GuidedConfig>(&config.protocol)) {
        return summarize(
            guided_sequence_toward(guided->initial, guided->target, guided->n_steps, rng, lean));
    }
    if (const auto* three = std::get_if<ThreeAxisConfig>(&config.protocol)) {
        return summarize(three_axis_prepare(three->target, three->axes, rng, three->max_steps, lean));
    }
    const auto& walk = std::get<SicWalkConfig>(config.protocol);
    return summarize(sic_walk_prepare(walk.target, MeasurementStrength(walk.epsilon), rng,
                                      walk.max_steps, walk.initial, lean));
}

}  // namespace

double Histogram::success_rate() const {
    return total_runs == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(total_runs);
}

double Histogram::success_rate_se() const {
    if (total_runs == 0) {
        return 0.0;
    }
    double p = success_rate();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(total_runs));
}

double Histogram::mean_steps() const {
    if (successes == 0) {
        return 0.0;
    }
    double weighted = 0.0;
    for (std::size_t s = 0; s < counts.size(); s++) {
        weighted += static_cast<double>(s) * static_cast<double>(counts[s]);
    }
    return weighted / static_cast<double>(successes);
}

double Histogram::cumulative_rate(long steps_inclusive) const {
    if (total_runs == 0) {
        return 0.0;
    }
    long acc = 0;
    long limit = std::min<long>(steps_inclusive, static_cast<long>(counts.size()) - 1);
    for (long s = 0; s <= limit; s++) {
        acc += counts[s];
    }
    return static_cast<double>(acc) / static_cast<double>(total_runs);
}

EnsembleResult run_ensemble(const EnsembleConfig& config) {
    if (config.trajectories < 1) {
        throw std::invalid_argument("ensemble needs at least one trajectory");
    }
    EnsembleResult result;
    result.summaries.resize(static_cast<std::size_t>(config.trajectories));

    // The first trajectory runs inline so configuration errors surface as
    // exceptions here rather than inside a worker thread.
    result.summaries[0] = run_one(config, 0);

    int thread_count = config.threads > 0
                           ? config.threads
                           : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    thread_count = static_cast<int>(
        std::min<long>(thread_count, std::max<long>(1, config.trajectories - 1)));

    if (config.trajectories > 1) {
        std::atomic<long> next{1};
        auto worker = [&] {
            while (true) {
                long k = next.fetch_add(1);
                if (k >= config.trajectories) {
                    return;
                }
                result.summaries[static_cast<std::size_t>(k)] = run_one(config, k);
            }
        };
        if (thread_count <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(static_cast<std::size_t>(thread_count));
            for (int t = 0; t < thread_count; t++) {
                pool.emplace_back(worker);
            }
            for (std::thread& t : pool) {
                t.join();
            }
        }
    }

    Histogram& hist = result.histogram;
    hist.total_runs = config.trajectories;
    long max_steps = 0;
    for (const TrajectorySummary& s : result.summaries) {
        if (s.success) {
            hist.successes++;
            max_steps = std::max(max_steps, s.steps);
        }
    }
    hist.counts.assign(static_cast<std::size_t>(max_steps) + 1, 0);
    for (const TrajectorySummary& s : result.summaries) {
        if (s.success) {
            hist.counts[static_cast<std::size_t>(s.steps)]++;
        }
    }
    return result;
}

EqualAreaPoint project_equal_area(double theta, double phi) {
    return {wrap_angle(phi), std::cos(theta)};
}

int equal_area_cell(const EqualAreaPoint& p) {
    double col_f = (p.u + std::numbers::pi) / (2.0 * std::numbers::pi) * 8.0;
    double row_f = (p.v + 1.0) / 2.0 * 4.0;
    int col = std::clamp(static_cast<int>(col_f), 0, 7);
    int row = std::clamp(static_cast<int>(row_f), 0, 3);
    return row * 8 + col;
}

std::vector<SpherePoint> steady_state_samples(MeasurementStrength strength, long total_steps,
                                              long sample_every, std::uint64_t seed, long burn_in,
                                              const PureState& initial) {
    if (strength.value() <= 0.0) {
        throw std::invalid_argument("walk strength must be positive");
    }
    if (total_steps < 1 || sample_every < 1 || burn_in < 0) {
        throw std::invalid_argument("walk lengths must be positive (burn-in non-negative)");
    }
    Povm povm = sic_povm(strength);
    RngStream rng = RngStream::for_trajectory(seed, 0);
    PureState state = initial;
    std::vector<SpherePoint> samples;
    samples.reserve(static_cast<std::size_t>(
        std::max<long>(0, (total_steps - burn_in) / sample_every) + 1));
    for (long step = 1; step <= total_steps; step++) {
        state = apply(povm, state, rng.next_double()).post_state;
        if (step > burn_in && (step - burn_in) % sample_every == 0) {
            double theta = state.theta();
            double phi = state.phi();
            EqualAreaPoint p = project_equal_area(theta, phi);
            samples.push_back({step, theta, phi, p.u, p.v});
        }
    }
    return samples;
}

IndependenceCheck initial_state_independence_check(const WalkSpec& a, const WalkSpec& b,
                                                   long n_samples, long sample_every,
                                                   long burn_in) {
    if (n_samples < 2) {
        throw std::invalid_argument("independence check needs at least two samples per walk");
    }
    IndependenceCheck check;
    auto fill = [&](const WalkSpec& spec, std::array<long, kEqualAreaCells>& counts) {
        long total = burn_in + n_samples * sample_every;
        auto samples = steady_state_samples(MeasurementStrength(spec.epsilon), total, sample_every,
                                            spec.seed, burn_in, spec.initial);
        for (const SpherePoint& s : samples) {
            counts[static_cast<std::size_t>(equal_area_cell({s.u, s.v}))]++;
        }
    };
    fill(a, check.counts_a);
    fill(b, check.counts_b);

    double total_a = 0.0;
    double total_b = 0.0;
    for (int c = 0; c < kEqualAreaCells; c++) {
        total_a += static_cast<double>(check.counts_a[c]);
        total_b += static_cast<double>(check.counts_b[c]);
    }
    // Two-sample chi-square with unequal totals: scale each side by the
    // square root of the opposite total.
    double k_a = std::sqrt(total_b / total_a);
    double k_b = std::sqrt(total_a / total_b);
    int used = 0;
    double chi2 = 0.0;
    for (int c = 0; c < kEqualAreaCells; c++) {
        double na = static_cast<double>(check.counts_a[c]);
        double nb = static_cast<double>(check.counts_b[c]);
        if (na + nb == 0.0) {
            continue;
        }
        used++;
        double diff = k_a * na - k_b * nb;
        chi2 += diff * diff / (na + nb);
    }
    check.chi2 = chi2;
    check.dof = std::max(1, used - 1);
    check.threshold = check.dof + 3.0 * std::sqrt(2.0 * static_cast<double>(check.dof));
    check.consistent = check.chi2 <= check.threshold;
    return check;
}

PureState random_state(RngStream& rng) {
    double z = 2.0 * rng.next_double() - 1.0;
    double phi = (2.0 * rng.next_double() - 1.0) * std::numbers::pi;
    return from_angles(std::acos(std::clamp(z, -1.0, 1.0)), phi);
}

}  // namespace qprep
