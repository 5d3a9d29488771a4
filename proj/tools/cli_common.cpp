#include "cli_common.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <locale>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qprep/harness.hpp"
#include "qprep/io.hpp"

namespace qprep::cli {
namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";
constexpr double kPi = std::numbers::pi;

// Bad or missing parameters: exit kExitUsage.
class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Unreadable config or unwritable output: exit kExitIo.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Numeric parsing is done with from_chars throughout so results never depend
// on the process locale. Angles (and any other real) accept a "pi" suffix:
// "0.25pi", "-pi", "1.5707963".
double parse_real(std::string_view text, const std::string& flag) {
    std::string_view body = text;
    double scale = 1.0;
    if (body.size() >= 2 && body.substr(body.size() - 2) == "pi") {
        scale = kPi;
        body.remove_suffix(2);
        if (body.empty() || body == "+") {
            return scale;
        }
        if (body == "-") {
            return -scale;
        }
    }
    const char* first = body.data();
    const char* last = body.data() + body.size();
    if (first != last && *first == '+') {
        first++;  // from_chars does not accept a leading plus
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw UsageError("invalid number '" + std::string(text) + "' for " + flag +
                         " (radians or a pi fraction like 0.25pi)");
    }
    return value * scale;
}

long parse_integer(std::string_view text, const std::string& flag) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') {
        first++;
    }
    long value = 0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw UsageError("invalid integer '" + std::string(text) + "' for " + flag);
    }
    return value;
}

std::uint64_t parse_seed(std::string_view text, const std::string& flag) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') {
        first++;
    }
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw UsageError("invalid seed '" + std::string(text) + "' for " + flag);
    }
    return value;
}

std::pair<double, double> parse_angle_pair(const std::string& text, const std::string& flag) {
    auto comma = text.find(',');
    if (comma == std::string::npos || text.find(',', comma + 1) != std::string::npos) {
        throw UsageError(flag + " expects 'theta,phi' (for example '0.5pi,0.25pi'), got '" + text +
                         "'");
    }
    return {parse_real(std::string_view(text).substr(0, comma), flag),
            parse_real(std::string_view(text).substr(comma + 1), flag)};
}

double json_real(const json& v, const std::string& key) {
    if (v.is_number()) {
        return v.get<double>();
    }
    if (v.is_string()) {
        return parse_real(v.get<std::string>(), "config key '" + key + "'");
    }
    throw UsageError("config key '" + key + "' must be a number or an angle string");
}

long json_integer(const json& v, const std::string& key) {
    if (v.is_number_integer()) {
        return v.get<long>();
    }
    if (v.is_string()) {
        return parse_integer(v.get<std::string>(), "config key '" + key + "'");
    }
    throw UsageError("config key '" + key + "' must be an integer");
}

std::uint64_t json_seed(const json& v, const std::string& key) {
    if (v.is_number_unsigned()) {
        return v.get<std::uint64_t>();
    }
    if (v.is_number_integer() && v.get<long long>() >= 0) {
        return static_cast<std::uint64_t>(v.get<long long>());
    }
    if (v.is_string()) {
        return parse_seed(v.get<std::string>(), "config key '" + key + "'");
    }
    throw UsageError("config key '" + key + "' must be a non-negative integer");
}

std::string json_text(const json& v, const std::string& key) {
    if (v.is_string()) {
        return v.get<std::string>();
    }
    throw UsageError("config key '" + key + "' must be a string");
}

// Loads --config. A previously written run manifest is accepted directly: its
// "parameters" object is the config, so a run can be reproduced from it.
json load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read config file '" + path + "'");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError("config file '" + path + "' is not valid JSON: " + std::string(e.what()));
    }
    if (j.is_object() && j.contains("parameters") &&
        j.value("schema", std::string{}).rfind("qprep.manifest", 0) == 0) {
        json params = j.at("parameters");
        // Reruns should land in the same file the manifest describes.
        if (!params.contains("out") && j.contains("outputs") && j.at("outputs").is_array() &&
            !j.at("outputs").empty() && j.at("outputs").front().is_string()) {
            params["out"] = j.at("outputs").front();
        }
        return params;
    }
    if (!j.is_object()) {
        throw IoError("config file '" + path + "' must hold a JSON object");
    }
    return j;
}

// Resolves each parameter with precedence flag > config file > default, and
// accumulates the resolved values for the manifest and the output headers.
// Required parameters pass std::nullopt as the fallback.
class Params {
  public:
    Params(const CLI::App* sub, json cfg) : sub_(sub), cfg_(std::move(cfg)) {}

    double real(const std::string& flag, const std::string& raw, std::optional<double> fallback) {
        const std::string k = key(flag);
        double value;
        if (sub_->count(flag) > 0) {
            value = parse_real(raw, flag);
        } else if (cfg_.contains(k)) {
            value = json_real(cfg_.at(k), k);
        } else if (fallback.has_value()) {
            value = *fallback;
        } else {
            throw missing(flag, k);
        }
        resolved_[k] = value;
        return value;
    }

    long integer(const std::string& flag, const std::string& raw, std::optional<long> fallback,
                 bool record = true) {
        const std::string k = key(flag);
        long value;
        if (sub_->count(flag) > 0) {
            value = parse_integer(raw, flag);
        } else if (cfg_.contains(k)) {
            value = json_integer(cfg_.at(k), k);
        } else if (fallback.has_value()) {
            value = *fallback;
        } else {
            throw missing(flag, k);
        }
        if (record) {
            resolved_[k] = value;
        }
        return value;
    }

    std::uint64_t seed_value(const std::string& flag, const std::string& raw,
                             std::uint64_t fallback) {
        const std::string k = key(flag);
        std::uint64_t value;
        if (sub_->count(flag) > 0) {
            value = parse_seed(raw, flag);
        } else if (cfg_.contains(k)) {
            value = json_seed(cfg_.at(k), k);
        } else {
            value = fallback;
        }
        resolved_[k] = value;
        return value;
    }

    std::string text(const std::string& flag, const std::string& raw,
                     std::optional<std::string> fallback, bool record = true) {
        const std::string k = key(flag);
        std::string value;
        if (sub_->count(flag) > 0) {
            value = raw;
        } else if (cfg_.contains(k)) {
            value = json_text(cfg_.at(k), k);
        } else if (fallback.has_value()) {
            value = std::move(*fallback);
        } else {
            throw missing(flag, k);
        }
        if (record) {
            resolved_[k] = value;
        }
        return value;
    }

    const json& resolved() const { return resolved_; }

  private:
    static std::string key(const std::string& flag) {
        std::string k = flag.substr(flag.find_first_not_of('-'));
        for (char& c : k) {
            if (c == '-') {
                c = '_';
            }
        }
        return k;
    }

    static UsageError missing(const std::string& flag, const std::string& k) {
        return UsageError("missing required " + flag + " (pass the flag or put '" + k +
                          "' in the config file)");
    }

    const CLI::App* sub_;
    json cfg_;
    json resolved_ = json::object();
};

// Every option is a plain string at the CLI11 level; Params does the typed,
// locale-independent conversion after config-file merging.
struct RawFlags {
    std::string seed, out, format, threads, config;
    std::string n_max, n_min, trajectories;
    std::string theta_i, phi_i, theta_t, phi_t;
    std::string max_steps, delta;
    std::string epsilon, mode, steps, sample_every, burn_in;
    std::string initial, target, max_depth, grid, batch;
};

void add_common_flags(CLI::App* sub, RawFlags& raw) {
    sub->add_option("--seed", raw.seed, "master RNG seed (default 1)");
    sub->add_option("--out", raw.out, "output file (default <subcommand>_out.<format>)");
    sub->add_option("--format", raw.format, "output format: csv or json (default csv)");
    sub->add_option("--threads", raw.threads, "worker threads, 0 = all cores; never changes results");
    sub->add_option("--config", raw.config,
                    "JSON config file (or a run manifest); explicit flags override it");
}

json config_of(const CLI::App* sub, const RawFlags& raw) {
    if (sub->count("--config") > 0) {
        return load_config(raw.config);
    }
    return json::object();
}

struct OutSpec {
    std::string path;
    std::string format;
};

OutSpec resolve_out(Params& p, const RawFlags& raw, const std::string& stem) {
    std::string format = p.text("--format", raw.format, std::string("csv"));
    if (format != "csv" && format != "json") {
        throw UsageError("--format must be csv or json");
    }
    // The output path is where the data goes, not part of the experiment:
    // it stays out of the echoed parameters so runs differing only in --out
    // produce byte-identical files. The manifest records it under "outputs".
    std::string path = p.text("--out", raw.out, stem + "_out." + format, /*record=*/false);
    return {path, format};
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << content;
    out.flush();
    if (!out) {
        throw IoError("failed while writing '" + path + "'");
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// The manifest records everything needed to rerun the command: feeding it
// back through --config reproduces the output files byte for byte. Only
// duration_seconds varies between such runs, which is why it lives here and
// never inside the outputs themselves.
void write_manifest(const std::string& subcommand, const Params& p, std::uint64_t seed,
                    const std::vector<std::string>& outputs, double duration_seconds) {
    json m;
    m["schema"] = "qprep.manifest/1";
    m["subcommand"] = subcommand;
    m["parameters"] = p.resolved();
    m["seed"] = seed;
    m["outputs"] = outputs;
    m["version"] = kVersion;
    m["duration_seconds"] = duration_seconds;
    write_file(outputs.front() + ".manifest.json", m.dump(2) + "\n");
}

std::ostringstream make_stream() {
    std::ostringstream s;
    s.imbue(std::locale::classic());
    return s;
}

std::string render_histogram(const Histogram& hist, const io::Metadata& meta,
                             const std::string& format) {
    if (format == "json") {
        return io::histogram_json(hist, meta).dump(2) + "\n";
    }
    auto s = make_stream();
    io::write_histogram_csv(s, hist, meta);
    return s.str();
}

int cmd_guided(const CLI::App* sub, const RawFlags& raw) {
    auto t0 = std::chrono::steady_clock::now();
    Params p(sub, config_of(sub, raw));
    std::uint64_t seed = p.seed_value("--seed", raw.seed, 1);
    int threads = static_cast<int>(p.integer("--threads", raw.threads, 0, /*record=*/false));
    long n_max = p.integer("--n-max", raw.n_max, std::nullopt);
    long n_min = p.integer("--n-min", raw.n_min, 1);
    long trajectories = p.integer("--trajectories", raw.trajectories, 20000);
    double theta_i = p.real("--theta-i", raw.theta_i, 0.0);
    double phi_i = p.real("--phi-i", raw.phi_i, 0.0);
    double theta_t = p.real("--theta-t", raw.theta_t, kPi);
    double phi_t = p.real("--phi-t", raw.phi_t, 0.0);
    OutSpec out = resolve_out(p, raw, "guided");
    if (threads < 0) {
        throw UsageError("--threads must be >= 0");
    }
    if (n_min < 1 || n_max < n_min) {
        throw UsageError("need 1 <= --n-min <= --n-max");
    }
    if (trajectories < 1) {
        throw UsageError("--trajectories must be >= 1");
    }

    PureState initial = from_angles(theta_i, phi_i);
    PureState target = from_angles(theta_t, phi_t);
    std::vector<io::GuidedRow> rows;
    for (long n = n_min; n <= n_max; n++) {
        EnsembleConfig ec;
        ec.protocol = GuidedConfig{initial, target, static_cast<int>(n)};
        ec.trajectories = trajectories;
        ec.master_seed = seed + static_cast<std::uint64_t>(n);  // decorrelates the rows
        ec.threads = threads;
        EnsembleResult res = run_ensemble(ec);
        rows.push_back({static_cast<int>(n),
                        guided_success_probability(initial, target, static_cast<int>(n)),
                        res.histogram.success_rate(), res.histogram.success_rate_se(),
                        trajectories});
    }

    io::Metadata meta{"guided", seed, p.resolved()};
    std::string content;
    if (out.format == "json") {
        content = io::guided_json(rows, meta).dump(2) + "\n";
    } else {
        auto s = make_stream();
        io::write_guided_csv(s, rows, meta);
        content = s.str();
    }
    write_file(out.path, content);
    write_manifest("guided", p, seed, {out.path}, seconds_since(t0));

    for (const io::GuidedRow& r : rows) {
        std::cout << "n=" << r.n_steps << " analytic=" << io::format_double(r.analytic)
                  << " mc=" << io::format_double(r.mc_rate)
                  << " se=" << io::format_double(r.mc_se) << "\n";
    }
    std::cout << "wrote " << out.path << "\n";
    return kExitOk;
}

int cmd_three_axis(const CLI::App* sub, const RawFlags& raw) {
    auto t0 = std::chrono::steady_clock::now();
    Params p(sub, config_of(sub, raw));
    std::uint64_t seed = p.seed_value("--seed", raw.seed, 1);
    int threads = static_cast<int>(p.integer("--threads", raw.threads, 0, /*record=*/false));
    double theta_t = p.real("--theta-t", raw.theta_t, std::nullopt);
    double phi_t = p.real("--phi-t", raw.phi_t, std::nullopt);
    double delta = p.real("--delta", raw.delta, 1e-6);
    long trajectories = p.integer("--trajectories", raw.trajectories, 10000);
    long max_steps = p.integer("--max-steps", raw.max_steps, 1000);
    OutSpec out = resolve_out(p, raw, "three_axis");
    if (threads < 0) {
        throw UsageError("--threads must be >= 0");
    }
    if (trajectories < 1 || max_steps < 1) {
        throw UsageError("--trajectories and --max-steps must be >= 1");
    }

    TargetSpec target(theta_t, phi_t, delta);  // validates the ranges
    EnsembleConfig ec;
    ec.protocol = ThreeAxisConfig{target, AxisTriple::orthogonal(), max_steps};
    ec.trajectories = trajectories;
    ec.master_seed = seed;
    ec.threads = threads;
    EnsembleResult res = run_ensemble(ec);

    io::Metadata meta{"three-axis", seed, p.resolved()};
    write_file(out.path, render_histogram(res.histogram, meta, out.format));
    write_manifest("three-axis", p, seed, {out.path}, seconds_since(t0));

    const Histogram& h = res.histogram;
    std::cout << "trajectories=" << h.total_runs << " successes=" << h.successes
              << " mean_steps=" << io::format_double(h.mean_steps())
              << " p_steps_lt_20=" << io::format_double(h.cumulative_rate(19)) << "\n";
    std::cout << "wrote " << out.path << "\n";
    return kExitOk;
}

int cmd_sic_walk(const CLI::App* sub, const RawFlags& raw) {
    auto t0 = std::chrono::steady_clock::now();
    Params p(sub, config_of(sub, raw));
    std::uint64_t seed = p.seed_value("--seed", raw.seed, 1);
    int threads = static_cast<int>(p.integer("--threads", raw.threads, 0, /*record=*/false));
    double epsilon = p.real("--epsilon", raw.epsilon, std::nullopt);
    std::string mode = p.text("--mode", raw.mode, std::string("walk"));
    double theta_i = p.real("--theta-i", raw.theta_i, 0.0);
    double phi_i = p.real("--phi-i", raw.phi_i, 0.0);
    if (threads < 0) {
        throw UsageError("--threads must be >= 0");
    }
    if (mode != "walk" && mode != "hitting") {
        throw UsageError("--mode must be walk or hitting");
    }
    PureState initial = from_angles(theta_i, phi_i);

    if (mode == "walk") {
        long steps = p.integer("--steps", raw.steps, 100000);
        long sample_every = p.integer("--sample-every", raw.sample_every, 250);
        long burn_in = p.integer("--burn-in", raw.burn_in, 0);
        OutSpec out = resolve_out(p, raw, "sic_walk");
        auto samples = steady_state_samples(MeasurementStrength(epsilon), steps, sample_every,
                                            seed, burn_in, initial);
        io::Metadata meta{"sic-walk", seed, p.resolved()};
        std::string content;
        if (out.format == "json") {
            content = io::samples_json(samples, meta).dump(2) + "\n";
        } else {
            auto s = make_stream();
            io::write_samples_csv(s, samples, meta);
            content = s.str();
        }
        write_file(out.path, content);
        write_manifest("sic-walk", p, seed, {out.path}, seconds_since(t0));
        std::cout << "samples=" << samples.size() << "\n";
        std::cout << "wrote " << out.path << "\n";
        return kExitOk;
    }

    if (epsilon >= 1.0) {
        throw UsageError(
            "--mode hitting needs --epsilon < 1: the projective tetrahedral walk only hops "
            "among the four vertex states, so it never enters a generic target neighborhood");
    }
    double delta = p.real("--delta", raw.delta, 0.3);
    double theta_t = p.real("--theta-t", raw.theta_t, kPi / 4.0);
    double phi_t = p.real("--phi-t", raw.phi_t, kPi / 4.0);
    long trajectories = p.integer("--trajectories", raw.trajectories, 10000);
    long max_steps = p.integer("--max-steps", raw.max_steps, 100000);
    OutSpec out = resolve_out(p, raw, "sic_walk");
    if (trajectories < 1 || max_steps < 1) {
        throw UsageError("--trajectories and --max-steps must be >= 1");
    }

    EnsembleConfig ec;
    ec.protocol = SicWalkConfig{TargetSpec(theta_t, phi_t, delta), epsilon, max_steps, initial};
    ec.trajectories = trajectories;
    ec.master_seed = seed;
    ec.threads = threads;
    EnsembleResult res = run_ensemble(ec);

    io::Metadata meta{"sic-walk", seed, p.resolved()};
    write_file(out.path, render_histogram(res.histogram, meta, out.format));
    write_manifest("sic-walk", p, seed, {out.path}, seconds_since(t0));

    const Histogram& h = res.histogram;
    std::cout << "trajectories=" << h.total_runs << " successes=" << h.successes
              << " mean_steps=" << io::format_double(h.mean_steps())
              << " estimate_4_over_delta_sq=" << io::format_double(hitting_time_estimate(delta))
              << "\n";
    std::cout << "wrote " << out.path << "\n";
    return kExitOk;
}

double replayed_landing_error(const PureState& initial, const PureState& target,
                              const std::vector<PlanStep>& plan) {
    PureState state = initial;
    for (const PlanStep& s : plan) {
        state = apply_outcome(sic_povm(MeasurementStrength(s.epsilon)), state, s.outcome_index)
                    .post_state;
    }
    return angular_distance(state, target);
}

double joint_probability(const std::vector<PlanStep>& plan) {
    double joint = 1.0;
    for (const PlanStep& s : plan) {
        joint *= s.probability;
    }
    return joint;
}

void write_plan_header(std::ostream& out, const char* schema, const io::Metadata& meta) {
    out << "# schema=" << schema << "\n";
    out << "# kind=" << meta.kind << "\n";
    out << "# seed=" << meta.seed << "\n";
    out << "# config=" << meta.config.dump() << "\n";
}

int cmd_plan(const CLI::App* sub, const RawFlags& raw) {
    auto t0 = std::chrono::steady_clock::now();
    Params p(sub, config_of(sub, raw));
    std::uint64_t seed = p.seed_value("--seed", raw.seed, 1);
    long max_depth = p.integer("--max-depth", raw.max_depth, 3);
    double grid = p.real("--grid", raw.grid, 1e-3);
    long batch = p.integer("--batch", raw.batch, 0);
    OutSpec out = resolve_out(p, raw, "plan");
    if (batch < 0) {
        throw UsageError("--batch must be >= 0");
    }

    if (batch > 0) {
        struct PairReport {
            double initial_theta, initial_phi, target_theta, target_phi;
            std::size_t depth;
            double probability;
            double replay_error;
        };
        RngStream rng(seed);
        std::vector<PairReport> reports;
        std::size_t max_depth_used = 0;
        double max_error = 0.0;
        for (long k = 0; k < batch; k++) {
            PureState initial = random_state(rng);
            PureState target = random_state(rng);
            std::vector<PlanStep> plan;
            try {
                plan = plan_sic_sequence(initial, target, static_cast<int>(max_depth), grid);
            } catch (const PlannerFailure& e) {
                throw PlannerFailure("batch pair " + std::to_string(k) + ": " + e.what());
            }
            double err = replayed_landing_error(initial, target, plan);
            reports.push_back({initial.theta(), initial.phi(), target.theta(), target.phi(),
                               plan.size(), joint_probability(plan), err});
            max_depth_used = std::max(max_depth_used, plan.size());
            max_error = std::max(max_error, err);
        }

        io::Metadata meta{"plan", seed, p.resolved()};
        std::string content;
        if (out.format == "json") {
            json j = {{"schema", "qprep.plan_batch/1"},
                      {"kind", meta.kind},
                      {"seed", meta.seed},
                      {"config", meta.config}};
            json rows = json::array();
            for (std::size_t k = 0; k < reports.size(); k++) {
                const PairReport& r = reports[k];
                rows.push_back({{"pair", k},
                                {"initial_theta", r.initial_theta},
                                {"initial_phi", r.initial_phi},
                                {"target_theta", r.target_theta},
                                {"target_phi", r.target_phi},
                                {"depth", r.depth},
                                {"joint_probability", r.probability},
                                {"replay_error", r.replay_error}});
            }
            j["pairs"] = std::move(rows);
            content = j.dump(2) + "\n";
        } else {
            auto s = make_stream();
            write_plan_header(s, "qprep.plan_batch/1", meta);
            s << "pair,initial_theta,initial_phi,target_theta,target_phi,depth,"
                 "joint_probability,replay_error\n";
            for (std::size_t k = 0; k < reports.size(); k++) {
                const PairReport& r = reports[k];
                s << k << "," << io::format_double(r.initial_theta) << ","
                  << io::format_double(r.initial_phi) << "," << io::format_double(r.target_theta)
                  << "," << io::format_double(r.target_phi) << "," << r.depth << ","
                  << io::format_double(r.probability) << "," << io::format_double(r.replay_error)
                  << "\n";
            }
            content = s.str();
        }
        write_file(out.path, content);
        write_manifest("plan", p, seed, {out.path}, seconds_since(t0));
        std::cout << "batch=" << batch << " max_depth_used=" << max_depth_used
                  << " max_replay_error=" << io::format_double(max_error) << "\n";
        std::cout << "wrote " << out.path << "\n";
        return kExitOk;
    }

    std::string initial_text = p.text("--initial", raw.initial, std::string("0,0"));
    std::string target_text = p.text("--target", raw.target, std::nullopt);
    auto [theta_i, phi_i] = parse_angle_pair(initial_text, "--initial");
    auto [theta_t, phi_t] = parse_angle_pair(target_text, "--target");
    PureState initial = from_angles(theta_i, phi_i);
    PureState target = from_angles(theta_t, phi_t);

    std::vector<PlanStep> plan = plan_sic_sequence(initial, target, static_cast<int>(max_depth),
                                                   grid);
    double joint = joint_probability(plan);
    double err = replayed_landing_error(initial, target, plan);

    io::Metadata meta{"plan", seed, p.resolved()};
    std::string content;
    if (out.format == "json") {
        json j = {{"schema", "qprep.plan/1"},
                  {"kind", meta.kind},
                  {"seed", meta.seed},
                  {"config", meta.config},
                  {"joint_probability", joint},
                  {"replay_error", err}};
        json rows = json::array();
        for (std::size_t k = 0; k < plan.size(); k++) {
            rows.push_back({{"step", k + 1},
                            {"epsilon", plan[k].epsilon},
                            {"outcome_index", plan[k].outcome_index},
                            {"outcome_label", plan[k].outcome_label},
                            {"probability", plan[k].probability}});
        }
        j["steps"] = std::move(rows);
        content = j.dump(2) + "\n";
    } else {
        auto s = make_stream();
        write_plan_header(s, "qprep.plan/1", meta);
        s << "# joint_probability=" << io::format_double(joint) << "\n";
        s << "# replay_error=" << io::format_double(err) << "\n";
        s << "step,epsilon,outcome_index,outcome_label,probability\n";
        for (std::size_t k = 0; k < plan.size(); k++) {
            s << (k + 1) << "," << io::format_double(plan[k].epsilon) << ","
              << plan[k].outcome_index << "," << plan[k].outcome_label << ","
              << io::format_double(plan[k].probability) << "\n";
        }
        content = s.str();
    }
    write_file(out.path, content);
    write_manifest("plan", p, seed, {out.path}, seconds_since(t0));

    if (plan.empty()) {
        std::cout << "already at target: empty plan\n";
    }
    for (std::size_t k = 0; k < plan.size(); k++) {
        std::cout << "step " << (k + 1) << ": epsilon=" << io::format_double(plan[k].epsilon)
                  << " outcome=" << plan[k].outcome_label
                  << " probability=" << io::format_double(plan[k].probability) << "\n";
    }
    std::cout << "joint_probability=" << io::format_double(joint)
              << " replay_error=" << io::format_double(err) << "\n";
    std::cout << "wrote " << out.path << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{
        "Prepare qubit states with restricted measurements: guided projective walks, "
        "adaptive three-axis strategies, tetrahedral random walks, and planned "
        "post-selected measurement sequences."};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    RawFlags rg, rt, rw, rp;

    CLI::App* guided =
        app.add_subcommand("guided", "Success rate of the guided projective walk vs step count");
    add_common_flags(guided, rg);
    guided->add_option("--n-max", rg.n_max, "largest step count in the sweep (required)");
    guided->add_option("--n-min", rg.n_min, "smallest step count in the sweep (default 1)");
    guided->add_option("--trajectories", rg.trajectories, "runs per step count (default 20000)");
    guided->add_option("--theta-i", rg.theta_i, "initial polar angle (default 0)");
    guided->add_option("--phi-i", rg.phi_i, "initial azimuth (default 0)");
    guided->add_option("--theta-t", rg.theta_t, "target polar angle (default pi)");
    guided->add_option("--phi-t", rg.phi_t, "target azimuth (default 0)");

    CLI::App* three = app.add_subcommand(
        "three-axis", "Adaptive preparation with measurements along three fixed axes");
    add_common_flags(three, rt);
    three->add_option("--theta-t", rt.theta_t, "target polar angle in [0, pi] (required)");
    three->add_option("--phi-t", rt.phi_t, "target azimuth (required)");
    three->add_option("--delta", rt.delta, "success radius in radians (default 1e-6)");
    three->add_option("--trajectories", rt.trajectories, "number of runs (default 10000)");
    three->add_option("--max-steps", rt.max_steps, "step budget per run (default 1000)");

    CLI::App* walk = app.add_subcommand(
        "sic-walk", "Random walk induced by one repeated tetrahedral measurement");
    add_common_flags(walk, rw);
    walk->add_option("--epsilon", rw.epsilon, "measurement strength (required)");
    walk->add_option("--mode", rw.mode, "walk (sample the steady state) or hitting (default walk)");
    walk->add_option("--steps", rw.steps, "walk mode: total steps (default 100000)");
    walk->add_option("--sample-every", rw.sample_every, "walk mode: sampling cadence (default 250)");
    walk->add_option("--burn-in", rw.burn_in, "walk mode: steps discarded up front (default 0)");
    walk->add_option("--delta", rw.delta, "hitting mode: target radius (default 0.3)");
    walk->add_option("--theta-t", rw.theta_t, "hitting mode: target polar angle (default pi/4)");
    walk->add_option("--phi-t", rw.phi_t, "hitting mode: target azimuth (default pi/4)");
    walk->add_option("--trajectories", rw.trajectories, "hitting mode: runs (default 10000)");
    walk->add_option("--max-steps", rw.max_steps, "hitting mode: step budget (default 100000)");
    walk->add_option("--theta-i", rw.theta_i, "initial polar angle (default 0)");
    walk->add_option("--phi-i", rw.phi_i, "initial azimuth (default 0)");

    CLI::App* plan = app.add_subcommand(
        "plan", "Shortest post-selected tetrahedral sequence between two states");
    add_common_flags(plan, rp);
    plan->add_option("--initial", rp.initial, "initial state as 'theta,phi' (default '0,0')");
    plan->add_option("--target", rp.target, "target state as 'theta,phi' (required)");
    plan->add_option("--max-depth", rp.max_depth, "largest sequence length tried (default 3)");
    plan->add_option("--grid", rp.grid, "strength scan resolution for mid hops (default 1e-3)");
    plan->add_option("--batch", rp.batch, "plan this many random state pairs instead");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const CLI::App* active = nullptr;
    try {
        if (guided->parsed()) {
            active = guided;
            return cmd_guided(guided, rg);
        }
        if (three->parsed()) {
            active = three;
            return cmd_three_axis(three, rt);
        }
        if (walk->parsed()) {
            active = walk;
            return cmd_sic_walk(walk, rw);
        }
        active = plan;
        return cmd_plan(plan, rp);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n"
                  << (active != nullptr ? active->help() : app.help());
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const PlannerFailure& e) {
        std::cerr << "planner failure: " << e.what() << "\n";
        return kExitPlanner;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n\n"
                  << (active != nullptr ? active->help() : app.help());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace qprep::cli
