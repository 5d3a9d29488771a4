#include "qprep/io.hpp"

#include <array>
#include <charconv>
#include <stdexcept>

namespace qprep::io {

namespace {

constexpr const char* kHistogramSchema = "qprep.histogram/1";
constexpr const char* kSamplesSchema = "qprep.samples/1";
constexpr const char* kGuidedSchema = "qprep.guided/1";

void write_header(std::ostream& out, const char* schema, const Metadata& meta) {
    out << "# schema=" << schema << "\n";
    out << "# kind=" << meta.kind << "\n";
    out << "# seed=" << meta.seed << "\n";
    out << "# config=" << meta.config.dump() << "\n";
}

nlohmann::json json_header(const char* schema, const Metadata& meta) {
    return {{"schema", schema}, {"kind", meta.kind}, {"seed", meta.seed}, {"config", meta.config}};
}

}  // namespace

std::string format_double(double value) {
    std::array<char, 40> buf;
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc()) {
        throw std::runtime_error("failed to format a double");
    }
    return std::string(buf.data(), end);
}

void write_histogram_csv(std::ostream& out, const Histogram& hist, const Metadata& meta) {
    write_header(out, kHistogramSchema, meta);
    out << "# total_runs=" << hist.total_runs << "\n";
    out << "# successes=" << hist.successes << "\n";
    out << "# success_rate=" << format_double(hist.success_rate()) << "\n";
    out << "# success_rate_se=" << format_double(hist.success_rate_se()) << "\n";
    out << "# mean_steps_success=" << format_double(hist.mean_steps()) << "\n";
    out << "steps,count,cumulative_rate\n";
    long acc = 0;
    for (std::size_t s = 0; s < hist.counts.size(); s++) {
        acc += hist.counts[s];
        double cumulative = hist.total_runs == 0
                                ? 0.0
                                : static_cast<double>(acc) / static_cast<double>(hist.total_runs);
        out << s << "," << hist.counts[s] << "," << format_double(cumulative) << "\n";
    }
}

nlohmann::json histogram_json(const Histogram& hist, const Metadata& meta) {
    nlohmann::json j = json_header(kHistogramSchema, meta);
    j["total_runs"] = hist.total_runs;
    j["successes"] = hist.successes;
    j["success_rate"] = hist.success_rate();
    j["success_rate_se"] = hist.success_rate_se();
    j["mean_steps_success"] = hist.mean_steps();
    nlohmann::json rows = nlohmann::json::array();
    long acc = 0;
    for (std::size_t s = 0; s < hist.counts.size(); s++) {
        acc += hist.counts[s];
        double cumulative = hist.total_runs == 0
                                ? 0.0
                                : static_cast<double>(acc) / static_cast<double>(hist.total_runs);
        rows.push_back({{"steps", s}, {"count", hist.counts[s]}, {"cumulative_rate", cumulative}});
    }
    j["rows"] = std::move(rows);
    return j;
}

void write_samples_csv(std::ostream& out, const std::vector<SpherePoint>& samples,
                       const Metadata& meta) {
    write_header(out, kSamplesSchema, meta);
    out << "# samples=" << samples.size() << "\n";
    out << "step,theta,phi,u,v\n";
    for (const SpherePoint& s : samples) {
        out << s.step << "," << format_double(s.theta) << "," << format_double(s.phi) << ","
            << format_double(s.u) << "," << format_double(s.v) << "\n";
    }
}

nlohmann::json samples_json(const std::vector<SpherePoint>& samples, const Metadata& meta) {
    nlohmann::json j = json_header(kSamplesSchema, meta);
    nlohmann::json rows = nlohmann::json::array();
    for (const SpherePoint& s : samples) {
        rows.push_back(
            {{"step", s.step}, {"theta", s.theta}, {"phi", s.phi}, {"u", s.u}, {"v", s.v}});
    }
    j["samples"] = std::move(rows);
    return j;
}

void write_guided_csv(std::ostream& out, const std::vector<GuidedRow>& rows, const Metadata& meta) {
    write_header(out, kGuidedSchema, meta);
    out << "n_steps,analytic,mc_rate,mc_se,trajectories\n";
    for (const GuidedRow& r : rows) {
        out << r.n_steps << "," << format_double(r.analytic) << "," << format_double(r.mc_rate)
            << "," << format_double(r.mc_se) << "," << r.trajectories << "\n";
    }
}

nlohmann::json guided_json(const std::vector<GuidedRow>& rows, const Metadata& meta) {
    nlohmann::json j = json_header(kGuidedSchema, meta);
    nlohmann::json out_rows = nlohmann::json::array();
    for (const GuidedRow& r : rows) {
        out_rows.push_back({{"n_steps", r.n_steps},
                            {"analytic", r.analytic},
                            {"mc_rate", r.mc_rate},
                            {"mc_se", r.mc_se},
                            {"trajectories", r.trajectories}});
    }
    j["rows"] = std::move(out_rows);
    return j;
}

}  // namespace qprep::io
