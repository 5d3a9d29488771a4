#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qprep/harness.hpp"

namespace qprep::io {

// Shortest locale-independent decimal form that round-trips the value.
// All numeric output funnels through this so files are byte-stable.
std::string format_double(double value);

// Common header block written into every file: what produced it and with
// which resolved configuration, so a result can be traced and reproduced.
struct Metadata {
    std::string kind;          // subcommand or report name
    std::uint64_t seed = 0;
    nlohmann::json config;     // resolved parameters, echoed verbatim
};

void write_histogram_csv(std::ostream& out, const Histogram& hist, const Metadata& meta);
nlohmann::json histogram_json(const Histogram& hist, const Metadata& meta);

void write_samples_csv(std::ostream& out, const std::vector<SpherePoint>& samples,
                       const Metadata& meta);
nlohmann::json samples_json(const std::vector<SpherePoint>& samples, const Metadata& meta);

// One row of the guided-walk sweep: analytic success probability next to
// the Monte Carlo estimate for a given step count.
struct GuidedRow {
    int n_steps;
    double analytic;
    double mc_rate;
    double mc_se;
    long trajectories;
};

void write_guided_csv(std::ostream& out, const std::vector<GuidedRow>& rows, const Metadata& meta);
nlohmann::json guided_json(const std::vector<GuidedRow>& rows, const Metadata& meta);

}  // namespace qprep::io
