#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

// These tests drive the installed binary end to end: the QPREP_CLI
// environment variable carries its path (set by the test harness).

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* env = std::getenv("QPREP_CLI");
    REQUIRE_MESSAGE(env != nullptr, "QPREP_CLI must point at the qprep binary");
    return env;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() /
                 ("qprep_cli_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

struct CmdResult {
    int code;
    std::string out;
    std::string err;
};

CmdResult run_in(const fs::path& dir, const std::string& args) {
    std::string cmd = "cd '" + dir.string() + "' && '" + cli_path() + "' " + args +
                      " > __stdout.txt 2> __stderr.txt";
    int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return {WEXITSTATUS(rc), slurp(dir / "__stdout.txt"), slurp(dir / "__stderr.txt")};
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("missing required flags are usage errors with help text") {
    fs::path dir = fresh_dir("usage");
    CmdResult r = run_in(dir, "guided");
    CHECK(r.code == 2);
    CHECK(contains(r.err, "--n-max"));
    CHECK(contains(r.err, "Usage"));

    r = run_in(dir, "three-axis");
    CHECK(r.code == 2);
    CHECK(contains(r.err, "--theta-t"));

    r = run_in(dir, "sic-walk");
    CHECK(r.code == 2);
    CHECK(contains(r.err, "--epsilon"));

    r = run_in(dir, "plan");
    CHECK(r.code == 2);
    CHECK(contains(r.err, "--target"));
}

TEST_CASE("out-of-range parameters are usage errors") {
    fs::path dir = fresh_dir("ranges");
    CHECK(run_in(dir, "three-axis --theta-t 1.5pi --phi-t 0 --trajectories 10").code == 2);
    CHECK(run_in(dir, "three-axis --theta-t -0.1 --phi-t 0 --trajectories 10").code == 2);
    CHECK(run_in(dir, "sic-walk --epsilon 1.2 --steps 100 --sample-every 10").code == 2);
    CHECK(run_in(dir, "sic-walk --epsilon 0 --steps 100 --sample-every 10").code == 2);
    CHECK(run_in(dir, "guided --n-max 0").code == 2);
    CHECK(run_in(dir, "guided --n-max abc").code == 2);
}

TEST_CASE("hitting mode rejects the projective strength, walk mode allows it") {
    fs::path dir = fresh_dir("hitting");
    CmdResult r = run_in(dir, "sic-walk --epsilon 1 --mode hitting --trajectories 100");
    CHECK(r.code == 2);
    CHECK(contains(r.err, "epsilon < 1"));

    r = run_in(dir, "sic-walk --epsilon 1 --steps 2000 --sample-every 100 --seed 4");
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "sic_walk_out.csv"));

    r = run_in(dir,
               "sic-walk --epsilon 0.4 --mode hitting --delta 0.3 --trajectories 400 --seed 4");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "mean_steps="));
    CHECK(contains(r.out, "estimate_4_over_delta_sq="));
}

TEST_CASE("plan covers trivial, generic, and impossible requests") {
    fs::path dir = fresh_dir("plan");
    CmdResult r = run_in(dir, "plan --target 0,0");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "empty plan"));

    r = run_in(dir, "plan --target 0.5pi,0.25pi");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "step 1"));
    CHECK(contains(r.out, "joint_probability="));
    CHECK(contains(r.out, "replay_error="));

    // The antipode cannot be reached in one hop; depth 1 must fail honestly.
    r = run_in(dir, "plan --target pi,0 --max-depth 1");
    CHECK(r.code == 3);
    CHECK(contains(r.err, "planner failure"));

    r = run_in(dir, "plan --batch 5 --seed 20 --format json --out batch.json");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "max_depth_used="));
    nlohmann::json j = nlohmann::json::parse(slurp(dir / "batch.json"));
    CHECK(j.at("pairs").size() == 5);
    for (const auto& pair : j.at("pairs")) {
        CHECK(pair.at("depth").get<int>() <= 3);
        CHECK(pair.at("replay_error").get<double>() <= 1e-6);
    }
}

TEST_CASE("angles accept pi fractions and plain radians interchangeably") {
    fs::path dir = fresh_dir("pi");
    CmdResult a = run_in(dir, "plan --target 0.5pi,0.5pi --out p.csv");
    std::string first = slurp(dir / "p.csv");
    CmdResult b = run_in(dir, "plan --target 1.5707963267948966,1.5707963267948966 --out p.csv");
    CHECK(a.code == 0);
    CHECK(b.code == 0);
    CHECK(a.out == b.out);
    // The written plans differ only in the echoed target string.
    CHECK(first.substr(first.find("# joint_probability")) ==
          slurp(dir / "p.csv").substr(slurp(dir / "p.csv").find("# joint_probability")));

    // Bare and negative pi forms parse too.
    CHECK(run_in(dir, "plan --target pi,-0.5pi --out p3.csv").code == 0);
}

TEST_CASE("same seed gives identical files regardless of thread count") {
    fs::path dir = fresh_dir("determinism");
    std::string base = "three-axis --theta-t 0.25pi --phi-t 0.25pi --trajectories 3000 --seed 42";
    CHECK(run_in(dir, base + " --threads 1 --out a.csv").code == 0);
    CHECK(run_in(dir, base + " --threads 8 --out b.csv").code == 0);
    CHECK(run_in(dir, base + " --threads 8 --out c.csv").code == 0);
    std::string a = slurp(dir / "a.csv");
    CHECK(a == slurp(dir / "b.csv"));
    CHECK(a == slurp(dir / "c.csv"));
    CHECK(!a.empty());

    std::string guided = "guided --n-max 3 --trajectories 2000 --seed 9 --format json";
    CHECK(run_in(dir, guided + " --threads 1 --out g1.json").code == 0);
    CHECK(run_in(dir, guided + " --threads 8 --out g2.json").code == 0);
    CHECK(slurp(dir / "g1.json") == slurp(dir / "g2.json"));
}

TEST_CASE("config file values apply and explicit flags override them") {
    fs::path dir = fresh_dir("config");
    {
        std::ofstream cfg(dir / "cfg.json");
        cfg << R"({"theta_t": "0.3pi", "phi_t": 0.1, "trajectories": 400, "seed": 6})";
    }
    CmdResult r = run_in(dir, "three-axis --config cfg.json --out c1.csv");
    CHECK(r.code == 0);
    nlohmann::json m1 = nlohmann::json::parse(slurp(dir / "c1.csv.manifest.json"));
    CHECK(m1.at("parameters").at("theta_t").get<double>() ==
          doctest::Approx(0.3 * std::numbers::pi).epsilon(1e-15));
    CHECK(m1.at("parameters").at("trajectories").get<long>() == 400);
    CHECK(m1.at("seed").get<long>() == 6);

    r = run_in(dir, "three-axis --config cfg.json --trajectories 700 --out c2.csv");
    CHECK(r.code == 0);
    nlohmann::json m2 = nlohmann::json::parse(slurp(dir / "c2.csv.manifest.json"));
    CHECK(m2.at("parameters").at("trajectories").get<long>() == 700);
    CHECK(m2.at("parameters").at("theta_t").get<double>() ==
          doctest::Approx(0.3 * std::numbers::pi).epsilon(1e-15));

    // A config that still misses a required parameter is a usage error.
    {
        std::ofstream cfg(dir / "partial.json");
        cfg << R"({"phi_t": 0.1})";
    }
    CHECK(run_in(dir, "three-axis --config partial.json").code == 2);
}

TEST_CASE("a manifest reproduces its run byte for byte") {
    fs::path dir = fresh_dir("manifest");
    CHECK(run_in(dir, "three-axis --theta-t 0.2pi --phi-t 0.4 --trajectories 1500 --seed 77 "
                      "--out m1.csv")
              .code == 0);
    std::string original = slurp(dir / "m1.csv");
    CHECK(run_in(dir, "three-axis --config m1.csv.manifest.json").code == 0);
    CHECK(slurp(dir / "m1.csv") == original);

    CHECK(run_in(dir, "sic-walk --epsilon 0.8 --steps 5000 --sample-every 100 --seed 5 "
                      "--format json --out w.json")
              .code == 0);
    std::string walk_original = slurp(dir / "w.json");
    CHECK(run_in(dir, "sic-walk --config w.json.manifest.json").code == 0);
    CHECK(slurp(dir / "w.json") == walk_original);
}

TEST_CASE("unwritable outputs and unreadable configs are io errors") {
    fs::path dir = fresh_dir("io");
    CHECK(run_in(dir, "three-axis --theta-t 0.1 --phi-t 0.1 --trajectories 10 "
                      "--out /nonexistent_dir_qq/x.csv")
              .code == 4);
    CHECK(run_in(dir, "three-axis --theta-t 0.1 --phi-t 0.1 --config nope.json").code == 4);
    {
        std::ofstream cfg(dir / "broken.json");
        cfg << "{{{";
    }
    CHECK(run_in(dir, "three-axis --theta-t 0.1 --phi-t 0.1 --config broken.json").code == 4);
}

TEST_CASE("default output names follow the subcommand") {
    fs::path dir = fresh_dir("defaults");
    CHECK(run_in(dir, "sic-walk --epsilon 0.7 --steps 1000 --sample-every 100").code == 0);
    CHECK(fs::exists(dir / "sic_walk_out.csv"));
    CHECK(fs::exists(dir / "sic_walk_out.csv.manifest.json"));

    CHECK(run_in(dir, "guided --n-max 2 --trajectories 500").code == 0);
    CHECK(fs::exists(dir / "guided_out.csv"));

    CmdResult r = run_in(dir, "--version");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "0.1.0"));
}
