#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "nsrl/env.hpp"
#include "nsrl/errors.hpp"
#include "nsrl/harness.hpp"
#include "test_support.hpp"

using namespace nsrl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    static const fs::path root = fs::temp_directory_path() / ("nsrl-harness-" + std::to_string(::getpid()));
    fs::path dir = root / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::vector<std::vector<std::string>> rows;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        rows.push_back(cells);
    }
    return rows;
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "nsrl");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return nsrl_main(static_cast<int>(argv.size()), argv.data());
}

// Runs the installed binary, capturing stdout and stderr together.
int nsrl_process(const std::string& args, std::string& output) {
    const char* bin = std::getenv("NSRL_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "NSRL_BIN must point at the nsrl executable");
    const fs::path log = scratch("process") / "log.txt";
    const std::string cmd = std::string("\"") + bin + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    output = slurp(log);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json minimal_config(const fs::path& out) {
    return {{"name", "smoke"},
            {"algorithm", "ns-nac"},
            {"env", {{"n_states", 2}, {"n_actions", 2}, {"horizon", 100}, {"n_switches", 2}}},
            {"seeds", {1}},
            {"out", out.string()}};
}

fs::path write_config(const fs::path& dir, const json& doc, const std::string& name = "config.json") {
    const fs::path p = dir / name;
    std::ofstream(p) << doc.dump(2);
    return p;
}

double total_regret(const fs::path& summary) { return read_json(summary).at("total_regret").get<double>(); }

}  // namespace

TEST_CASE("run smoke test writes every artifact") {
    auto dir = scratch("smoke");
    auto cfg = write_config(dir, minimal_config(dir / "out"));
    REQUIRE(cli({"run", cfg.string()}) == 0);
    const fs::path seed_dir = dir / "out" / "smoke" / "seed-1";
    for (const char* f : {"trace.csv", "regret.csv", "schedule.json", "summary.json"})
        CHECK(fs::exists(seed_dir / f));
    CHECK(fs::exists(dir / "out" / "smoke" / "aggregate.json"));
    CHECK(fs::exists(dir / "out" / "smoke" / "mean_regret.csv"));
    CHECK_FALSE(fs::exists(seed_dir / "epochs.csv"));

    auto summary = read_json(seed_dir / "summary.json");
    CHECK(summary.at("horizon") == 100);
    CHECK(summary.at("algorithm") == "ns-nac");
    CHECK(summary.contains("delta_r"));
    CHECK(summary.contains("delta_p"));
    CHECK(summary.contains("wall_ms"));
    CHECK(read_csv(seed_dir / "trace.csv").size() == 100);
}

TEST_CASE("the binary runs the smoke config") {
    auto dir = scratch("binary");
    auto cfg = write_config(dir, minimal_config(dir / "out"));
    std::string output;
    CHECK(nsrl_process("run \"" + cfg.string() + "\"", output) == 0);
    CHECK(fs::exists(dir / "out" / "smoke" / "seed-1" / "trace.csv"));
    CHECK(nsrl_process("--help", output) == 0);
    CHECK(nsrl_process("frobnicate", output) == 2);
}

TEST_CASE("invalid step size exits 2 and names the constraint") {
    auto dir = scratch("alpha");
    auto doc = minimal_config(dir / "out");
    doc["hyper"] = {{"alpha", 0.7}};
    auto cfg = write_config(dir, doc);
    std::string output;
    CHECK(nsrl_process("run \"" + cfg.string() + "\"", output) == 2);
    CHECK(output.find("(0, 1/2)") != std::string::npos);
    CHECK(output.find("alpha") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("config validation") {
    auto dir = scratch("validation");
    auto expect_exit2 = [&](json doc) {
        auto cfg = write_config(dir, doc);
        CHECK(cli({"run", cfg.string()}) == 2);
    };
    auto base = minimal_config(dir / "out");
    auto d = base;
    d["colour"] = "blue";
    expect_exit2(d);
    d = base;
    d["algorithm"] = "q-learning";
    expect_exit2(d);
    d = base;
    d["env"]["n_switches"] = 100;
    expect_exit2(d);
    d = base;
    d["hyper"] = {{"beta", 0.5}};
    expect_exit2(d);
    d = base;
    d["hyper"] = {{"N", 0}};
    expect_exit2(d);
    d = base;
    d["hyper"] = {{"projection", "diagonal"}};
    expect_exit2(d);
    d = base;
    d["env"]["mode"] = "gradual";
    expect_exit2(d);
    CHECK(cli({"run", (dir / "missing.json").string()}) != 0);

    try {
        auto bad = base;
        bad["hyper"] = {{"gamma", 0.9}};
        config_from_json(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field == "hyper.gamma");
    }
}

TEST_CASE("same config and seed give byte-identical traces") {
    auto dir = scratch("determinism");
    auto doc = minimal_config(dir / "a");
    doc["env"] = {{"n_states", 4}, {"n_actions", 3}, {"horizon", 2000}, {"n_switches", 5}, {"vary_rewards", true}};
    doc["seeds"] = {1, 2, 3};
    auto cfg = write_config(dir, doc);
    REQUIRE(cli({"run", cfg.string()}) == 0);
    REQUIRE(cli({"run", cfg.string(), "--out", (dir / "b").string(), "--jobs", "3"}) == 0);
    for (int s = 1; s <= 3; ++s) {
        const std::string seed = "seed-" + std::to_string(s);
        CHECK(slurp(dir / "a" / "smoke" / seed / "trace.csv") == slurp(dir / "b" / "smoke" / seed / "trace.csv"));
        CHECK(slurp(dir / "a" / "smoke" / seed / "regret.csv") == slurp(dir / "b" / "smoke" / seed / "regret.csv"));
    }
    CHECK(slurp(dir / "a" / "smoke" / "seed-1" / "trace.csv") != slurp(dir / "a" / "smoke" / "seed-2" / "trace.csv"));
}

TEST_CASE("CSV headers are stable") {
    CHECK(std::string(kTraceHeader) == "t,state,action,reward,j_star,eta,segment,arm");
    CHECK(std::string(kRegretHeader) == "t,step_regret,cum_regret");
    CHECK(std::string(kSweepHeader) == "axis,value,seed,delta_r,delta_p,final_regret,wall_ms");

    auto dir = scratch("headers");
    auto cfg = write_config(dir, minimal_config(dir / "out"));
    REQUIRE(cli({"run", cfg.string()}) == 0);
    const fs::path seed_dir = dir / "out" / "smoke" / "seed-1";
    CHECK(first_line(seed_dir / "trace.csv") == "t,state,action,reward,j_star,eta,segment,arm");
    CHECK(first_line(seed_dir / "regret.csv") == "t,step_regret,cum_regret");
}

TEST_CASE("cumulative regret is the prefix sum of the file's columns") {
    auto dir = scratch("prefix");
    auto doc = minimal_config(dir / "out");
    doc["env"] = {{"n_states", 5}, {"n_actions", 3}, {"horizon", 3000}, {"n_switches", 7}, {"vary_rewards", true}};
    auto cfg = write_config(dir, doc);
    REQUIRE(cli({"run", cfg.string()}) == 0);
    const fs::path seed_dir = dir / "out" / "smoke" / "seed-1";
    auto trace = read_csv(seed_dir / "trace.csv");
    auto regret = read_csv(seed_dir / "regret.csv");
    REQUIRE(trace.size() == 3000);
    REQUIRE(regret.size() == 3000);
    double from_trace = 0.0, from_steps = 0.0;
    for (std::size_t t = 0; t < 3000; ++t) {
        CHECK(std::stoull(trace[t][0]) == t);
        const double step = std::stod(trace[t][4]) - std::stod(trace[t][3]);
        CHECK(std::stod(regret[t][1]) == step);
        from_trace += step;
        from_steps += std::stod(regret[t][1]);
        CHECK(std::stod(regret[t][2]) == from_trace);
        CHECK(std::stod(regret[t][2]) == from_steps);
        CHECK(trace[t][7].empty());
    }
    CHECK(total_regret(seed_dir / "summary.json") == from_trace);
}

TEST_CASE("sweep over T writes one row per value and seed") {
    auto dir = scratch("sweep");
    json spec = {{"base",
                  {{"name", "base"},
                   {"env", {{"n_states", 3}, {"n_actions", 2}, {"horizon", 100}, {"n_switches", 4}}},
                   {"seeds", {1, 2, 3, 4, 5}}}},
                 {"axis", "T"},
                 {"values", {5000, 10000, 20000}},
                 {"name", "horizon"},
                 {"out", (dir / "out").string()}};
    auto path = write_config(dir, spec, "sweep.json");
    REQUIRE(cli({"sweep", path.string(), "--jobs", "2"}) == 0);
    const fs::path csv = dir / "out" / "horizon" / "sweep.csv";
    CHECK(first_line(csv) == "axis,value,seed,delta_r,delta_p,final_regret,wall_ms");
    auto rows = read_csv(csv);
    REQUIRE(rows.size() == 15);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i][0] == "T");
        CHECK(std::stod(rows[i][1]) == std::vector<double>{5000, 10000, 20000}[i / 5]);
        CHECK(std::stoull(rows[i][2]) == i % 5 + 1);
    }
    CHECK(read_csv(dir / "out" / "horizon" / "sweep_summary.csv").size() == 3);
}

TEST_CASE("budget columns grow with the number of switches") {
    auto dir = scratch("switches");
    json spec = {{"base",
                  {{"env", {{"n_states", 50}, {"n_actions", 4}, {"horizon", 50000}, {"vary_rewards", true}}},
                   {"seeds", {1}}}},
                 {"axis", "n_switches"},
                 {"values", {10, 45, 100, 1000}},
                 {"name", "switches"},
                 {"out", (dir / "out").string()}};
    auto path = write_config(dir, spec, "sweep.json");
    REQUIRE(cli({"sweep", path.string()}) == 0);
    auto rows = read_csv(dir / "out" / "switches" / "sweep.csv");
    REQUIRE(rows.size() == 4);
    double prev_r = 0.0, prev_p = 0.0;
    for (const auto& r : rows) {
        const double k = std::stod(r[1]), dr = std::stod(r[3]), dp = std::stod(r[4]);
        CAPTURE(k);
        CAPTURE(dr);
        CAPTURE(dp);
        CHECK(dr > prev_r);
        CHECK(dp > prev_p);
        // the largest reward gap over 200 Beta pairs sits close to 1
        CHECK(dr >= 0.8 * k);
        CHECK(dr <= k);
        prev_r = dr;
        prev_p = dp;
    }
}

TEST_CASE("sweep validation") {
    auto dir = scratch("sweep-bad");
    json spec = {{"base", {{"env", {{"horizon", 100}}}}}, {"axis", "T"}, {"values", json::array()},
                 {"out", (dir / "out").string()}};
    auto path = write_config(dir, spec, "sweep.json");
    CHECK(cli({"sweep", path.string()}) == 2);
    spec["values"] = {100};
    spec.erase("axis");
    path = write_config(dir, spec, "sweep.json");
    CHECK(cli({"sweep", path.string()}) == 2);
    CHECK(cli({"sweep", path.string(), "--axis", "colour"}) == 2);
    CHECK(cli({"sweep", path.string(), "--axis", "hyper:alpha", "--values", "0.1,0.6"}) == 2);
    CHECK_FALSE(fs::exists(dir / "out"));
    CHECK(cli({"sweep", path.string(), "--axis", "hyper:alpha", "--values", "0.1,0.3"}) == 0);
    CHECK(read_csv(dir / "out" / "sweep" / "sweep.csv").size() == 2);
}

TEST_CASE("replay reproduces the original run") {
    auto dir = scratch("replay");
    auto doc = minimal_config(dir / "out");
    doc["env"] = {{"n_states", 4}, {"n_actions", 2}, {"horizon", 1500}, {"n_switches", 3}, {"vary_rewards", true}};
    doc["seeds"] = {7};
    auto cfg = write_config(dir, doc);
    REQUIRE(cli({"run", cfg.string()}) == 0);
    const fs::path seed_dir = dir / "out" / "smoke" / "seed-7";
    const fs::path sched = seed_dir / "schedule.json";

    REQUIRE(cli({"replay", sched.string(), "--algo", "ns-nac", "--seed", "7"}) == 0);
    const fs::path same = seed_dir / "replay-ns-nac-seed-7";
    CHECK(slurp(same / "trace.csv") == slurp(seed_dir / "trace.csv"));
    CHECK(read_json(same / "summary.json").at("reproduces_original") == true);

    REQUIRE(cli({"replay", sched.string(), "--algo", "ns-nac", "--seed", "8"}) == 0);
    const fs::path other = seed_dir / "replay-ns-nac-seed-8";
    CHECK(read_json(other / "summary.json").at("reproduces_original") == false);
    auto a = read_csv(seed_dir / "trace.csv"), b = read_csv(other / "trace.csv");
    REQUIRE(a.size() == b.size());
    bool differs = false;
    for (std::size_t t = 0; t < a.size(); ++t) {
        CHECK(a[t][4] == b[t][4]);
        differs |= a[t][2] != b[t][2];
    }
    CHECK(differs);

    auto tampered = read_json(sched);
    tampered["config"]["hyper"] = {{"alpha", 0.2}};
    std::ofstream(dir / "tampered.json") << tampered.dump();
    REQUIRE(cli({"replay", (dir / "tampered.json").string(), "--algo", "ns-nac", "--seed", "7", "--out",
                  (dir / "tampered-out").string()}) == 0);
    CHECK(read_json(dir / "tampered-out" / "summary.json").at("reproduces_original") == false);

    REQUIRE(cli({"replay", sched.string(), "--algo", "borl-ns-nac", "--seed", "7"}) == 0);
    CHECK(fs::exists(seed_dir / "replay-borl-ns-nac-seed-7" / "epochs.csv"));
}

TEST_CASE("restarts beat the stationary learner on a high-variation schedule") {
    // Phase b keeps phase a's dynamics with every reward flipped to 1 - r, so
    // a learner that has settled on phase a's best actions is wrong after
    // each switch.
    auto dir = scratch("restarts");
    Rng rng(derive_seed(11, streams::environment));
    auto pp = generate_phase_pair(10, 2, rng);
    auto flipped = pp.phase_a.rewards();
    for (auto& r : flipped) r = 1.0 - r;
    pp.phase_b = MdpSnapshot(10, 2, pp.phase_a.transitions(), flipped);
    auto schedule = EnvironmentSchedule::periodic(pp, 20000, 50, true);
    write_json(dir / "schedule.json", to_json(schedule));
    CHECK(variation_budget(schedule).delta_total >= 49.0);

    double ns = 0.0, stat = 0.0;
    for (int seed = 1; seed <= 5; ++seed) {
        const std::string s = std::to_string(seed);
        REQUIRE(cli({"replay", (dir / "schedule.json").string(), "--algo", "ns-nac", "--seed", s, "--out",
                      (dir / ("ns-" + s)).string()}) == 0);
        REQUIRE(cli({"replay", (dir / "schedule.json").string(), "--algo", "stationary-nac", "--seed", s, "--out",
                      (dir / ("stat-" + s)).string()}) == 0);
        ns += total_regret(dir / ("ns-" + s) / "summary.json") / 5.0;
        stat += total_regret(dir / ("stat-" + s) / "summary.json") / 5.0;
        CHECK(read_json(dir / ("stat-" + s) / "summary.json").at("parameters").at("N") == 1);
    }
    CAPTURE(ns);
    CAPTURE(stat);
    CHECK(ns < stat);
}

TEST_CASE("malformed schedules exit 2") {
    auto dir = scratch("malformed");
    std::ofstream(dir / "bad.json") << R"({"format": "nsrl-schedule/1", "horizon": 10})";
    CHECK(cli({"replay", (dir / "bad.json").string(), "--algo", "ns-nac", "--seed", "1"}) == 2);
    std::ofstream(dir / "junk.json") << "{ not json";
    CHECK(cli({"replay", (dir / "junk.json").string(), "--algo", "ns-nac", "--seed", "1"}) == 2);
    CHECK(cli({"budget", (dir / "bad.json").string()}) == 2);
    CHECK(cli({"replay", (dir / "bad.json").string(), "--algo", "sarsa", "--seed", "1"}) == 2);
}

TEST_CASE("oracle failure exits 3") {
    // A deterministic 13-cycle is periodic, so relative value iteration never
    // settles and the instance is too large for enumeration.
    auto dir = scratch("oracle");
    std::vector<double> p(13 * 13, 0.0), r(13, 0.0);
    for (std::size_t s = 0; s < 13; ++s) p[s * 13 + (s + 1) % 13] = 1.0;
    r[0] = 1.0;
    MdpSnapshot ring(13, 1, p, r);
    write_json(dir / "ring.json", to_json(EnvironmentSchedule::periodic({ring, ring}, 20, 0, false)));
    std::string output;
    CHECK(nsrl_process("replay \"" + (dir / "ring.json").string() + "\" --algo ns-nac --seed 1", output) == 3);
    CHECK(output.find("t = 0") != std::string::npos);
}

TEST_CASE("I/O failure exits 1") {
    auto dir = scratch("io");
    std::ofstream(dir / "blocker") << "not a directory";
    auto cfg = write_config(dir, minimal_config(dir / "blocker" / "out"));
    CHECK(cli({"run", cfg.string()}) == 1);
}

TEST_CASE("budget subcommand prints the variation budget") {
    auto dir = scratch("budget");
    Rng rng(3);
    auto pp = generate_phase_pair(6, 3, rng);
    auto schedule = EnvironmentSchedule::periodic(pp, 1000, 12, true);
    write_json(dir / "s.json", to_json(schedule));
    std::string output;
    REQUIRE(nsrl_process("budget \"" + (dir / "s.json").string() + "\"", output) == 0);
    auto doc = json::parse(output);
    auto b = variation_budget(schedule);
    CHECK(doc.at("delta_r").get<double>() == b.delta_r);
    CHECK(doc.at("delta_p").get<double>() == b.delta_p);
    CHECK(doc.at("delta_total").get<double>() == b.delta_total);
}

TEST_CASE("NSRL_SEED overrides the seed list") {
    auto dir = scratch("seed-env");
    auto doc = minimal_config(dir / "out");
    doc["seeds"] = {1, 2};
    auto cfg = write_config(dir, doc);
    ::setenv("NSRL_SEED", "9", 1);
    const int code = cli({"run", cfg.string()});
    ::unsetenv("NSRL_SEED");
    REQUIRE(code == 0);
    CHECK(fs::exists(dir / "out" / "smoke" / "seed-9" / "trace.csv"));
    CHECK_FALSE(fs::exists(dir / "out" / "smoke" / "seed-1"));

    ::setenv("NSRL_SEED", "nine", 1);
    CHECK(cli({"run", cfg.string()}) == 2);
    ::unsetenv("NSRL_SEED");
}

TEST_CASE("learner snapshots are written on request") {
    auto dir = scratch("snapshots");
    auto doc = minimal_config(dir / "out");
    doc["snapshot_every"] = 25;
    doc["hyper"] = {{"R_Q", 0.3}};
    auto cfg = write_config(dir, doc);
    REQUIRE(cli({"run", cfg.string()}) == 0);
    auto snaps = read_json(dir / "out" / "smoke" / "seed-1" / "snapshots.json");
    REQUIRE(snaps.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(snaps[i].at("t") == 25 * i);
        CHECK(snaps[i].at("policy").size() == 4);
        CHECK(l2_norm(snaps[i].at("q_table").get<std::vector<double>>()) <= 0.3 + 1e-12);
    }
}

TEST_CASE("borl runs write epoch summaries and arm tags") {
    auto dir = scratch("borl");
    auto doc = minimal_config(dir / "out");
    doc["algorithm"] = "borl-ns-nac";
    doc["env"] = {{"n_states", 3}, {"n_actions", 2}, {"horizon", 1000}, {"n_switches", 4}};
    auto cfg = write_config(dir, doc);
    REQUIRE(cli({"run", cfg.string()}) == 0);
    const fs::path seed_dir = dir / "out" / "smoke" / "seed-1";
    CHECK(first_line(seed_dir / "epochs.csv") == kEpochsHeader);
    auto epochs = read_csv(seed_dir / "epochs.csv");
    CHECK(epochs.size() == 10);
    auto trace = read_csv(seed_dir / "trace.csv");
    for (std::size_t t = 0; t < trace.size(); ++t) CHECK(trace[t][7] == epochs[t / 100][1]);
    CHECK(read_json(seed_dir / "summary.json").at("parameters").at("W") == 100);
}

TEST_CASE("config hash ignores the output directory") {
    auto a = config_from_json(minimal_config("x"));
    auto b = config_from_json(minimal_config("y"));
    CHECK(config_hash(a) == config_hash(b));
    b.hyper.alpha = 0.1;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash(a).size() == 16);
    auto round = config_from_json(to_json(a));
    CHECK(config_hash(round) == config_hash(a));
}
