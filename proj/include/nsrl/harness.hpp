#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsrl/borl.hpp"
#include "nsrl/env.hpp"
#include "nsrl/ns_nac.hpp"
#include "nsrl/oracle.hpp"
#include "nsrl/trace.hpp"

namespace nsrl {

enum class Algorithm { ns_nac, borl_ns_nac, stationary_nac };

std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);

struct EnvConfig {
    std::size_t n_states = 2;
    std::size_t n_actions = 2;
    std::size_t horizon = 100;
    ScheduleMode mode = ScheduleMode::periodic_abrupt;
    std::size_t n_switches = 0;
    bool vary_rewards = false;
};

// Everything optional falls back to the budget-tuned defaults.
struct HyperConfig {
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<double> gamma;
    std::optional<std::size_t> n_restarts;
    std::optional<double> radius;
    double radius_scale = kDefaultRadiusScale;
    std::optional<std::size_t> epoch_length;
    std::optional<double> xi;
    std::optional<double> sigma;
    std::optional<double> zeta;
    double zeta_cap = kDefaultZetaCap;
    ProjectionScope projection = ProjectionScope::full_vector;
    RestartStart restart_start = RestartStart::teleport;
};

struct ExperimentConfig {
    std::string name = "run";
    Algorithm algorithm = Algorithm::ns_nac;
    EnvConfig env;
    HyperConfig hyper;
    std::vector<std::uint64_t> seeds{1};
    std::filesystem::path out_dir = "out";
    std::size_t snapshot_every = 0;
};

// Parses and validates; ConfigError names the offending field.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentConfig& config);
// Loads a config file and applies the NSRL_SEED override.
ExperimentConfig load_config(const std::filesystem::path& path);
void apply_seed_override(ExperimentConfig& config);

// FNV-1a over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

// Environment for one seed: phases and random switch times come from the
// environment stream of `seed`.
EnvironmentSchedule build_schedule(const EnvConfig& env, std::uint64_t seed);

NsNacParams resolve_ns_nac_params(const HyperConfig& hyper, Algorithm algorithm, std::size_t horizon,
                                  double delta_total, double reward_bound);
BorlSettings resolve_borl_settings(const HyperConfig& hyper, std::size_t horizon);

struct RunOutcome {
    Algorithm algorithm = Algorithm::ns_nac;
    std::uint64_t seed = 0;
    RunTrace trace;
    std::vector<double> benchmark;
    RegretResult regret;
    VariationBudget budget;
    std::vector<EpochSummary> epochs;
    nlohmann::json parameters;  // resolved hyperparameters actually used
    nlohmann::json snapshots = nlohmann::json::array();
    double wall_ms = 0.0;
};

// Benchmark, learner and regret for one seed on a given schedule. Throws
// NoConvergence when the oracle fails on a large instance.
RunOutcome execute_run(const ExperimentConfig& config, const EnvironmentSchedule& schedule, std::uint64_t seed);

void write_trace_csv(const std::filesystem::path& path, const RunTrace& trace);
void write_regret_csv(const std::filesystem::path& path, const RegretResult& regret);
void write_epochs_csv(const std::filesystem::path& path, const std::vector<EpochSummary>& epochs);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

inline constexpr const char* kTraceHeader = "t,state,action,reward,j_star,eta,segment,arm";
inline constexpr const char* kRegretHeader = "t,step_regret,cum_regret";
inline constexpr const char* kSweepHeader = "axis,value,seed,delta_r,delta_p,final_regret,wall_ms";
inline constexpr const char* kEpochsHeader = "epoch,arm,hypothesized_budget,epoch_reward,steps,probs";

struct SeedSummary {
    std::uint64_t seed = 0;
    double total_regret = 0.0;
    VariationBudget budget;
    double wall_ms = 0.0;
    std::filesystem::path directory;
};

// Runs every seed of the config, writing per-seed artifacts under
// <out>/<name>/seed-<k>/ plus a cross-seed aggregate.
std::vector<SeedSummary> cli_run(const ExperimentConfig& config, std::size_t jobs = 1);

struct SweepSpec {
    ExperimentConfig base;
    std::string axis;
    std::vector<double> values;
    std::string name = "sweep";
    std::filesystem::path out_dir = "out";
};

SweepSpec sweep_from_json(const nlohmann::json& doc);

struct SweepRow {
    std::string axis;
    double value = 0.0;
    std::uint64_t seed = 0;
    double delta_r = 0.0;
    double delta_p = 0.0;
    double final_regret = 0.0;
    double wall_ms = 0.0;
};

// Applies one axis value to a copy of the base config.
ExperimentConfig apply_axis(const ExperimentConfig& base, const std::string& axis, double value);

// Cross product of axis values and seeds; rows are flushed as runs finish
// and the file is rewritten in (value, seed) order at the end.
std::vector<SweepRow> cli_sweep(const SweepSpec& spec, std::size_t jobs = 1);

struct ReplayResult {
    RunOutcome outcome;
    bool reproduces_original = false;
    std::filesystem::path directory;
};

// Re-runs an algorithm on a persisted schedule.
ReplayResult cli_replay(const std::filesystem::path& schedule_path, Algorithm algorithm, std::uint64_t seed,
                        std::optional<std::filesystem::path> out_dir = std::nullopt);

// Command-line entry point; returns the process exit code.
int nsrl_main(int argc, const char* const* argv);

}  // namespace nsrl
