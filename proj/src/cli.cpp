#include <CLI11.hpp>

#include <iostream>

#include "nsrl/errors.hpp"
#include "nsrl/harness.hpp"

namespace nsrl {

namespace {

enum ExitCode : int { kOk = 0, kIoFailure = 1, kConfigInvalid = 2, kOracleFailure = 3 };

}  // namespace

int nsrl_main(int argc, const char* const* argv) {
    CLI::App app{"Non-stationary natural actor-critic laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::size_t jobs = 1;
    std::string out_override;
    auto* run = app.add_subcommand("run", "Run every seed of an experiment config");
    run->add_option("config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--jobs,-j", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
    run->add_option("--out", out_override, "Output directory (overrides the config)");

    std::string sweep_path;
    std::string axis_override;
    std::vector<double> values_override;
    auto* sweep = app.add_subcommand("sweep", "Sweep one axis over a list of values");
    sweep->add_option("spec", sweep_path, "Sweep spec (JSON)")->required();
    sweep->add_option("--jobs,-j", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
    sweep->add_option("--out", out_override, "Output directory");
    sweep->add_option("--axis", axis_override, "Axis: T, n_switches, n_states, n_actions or hyper:<name>");
    sweep->add_option("--values", values_override, "Axis values")->delimiter(',');

    std::string schedule_path;
    std::string algo = "ns-nac";
    std::uint64_t seed = 1;
    auto* replay = app.add_subcommand("replay", "Re-run an algorithm on a saved schedule");
    replay->add_option("schedule", schedule_path, "schedule.json written by run")->required();
    replay->add_option("--algo", algo, "ns-nac, borl-ns-nac or stationary-nac")->required();
    replay->add_option("--seed", seed, "Agent seed")->required();
    replay->add_option("--out", out_override, "Output directory");

    auto* budget = app.add_subcommand("budget", "Print the variation budget of a saved schedule");
    budget->add_option("schedule", schedule_path, "schedule.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigInvalid;
    }

    try {
        if (*run) {
            auto config = load_config(config_path);
            if (!out_override.empty()) config.out_dir = out_override;
            const auto summaries = cli_run(config, jobs);
            for (const auto& s : summaries)
                std::cout << "seed " << s.seed << ": total regret " << s.total_regret << " (delta_r " << s.budget.delta_r
                          << ", delta_p " << s.budget.delta_p << ") -> " << s.directory.string() << '\n';
        } else if (*sweep) {
            auto spec = sweep_from_json(read_json(sweep_path));
            apply_seed_override(spec.base);
            if (!axis_override.empty()) spec.axis = axis_override;
            if (!values_override.empty()) spec.values = values_override;
            if (!out_override.empty()) spec.out_dir = out_override;
            const auto rows = cli_sweep(spec, jobs);
            std::cout << rows.size() << " runs -> " << (spec.out_dir / spec.name / "sweep.csv").string() << '\n';
        } else if (*replay) {
            std::optional<std::filesystem::path> out;
            if (!out_override.empty()) out = out_override;
            const auto result = cli_replay(schedule_path, parse_algorithm(algo), seed, out);
            std::cout << "total regret " << result.outcome.regret.total
                      << (result.reproduces_original ? " (reproduces original run)" : "") << " -> "
                      << result.directory.string() << '\n';
        } else if (*budget) {
            const auto schedule = schedule_from_json(read_json(schedule_path));
            std::cout << to_json(variation_budget(schedule)).dump(2) << '\n';
        }
        return kOk;
    } catch (const ConfigError& e) {
        std::cerr << "nsrl: invalid configuration: " << e.what() << '\n';
        return kConfigInvalid;
    } catch (const InvalidArgument& e) {
        std::cerr << "nsrl: invalid input: " << e.what() << '\n';
        return kConfigInvalid;
    } catch (const NoConvergence& e) {
        std::cerr << "nsrl: optimal-gain oracle failed: " << e.what() << '\n';
        return kOracleFailure;
    } catch (const IoError& e) {
        std::cerr << "nsrl: I/O failure: " << e.what() << '\n';
        return kIoFailure;
    } catch (const std::exception& e) {
        std::cerr << "nsrl: " << e.what() << '\n';
        return kIoFailure;
    }
}

}  // namespace nsrl
