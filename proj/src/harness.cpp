#include "nsrl/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "nsrl/errors.hpp"

namespace nsrl {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::ns_nac: return "ns-nac";
        case Algorithm::borl_ns_nac: return "borl-ns-nac";
        case Algorithm::stationary_nac: return "stationary-nac";
    }
    return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
    if (name == "ns-nac") return Algorithm::ns_nac;
    if (name == "borl-ns-nac") return Algorithm::borl_ns_nac;
    if (name == "stationary-nac") return Algorithm::stationary_nac;
    throw ConfigError("algorithm", "expected one of ns-nac, borl-ns-nac, stationary-nac; got '" + name + "'");
}

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) throw ConfigError(where.empty() ? key : where + "." + key, "unknown key");
}

template <typename T>
T get_field(const json& obj, const std::string& key, const std::string& path) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(path, std::string("wrong type: ") + e.what());
    }
}

std::size_t get_count(const json& obj, const std::string& key, const std::string& path) {
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError(path, "expected a nonnegative integer");
    return v.get<std::size_t>();
}

void check_step(double v, const std::string& path) {
    if (!(v > 0.0 && v < 0.5)) throw ConfigError(path, "step size must lie in (0, 1/2), got " + fmt::format("{}", v));
}

}  // namespace

ExperimentConfig config_from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("<root>", "config must be a JSON object");
    reject_unknown_keys(doc, {"name", "algorithm", "env", "hyper", "seeds", "out", "snapshot_every"}, "");
    ExperimentConfig c;
    if (doc.contains("name")) c.name = get_field<std::string>(doc, "name", "name");
    if (c.name.empty() || c.name.find('/') != std::string::npos)
        throw ConfigError("name", "must be a nonempty name without '/'");
    if (doc.contains("algorithm")) c.algorithm = parse_algorithm(get_field<std::string>(doc, "algorithm", "algorithm"));

    if (doc.contains("env")) {
        const auto& e = doc.at("env");
        if (!e.is_object()) throw ConfigError("env", "must be an object");
        reject_unknown_keys(e, {"n_states", "n_actions", "horizon", "mode", "n_switches", "vary_rewards"}, "env");
        if (e.contains("n_states")) c.env.n_states = get_count(e, "n_states", "env.n_states");
        if (e.contains("n_actions")) c.env.n_actions = get_count(e, "n_actions", "env.n_actions");
        if (e.contains("horizon")) c.env.horizon = get_count(e, "horizon", "env.horizon");
        if (e.contains("n_switches")) c.env.n_switches = get_count(e, "n_switches", "env.n_switches");
        if (e.contains("vary_rewards")) c.env.vary_rewards = get_field<bool>(e, "vary_rewards", "env.vary_rewards");
        if (e.contains("mode")) {
            try {
                c.env.mode = parse_schedule_mode(get_field<std::string>(e, "mode", "env.mode"));
            } catch (const InvalidArgument& err) {
                throw ConfigError("env.mode", err.what());
            }
        }
    }
    if (c.env.n_states < 1) throw ConfigError("env.n_states", "must be at least 1");
    if (c.env.n_actions < 1) throw ConfigError("env.n_actions", "must be at least 1");
    if (c.env.horizon < 1) throw ConfigError("env.horizon", "must be at least 1");
    if (c.env.mode == ScheduleMode::gradual && c.env.n_switches != 0)
        throw ConfigError("env.n_switches", "gradual schedules take no switches");
    if (c.env.n_switches > 0 && c.env.n_switches + 1 > c.env.horizon)
        throw ConfigError("env.n_switches", "must be at most horizon - 1");
    if (c.algorithm == Algorithm::borl_ns_nac && c.env.horizon < 2)
        throw ConfigError("env.horizon", "borl-ns-nac needs a horizon of at least 2");

    if (doc.contains("hyper")) {
        const auto& h = doc.at("hyper");
        if (!h.is_object()) throw ConfigError("hyper", "must be an object");
        reject_unknown_keys(h,
                            {"alpha", "beta", "gamma", "N", "R_Q", "rq_scale", "W", "xi", "sigma", "zeta", "zeta_cap",
                             "projection", "restart_start"},
                            "hyper");
        auto& hp = c.hyper;
        if (h.contains("alpha")) check_step(*(hp.alpha = get_field<double>(h, "alpha", "hyper.alpha")), "hyper.alpha");
        if (h.contains("beta")) check_step(*(hp.beta = get_field<double>(h, "beta", "hyper.beta")), "hyper.beta");
        if (h.contains("gamma")) check_step(*(hp.gamma = get_field<double>(h, "gamma", "hyper.gamma")), "hyper.gamma");
        if (h.contains("N")) {
            hp.n_restarts = get_count(h, "N", "hyper.N");
            if (*hp.n_restarts < 1 || *hp.n_restarts > c.env.horizon)
                throw ConfigError("hyper.N", "restart count must lie in [1, T]");
        }
        if (h.contains("R_Q")) {
            hp.radius = get_field<double>(h, "R_Q", "hyper.R_Q");
            if (!(*hp.radius > 0.0)) throw ConfigError("hyper.R_Q", "projection radius must be positive");
        }
        if (h.contains("rq_scale")) {
            hp.radius_scale = get_field<double>(h, "rq_scale", "hyper.rq_scale");
            if (!(hp.radius_scale > 0.0)) throw ConfigError("hyper.rq_scale", "must be positive");
        }
        if (h.contains("W")) {
            hp.epoch_length = get_count(h, "W", "hyper.W");
            if (*hp.epoch_length < 1 || *hp.epoch_length > c.env.horizon)
                throw ConfigError("hyper.W", "epoch length must lie in [1, T]");
        }
        if (h.contains("xi")) {
            hp.xi = get_field<double>(h, "xi", "hyper.xi");
            if (!(*hp.xi > 0.0)) throw ConfigError("hyper.xi", "must be positive");
        }
        if (h.contains("sigma")) {
            hp.sigma = get_field<double>(h, "sigma", "hyper.sigma");
            if (!(*hp.sigma >= 0.0)) throw ConfigError("hyper.sigma", "must be nonnegative");
        }
        if (h.contains("zeta")) {
            hp.zeta = get_field<double>(h, "zeta", "hyper.zeta");
            if (!(*hp.zeta > 0.0 && *hp.zeta < 1.0)) throw ConfigError("hyper.zeta", "must lie in (0, 1)");
        }
        if (h.contains("zeta_cap")) {
            hp.zeta_cap = get_field<double>(h, "zeta_cap", "hyper.zeta_cap");
            if (!(hp.zeta_cap > 0.0 && hp.zeta_cap < 1.0)) throw ConfigError("hyper.zeta_cap", "must lie in (0, 1)");
        }
        if (h.contains("projection"))
            hp.projection = parse_projection_scope(get_field<std::string>(h, "projection", "hyper.projection"));
        if (h.contains("restart_start"))
            hp.restart_start = parse_restart_start(get_field<std::string>(h, "restart_start", "hyper.restart_start"));
    }

    if (doc.contains("seeds")) {
        const auto& s = doc.at("seeds");
        if (!s.is_array()) throw ConfigError("seeds", "must be an array of integers");
        c.seeds.clear();
        for (const auto& v : s) {
            if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError("seeds", "seeds must be nonnegative integers");
            c.seeds.push_back(v.get<std::uint64_t>());
        }
    }
    if (c.seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
    if (doc.contains("out")) c.out_dir = get_field<std::string>(doc, "out", "out");
    if (doc.contains("snapshot_every")) c.snapshot_every = get_count(doc, "snapshot_every", "snapshot_every");
    return c;
}

json to_json(const ExperimentConfig& c) {
    json hyper = json::object();
    const auto& h = c.hyper;
    if (h.alpha) hyper["alpha"] = *h.alpha;
    if (h.beta) hyper["beta"] = *h.beta;
    if (h.gamma) hyper["gamma"] = *h.gamma;
    if (h.n_restarts) hyper["N"] = *h.n_restarts;
    if (h.radius) hyper["R_Q"] = *h.radius;
    hyper["rq_scale"] = h.radius_scale;
    if (h.epoch_length) hyper["W"] = *h.epoch_length;
    if (h.xi) hyper["xi"] = *h.xi;
    if (h.sigma) hyper["sigma"] = *h.sigma;
    if (h.zeta) hyper["zeta"] = *h.zeta;
    hyper["zeta_cap"] = h.zeta_cap;
    hyper["projection"] = to_string(h.projection);
    hyper["restart_start"] = to_string(h.restart_start);
    return {
        {"name", c.name},
        {"algorithm", to_string(c.algorithm)},
        {"env",
         {{"n_states", c.env.n_states},
          {"n_actions", c.env.n_actions},
          {"horizon", c.env.horizon},
          {"mode", to_string(c.env.mode)},
          {"n_switches", c.env.n_switches},
          {"vary_rewards", c.env.vary_rewards}}},
        {"hyper", hyper},
        {"seeds", c.seeds},
        {"out", c.out_dir.string()},
        {"snapshot_every", c.snapshot_every},
    };
}

void apply_seed_override(ExperimentConfig& config) {
    if (const char* env = std::getenv("NSRL_SEED"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const unsigned long long seed = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0') throw ConfigError("NSRL_SEED", "expected an unsigned integer");
        config.seeds = {static_cast<std::uint64_t>(seed)};
    }
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
    }
}

ExperimentConfig load_config(const fs::path& path) {
    auto config = config_from_json(read_json(path));
    apply_seed_override(config);
    return config;
}

std::string config_hash(const ExperimentConfig& config) {
    json doc = to_json(config);
    doc.erase("out");
    const std::string text = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

EnvironmentSchedule build_schedule(const EnvConfig& env, std::uint64_t seed) {
    Rng rng(derive_seed(seed, streams::environment));
    auto phases = generate_phase_pair(env.n_states, env.n_actions, rng);
    EnvironmentSchedule schedule = [&] {
        switch (env.mode) {
            case ScheduleMode::periodic_abrupt:
                return EnvironmentSchedule::periodic(std::move(phases), env.horizon, env.n_switches, env.vary_rewards);
            case ScheduleMode::random_abrupt:
                return EnvironmentSchedule::random(std::move(phases), env.horizon, env.n_switches, env.vary_rewards, rng);
            case ScheduleMode::gradual:
                break;
        }
        return EnvironmentSchedule::gradual(std::move(phases), env.horizon, env.vary_rewards);
    }();
    schedule.seed = seed;
    return schedule;
}

NsNacParams resolve_ns_nac_params(const HyperConfig& hyper, Algorithm algorithm, std::size_t horizon,
                                  double delta_total, double reward_bound) {
    NsNacParams p = default_hyperparameters(horizon, delta_total, reward_bound, hyper.radius_scale);
    if (hyper.alpha) p.actor_step = *hyper.alpha;
    if (hyper.beta) p.critic_step = *hyper.beta;
    if (hyper.gamma) p.reward_step = *hyper.gamma;
    if (hyper.n_restarts) p.n_restarts = *hyper.n_restarts;
    if (hyper.radius) p.projection_radius = *hyper.radius;
    if (algorithm == Algorithm::stationary_nac) p.n_restarts = 1;
    p.projection = hyper.projection;
    p.restart_start = hyper.restart_start;
    p.validate();
    return p;
}

BorlSettings resolve_borl_settings(const HyperConfig& hyper, std::size_t horizon) {
    BorlSettings s;
    s.horizon = horizon;
    s.epoch_length = hyper.epoch_length.value_or(0);
    s.xi = hyper.xi;
    s.sigma = hyper.sigma;
    s.zeta = hyper.zeta;
    s.zeta_cap = hyper.zeta_cap;
    s.radius_scale = hyper.radius_scale;
    s.projection = hyper.projection;
    s.restart_start = hyper.restart_start;
    return s;
}

namespace {

json params_to_json(const NsNacParams& p) {
    return {{"alpha", p.actor_step},
            {"beta", p.critic_step},
            {"gamma", p.reward_step},
            {"N", p.n_restarts},
            {"H", p.segment_length()},
            {"R_Q", p.projection_radius},
            {"projection", to_string(p.projection)},
            {"restart_start", to_string(p.restart_start)}};
}

}  // namespace

RunOutcome execute_run(const ExperimentConfig& config, const EnvironmentSchedule& schedule, std::uint64_t seed) {
    const auto started = std::chrono::steady_clock::now();
    RunOutcome out;
    out.algorithm = config.algorithm;
    out.seed = seed;
    out.budget = variation_budget(schedule);
    out.benchmark = benchmark_series(schedule, true);
    const std::size_t horizon = schedule.horizon();

    if (config.algorithm == Algorithm::borl_ns_nac) {
        const auto settings = resolve_borl_settings(config.hyper, horizon);
        auto result = run_borl(settings, schedule, seed);
        out.trace = std::move(result.trace);
        out.epochs = std::move(result.epochs);
        out.parameters = {{"W", settings.epoch_length == 0 ? default_epoch_length(horizon) : settings.epoch_length},
                          {"xi", result.rates.xi},
                          {"sigma", result.rates.sigma},
                          {"zeta", result.rates.zeta},
                          {"arms", arm_grid(horizon)},
                          {"R_Q_scale", settings.radius_scale}};
    } else {
        const auto params = resolve_ns_nac_params(config.hyper, config.algorithm, horizon, out.budget.delta_total,
                                                  schedule.reward_bound());
        StepObserver observer;
        if (config.snapshot_every > 0) {
            observer = [&out, every = config.snapshot_every](std::size_t t, const LearnerState& s) {
                if (t % every != 0) return;
                out.snapshots.push_back({{"t", t},
                                         {"segment", s.segment},
                                         {"eta", s.eta},
                                         {"policy", s.policy.probs()},
                                         {"q_table", s.q_table}});
            };
        }
        out.trace = run_ns_nac(params, schedule, seed, observer);
        out.parameters = params_to_json(params);
    }
    out.trace.seed = seed;
    out.trace.config_hash = config_hash(config);
    out.trace.budget = out.budget;
    attach_benchmark(out.trace, out.benchmark);
    out.regret = dynamic_regret(out.trace, out.benchmark);
    out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return out;
}

namespace {

std::ofstream open_output(const fs::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

void write_trace_csv(const fs::path& path, const RunTrace& trace) {
    auto out = open_output(path);
    out << kTraceHeader << '\n';
    std::string line;
    for (const auto& r : trace.records) {
        line = fmt::format("{},{},{},{},{},{},{},", r.t, r.state, r.action, r.reward, r.j_star, r.eta, r.segment);
        if (r.arm) line += fmt::format("{}", *r.arm);
        out << line << '\n';
    }
    finish(out, path);
}

void write_regret_csv(const fs::path& path, const RegretResult& regret) {
    auto out = open_output(path);
    out << kRegretHeader << '\n';
    if (regret.steps.size() != regret.cumulative.size())
        throw LengthMismatch("write_regret_csv: step and cumulative columns differ in length");
    for (std::size_t t = 0; t < regret.cumulative.size(); ++t)
        out << fmt::format("{},{},{}\n", t, regret.steps[t], regret.cumulative[t]);
    finish(out, path);
}

void write_epochs_csv(const fs::path& path, const std::vector<EpochSummary>& epochs) {
    auto out = open_output(path);
    out << kEpochsHeader << '\n';
    for (const auto& e : epochs) {
        std::string probs;
        for (std::size_t j = 0; j < e.probs.size(); ++j) probs += (j ? ";" : "") + fmt::format("{}", e.probs[j]);
        out << fmt::format("{},{},{},{},{},{}\n", e.epoch, e.arm, e.hypothesized_budget, e.epoch_reward, e.steps, probs);
    }
    finish(out, path);
}

void write_json(const fs::path& path, const json& doc) {
    auto out = open_output(path);
    out << doc.dump(2) << '\n';
    finish(out, path);
}

namespace {

// Runs task(i) for i in [0, n) on up to `jobs` threads; rethrows the first failure.
template <typename Task>
void parallel_for(std::size_t n, std::size_t jobs, Task task) {
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w)
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
}

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& xs) {
    MeanSd m;
    if (xs.empty()) return m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        m.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return m;
}

json summary_json(const ExperimentConfig& config, const RunOutcome& o) {
    return {{"algorithm", to_string(o.algorithm)},
            {"seed", o.seed},
            {"config_hash", o.trace.config_hash},
            {"horizon", o.trace.size()},
            {"total_regret", o.regret.total},
            {"delta_r", o.budget.delta_r},
            {"delta_p", o.budget.delta_p},
            {"delta_total", o.budget.delta_total},
            {"wall_ms", o.wall_ms},
            {"parameters", o.parameters},
            {"name", config.name}};
}

void write_run_files(const fs::path& dir, const ExperimentConfig& config, const RunOutcome& o) {
    write_trace_csv(dir / "trace.csv", o.trace);
    write_regret_csv(dir / "regret.csv", o.regret);
    if (!o.epochs.empty()) write_epochs_csv(dir / "epochs.csv", o.epochs);
    if (!o.snapshots.empty()) write_json(dir / "snapshots.json", o.snapshots);
    write_json(dir / "summary.json", summary_json(config, o));
}

}  // namespace

std::vector<SeedSummary> cli_run(const ExperimentConfig& config, std::size_t jobs) {
    const fs::path root = config.out_dir / config.name;
    std::vector<SeedSummary> summaries(config.seeds.size());
    std::vector<std::vector<double>> curves(config.seeds.size());
    const std::string hash = config_hash(config);

    parallel_for(config.seeds.size(), jobs, [&](std::size_t i) {
        const std::uint64_t seed = config.seeds[i];
        const auto schedule = build_schedule(config.env, seed);
        const auto outcome = execute_run(config, schedule, seed);
        const fs::path dir = root / fmt::format("seed-{}", seed);

        json sched = to_json(schedule);
        sched["config"] = to_json(config);
        sched["config_hash"] = hash;
        sched["algorithm"] = to_string(config.algorithm);
        write_json(dir / "schedule.json", sched);
        write_run_files(dir, config, outcome);

        summaries[i] = {seed, outcome.regret.total, outcome.budget, outcome.wall_ms, dir};
        curves[i] = outcome.regret.cumulative;
    });

    std::vector<double> totals;
    json per_seed = json::array();
    for (const auto& s : summaries) {
        totals.push_back(s.total_regret);
        per_seed.push_back({{"seed", s.seed},
                            {"total_regret", s.total_regret},
                            {"delta_r", s.budget.delta_r},
                            {"delta_p", s.budget.delta_p}});
    }
    const auto stats = mean_sd(totals);
    write_json(root / "aggregate.json", {{"name", config.name},
                                         {"algorithm", to_string(config.algorithm)},
                                         {"config_hash", hash},
                                         {"per_seed", per_seed},
                                         {"n_seeds", totals.size()},
                                         {"mean_total_regret", stats.mean},
                                         {"sd_total_regret", stats.sd}});

    // Cross-seed mean curve; every seed shares the horizon.
    auto out = open_output(root / "mean_regret.csv");
    out << "t,mean_cum_regret,sd_cum_regret\n";
    const std::size_t horizon = curves.empty() ? 0 : curves.front().size();
    std::vector<double> column(curves.size());
    for (std::size_t t = 0; t < horizon; ++t) {
        for (std::size_t k = 0; k < curves.size(); ++k) column[k] = curves[k][t];
        const auto m = mean_sd(column);
        out << fmt::format("{},{},{}\n", t, m.mean, m.sd);
    }
    finish(out, root / "mean_regret.csv");
    return summaries;
}

SweepSpec sweep_from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("<root>", "sweep spec must be a JSON object");
    reject_unknown_keys(doc, {"base", "axis", "values", "name", "out"}, "");
    SweepSpec spec;
    spec.base = config_from_json(doc.value("base", json::object()));
    if (doc.contains("axis")) spec.axis = get_field<std::string>(doc, "axis", "axis");
    if (doc.contains("values")) {
        const auto& v = doc.at("values");
        if (!v.is_array()) throw ConfigError("values", "must be an array of numbers");
        for (const auto& x : v) {
            if (!x.is_number()) throw ConfigError("values", "must be an array of numbers");
            spec.values.push_back(x.get<double>());
        }
    }
    if (doc.contains("name")) spec.name = get_field<std::string>(doc, "name", "name");
    if (doc.contains("out")) spec.out_dir = get_field<std::string>(doc, "out", "out");
    else spec.out_dir = spec.base.out_dir;
    return spec;
}

ExperimentConfig apply_axis(const ExperimentConfig& base, const std::string& axis, double value) {
    json doc = to_json(base);
    auto as_count = [&](const char* field) {
        if (!(value >= 0.0) || std::floor(value) != value) throw ConfigError(field, "axis value must be a nonnegative integer");
        return static_cast<std::size_t>(value);
    };
    if (axis == "T" || axis == "horizon") doc["env"]["horizon"] = as_count("env.horizon");
    else if (axis == "n_switches") doc["env"]["n_switches"] = as_count("env.n_switches");
    else if (axis == "n_states" || axis == "S") doc["env"]["n_states"] = as_count("env.n_states");
    else if (axis == "n_actions" || axis == "A") doc["env"]["n_actions"] = as_count("env.n_actions");
    else if (axis.rfind("hyper:", 0) == 0) {
        const std::string key = axis.substr(6);
        if (key == "N" || key == "W") doc["hyper"][key] = as_count(("hyper." + key).c_str());
        else if (key == "alpha" || key == "beta" || key == "gamma" || key == "R_Q" || key == "xi" || key == "sigma" ||
                 key == "zeta" || key == "zeta_cap" || key == "rq_scale")
            doc["hyper"][key] = value;
        else throw ConfigError("axis", "unknown hyperparameter '" + key + "'");
    } else {
        throw ConfigError("axis", "unknown axis '" + axis + "'");
    }
    return config_from_json(doc);
}

std::vector<SweepRow> cli_sweep(const SweepSpec& spec, std::size_t jobs) {
    if (spec.axis.empty()) throw ConfigError("axis", "a sweep axis is required");
    if (spec.values.empty()) throw ConfigError("values", "the sweep axis has no values");
    // Validate every point before running anything.
    std::vector<ExperimentConfig> points;
    for (double v : spec.values) points.push_back(apply_axis(spec.base, spec.axis, v));

    const fs::path root = spec.out_dir / spec.name;
    const fs::path csv = root / "sweep.csv";
    const auto& seeds = spec.base.seeds;
    std::vector<SweepRow> rows(points.size() * seeds.size());
    {
        auto out = open_output(csv);
        out << kSweepHeader << '\n';
        finish(out, csv);
    }
    std::mutex io;
    auto format_row = [](const SweepRow& r) {
        return fmt::format("{},{},{},{},{},{},{}\n", r.axis, r.value, r.seed, r.delta_r, r.delta_p, r.final_regret,
                           r.wall_ms);
    };

    parallel_for(rows.size(), jobs, [&](std::size_t i) {
        const auto& config = points[i / seeds.size()];
        const std::uint64_t seed = seeds[i % seeds.size()];
        const auto schedule = build_schedule(config.env, seed);
        const auto outcome = execute_run(config, schedule, seed);
        SweepRow row{spec.axis, spec.values[i / seeds.size()], seed, outcome.budget.delta_r, outcome.budget.delta_p,
                     outcome.regret.total, outcome.wall_ms};
        rows[i] = row;
        std::lock_guard lock(io);
        std::ofstream out(csv, std::ios::app);
        out << format_row(row);
        if (!out) throw IoError("write failed for " + csv.string());
    });

    auto out = open_output(csv);
    out << kSweepHeader << '\n';
    for (const auto& r : rows) out << format_row(r);
    finish(out, csv);

    auto summary = open_output(root / "sweep_summary.csv");
    summary << "axis,value,n_seeds,mean_final_regret,sd_final_regret\n";
    for (std::size_t p = 0; p < points.size(); ++p) {
        std::vector<double> finals;
        for (std::size_t k = 0; k < seeds.size(); ++k) finals.push_back(rows[p * seeds.size() + k].final_regret);
        const auto m = mean_sd(finals);
        summary << fmt::format("{},{},{},{},{}\n", spec.axis, spec.values[p], finals.size(), m.mean, m.sd);
    }
    finish(summary, root / "sweep_summary.csv");
    return rows;
}

ReplayResult cli_replay(const fs::path& schedule_path, Algorithm algorithm, std::uint64_t seed,
                        std::optional<fs::path> out_dir) {
    const json doc = read_json(schedule_path);
    EnvironmentSchedule schedule = [&] {
        try {
            return schedule_from_json(doc);
        } catch (const InvalidArgument& e) {
            throw ConfigError(schedule_path.string(), e.what());
        }
    }();

    ExperimentConfig config;
    bool hash_ok = false;
    if (doc.contains("config")) {
        config = config_from_json(doc.at("config"));
        hash_ok = doc.contains("config_hash") && doc.at("config_hash").is_string() &&
                  doc.at("config_hash").get<std::string>() == config_hash(config);
    }
    const bool same_algorithm = config.algorithm == algorithm;
    const bool same_seed = schedule.seed && *schedule.seed == seed;
    config.algorithm = algorithm;
    config.seeds = {seed};
    config.env.horizon = schedule.horizon();
    config.env.n_states = schedule.n_states();
    config.env.n_actions = schedule.n_actions();

    ReplayResult result;
    result.outcome = execute_run(config, schedule, seed);
    result.reproduces_original = hash_ok && same_algorithm && same_seed;
    result.directory = out_dir ? *out_dir
                               : schedule_path.parent_path() /
                                     fmt::format("replay-{}-seed-{}", to_string(algorithm), seed);
    write_run_files(result.directory, config, result.outcome);
    json summary = summary_json(config, result.outcome);
    summary["reproduces_original"] = result.reproduces_original;
    summary["schedule"] = schedule_path.string();
    write_json(result.directory / "summary.json", summary);
    return result;
}

}  // namespace nsrl
