#include "evacsim/cli.hpp"

#include "evacsim/engine.hpp"
#include "evacsim/experiment.hpp"
#include "evacsim/server.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

namespace evacsim::cli {

using json = nlohmann::json;

namespace {

/// Simulation flags shared by run, cohort and serve. Unset flags fall back to
/// the scenario's embedded defaults, then to SimConfig defaults.
struct SimFlags {
    std::optional<std::uint64_t> seed;
    std::optional<int> npcs;
    std::optional<std::string> backend;
    std::optional<double> dt;
    std::optional<double> max_time;

    void add_to(CLI::App& app) {
        app.add_option("--seed", seed, "Random seed");
        app.add_option("--npcs", npcs, "Number of NPC agents")->check(CLI::NonNegativeNumber);
        app.add_option("--backend", backend, "Movement backend")->check(CLI::IsMember({"ca", "force"}));
        app.add_option("--dt", dt, "Time step in seconds")->check(CLI::PositiveNumber);
        app.add_option("--max-time", max_time, "Simulated time limit in seconds")->check(CLI::PositiveNumber);
    }
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <class T>
T parse_default(const std::string& key, const std::string& value) {
    T out{};
    std::istringstream in(value);
    in >> out;
    if (!in || !in.eof()) throw UsageError("scenario default " + key + " has invalid value '" + value + "'");
    return out;
}

SimConfig build_config(const GridMap& map, const SimFlags& flags) {
    SimConfig cfg;
    for (const auto& [key, value] : map.defaults()) {
        if (key == "seed") {
            cfg.seed = parse_default<std::uint64_t>(key, value);
        } else if (key == "npcs") {
            cfg.npc_count = parse_default<int>(key, value);
        } else if (key == "backend") {
            auto b = parse_backend(value);
            if (!b) throw UsageError("scenario default backend has invalid value '" + value + "'");
            cfg.backend = *b;
        } else if (key == "dt") {
            cfg.dt = parse_default<double>(key, value);
        } else if (key == "max-time") {
            cfg.max_sim_time = parse_default<double>(key, value);
        } else {
            spdlog::warn("ignoring unknown scenario default '{}'", key);
        }
    }
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.npcs) cfg.npc_count = *flags.npcs;
    if (flags.backend) cfg.backend = *parse_backend(*flags.backend);
    if (flags.dt) cfg.dt = *flags.dt;
    if (flags.max_time) cfg.max_sim_time = *flags.max_time;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

std::string fixed(double v, int digits) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(digits) << v;
    return ss.str();
}

std::string companion_path(const std::string& out, const std::string& session_id) {
    std::filesystem::path p(out);
    return (p.parent_path() / (p.stem().string() + "." + session_id + ".json")).string();
}

void write_outputs(std::span<const SessionRecord> records, const std::string& out) {
    const auto dir = std::filesystem::path(out).parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    export_records(records, out);
    for (const auto& r : records) {
        std::ofstream f(companion_path(out, r.session_id), std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + companion_path(out, r.session_id));
        f << record_to_json(r) << "\n";
    }
}

int cmd_run(const std::string& scenario, const SimFlags& flags, const std::string& out_path, std::ostream& out) {
    const GridMap map = load_blueprint(scenario);
    const SimConfig cfg = build_config(map, flags);
    spdlog::info("running {} with seed {}", scenario, cfg.seed);
    const SessionRecord r = run_to_completion(map, cfg);

    const std::size_t census = r.events.count<event::AgentIncapacitated>();
    const double mean_egress = r.npc_egress_times.empty() ? 0.0 : mean(r.npc_egress_times);
    const std::string digest = r.events.digest();
    out << "outcome " << outcome_name(r.outcome) << "\n";
    out << "agents " << r.npc_total << "\n";
    out << "escaped " << r.npc_escaped() << "\n";
    out << "incapacitated " << census << "\n";
    out << "mean_egress_s " << fixed(mean_egress, 3) << "\n";
    out << "timeline_events " << r.events.size() << "\n";
    out << "event_log_sha256 " << digest << "\n";
    json summary = {{"outcome", std::string(outcome_name(r.outcome))},
                    {"seed", r.seed},
                    {"config_digest", r.config_digest},
                    {"agents", r.npc_total},
                    {"escaped", r.npc_escaped()},
                    {"incapacitated", census},
                    {"mean_egress_s", mean_egress},
                    {"timeline_events", r.events.size()},
                    {"event_log_sha256", digest}};
    out << json{{"summary", summary}}.dump() << "\n";
    if (!out_path.empty()) write_outputs(std::span<const SessionRecord>(&r, 1), out_path);
    return kExitOk;
}

int cmd_cohort(const std::string& scenario, const SimFlags& flags, const std::string& group_text, int runs,
               unsigned workers, const std::string& out_path, std::ostream& out) {
    const GridMap map = load_blueprint(scenario);
    SimConfig cfg = build_config(map, flags);
    const auto group = parse_group(group_text);
    if (!group) throw UsageError("unknown group '" + group_text + "'");
    const auto records = run_cohort(map, cfg, *group, runs, cfg.seed, workers);

    std::vector<double> times;
    for (const auto& r : records) {
        out << "seed " << r.seed << " outcome " << outcome_name(r.outcome) << " player_egress_s "
            << (r.player_egress_time ? fixed(*r.player_egress_time, 2) : std::string("-")) << "\n";
        if (r.player_egress_time) times.push_back(*r.player_egress_time);
    }
    const double m = times.empty() ? 0.0 : mean(times);
    out << "group " << group_name(*group) << "\n";
    out << "runs " << records.size() << "\n";
    out << "player_escaped " << times.size() << "\n";
    out << "mean_player_egress_s " << fixed(m, 1) << "\n";
    json summary = {{"group", std::string(group_name(*group))},
                    {"runs", records.size()},
                    {"seed0", cfg.seed},
                    {"player_escaped", times.size()},
                    {"mean_player_egress_s", times.empty() ? json(nullptr) : json(m)},
                    {"player_egress_s", times}};
    out << json{{"summary", summary}}.dump() << "\n";
    if (!out_path.empty()) write_outputs(records, out_path);
    return kExitOk;
}

int cmd_analyze(const std::string& log_path, std::ostream& out) {
    const auto records = import_records(log_path);
    std::vector<SessionRecord> usable;
    std::size_t skipped = 0;
    for (const auto& r : records) {
        if (r.group && r.player_egress_time) {
            usable.push_back(r);
        } else {
            ++skipped;
        }
    }
    const auto means = aggregate_means(usable);
    std::map<GroupLabel, int> counts;
    for (const auto& r : usable) ++counts[*r.group];

    out << "group mean_egress_s sessions\n";
    json j = json::object();
    for (GroupLabel g : kAllGroups) {
        auto it = means.find(g);
        if (it == means.end()) continue;
        out << group_name(g) << " " << fixed(it->second, 1) << " " << counts[g] << "\n";
        j[std::string(group_name(g))] = {{"mean_egress_s", it->second}, {"sessions", counts[g]}};
    }
    out << "skipped " << skipped << "\n";
    out << json{{"means", j}, {"skipped", skipped}}.dump() << "\n";
    return kExitOk;
}

int cmd_serve(const std::string& scenario, const SimFlags& flags, std::uint16_t port, const std::string& address,
              const std::string& log_path, std::ostream& out) {
    const GridMap map = load_blueprint(scenario);
    const SimConfig cfg = build_config(map, flags);
    ServerOptions options;
    options.address = address;
    options.port = port;
    options.log_path = log_path;
    SessionServer server(map, cfg, options);
    const auto bound = server.listen();
    out << "listening " << address << ":" << bound << "\n" << std::flush;
    spdlog::info("serving {} on {}:{}, log {}", scenario, address, bound, log_path);
    server.stop_on_signals();
    server.run();
    server.stop();
    return kExitOk;
}

void configure_logging() {
    auto logger = spdlog::get("evacsim");
    if (!logger) {
        logger = spdlog::stderr_logger_mt("evacsim");
        spdlog::set_default_logger(logger);
    }
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("EVACSIM_LOG")) {
        const auto parsed = spdlog::level::from_str(env);
        // from_str maps unknown names to off; only accept "off" when spelled out
        if (parsed != spdlog::level::off || std::string_view(env) == "off") level = parsed;
    }
    spdlog::set_level(level);
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    configure_logging();

    CLI::App app("Fire evacuation simulator: headless runs, cohort batches, log analysis and interactive sessions.",
                 "evacsim");
    app.require_subcommand(1);
    app.set_version_flag("--version", "evacsim 1.0.0");

    SimFlags run_flags, cohort_flags, serve_flags;
    std::string run_scenario, run_out;
    auto* run = app.add_subcommand("run", "Run one headless simulation and print a summary");
    run->add_option("scenario", run_scenario, "Scenario blueprint file")->required();
    run_flags.add_to(*run);
    run->add_option("--out", run_out, "Write the session record (tabular log plus companion JSON)");

    std::string cohort_scenario, cohort_group, cohort_out;
    int cohort_runs = 30;
    unsigned cohort_workers = 1;
    auto* cohort = app.add_subcommand("cohort", "Run seeded headless runs with a synthetic player of one group");
    cohort->add_option("scenario", cohort_scenario, "Scenario blueprint file")->required();
    cohort->add_option("--group", cohort_group, "Player group")->required()->check(CLI::IsMember({"A", "B", "C", "D"}));
    cohort->add_option("--runs", cohort_runs, "Number of runs; seeds are seed..seed+runs-1")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cohort->add_option("--workers", cohort_workers, "Parallel workers")->check(CLI::PositiveNumber)->capture_default_str();
    cohort_flags.add_to(*cohort);
    cohort->add_option("--out", cohort_out, "Write the session records (tabular log plus companion JSON)");

    std::string analyze_log;
    auto* analyze = app.add_subcommand("analyze", "Print mean player egress time per group from a session log");
    analyze->add_option("log", analyze_log, "Tabular session log")->required();

    std::string serve_scenario, serve_out = "sessions.csv", serve_address = "127.0.0.1";
    std::uint16_t serve_port = 8080;
    auto* serve = app.add_subcommand("serve", "Host interactive sessions over WebSocket");
    serve->add_option("scenario", serve_scenario, "Scenario blueprint file")->required();
    serve->add_option("--port", serve_port, "TCP port")->capture_default_str();
    serve->add_option("--address", serve_address, "Bind address")->capture_default_str();
    serve_flags.add_to(*serve);
    serve->add_option("--out", serve_out, "Session log file")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    std::string scenario;
    try {
        if (*run) {
            scenario = run_scenario;
            return cmd_run(run_scenario, run_flags, run_out, out);
        }
        if (*cohort) {
            scenario = cohort_scenario;
            return cmd_cohort(cohort_scenario, cohort_flags, cohort_group, cohort_runs, cohort_workers, cohort_out, out);
        }
        if (*analyze) return cmd_analyze(analyze_log, out);
        if (*serve) {
            scenario = serve_scenario;
            return cmd_serve(serve_scenario, serve_flags, serve_port, serve_address, serve_out, out);
        }
    } catch (const ScenarioError& e) {
        err << "error: scenario " << scenario << ": " << e.what() << "\n";
        return kExitScenario;
    } catch (const RecordFormatError& e) {
        err << "error: " << analyze_log << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const AnalyticsError& e) {
        err << "error: " << analyze_log << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const OvercrowdedError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace evacsim::cli
