#pragma once

#include "evacsim/engine.hpp"
#include "evacsim/record.hpp"
#include "evacsim/scenario.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace evacsim {

enum class SessionPhase : std::uint8_t { Questionnaire, Practice, Live, Finished };
std::string_view session_phase_name(SessionPhase p);

struct Questionnaire {
    bool frequent_gamer = false;
    bool building_knowledge = false;
};

struct InputMessage {
    std::uint64_t seq = 0;
    Vec2 move = Vec2::Zero();
    double timestamp = 0.0;
};

/// One tick-stamped player intent, kept so a session can be replayed.
struct AppliedInput {
    long tick = 0;  // the step that consumed it produced this tick
    Vec2 move = Vec2::Zero();
    friend bool operator==(const AppliedInput&, const AppliedInput&) = default;
};

struct VisibleAgent {
    int id = 0;
    Vec2 position = Vec2::Zero();
    Vec2 velocity = Vec2::Zero();
    Phase phase = Phase::Normal;
};

struct VisibleSmoke {
    Cell cell;
    double density = 0.0;
};

/// What the client may render this tick. Only entities the avatar can see.
struct StateMessage {
    long tick = 0;
    SessionPhase phase = SessionPhase::Practice;
    Vec2 player_position = Vec2::Zero();
    Vec2 player_velocity = Vec2::Zero();
    double player_health = 100.0;
    Phase player_phase = Phase::Normal;
    std::vector<VisibleAgent> agents;
    std::vector<Cell> fire;
    std::vector<VisibleSmoke> smoke;
    std::vector<SignDef> signs;
    bool alarm_active = false;
    double elapsed_since_alarm = 0.0;
};

/// Server-side visibility test: within vision range and in line of sight
/// through walls and smoke.
bool visible_from(const GridMap& map, const Snapshot& snap, const AgentState& viewer, const Cell& target,
                  double opacity_coeff);

/// Builds the fog-of-war filtered view of `snap` for the player `player_id`.
StateMessage build_state_message(const GridMap& map, const Snapshot& snap, int player_id, SessionPhase phase,
                                 double opacity_coeff);

class SessionError : public std::runtime_error {
public:
    enum class Kind { UnknownSession, WrongPhase };
    SessionError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Per-session result of finalization, including what is needed for replay.
struct FinalizedSession {
    SessionRecord record;
    SimConfig live_config;
    std::vector<AppliedInput> inputs;
};

/// Hosts independent sessions. Each session owns one simulation; the shared
/// tabular log (and the companion files next to it) has a single writer.
class SessionManager {
public:
    /// `log_path` empty disables persistence.
    explicit SessionManager(std::string log_path = {});
    ~SessionManager();

    /// Session in Practice with the player in the start room. `player_key`
    /// identifies returning players so repeat runs can be flagged.
    std::string create_session(const GridMap& map, const SimConfig& config, const Questionnaire& answers,
                               const std::string& player_key = {});
    /// Fresh Live simulation with the same seed; ignition and alarm at tick 0.
    void start_live(const std::string& id);
    /// Returns false (and counts it) when seq is not above the last accepted seq.
    bool apply_input(const std::string& id, const InputMessage& msg);
    /// Advances the current phase by one tick. Returns true once the player
    /// is out of play in Live (escaped or incapacitated) or the run ended.
    bool tick(const std::string& id);
    StateMessage state(const std::string& id) const;
    /// Completes the record (finishing the run headless if the player is
    /// already out, aborting it otherwise) and appends it to the log. Calling
    /// again returns the stored record unchanged.
    SessionRecord finalize_session(const std::string& id);

    SessionPhase phase(const std::string& id) const;
    GroupLabel group(const std::string& id) const;
    std::size_t stale_inputs(const std::string& id) const;
    double dt(const std::string& id) const;
    const Simulation& simulation(const std::string& id) const;
    std::optional<FinalizedSession> finalized(const std::string& id) const;
    std::vector<std::string> session_ids() const;

private:
    struct Session;
    Session& find(const std::string& id);
    const Session& find(const std::string& id) const;
    void persist(const Session& s, const SessionRecord& record);

    std::string log_path_;
    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::unique_ptr<Session>> sessions_;
    std::map<std::string, int> plays_by_key_;
    std::mutex log_mutex_;
    std::uint64_t next_id_ = 1;
};

/// Replays a Live session from its config and recorded inputs, calling
/// `visit` with every snapshot (tick 0 included).
template <class Visit>
void replay_live(const GridMap& map, const SimConfig& config, const std::vector<AppliedInput>& inputs, Visit&& visit) {
    Simulation sim(map, config, SimulationMode::Live);
    visit(sim.snapshot());
    std::size_t next = 0;
    while (!sim.ended()) {
        ExternalInputs in;
        const long upcoming = sim.snapshot().tick + 1;
        while (next < inputs.size() && inputs[next].tick == upcoming) in.player_move = inputs[next++].move;
        sim.step(in);
        visit(sim.snapshot());
    }
}

}  // namespace evacsim
