#pragma once

#include "evacsim/agents.hpp"
#include "evacsim/events.hpp"
#include "evacsim/hazard.hpp"
#include "evacsim/navigation.hpp"
#include "evacsim/record.hpp"
#include "evacsim/rng.hpp"
#include "evacsim/scenario.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace evacsim {

enum class Backend : std::uint8_t { SocialForce, CellularAutomaton };

std::string_view backend_name(Backend b);
std::optional<Backend> parse_backend(std::string_view s);

/// The avatar: synthetic (decides like an NPC) or steered by external input.
struct PlayerSpec {
    AgentProfile profile;
    bool human = false;
    friend bool operator==(const PlayerSpec&, const PlayerSpec&) = default;
};

/// Default NPC population: speed 1.0-1.5 m/s, reaction 1-10 s, full building knowledge.
ProfileDistribution default_npc_distribution();

struct SimConfig {
    double dt = 0.05;
    Backend backend = Backend::SocialForce;
    std::uint64_t seed = 1;
    int npc_count = 30;
    double max_sim_time = 600.0;
    HazardParams hazard;
    ForceParams force;
    ProfileDistribution profile_distribution = default_npc_distribution();
    std::optional<PlayerSpec> player;

    bool fire_enabled = true;
    double opacity_coeff = 0.5;    // smoke extinction per meter per unit density
    double herding_radius = 3.0;   // m
    double decision_period = 1.0;  // s
    int field_rebuild_cells = 10;  // rebuild floor fields after this many new burning cells

    void validate() const;
    /// Canonical JSON of every field; hashed into SessionRecord::config_digest.
    std::string canonical() const;
    std::string digest() const;
    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

struct Census {
    int inside = 0;
    int escaped = 0;
    int incapacitated = 0;
    int total() const { return inside + escaped + incapacitated; }
};

struct Snapshot {
    long tick = 0;
    std::vector<AgentState> agents;  // ascending id
    HazardField hazard;
    bool alarm_active = false;
    double elapsed_since_alarm = 0.0;

    Census census() const;
    const AgentState* find(int id) const;
};

enum class SimulationMode : std::uint8_t {
    Live,      // fire, alarm and timer from tick 0
    Practice,  // no hazard, no alarm, start-room doors closed
};

struct ExternalInputs {
    std::optional<Vec2> player_move;  // components in [-1, 1]
};

class SimEndedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class CensusError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Deterministic tick loop. (map, config, mode, inputs) fully determine the
/// event log. Per tick: player input, hazard, phases, decisions (1 Hz),
/// movement, harm, escape detection, events.
class Simulation {
public:
    Simulation(const GridMap& map, SimConfig config, SimulationMode mode = SimulationMode::Live);

    void step(const ExternalInputs& inputs = {});

    const Snapshot& snapshot() const { return snap_; }
    const EventLog& events() const { return log_; }
    const SimConfig& config() const { return config_; }
    const GridMap& map() const { return map_; }
    SimulationMode mode() const { return mode_; }
    bool ended() const { return end_.has_value(); }
    std::optional<Outcome> end_reason() const { return end_; }
    std::optional<int> player_id() const { return player_id_; }
    int population() const { return static_cast<int>(snap_.agents.size()); }
    const std::map<int, FloorField>& exit_fields() const { return fields_; }
    const MaskLayer& closed_cells() const { return closed_; }

    /// Ends the run early (e.g. client disconnect).
    void abort();

private:
    void rebuild_fields();
    void decide(long now);
    void move(const ExternalInputs& inputs);
    void resolve(long now);
    void check_end(long now);
    MotionIntent intent_for(const AgentState& a, const ExternalInputs& inputs) const;
    const MaskLayer* movement_mask() const;

    GridMap map_;
    SimConfig config_;
    SimulationMode mode_;
    Snapshot snap_;
    EventLog log_;
    std::optional<Outcome> end_;
    std::optional<int> player_id_;
    std::map<int, FloorField> fields_;
    long burning_at_rebuild_ = 0;
    MaskLayer closed_;  // cells closed for movement (practice confinement)
    MaskLayer blocked_; // closed cells plus burning cells, used by fields
    Occupancy occupancy_;
    long decision_every_ = 20;
    Vec2 player_move_ = Vec2::Zero();

    RngStream rng_fire_;
    RngStream rng_decide_;
    RngStream rng_move_;
};

/// Player spawn: first spawn cell inside the start room, else the room's first
/// walkable cell, else the first spawn cell.
Cell player_spawn_cell(const GridMap& map);

/// Runs headless until every agent is terminal or max_sim_time elapses.
SessionRecord run_to_completion(const GridMap& map, const SimConfig& config);

/// Builds the record of a finished (or aborted) simulation.
SessionRecord make_record(const Simulation& sim);

}  // namespace evacsim
