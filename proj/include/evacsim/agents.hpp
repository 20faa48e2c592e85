#pragma once

#include "evacsim/agent_state.hpp"
#include "evacsim/navigation.hpp"
#include "evacsim/rng.hpp"
#include "evacsim/scenario.hpp"
#include "evacsim/social_force.hpp"

#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace evacsim {

/// How NPC profiles are drawn: speed and reaction time uniform, the rest fixed.
struct ProfileDistribution {
    double speed_min = 1.0;
    double speed_max = 1.5;
    double reaction_min = 1.0;
    double reaction_max = 10.0;
    AgentProfile fixed;  // vision, collaboration, insistence, knowledge, radius, mass

    AgentProfile sample(RngStream& rng) const;
    friend bool operator==(const ProfileDistribution&, const ProfileDistribution&) = default;
};

class OvercrowdedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Known exits sampled independently per exit with probability `knowledge`.
std::set<int> sample_known_exits(const GridMap& map, double knowledge, RngStream& rng);

/// Places `count` agents on distinct spawn cells (cells in `reserved` excluded).
std::vector<AgentState> sample_population(const GridMap& map, int count, const ProfileDistribution& dist,
                                          RngStream& rng, std::span<const Cell> reserved = {}, int first_id = 0);

/// Alarm reaction and escape transitions. Egress time is recorded on escape.
AgentState update_phase(const AgentState& agent, const GridMap& map, long alarm_tick, long now_tick, double dt);

/// Inputs shared by goal decisions.
struct DecisionContext {
    const GridMap* map = nullptr;
    const std::map<int, FloorField>* exit_fields = nullptr;  // one field per exit id
    const ScalarLayer* smoke = nullptr;
    double opacity_coeff = 0.5;  // per meter
    double herding_radius = 3.0; // m
    std::span<const AgentState> neighbours;
};

/// Goal selection with insistence-gated re-evaluation. Priority on
/// re-evaluation: nearest known exit, visible sign, herd, wander.
Goal decide_goal(const AgentState& agent, const DecisionContext& ctx, RngStream& rng);

/// Random walkable compass direction from the agent's cell (zero if boxed in).
Vec2 random_walkable_direction(const GridMap& map, const Cell& cell, RngStream& rng);

/// Adds every exit with a cell inside vision range and line of sight.
std::set<int> discover_exits(const AgentState& agent, const DecisionContext& ctx);

/// Where the movement backend should take the agent this tick.
struct MotionIntent {
    Vec2 direction = Vec2::Zero();        // unit or zero
    double speed_limit = 0.0;             // m/s before mobility
    const FloorField* field = nullptr;    // set for exit goals
};

/// Sum of driving, agent and wall terms, in m/s^2.
Vec2 social_force_acceleration(const AgentState& agent, std::span<const AgentState> neighbours, const GridMap& map,
                               const ForceParams& params, const Vec2& desired_velocity);

/// Wall term alone, in newtons.
Vec2 wall_force(const AgentState& agent, const GridMap& map, const ForceParams& params);

/// Explicit Euler step; a move into a wall or `closed` cell is rejected per axis.
AgentState step_social_force(const AgentState& agent, std::span<const AgentState> neighbours, const GridMap& map,
                             const ForceParams& params, const MotionIntent& intent, double dt,
                             const MaskLayer* closed = nullptr);

/// One agent id per cell, -1 when free.
class Occupancy {
public:
    Occupancy() = default;
    explicit Occupancy(const GridMap& map) : ids_(Layer<int>::Constant(map.width(), map.height(), -1)) {}

    int at(const Cell& c) const { return ids_(c.x, c.y); }
    bool free(const Cell& c) const { return ids_(c.x, c.y) < 0; }
    void claim(const Cell& c, int id) { ids_(c.x, c.y) = id; }
    void release(const Cell& c) { ids_(c.x, c.y) = -1; }

private:
    Layer<int> ids_;
};

struct CaStepResult {
    AgentState agent;
    bool wall_contact = false;  // no walkable cell toward the goal, ignoring other agents
};

/// Credit-based discrete move toward the intent. Mutates `occupancy` for the move.
CaStepResult step_cellular_automaton(const AgentState& agent, Occupancy& occupancy, const MotionIntent& intent,
                                     const GridMap& map, RngStream& rng, double dt,
                                     const MaskLayer* blocked = nullptr);

inline constexpr double kHelpHealthThreshold = 50.0;

/// Pairs with a visible incapacitated or injured neighbour with probability
/// `collaboration`. Only the helper's side of the pair is set here.
AgentState apply_collaboration(const AgentState& agent, std::span<const AgentState> neighbours, const GridMap& map,
                               const ScalarLayer* smoke, double opacity_coeff, RngStream& rng);

inline double paired_speed(const AgentProfile& a, const AgentProfile& b) {
    return 0.5 * std::min(a.max_speed, b.max_speed);
}

}  // namespace evacsim
