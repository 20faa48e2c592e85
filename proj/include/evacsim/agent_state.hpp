#pragma once

#include "evacsim/types.hpp"

#include <optional>
#include <set>
#include <string>
#include <variant>

namespace evacsim {

enum class Phase : std::uint8_t { Normal, Evacuating, Escaped, Incapacitated };

constexpr bool is_terminal(Phase p) { return p == Phase::Escaped || p == Phase::Incapacitated; }
std::string_view phase_name(Phase p);

/// Whether `from -> to` is a legal edge of the phase machine (self loops included).
constexpr bool phase_transition_allowed(Phase from, Phase to) {
    if (from == to) return true;
    switch (from) {
        case Phase::Normal: return to == Phase::Evacuating;
        case Phase::Evacuating: return to == Phase::Escaped || to == Phase::Incapacitated;
        default: return false;
    }
}

/// Behavioural attributes of one pedestrian.
struct AgentProfile {
    double max_speed = 1.25;     // m/s
    double vision_range = 10.0;  // m
    double reaction_time = 0.0;  // s
    double collaboration = 0.0;
    double insistence = 0.5;
    double knowledge = 1.0;
    double body_radius = 0.25;  // m
    double mass = 80.0;         // kg

    void validate() const;
    friend bool operator==(const AgentProfile&, const AgentProfile&) = default;
};

struct ExitGoal {
    int exit_id = 0;
    friend bool operator==(const ExitGoal&, const ExitGoal&) = default;
};
struct SignGoal {
    Vec2 direction = Vec2::Zero();
    std::optional<Vec2> anchor;  // centre of the sign being followed
    friend bool operator==(const SignGoal& a, const SignGoal& b) {
        return a.direction == b.direction && a.anchor == b.anchor;
    }
};
struct HerdGoal {
    Vec2 direction = Vec2::Zero();
    friend bool operator==(const HerdGoal& a, const HerdGoal& b) { return a.direction == b.direction; }
};
struct WanderGoal {
    Vec2 direction = Vec2::Zero();
    friend bool operator==(const WanderGoal& a, const WanderGoal& b) { return a.direction == b.direction; }
};

using Goal = std::variant<ExitGoal, SignGoal, HerdGoal, WanderGoal>;

/// Travel direction of a non-exit goal; nullopt for ExitGoal.
std::optional<Vec2> goal_direction(const Goal& g);
std::string describe_goal(const Goal& g);

/// Heading for a sign goal: the pointed direction, bent toward the line the
/// sign points along so that followers funnel through doors and corridors.
Vec2 sign_steering(const SignGoal& g, const Vec2& position);

struct AgentState {
    int id = 0;
    bool is_player = false;
    AgentProfile profile;
    Vec2 position = Vec2::Zero();
    Vec2 velocity = Vec2::Zero();
    double health = 100.0;
    Phase phase = Phase::Normal;
    std::optional<Goal> goal;
    std::set<int> known_exits;
    std::optional<int> helping;  // partner id while paired
    bool helper = false;         // this side of the pair leads
    bool rescued = false;        // carried out while incapacitated
    double move_credit = 0.0;    // cellular-automaton backend only
    std::optional<double> egress_time;

    double mobility() const { return phase == Phase::Incapacitated || health <= 0.0 ? 0.0 : 1.0; }
    Vec2 heading() const;
    /// Incapacitated and being carried, or already carried out.
    bool carried() const { return phase == Phase::Incapacitated && (rescued || (helping && !helper)); }
    /// Physically occupies floor space.
    bool on_floor() const { return phase != Phase::Escaped && !carried(); }

    friend bool operator==(const AgentState&, const AgentState&) = default;
};

}  // namespace evacsim
