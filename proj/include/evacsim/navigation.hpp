#pragma once

#include "evacsim/agent_state.hpp"
#include "evacsim/scenario.hpp"

#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace evacsim {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Geodesic distance (meters) to the nearest goal cell of an exit set.
struct FloorField {
    ScalarLayer distance;
    std::vector<int> exit_set;

    double at(const Cell& c) const { return distance(c.x, c.y); }
    bool reachable(const Cell& c) const { return distance(c.x, c.y) < kUnreachable; }

    /// Neighbours of `c` reachable in one legal step whose distance is minimal
    /// and strictly below `c`'s. Empty at goals and unreachable cells.
    std::vector<Cell> best_steps(const GridMap& map, const Cell& c, const MaskLayer* blocked = nullptr) const;
};

class UnknownExitError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Multi-source Dijkstra over walkable cells: orthogonal step costs cell_size,
/// diagonal cell_size * sqrt(2), no corner cutting. Cells set in `blocked`
/// (e.g. burning cells) are impassable and never goals.
FloorField compute_floor_field(const GridMap& map, std::span<const int> exit_ids, const MaskLayer* blocked = nullptr);

/// Nearest sign the observer can currently read, if any.
const SignDef* visible_sign(const GridMap& map, const Vec2& observer, const ScalarLayer* smoke, double vision_range,
                            double opacity_coeff);

/// Direction of the nearest sign the observer can currently read, if any.
std::optional<Vec2> visible_sign_direction(const GridMap& map, const Vec2& observer, const ScalarLayer* smoke,
                                           double vision_range, double opacity_coeff);

/// Normalised mean heading of evacuating neighbours within `radius`.
std::optional<Vec2> herding_direction(const AgentState& agent, std::span<const AgentState> neighbours, double radius);

}  // namespace evacsim
