#include "evacsim/hazard.hpp"

#include "evacsim/agents.hpp"

#include <algorithm>
#include <cmath>

namespace evacsim {

void HazardParams::validate() const {
    const bool ok = p_spread >= 0 && p_spread <= 1 && smoke_emission >= 0 && smoke_diffusion >= 0 &&
                    smoke_diffusion <= 1 && harm_threshold >= 0 && harm_rate >= 0 && fire_harm_rate >= 0;
    if (!ok) throw std::invalid_argument("hazard parameters out of range");
}

HazardField::HazardField(const GridMap& map)
    : burning(MaskLayer::Constant(map.width(), map.height(), false)),
      smoke(ScalarLayer::Zero(map.width(), map.height())) {}

std::vector<Cell> HazardField::burning_cells() const {
    std::vector<Cell> out;
    for (int y = 0; y < burning.cols(); ++y)
        for (int x = 0; x < burning.rows(); ++x)
            if (burning(x, y)) out.push_back({x, y});
    return out;
}

double per_step_probability(double per_second, double dt) {
    if (per_second >= 1.0) return 1.0;
    return 1.0 - std::pow(1.0 - per_second, dt);
}

HazardField ignite_random_room(const GridMap& map, RngStream& rng, long tick) {
    std::vector<const Room*> candidates;
    for (const auto& room : map.rooms()) {
        if (room.start) continue;
        bool any = false;
        for (int y = room.lo.y; y <= room.hi.y && !any; ++y)
            for (int x = room.lo.x; x <= room.hi.x && !any; ++x) any = map.walkable({x, y});
        if (any) candidates.push_back(&room);
    }
    if (candidates.empty()) throw NoRoomsError("no room eligible for ignition");

    const Room& room = *candidates[rng.below(candidates.size())];
    std::vector<Cell> cells;
    for (int y = room.lo.y; y <= room.hi.y; ++y)
        for (int x = room.lo.x; x <= room.hi.x; ++x)
            if (map.walkable({x, y})) cells.push_back({x, y});
    const Cell origin = cells[rng.below(cells.size())];

    HazardField field(map);
    field.burning(origin.x, origin.y) = true;
    field.ignition_room = room.name;
    field.ignition_tick = tick;
    return field;
}

HazardField step_fire(const HazardField& field, const GridMap& map, const HazardParams& params, double dt,
                      RngStream& rng) {
    HazardField next = field;
    if (params.p_spread <= 0.0) return next;
    const double q = per_step_probability(params.p_spread, dt);
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) {
            const Cell c{x, y};
            if (field.burning(x, y) || !map.walkable(c)) continue;
            bool exposed = false;
            for (const Cell& o : kOrthogonalOffsets) {
                const Cell n = c + o;
                exposed = exposed || (map.in_bounds(n) && field.burning(n.x, n.y));
            }
            if (exposed && rng.bernoulli(q)) next.burning(x, y) = true;
        }
    }
    return next;
}

HazardField step_smoke(const HazardField& field, const GridMap& map, const HazardParams& params, double dt) {
    // Pairwise exchange across each open face, with closed faces reflecting:
    // new = old + D/4 * sum_open(neighbour - old). Equals the neighbour-mean rule
    // in open space and conserves mass at walls.
    HazardField next = field;
    const double d = params.smoke_diffusion;
    const double emission = params.smoke_emission * dt;
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) {
            const Cell c{x, y};
            if (!map.walkable(c)) {
                next.smoke(x, y) = 0.0;
                continue;
            }
            const double old = field.smoke(x, y);
            double flux = 0.0;
            for (const Cell& o : kOrthogonalOffsets) {
                const Cell n = c + o;
                if (map.walkable(n)) flux += field.smoke(n.x, n.y) - old;
            }
            double v = old + d * 0.25 * flux;
            if (field.burning(x, y)) v += emission;
            // a cell a few ulps short of saturation can no longer move under
            // rounding; treat it as saturated
            if (v > 1.0 - 1e-12) v = 1.0;
            next.smoke(x, y) = std::clamp(v, 0.0, 1.0);
        }
    }
    return next;
}

AgentState apply_harm(const HazardField& field, const GridMap& map, const AgentState& agent,
                      const HazardParams& params, double dt) {
    AgentState out = agent;
    if (is_terminal(out.phase)) return out;
    const Cell c = map.cell_of(out.position);
    if (!map.in_bounds(c)) return out;
    double damage = 0.0;
    if (field.smoke(c.x, c.y) > params.harm_threshold) damage += params.harm_rate * dt;
    if (field.burning(c.x, c.y)) damage += params.fire_harm_rate * dt;
    if (damage <= 0.0) return out;
    // exposure is an evacuation cue regardless of reaction time
    if (out.phase == Phase::Normal) out.phase = Phase::Evacuating;
    out.health = std::max(0.0, out.health - damage);
    if (out.health <= 0.0) {
        out.phase = Phase::Incapacitated;
        out.velocity.setZero();
    }
    return out;
}

}  // namespace evacsim
