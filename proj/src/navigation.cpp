#include "evacsim/navigation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>

namespace evacsim {

std::vector<Cell> FloorField::best_steps(const GridMap& map, const Cell& c, const MaskLayer* blocked) const {
    std::vector<Cell> best;
    double best_value = at(c);
    for (const Cell& o : kNeighbourOffsets) {
        if (!map.can_step(c, o, blocked)) continue;
        const double v = at(c + o);
        if (v < best_value) {
            best_value = v;
            best.assign(1, c + o);
        } else if (v == best_value && !best.empty()) {
            best.push_back(c + o);
        }
    }
    return best;
}

FloorField compute_floor_field(const GridMap& map, std::span<const int> exit_ids, const MaskLayer* blocked) {
    if (exit_ids.empty()) throw UnknownExitError("floor field needs at least one exit");
    FloorField field;
    field.distance = ScalarLayer::Constant(map.width(), map.height(), kUnreachable);
    field.exit_set.assign(exit_ids.begin(), exit_ids.end());
    std::sort(field.exit_set.begin(), field.exit_set.end());
    field.exit_set.erase(std::unique(field.exit_set.begin(), field.exit_set.end()), field.exit_set.end());

    using Entry = std::pair<double, int>;  // (distance, linear index x + y*width)
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    const int w = map.width();
    for (int id : field.exit_set) {
        const ExitDef* exit = map.find_exit(id);
        if (!exit) throw UnknownExitError("unknown exit id " + std::to_string(id));
        for (const Cell& c : exit->cells) {
            if (blocked && (*blocked)(c.x, c.y)) continue;
            field.distance(c.x, c.y) = 0.0;
            open.emplace(0.0, c.x + c.y * w);
        }
    }

    const double orth = map.cell_size();
    const double diag = map.cell_size() * std::sqrt(2.0);
    while (!open.empty()) {
        const auto [d, idx] = open.top();
        open.pop();
        const Cell c{idx % w, idx / w};
        if (d > field.distance(c.x, c.y)) continue;
        for (const Cell& o : kNeighbourOffsets) {
            if (!map.can_step(c, o, blocked)) continue;
            const Cell n = c + o;
            const double nd = d + (is_diagonal(o) ? diag : orth);
            if (nd < field.distance(n.x, n.y)) {
                field.distance(n.x, n.y) = nd;
                open.emplace(nd, n.x + n.y * w);
            }
        }
    }
    return field;
}

const SignDef* visible_sign(const GridMap& map, const Vec2& observer, const ScalarLayer* smoke, double vision_range,
                            double opacity_coeff) {
    const Cell from = map.cell_of(observer);
    if (!map.in_bounds(from)) return nullptr;
    const SignDef* nearest = nullptr;
    double nearest_dist = kUnreachable;
    for (const auto& sign : map.signs()) {
        const double dist = (map.center(sign.cell) - observer).norm();
        if (dist > std::min(vision_range, sign.visibility_range) || dist >= nearest_dist) continue;
        if (!line_of_sight(map, from, sign.cell, smoke, opacity_coeff)) continue;
        nearest = &sign;
        nearest_dist = dist;
    }
    return nearest;
}

std::optional<Vec2> visible_sign_direction(const GridMap& map, const Vec2& observer, const ScalarLayer* smoke,
                                           double vision_range, double opacity_coeff) {
    const SignDef* sign = visible_sign(map, observer, smoke, vision_range, opacity_coeff);
    if (!sign) return std::nullopt;
    return sign->direction();
}

std::optional<Vec2> herding_direction(const AgentState& agent, std::span<const AgentState> neighbours, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("herding radius must be positive");
    Vec2 sum = Vec2::Zero();
    for (const auto& other : neighbours) {
        if (other.id == agent.id || other.phase != Phase::Evacuating) continue;
        if ((other.position - agent.position).norm() > radius) continue;
        sum += other.heading();
    }
    if (sum.norm() < 1e-12) return std::nullopt;
    return sum.normalized();
}

}  // namespace evacsim
