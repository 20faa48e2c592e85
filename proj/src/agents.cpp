#include "evacsim/agents.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace evacsim {

namespace {
constexpr double kCreditEps = 1e-9;
constexpr double kPhaseEps = 1e-9;
}  // namespace

std::string_view phase_name(Phase p) {
    switch (p) {
        case Phase::Normal: return "Normal";
        case Phase::Evacuating: return "Evacuating";
        case Phase::Escaped: return "Escaped";
        case Phase::Incapacitated: return "Incapacitated";
    }
    return "?";
}

void AgentProfile::validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!(max_speed > 0 && vision_range > 0 && body_radius > 0 && mass > 0 && reaction_time >= 0 &&
          prob(collaboration) && prob(insistence) && prob(knowledge)))
        throw std::invalid_argument("agent profile out of range");
}

void ForceParams::validate() const {
    if (!(A >= 0 && B > 0 && tau > 0 && wall_cutoff >= 0)) throw std::invalid_argument("force parameters out of range");
}

Vec2 AgentState::heading() const {
    const double n = velocity.norm();
    return n > 1e-12 ? Vec2(velocity / n) : Vec2(Vec2::Zero());
}

std::optional<Vec2> goal_direction(const Goal& g) {
    return std::visit(
        [](const auto& v) -> std::optional<Vec2> {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, ExitGoal>) {
                return std::nullopt;
            } else {
                return v.direction;
            }
        },
        g);
}

std::string describe_goal(const Goal& g) {
    std::ostringstream ss;
    ss.precision(6);
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ExitGoal>) {
                ss << "exit:" << v.exit_id;
            } else {
                if constexpr (std::is_same_v<T, SignGoal>) ss << "sign:";
                if constexpr (std::is_same_v<T, HerdGoal>) ss << "herd:";
                if constexpr (std::is_same_v<T, WanderGoal>) ss << "wander:";
                ss << v.direction.x() << "," << v.direction.y();
            }
        },
        g);
    return ss.str();
}

Vec2 sign_steering(const SignGoal& g, const Vec2& position) {
    constexpr double kLaneGain = 2.0;  // per meter of lateral offset
    if (!g.anchor || g.direction.isZero()) return g.direction;
    const Vec2 rel = position - *g.anchor;
    Vec2 lateral = (rel - rel.dot(g.direction) * g.direction) * kLaneGain;
    if (lateral.norm() > 1.0) lateral.normalize();
    return (g.direction - lateral).normalized();
}

AgentProfile ProfileDistribution::sample(RngStream& rng) const {
    AgentProfile p = fixed;
    p.max_speed = rng.uniform(speed_min, speed_max);
    p.reaction_time = rng.uniform(reaction_min, reaction_max);
    return p;
}

std::set<int> sample_known_exits(const GridMap& map, double knowledge, RngStream& rng) {
    std::set<int> known;
    for (const auto& e : map.exits())
        if (rng.bernoulli(knowledge)) known.insert(e.id);
    return known;
}

std::vector<AgentState> sample_population(const GridMap& map, int count, const ProfileDistribution& dist,
                                          RngStream& rng, std::span<const Cell> reserved, int first_id) {
    if (count < 0) throw std::invalid_argument("population count must be nonnegative");
    std::vector<Cell> free;
    for (const Cell& c : map.spawn_cells())
        if (std::find(reserved.begin(), reserved.end(), c) == reserved.end()) free.push_back(c);
    if (static_cast<std::size_t>(count) > free.size())
        throw OvercrowdedError("requested " + std::to_string(count) + " agents but only " +
                               std::to_string(free.size()) + " spawn cells are free");
    rng.shuffle(std::span<Cell>(free));

    std::vector<AgentState> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        AgentState a;
        a.id = first_id + i;
        a.profile = dist.sample(rng);
        a.position = map.center(free[i]);
        a.known_exits = sample_known_exits(map, a.profile.knowledge, rng);
        out.push_back(std::move(a));
    }
    return out;
}

AgentState update_phase(const AgentState& agent, const GridMap& map, long alarm_tick, long now_tick, double dt) {
    AgentState out = agent;
    if (out.phase == Phase::Normal && alarm_tick >= 0 && now_tick >= alarm_tick) {
        const double elapsed = static_cast<double>(now_tick - alarm_tick) * dt;
        if (elapsed + kPhaseEps >= out.profile.reaction_time) out.phase = Phase::Evacuating;
    }
    if (out.phase == Phase::Evacuating && map.exit_at(map.cell_of(out.position))) {
        out.phase = Phase::Escaped;
        out.egress_time = static_cast<double>(now_tick - alarm_tick) * dt;
        out.velocity.setZero();
        out.helping.reset();
    }
    return out;
}

Vec2 random_walkable_direction(const GridMap& map, const Cell& cell, RngStream& rng) {
    std::vector<Compass> options;
    for (Compass c : kAllCompass)
        if (map.in_bounds(cell) && map.can_step(cell, compass_offset(c))) options.push_back(c);
    if (options.empty()) return Vec2::Zero();
    return compass_vector(options[rng.below(options.size())]);
}

std::set<int> discover_exits(const AgentState& agent, const DecisionContext& ctx) {
    const GridMap& map = *ctx.map;
    std::set<int> known = agent.known_exits;
    const Cell from = map.cell_of(agent.position);
    for (const auto& exit : map.exits()) {
        if (known.count(exit.id)) continue;
        for (const Cell& c : exit.cells) {
            if ((map.center(c) - agent.position).norm() > agent.profile.vision_range) continue;
            if (line_of_sight(map, from, c, ctx.smoke, ctx.opacity_coeff)) {
                known.insert(exit.id);
                break;
            }
        }
    }
    return known;
}

Goal decide_goal(const AgentState& agent, const DecisionContext& ctx, RngStream& rng) {
    if (agent.goal && !rng.bernoulli(1.0 - agent.profile.insistence)) return *agent.goal;

    const GridMap& map = *ctx.map;
    const Cell cell = map.cell_of(agent.position);
    if (ctx.exit_fields) {
        std::optional<int> best;
        double best_distance = kUnreachable;
        for (int id : agent.known_exits) {
            auto it = ctx.exit_fields->find(id);
            if (it == ctx.exit_fields->end()) continue;
            const double d = it->second.at(cell);
            if (d < best_distance) {
                best_distance = d;
                best = id;
            }
        }
        if (best) return ExitGoal{*best};
    }
    if (const SignDef* sign =
            visible_sign(map, agent.position, ctx.smoke, agent.profile.vision_range, ctx.opacity_coeff))
        return SignGoal{sign->direction(), map.center(sign->cell)};
    if (auto dir = herding_direction(agent, ctx.neighbours, ctx.herding_radius)) return HerdGoal{*dir};
    return WanderGoal{random_walkable_direction(map, cell, rng)};
}

// ---------------------------------------------------------------------------
// Social force backend

Vec2 wall_force(const AgentState& agent, const GridMap& map, const ForceParams& params) {
    Vec2 f = Vec2::Zero();
    const double cs = map.cell_size();
    const int reach = static_cast<int>(std::ceil(params.wall_cutoff / cs)) + 1;
    const Cell c = map.cell_of(agent.position);
    for (int dy = -reach; dy <= reach; ++dy) {
        for (int dx = -reach; dx <= reach; ++dx) {
            const Cell n{c.x + dx, c.y + dy};
            if (!map.in_bounds(n) || map.walkable(n)) continue;
            const Vec2 lo(n.x * cs, n.y * cs);
            const Vec2 hi = lo + Vec2(cs, cs);
            const Vec2 q = closest_point_on_box<double>(agent.position, lo, hi);
            if ((agent.position - q).norm() > params.wall_cutoff) continue;
            f += wall_repulsion<double>(agent.position, agent.profile.body_radius, q, params.A, params.B);
        }
    }
    return f;
}

Vec2 social_force_acceleration(const AgentState& agent, std::span<const AgentState> neighbours, const GridMap& map,
                               const ForceParams& params, const Vec2& desired_velocity) {
    Vec2 a = driving_acceleration<double>(agent.velocity, desired_velocity, params.tau);
    Vec2 f = Vec2::Zero();
    for (const auto& other : neighbours) {
        if (other.id == agent.id || !other.on_floor()) continue;
        f += pair_repulsion<double>(agent.position, agent.profile.body_radius, other.position,
                                    other.profile.body_radius, params.A, params.B);
    }
    f += wall_force(agent, map, params);
    return a + f / agent.profile.mass;
}

AgentState step_social_force(const AgentState& agent, std::span<const AgentState> neighbours, const GridMap& map,
                             const ForceParams& params, const MotionIntent& intent, double dt,
                             const MaskLayer* closed) {
    AgentState out = agent;
    if (is_terminal(out.phase)) return out;
    const double limit = intent.speed_limit * out.mobility();
    const Vec2 desired = intent.direction * limit;
    const Vec2 acc = social_force_acceleration(agent, neighbours, map, params, desired);
    Vec2 v = agent.velocity + acc * dt;
    const double speed = v.norm();
    if (speed > limit) v *= (limit > 0.0 ? limit / speed : 0.0);

    const Cell from = map.cell_of(agent.position);
    auto admissible = [&](const Vec2& p) {
        const Cell to = map.cell_of(p);
        if (!map.walkable(to) || (closed && (*closed)(to.x, to.y))) return false;
        const Cell step = to - from;
        if (std::abs(step.x) > 1 || std::abs(step.y) > 1) return false;
        return step == Cell{0, 0} || map.can_step(from, step, closed);
    };
    Vec2 next = agent.position + v * dt;
    if (!admissible(next)) {
        const Vec2 slide_x(agent.position.x() + v.x() * dt, agent.position.y());
        const Vec2 slide_y(agent.position.x(), agent.position.y() + v.y() * dt);
        if (admissible(slide_x)) {
            next = slide_x;
            v.y() = 0.0;
        } else if (admissible(slide_y)) {
            next = slide_y;
            v.x() = 0.0;
        } else {
            next = agent.position;
            v.setZero();
        }
    }
    out.position = next;
    out.velocity = v;
    return out;
}

// ---------------------------------------------------------------------------
// Cellular automaton backend

CaStepResult step_cellular_automaton(const AgentState& agent, Occupancy& occupancy, const MotionIntent& intent,
                                     const GridMap& map, RngStream& rng, double dt, const MaskLayer* blocked) {
    CaStepResult result{agent, false};
    AgentState& a = result.agent;
    if (is_terminal(a.phase)) return result;
    const double speed = intent.speed_limit * a.mobility();
    if (speed <= 0.0 || (!intent.field && intent.direction.isZero())) {
        a.velocity.setZero();
        return result;
    }
    a.move_credit += speed * dt / map.cell_size();

    Cell cur = map.cell_of(a.position);
    while (true) {
        const double here = intent.field ? intent.field->at(cur) : 0.0;
        std::vector<Cell> best;
        double best_value = here;
        bool any_open = false;
        for (const Cell& o : kNeighbourOffsets) {
            if (!map.can_step(cur, o, blocked)) continue;
            const Cell n = cur + o;
            const double value =
                intent.field ? intent.field->at(n) : -intent.direction.dot(Vec2(o.x, o.y).normalized());
            if (!(value < here)) continue;
            any_open = true;
            if (!occupancy.free(n) && occupancy.at(n) != a.id) continue;
            if (value < best_value || best.empty()) {
                if (value < best_value) best.clear();
                best_value = value;
                best.push_back(n);
            } else if (value == best_value) {
                best.push_back(n);
            }
        }
        if (best.empty()) {
            result.wall_contact = !any_open;
            a.move_credit = std::min(a.move_credit, 1.0);
            a.velocity.setZero();
            break;
        }
        const Cell target = best.size() == 1 ? best.front() : best[rng.below(best.size())];
        const Cell step = target - cur;
        a.velocity = Vec2(step.x, step.y).normalized() * speed;
        if (a.move_credit + kCreditEps < 1.0) break;
        occupancy.release(cur);
        occupancy.claim(target, a.id);
        a.position = map.center(target);
        a.move_credit = std::max(0.0, a.move_credit - 1.0);
        cur = target;
        if (map.exit_at(cur)) break;
    }
    return result;
}

// ---------------------------------------------------------------------------

AgentState apply_collaboration(const AgentState& agent, std::span<const AgentState> neighbours, const GridMap& map,
                               const ScalarLayer* smoke, double opacity_coeff, RngStream& rng) {
    AgentState out = agent;
    if (out.phase != Phase::Evacuating || out.helping || out.profile.collaboration <= 0.0) return out;
    const Cell from = map.cell_of(agent.position);
    const AgentState* target = nullptr;
    double target_dist = kUnreachable;
    for (const auto& other : neighbours) {
        if (other.id == agent.id || other.helping) continue;
        const bool needs_help = other.phase == Phase::Incapacitated ||
                                (other.phase == Phase::Evacuating && other.health < kHelpHealthThreshold);
        if (!needs_help) continue;
        const double dist = (other.position - agent.position).norm();
        if (dist > agent.profile.vision_range || dist >= target_dist) continue;
        if (!line_of_sight(map, from, map.cell_of(other.position), smoke, opacity_coeff)) continue;
        target = &other;
        target_dist = dist;
    }
    if (target && rng.bernoulli(out.profile.collaboration)) out.helping = target->id;
    return out;
}

}  // namespace evacsim
