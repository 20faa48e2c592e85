#include "evacsim/engine.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace evacsim {

using json = nlohmann::json;

std::string_view backend_name(Backend b) { return b == Backend::SocialForce ? "force" : "ca"; }

std::optional<Backend> parse_backend(std::string_view s) {
    if (s == "force") return Backend::SocialForce;
    if (s == "ca") return Backend::CellularAutomaton;
    return std::nullopt;
}

ProfileDistribution default_npc_distribution() {
    ProfileDistribution d;
    d.fixed.knowledge = 1.0;
    d.fixed.insistence = 0.5;
    d.fixed.collaboration = 0.0;
    d.fixed.vision_range = 10.0;
    return d;
}

void SimConfig::validate() const {
    if (!(dt > 0.0 && dt <= 0.1)) throw std::invalid_argument("dt must be in (0, 0.1]");
    if (!(max_sim_time > 0.0)) throw std::invalid_argument("max_sim_time must be positive");
    if (npc_count < 0) throw std::invalid_argument("npc_count must be nonnegative");
    if (!(decision_period > 0.0)) throw std::invalid_argument("decision_period must be positive");
    if (!(herding_radius > 0.0) || opacity_coeff < 0.0) throw std::invalid_argument("navigation parameters out of range");
    hazard.validate();
    force.validate();
    profile_distribution.fixed.validate();
    if (!(profile_distribution.speed_min > 0.0 && profile_distribution.speed_min <= profile_distribution.speed_max &&
          profile_distribution.reaction_min >= 0.0 &&
          profile_distribution.reaction_min <= profile_distribution.reaction_max))
        throw std::invalid_argument("profile distribution ranges invalid");
    if (player) player->profile.validate();
}

namespace {

json profile_json(const AgentProfile& p) {
    return {{"max_speed", p.max_speed},         {"vision_range", p.vision_range}, {"reaction_time", p.reaction_time},
            {"collaboration", p.collaboration}, {"insistence", p.insistence},     {"knowledge", p.knowledge},
            {"body_radius", p.body_radius},     {"mass", p.mass}};
}

}  // namespace

std::string SimConfig::canonical() const {
    json j;
    j["dt"] = dt;
    j["backend"] = std::string(backend_name(backend));
    j["seed"] = seed;
    j["npc_count"] = npc_count;
    j["max_sim_time"] = max_sim_time;
    j["hazard"] = {{"p_spread", hazard.p_spread},         {"smoke_emission", hazard.smoke_emission},
                   {"smoke_diffusion", hazard.smoke_diffusion}, {"harm_threshold", hazard.harm_threshold},
                   {"harm_rate", hazard.harm_rate},       {"fire_harm_rate", hazard.fire_harm_rate}};
    j["force"] = {{"A", force.A}, {"B", force.B}, {"tau", force.tau}, {"wall_cutoff", force.wall_cutoff}};
    j["profiles"] = {{"speed", {profile_distribution.speed_min, profile_distribution.speed_max}},
                     {"reaction", {profile_distribution.reaction_min, profile_distribution.reaction_max}},
                     {"fixed", profile_json(profile_distribution.fixed)}};
    if (player) j["player"] = {{"human", player->human}, {"profile", profile_json(player->profile)}};
    j["fire_enabled"] = fire_enabled;
    j["opacity_coeff"] = opacity_coeff;
    j["herding_radius"] = herding_radius;
    j["decision_period"] = decision_period;
    j["field_rebuild_cells"] = field_rebuild_cells;
    return j.dump();
}

std::string SimConfig::digest() const { return sha256_hex(canonical()).substr(0, 16); }

Census Snapshot::census() const {
    Census c;
    for (const auto& a : agents) {
        switch (a.phase) {
            case Phase::Escaped: ++c.escaped; break;
            case Phase::Incapacitated: ++c.incapacitated; break;
            default: ++c.inside; break;
        }
    }
    return c;
}

const AgentState* Snapshot::find(int id) const {
    auto it = std::lower_bound(agents.begin(), agents.end(), id,
                               [](const AgentState& a, int v) { return a.id < v; });
    return it != agents.end() && it->id == id ? &*it : nullptr;
}

Cell player_spawn_cell(const GridMap& map) {
    if (const Room* room = map.start_room()) {
        for (const Cell& c : map.spawn_cells())
            if (room->contains(c)) return c;
        for (int y = room->lo.y; y <= room->hi.y; ++y)
            for (int x = room->lo.x; x <= room->hi.x; ++x)
                if (map.walkable({x, y}) && !map.exit_at({x, y})) return {x, y};
    }
    return map.spawn_cells().front();
}

Simulation::Simulation(const GridMap& map, SimConfig config, SimulationMode mode)
    : map_(map),
      config_(std::move(config)),
      mode_(mode),
      rng_fire_(RngStream::split(config_.seed, "fire")),
      rng_decide_(RngStream::split(config_.seed, "decide")),
      rng_move_(RngStream::split(config_.seed, "move")) {
    config_.validate();
    decision_every_ = std::max(1L, std::lround(config_.decision_period / config_.dt));

    closed_ = MaskLayer::Constant(map_.width(), map_.height(), false);
    if (mode_ == SimulationMode::Practice) {
        if (const Room* room = map_.start_room()) {
            for (int y = room->lo.y - 1; y <= room->hi.y + 1; ++y)
                for (int x = room->lo.x - 1; x <= room->hi.x + 1; ++x)
                    if (map_.in_bounds({x, y}) && map_.kind({x, y}) != CellKind::Wall &&
                        map_.kind({x, y}) != CellKind::Floor)
                        closed_(x, y) = true;
        }
    }

    std::vector<Cell> reserved;
    if (config_.player) {
        const Cell spawn = player_spawn_cell(map_);
        reserved.push_back(spawn);
        AgentState p;
        p.id = 0;
        p.is_player = true;
        p.profile = config_.player->profile;
        p.position = map_.center(spawn);
        auto rng_player = RngStream::split(config_.seed, "player");
        p.known_exits = sample_known_exits(map_, p.profile.knowledge, rng_player);
        player_id_ = 0;
        snap_.agents.push_back(std::move(p));
    }
    auto rng_pop = RngStream::split(config_.seed, "population");
    auto npcs = sample_population(map_, config_.npc_count, config_.profile_distribution, rng_pop, reserved,
                                  config_.player ? 1 : 0);
    for (auto& a : npcs) snap_.agents.push_back(std::move(a));

    occupancy_ = Occupancy(map_);
    for (const auto& a : snap_.agents) occupancy_.claim(map_.cell_of(a.position), a.id);

    snap_.tick = 0;
    if (mode_ == SimulationMode::Live) {
        if (config_.fire_enabled) {
            auto rng_ignite = RngStream::split(config_.seed, "ignition");
            snap_.hazard = ignite_random_room(map_, rng_ignite, 0);
            log_.append(0, event::Ignition{snap_.hazard.ignition_room});
        } else {
            snap_.hazard = HazardField(map_);
        }
        log_.append(0, event::Alarm{});
        snap_.alarm_active = true;
        for (auto& a : snap_.agents) {
            if (a.is_player && config_.player->human) {
                a.phase = Phase::Evacuating;
            } else {
                a = update_phase(a, map_, 0, 0, config_.dt);
            }
        }
    } else {
        snap_.hazard = HazardField(map_);
    }
    rebuild_fields();
    decide(0);
    check_end(0);
}

const MaskLayer* Simulation::movement_mask() const { return mode_ == SimulationMode::Practice ? &closed_ : nullptr; }

void Simulation::rebuild_fields() {
    blocked_ = closed_ || snap_.hazard.burning;
    fields_.clear();
    for (const auto& e : map_.exits()) {
        const int id = e.id;
        fields_.emplace(id, compute_floor_field(map_, std::span<const int>(&id, 1), &blocked_));
    }
    burning_at_rebuild_ = snap_.hazard.burning_count();
}

void Simulation::abort() {
    if (end_) return;
    end_ = Outcome::Aborted;
    log_.append(snap_.tick, event::SimEnded{std::string(outcome_name(Outcome::Aborted))});
}

void Simulation::step(const ExternalInputs& inputs) {
    if (end_) throw SimEndedError("simulation already ended");
    const long now = snap_.tick + 1;

    if (inputs.player_move) {
        Vec2 m = inputs.player_move->cwiseMax(Vec2(-1, -1)).cwiseMin(Vec2(1, 1));
        if (m.norm() > 1.0) m.normalize();
        player_move_ = m;
    }

    if (mode_ == SimulationMode::Live && config_.fire_enabled) {
        snap_.hazard = step_fire(snap_.hazard, map_, config_.hazard, config_.dt, rng_fire_);
        snap_.hazard = step_smoke(snap_.hazard, map_, config_.hazard, config_.dt);
        if (snap_.hazard.burning_count() - burning_at_rebuild_ >= config_.field_rebuild_cells) rebuild_fields();
    }

    if (mode_ == SimulationMode::Live) {
        for (auto& a : snap_.agents)
            if (a.phase == Phase::Normal) a = update_phase(a, map_, 0, now, config_.dt);
    }

    decide(now);
    move(inputs);
    resolve(now);

    snap_.tick = now;
    snap_.elapsed_since_alarm = mode_ == SimulationMode::Live ? static_cast<double>(now) * config_.dt : 0.0;
    if (snap_.census().total() != population()) throw CensusError("census does not match population");
    check_end(now);
}

void Simulation::decide(long now) {
    const bool cadence = now % decision_every_ == 0;
    const std::vector<AgentState> prev = snap_.agents;
    DecisionContext ctx;
    ctx.map = &map_;
    ctx.exit_fields = &fields_;
    ctx.smoke = &snap_.hazard.smoke;
    ctx.opacity_coeff = config_.opacity_coeff;
    ctx.herding_radius = config_.herding_radius;
    ctx.neighbours = prev;

    for (auto& a : snap_.agents) {
        if (a.phase != Phase::Evacuating || (a.is_player && config_.player->human)) continue;
        if (a.helping && !a.helper) continue;  // follows the helper
        if (a.goal && !cadence) continue;
        a.known_exits = discover_exits(a, ctx);
        if (cadence && !a.helping && a.profile.collaboration > 0.0) {
            AgentState paired = apply_collaboration(a, prev, map_, ctx.smoke, ctx.opacity_coeff, rng_decide_);
            if (paired.helping) {
                auto partner = std::find_if(snap_.agents.begin(), snap_.agents.end(),
                                            [&](const AgentState& o) { return o.id == *paired.helping; });
                if (partner != snap_.agents.end() && !partner->helping) {
                    a.helping = paired.helping;
                    a.helper = true;
                    partner->helping = a.id;
                    partner->helper = false;
                }
            }
        }
        const Goal g = decide_goal(a, ctx, rng_decide_);
        if (!a.goal || !(*a.goal == g)) {
            a.goal = g;
            log_.append(now, event::GoalChanged{a.id, describe_goal(g)});
        }
    }
}

MotionIntent Simulation::intent_for(const AgentState& a, const ExternalInputs&) const {
    MotionIntent intent;
    if (is_terminal(a.phase)) return intent;
    if (a.is_player && config_.player->human) {
        intent.direction = player_move_;
        intent.speed_limit = a.profile.max_speed;
        return intent;
    }
    if (a.phase != Phase::Evacuating) return intent;

    const AgentState* leader = &a;
    intent.speed_limit = a.profile.max_speed;
    if (a.helping) {
        const AgentState* partner = snap_.find(*a.helping);
        if (partner) {
            intent.speed_limit = paired_speed(a.profile, partner->profile);
            if (!a.helper) leader = partner;
        }
    }
    if (!leader->goal) return MotionIntent{};
    if (const auto* exit = std::get_if<ExitGoal>(&*leader->goal)) {
        auto it = fields_.find(exit->exit_id);
        if (it == fields_.end()) return MotionIntent{};
        intent.field = &it->second;
        const Cell cell = map_.cell_of(a.position);
        const auto steps = it->second.best_steps(map_, cell, &blocked_);
        if (!steps.empty()) {
            const Vec2 to = map_.center(steps.front()) - a.position;
            if (to.norm() > 1e-12) intent.direction = to.normalized();
        }
    } else if (const auto* sign = std::get_if<SignGoal>(&*leader->goal)) {
        intent.direction = sign_steering(*sign, a.position);
    } else {
        intent.direction = *goal_direction(*leader->goal);
    }
    return intent;
}

void Simulation::move(const ExternalInputs& inputs) {
    const double dt = config_.dt;
    auto reroll_if_wandering = [&](AgentState& a) {
        if (a.goal && std::holds_alternative<WanderGoal>(*a.goal))
            a.goal = WanderGoal{random_walkable_direction(map_, map_.cell_of(a.position), rng_decide_)};
    };

    if (config_.backend == Backend::SocialForce) {
        const std::vector<AgentState> prev = snap_.agents;
        for (std::size_t i = 0; i < prev.size(); ++i) {
            const AgentState& a = prev[i];
            if (!a.on_floor() || is_terminal(a.phase)) continue;
            const MotionIntent intent = intent_for(a, inputs);
            AgentState next = step_social_force(a, prev, map_, config_.force, intent, dt, movement_mask());
            if (!intent.field && intent.speed_limit > 0.0 && !intent.direction.isZero()) {
                const double progress = (next.position - a.position).dot(intent.direction);
                if (progress < 0.1 * intent.speed_limit * dt) reroll_if_wandering(next);
            }
            snap_.agents[i] = std::move(next);
        }
    } else {
        for (auto& a : snap_.agents) {
            if (!a.on_floor() || is_terminal(a.phase)) continue;
            const MotionIntent intent = intent_for(a, inputs);
            auto result = step_cellular_automaton(a, occupancy_, intent, map_, rng_move_, dt, movement_mask());
            if (result.wall_contact) reroll_if_wandering(result.agent);
            a = std::move(result.agent);
        }
    }

    // carried partners travel with their helper
    for (auto& a : snap_.agents) {
        if (!a.carried() || a.rescued) continue;
        if (const AgentState* h = snap_.find(*a.helping)) {
            if (config_.backend == Backend::CellularAutomaton && occupancy_.at(map_.cell_of(a.position)) == a.id)
                occupancy_.release(map_.cell_of(a.position));
            a.position = h->position;
        }
    }
}

void Simulation::resolve(long now) {
    const long alarm_tick = mode_ == SimulationMode::Live ? 0 : -1;
    for (auto& a : snap_.agents) {
        if (is_terminal(a.phase)) continue;
        if (mode_ == SimulationMode::Live) {
            a = apply_harm(snap_.hazard, map_, a, config_.hazard, config_.dt);
            if (a.phase == Phase::Incapacitated) {
                log_.append(now, event::AgentIncapacitated{a.id});
                continue;
            }
        }
        const Phase before = a.phase;
        a = update_phase(a, map_, alarm_tick, now, config_.dt);
        if (before != Phase::Escaped && a.phase == Phase::Escaped) {
            log_.append(now, event::AgentEscaped{a.id, *a.egress_time});
            if (config_.backend == Backend::CellularAutomaton) occupancy_.release(map_.cell_of(a.position));
        }
    }

    // pairs dissolve once the leader is out of play
    for (auto& a : snap_.agents) {
        if (!a.helping || a.helper) continue;
        AgentState* h = nullptr;
        for (auto& o : snap_.agents)
            if (o.id == *a.helping) h = &o;
        if (!h) continue;
        if (h->phase == Phase::Escaped && a.phase == Phase::Incapacitated) a.rescued = true;
        if (is_terminal(h->phase) || (a.phase == Phase::Escaped)) {
            if (a.phase == Phase::Incapacitated && !a.rescued && config_.backend == Backend::CellularAutomaton) {
                // dropped where the helper fell; keep the body on the grid if the cell is free
                const Cell c = map_.cell_of(a.position);
                if (occupancy_.free(c)) occupancy_.claim(c, a.id);
            }
            if (!(a.phase == Phase::Incapacitated && a.rescued)) a.helping.reset();
            h->helping.reset();
            h->helper = false;
        }
    }
}

void Simulation::check_end(long now) {
    if (end_) return;
    const bool all_terminal =
        std::all_of(snap_.agents.begin(), snap_.agents.end(), [](const AgentState& a) { return is_terminal(a.phase); });
    if (all_terminal) {
        end_ = Outcome::AllResolved;
    } else if (mode_ == SimulationMode::Live &&
               static_cast<double>(now) * config_.dt + 1e-9 >= config_.max_sim_time) {
        end_ = Outcome::Timeout;
    }
    if (end_) log_.append(now, event::SimEnded{std::string(outcome_name(*end_))});
}

SessionRecord make_record(const Simulation& sim) {
    SessionRecord r;
    r.seed = sim.config().seed;
    r.session_id = "seed-" + std::to_string(r.seed);
    r.config_digest = sim.config().digest();
    for (const auto& a : sim.snapshot().agents) {
        if (a.is_player) {
            if (a.phase == Phase::Escaped) r.player_egress_time = a.egress_time;
            continue;
        }
        ++r.npc_total;
        if (a.phase == Phase::Escaped && a.egress_time) r.npc_egress_times.push_back(*a.egress_time);
    }
    r.events = sim.events();
    r.outcome = sim.end_reason().value_or(Outcome::Aborted);
    return r;
}

SessionRecord run_to_completion(const GridMap& map, const SimConfig& config) {
    Simulation sim(map, config);
    while (!sim.ended()) sim.step();
    return make_record(sim);
}

}  // namespace evacsim
