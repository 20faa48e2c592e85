#include "evacsim/session.hpp"

#include "evacsim/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace evacsim {

using json = nlohmann::json;

std::string_view session_phase_name(SessionPhase p) {
    switch (p) {
        case SessionPhase::Questionnaire: return "Questionnaire";
        case SessionPhase::Practice: return "Practice";
        case SessionPhase::Live: return "Live";
        case SessionPhase::Finished: return "Finished";
    }
    return "?";
}

bool visible_from(const GridMap& map, const Snapshot& snap, const AgentState& viewer, const Cell& target,
                  double opacity_coeff) {
    if (!map.in_bounds(target)) return false;
    if ((map.center(target) - viewer.position).norm() > viewer.profile.vision_range) return false;
    return line_of_sight(map, map.cell_of(viewer.position), target, &snap.hazard.smoke, opacity_coeff);
}

StateMessage build_state_message(const GridMap& map, const Snapshot& snap, int player_id, SessionPhase phase,
                                 double opacity_coeff) {
    StateMessage m;
    m.tick = snap.tick;
    m.phase = phase;
    m.alarm_active = snap.alarm_active;
    m.elapsed_since_alarm = snap.elapsed_since_alarm;
    const AgentState* player = snap.find(player_id);
    if (!player) return m;
    m.player_position = player->position;
    m.player_velocity = player->velocity;
    m.player_health = player->health;
    m.player_phase = player->phase;

    auto visible = [&](const Cell& c) { return visible_from(map, snap, *player, c, opacity_coeff); };
    for (const auto& a : snap.agents) {
        if (a.id == player_id || !a.on_floor()) continue;
        if (visible(map.cell_of(a.position))) m.agents.push_back({a.id, a.position, a.velocity, a.phase});
    }

    const int reach = static_cast<int>(std::ceil(player->profile.vision_range / map.cell_size())) + 1;
    const Cell pc = map.cell_of(player->position);
    for (int y = std::max(0, pc.y - reach); y <= std::min(map.height() - 1, pc.y + reach); ++y) {
        for (int x = std::max(0, pc.x - reach); x <= std::min(map.width() - 1, pc.x + reach); ++x) {
            const bool burning = snap.hazard.burning(x, y);
            const double density = snap.hazard.smoke(x, y);
            if (!burning && density <= 0.0) continue;
            if (!visible({x, y})) continue;
            if (burning) m.fire.push_back({x, y});
            if (density > 0.0) m.smoke.push_back({{x, y}, density});
        }
    }
    for (const auto& sign : map.signs()) {
        if ((map.center(sign.cell) - player->position).norm() > sign.visibility_range) continue;
        if (visible(sign.cell)) m.signs.push_back(sign);
    }
    return m;
}

struct SessionManager::Session {
    std::string id;
    GridMap map;
    SimConfig config;  // player set, human
    GroupLabel group = GroupLabel::A;
    bool repeat = false;
    SessionPhase phase = SessionPhase::Practice;
    std::unique_ptr<Simulation> sim;
    std::optional<std::uint64_t> last_seq;
    std::size_t stale = 0;
    std::optional<Vec2> pending;
    std::vector<AppliedInput> inputs;
    std::optional<FinalizedSession> done;
    mutable std::mutex mutex;

    Session(std::string i, const GridMap& m, SimConfig c) : id(std::move(i)), map(m), config(std::move(c)) {}

    bool player_out() const {
        const AgentState* p = sim->snapshot().find(*sim->player_id());
        return p && is_terminal(p->phase);
    }
};

SessionManager::SessionManager(std::string log_path) : log_path_(std::move(log_path)) {}
SessionManager::~SessionManager() = default;

SessionManager::Session& SessionManager::find(const std::string& id) {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw SessionError(SessionError::Kind::UnknownSession, "unknown session: " + id);
    return *it->second;
}

const SessionManager::Session& SessionManager::find(const std::string& id) const {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw SessionError(SessionError::Kind::UnknownSession, "unknown session: " + id);
    return *it->second;
}

std::string SessionManager::create_session(const GridMap& map, const SimConfig& config, const Questionnaire& answers,
                                           const std::string& player_key) {
    SimConfig cfg = config;
    cfg.player = PlayerSpec{config.player ? config.player->profile : default_player_profile(), true};
    cfg.validate();

    std::lock_guard lock(sessions_mutex_);
    const std::string id = "session-" + std::to_string(next_id_++);
    auto s = std::make_unique<Session>(id, map, cfg);
    s->group = classify_group(answers.frequent_gamer, answers.building_knowledge);
    if (!player_key.empty()) s->repeat = plays_by_key_[player_key]++ > 0;
    s->sim = std::make_unique<Simulation>(s->map, s->config, SimulationMode::Practice);
    sessions_.emplace(id, std::move(s));
    return id;
}

void SessionManager::start_live(const std::string& id) {
    Session& s = find(id);
    std::lock_guard lock(s.mutex);
    if (s.phase != SessionPhase::Practice)
        throw SessionError(SessionError::Kind::WrongPhase,
                           "cannot start live run in phase " + std::string(session_phase_name(s.phase)));
    s.sim = std::make_unique<Simulation>(s.map, s.config, SimulationMode::Live);
    s.phase = SessionPhase::Live;
    s.pending.reset();
    s.inputs.clear();
}

bool SessionManager::apply_input(const std::string& id, const InputMessage& msg) {
    Session& s = find(id);
    std::lock_guard lock(s.mutex);
    if (s.phase != SessionPhase::Practice && s.phase != SessionPhase::Live)
        throw SessionError(SessionError::Kind::WrongPhase,
                           "input not accepted in phase " + std::string(session_phase_name(s.phase)));
    if (s.last_seq && msg.seq <= *s.last_seq) {
        ++s.stale;
        return false;
    }
    s.last_seq = msg.seq;
    s.pending = msg.move;
    return true;
}

bool SessionManager::tick(const std::string& id) {
    Session& s = find(id);
    std::lock_guard lock(s.mutex);
    if (s.phase != SessionPhase::Practice && s.phase != SessionPhase::Live)
        throw SessionError(SessionError::Kind::WrongPhase,
                           "cannot tick in phase " + std::string(session_phase_name(s.phase)));
    if (s.phase == SessionPhase::Live && (s.sim->ended() || s.player_out())) return true;
    ExternalInputs in;
    if (s.pending) {
        in.player_move = *s.pending;
        if (s.phase == SessionPhase::Live) s.inputs.push_back({s.sim->snapshot().tick + 1, *s.pending});
        s.pending.reset();
    }
    s.sim->step(in);
    return s.phase == SessionPhase::Live && (s.sim->ended() || s.player_out());
}

StateMessage SessionManager::state(const std::string& id) const {
    const Session& s = find(id);
    std::lock_guard lock(s.mutex);
    return build_state_message(s.map, s.sim->snapshot(), *s.sim->player_id(), s.phase, s.config.opacity_coeff);
}

SessionRecord SessionManager::finalize_session(const std::string& id) {
    Session& s = find(id);
    std::lock_guard lock(s.mutex);
    if (s.done) return s.done->record;

    if (s.phase == SessionPhase::Live && s.player_out()) {
        // the avatar no longer acts, so the rest of the run is input-free
        while (!s.sim->ended()) s.sim->step();
    } else if (!s.sim->ended()) {
        s.sim->abort();
    }
    SessionRecord r = make_record(*s.sim);
    r.session_id = s.id;
    r.group = s.group;
    r.repeat = s.repeat;
    if (s.phase != SessionPhase::Live) {
        r.outcome = Outcome::Aborted;
        r.player_egress_time.reset();
    }
    s.phase = SessionPhase::Finished;
    s.done = FinalizedSession{r, s.config, s.inputs};
    persist(s, r);
    return r;
}

void SessionManager::persist(const Session& s, const SessionRecord& record) {
    if (log_path_.empty()) return;
    std::lock_guard lock(log_mutex_);
    append_records(std::span<const SessionRecord>(&record, 1), log_path_);

    json companion;
    companion["record"] = json::parse(record_to_json(record));
    companion["config"] = json::parse(s.config.canonical());
    companion["inputs"] = json::array();
    for (const auto& in : s.inputs) companion["inputs"].push_back({in.tick, in.move.x(), in.move.y()});
    const auto dir = std::filesystem::path(log_path_).parent_path();
    std::ofstream out(dir / (s.id + ".json"), std::ios::binary | std::ios::trunc);
    out << companion.dump(1) << "\n";
}

SessionPhase SessionManager::phase(const std::string& id) const {
    const Session& s = find(id);
    std::lock_guard lock(s.mutex);
    return s.phase;
}

GroupLabel SessionManager::group(const std::string& id) const { return find(id).group; }

std::size_t SessionManager::stale_inputs(const std::string& id) const {
    const Session& s = find(id);
    std::lock_guard lock(s.mutex);
    return s.stale;
}

double SessionManager::dt(const std::string& id) const { return find(id).config.dt; }

const Simulation& SessionManager::simulation(const std::string& id) const { return *find(id).sim; }

std::optional<FinalizedSession> SessionManager::finalized(const std::string& id) const {
    const Session& s = find(id);
    std::lock_guard lock(s.mutex);
    return s.done;
}

std::vector<std::string> SessionManager::session_ids() const {
    std::lock_guard lock(sessions_mutex_);
    std::vector<std::string> out;
    for (const auto& [id, s] : sessions_) out.push_back(id);
    return out;
}

}  // namespace evacsim
