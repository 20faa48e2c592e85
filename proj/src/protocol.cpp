#include "evacsim/protocol.hpp"

#include <json.hpp>

namespace evacsim::protocol {

using json = nlohmann::json;

namespace {

char kind_symbol(CellKind k) {
    switch (k) {
        case CellKind::Wall: return '#';
        case CellKind::Floor: return '.';
        case CellKind::Door: return 'D';
        case CellKind::Exit: return 'E';
    }
    return '#';
}

std::optional<CellKind> symbol_kind(char c) {
    switch (c) {
        case '#': return CellKind::Wall;
        case '.': return CellKind::Floor;
        case 'D': return CellKind::Door;
        case 'E': return CellKind::Exit;
        default: return std::nullopt;
    }
}

json vec(const Vec2& v) { return json::array({v.x(), v.y()}); }

Vec2 vec_from(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ProtocolError("expected a pair of numbers");
    return {j[0].get<double>(), j[1].get<double>()};
}

std::optional<Phase> parse_phase(const std::string& s) {
    for (Phase p : {Phase::Normal, Phase::Evacuating, Phase::Escaped, Phase::Incapacitated})
        if (phase_name(p) == s) return p;
    return std::nullopt;
}

std::optional<SessionPhase> parse_session_phase(const std::string& s) {
    for (SessionPhase p : {SessionPhase::Questionnaire, SessionPhase::Practice, SessionPhase::Live,
                           SessionPhase::Finished})
        if (session_phase_name(p) == s) return p;
    return std::nullopt;
}

json parse_object(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ProtocolError("message is not a JSON object");
    if (!j.contains("type") || !j["type"].is_string()) throw ProtocolError("message has no type");
    return j;
}

}  // namespace

ClientMessage parse_client(const std::string& text) {
    const json j = parse_object(text);
    const std::string type = j["type"];
    try {
        if (type == "hello") {
            const json& q = j.at("questionnaire");
            Hello h;
            h.questionnaire.frequent_gamer = q.at("frequent_gamer").get<bool>();
            h.questionnaire.building_knowledge = q.at("building_knowledge").get<bool>();
            h.player = j.value("player", std::string{});
            return h;
        }
        if (type == "start") return Start{};
        if (type == "bye") return Bye{};
        if (type == "input") {
            Input in;
            in.input.seq = j.at("seq").get<std::uint64_t>();
            in.input.move = vec_from(j.at("move"));
            in.input.timestamp = j.value("timestamp", 0.0);
            return in;
        }
    } catch (const json::exception& e) {
        throw ProtocolError("malformed " + type + " message: " + e.what());
    }
    throw ProtocolError("unknown message type: " + type);
}

std::string encode_client(const ClientMessage& msg) {
    return std::visit(
        [](const auto& m) -> std::string {
            using T = std::decay_t<decltype(m)>;
            json j;
            if constexpr (std::is_same_v<T, Hello>) {
                j["type"] = "hello";
                j["questionnaire"] = {{"frequent_gamer", m.questionnaire.frequent_gamer},
                                      {"building_knowledge", m.questionnaire.building_knowledge}};
                if (!m.player.empty()) j["player"] = m.player;
            } else if constexpr (std::is_same_v<T, Start>) {
                j["type"] = "start";
            } else if constexpr (std::is_same_v<T, Bye>) {
                j["type"] = "bye";
            } else {
                j["type"] = "input";
                j["seq"] = m.input.seq;
                j["move"] = vec(m.input.move);
                j["timestamp"] = m.input.timestamp;
            }
            return j.dump();
        },
        msg);
}

std::vector<std::pair<char, int>> rle_encode(const GridMap& map) {
    std::vector<std::pair<char, int>> runs;
    for (CellKind k : map.cells()) {
        const char c = kind_symbol(k);
        if (!runs.empty() && runs.back().first == c) {
            ++runs.back().second;
        } else {
            runs.emplace_back(c, 1);
        }
    }
    return runs;
}

std::vector<CellKind> rle_decode(const std::vector<std::pair<char, int>>& runs) {
    std::vector<CellKind> out;
    for (const auto& [c, n] : runs) {
        const auto k = symbol_kind(c);
        if (!k || n <= 0) throw ProtocolError("bad run-length entry");
        out.insert(out.end(), static_cast<std::size_t>(n), *k);
    }
    return out;
}

std::string encode_welcome(const std::string& session_id, GroupLabel group, const GridMap& map, double dt) {
    json cells = json::array();
    for (const auto& [c, n] : rle_encode(map)) cells.push_back({std::string(1, c), n});
    json j = {{"type", "welcome"},
              {"session_id", session_id},
              {"group", std::string(group_name(group))},
              {"dt", dt},
              {"map", {{"width", map.width()}, {"height", map.height()}, {"cell_size", map.cell_size()}, {"cells", cells}}}};
    return j.dump();
}

std::string encode_state(const StateMessage& m) {
    json agents = json::array();
    for (const auto& a : m.agents)
        agents.push_back({{"id", a.id},
                          {"position", vec(a.position)},
                          {"velocity", vec(a.velocity)},
                          {"phase", std::string(phase_name(a.phase))}});
    json fire = json::array();
    for (const auto& c : m.fire) fire.push_back({c.x, c.y});
    json smoke = json::array();
    for (const auto& s : m.smoke) smoke.push_back({s.cell.x, s.cell.y, s.density});
    json signs = json::array();
    for (const auto& s : m.signs)
        signs.push_back({{"cell", {s.cell.x, s.cell.y}}, {"direction", std::string(compass_name(s.pointed))}});
    json j = {{"type", "state"},
              {"tick", m.tick},
              {"phase", std::string(session_phase_name(m.phase))},
              {"player",
               {{"position", vec(m.player_position)},
                {"velocity", vec(m.player_velocity)},
                {"health", m.player_health},
                {"phase", std::string(phase_name(m.player_phase))}}},
              {"agents", agents},
              {"fire", fire},
              {"smoke", smoke},
              {"signs", signs},
              {"alarm_active", m.alarm_active},
              {"elapsed_since_alarm", m.elapsed_since_alarm}};
    return j.dump();
}

std::string encode_end(Outcome outcome, std::optional<double> egress_time) {
    json j = {{"type", "end"},
              {"outcome", std::string(outcome_name(outcome))},
              {"egress_time", egress_time ? json(*egress_time) : json(nullptr)}};
    return j.dump();
}

std::string encode_error(const std::string& message) {
    return json{{"type", "error"}, {"message", message}}.dump();
}

ServerMessage parse_server(const std::string& text) {
    const json j = parse_object(text);
    const std::string type = j["type"];
    try {
        if (type == "welcome") {
            Welcome w;
            w.session_id = j.at("session_id").get<std::string>();
            w.group = parse_group(j.at("group").get<std::string>()).value();
            w.dt = j.at("dt").get<double>();
            const json& m = j.at("map");
            w.width = m.at("width").get<int>();
            w.height = m.at("height").get<int>();
            w.cell_size = m.at("cell_size").get<double>();
            for (const auto& run : m.at("cells")) {
                const std::string sym = run.at(0).get<std::string>();
                if (sym.size() != 1) throw ProtocolError("bad run-length symbol");
                w.cells.emplace_back(sym[0], run.at(1).get<int>());
            }
            return w;
        }
        if (type == "state") {
            StateMessage m;
            m.tick = j.at("tick").get<long>();
            m.phase = parse_session_phase(j.at("phase").get<std::string>()).value();
            const json& p = j.at("player");
            m.player_position = vec_from(p.at("position"));
            m.player_velocity = vec_from(p.at("velocity"));
            m.player_health = p.at("health").get<double>();
            m.player_phase = parse_phase(p.at("phase").get<std::string>()).value();
            for (const auto& a : j.at("agents"))
                m.agents.push_back({a.at("id").get<int>(), vec_from(a.at("position")), vec_from(a.at("velocity")),
                                    parse_phase(a.at("phase").get<std::string>()).value()});
            for (const auto& c : j.at("fire")) m.fire.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
            for (const auto& s : j.at("smoke"))
                m.smoke.push_back({{s.at(0).get<int>(), s.at(1).get<int>()}, s.at(2).get<double>()});
            for (const auto& s : j.at("signs")) {
                SignDef d;
                d.cell = {s.at("cell").at(0).get<int>(), s.at("cell").at(1).get<int>()};
                d.pointed = parse_compass(s.at("direction").get<std::string>()).value();
                m.signs.push_back(d);
            }
            m.alarm_active = j.at("alarm_active").get<bool>();
            m.elapsed_since_alarm = j.at("elapsed_since_alarm").get<double>();
            return m;
        }
        if (type == "end") {
            End e;
            e.outcome = parse_outcome(j.at("outcome").get<std::string>()).value();
            if (!j.at("egress_time").is_null()) e.egress_time = j.at("egress_time").get<double>();
            return e;
        }
        if (type == "error") return Error{j.at("message").get<std::string>()};
    } catch (const json::exception& e) {
        throw ProtocolError("malformed " + type + " message: " + e.what());
    } catch (const std::bad_optional_access&) {
        throw ProtocolError("malformed " + type + " message: unknown enumerator");
    }
    throw ProtocolError("unknown message type: " + type);
}

}  // namespace evacsim::protocol
