#include "evacsim/events.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <array>
#include <sstream>
#include <stdexcept>

namespace evacsim {

using json = nlohmann::json;

void EventLog::append(long tick, EventData data) {
    if (!entries_.empty() && tick < entries_.back().tick)
        throw std::logic_error("event log ticks must be non-decreasing");
    entries_.push_back({tick, std::move(data)});
}

namespace {

json to_json(const Event& e) {
    json j = {{"tick", e.tick}};
    std::visit(
        [&](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, event::Ignition>) {
                j["event"] = "Ignition";
                j["room"] = d.room;
            } else if constexpr (std::is_same_v<T, event::Alarm>) {
                j["event"] = "Alarm";
            } else if constexpr (std::is_same_v<T, event::AgentEscaped>) {
                j["event"] = "AgentEscaped";
                j["id"] = d.id;
                j["time"] = d.time;
            } else if constexpr (std::is_same_v<T, event::AgentIncapacitated>) {
                j["event"] = "AgentIncapacitated";
                j["id"] = d.id;
            } else if constexpr (std::is_same_v<T, event::GoalChanged>) {
                j["event"] = "GoalChanged";
                j["id"] = d.id;
                j["goal"] = d.goal;
            } else {
                j["event"] = "SimEnded";
                j["reason"] = d.reason;
            }
        },
        e.data);
    return j;
}

}  // namespace

std::string EventLog::to_jsonl() const {
    std::string out;
    for (const auto& e : entries_) out += to_json(e).dump() + "\n";
    return out;
}

EventLog EventLog::from_jsonl(const std::string& text) {
    EventLog log;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        const auto kind = j.at("event").get<std::string>();
        const long tick = j.at("tick").get<long>();
        if (kind == "Ignition") {
            log.append(tick, event::Ignition{j.at("room").get<std::string>()});
        } else if (kind == "Alarm") {
            log.append(tick, event::Alarm{});
        } else if (kind == "AgentEscaped") {
            log.append(tick, event::AgentEscaped{j.at("id").get<int>(), j.at("time").get<double>()});
        } else if (kind == "AgentIncapacitated") {
            log.append(tick, event::AgentIncapacitated{j.at("id").get<int>()});
        } else if (kind == "GoalChanged") {
            log.append(tick, event::GoalChanged{j.at("id").get<int>(), j.at("goal").get<std::string>()});
        } else if (kind == "SimEnded") {
            log.append(tick, event::SimEnded{j.at("reason").get<std::string>()});
        } else {
            throw std::runtime_error("unknown event kind: " + kind);
        }
    }
    return log;
}

std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

std::string EventLog::digest() const { return sha256_hex(to_jsonl()); }

}  // namespace evacsim
