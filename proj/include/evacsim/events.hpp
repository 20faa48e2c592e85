#pragma once

#include <string>
#include <variant>
#include <vector>

namespace evacsim {

namespace event {
struct Ignition {
    std::string room;
    friend bool operator==(const Ignition&, const Ignition&) = default;
};
struct Alarm {
    friend bool operator==(const Alarm&, const Alarm&) = default;
};
struct AgentEscaped {
    int id = 0;
    double time = 0.0;  // seconds since alarm
    friend bool operator==(const AgentEscaped&, const AgentEscaped&) = default;
};
struct AgentIncapacitated {
    int id = 0;
    friend bool operator==(const AgentIncapacitated&, const AgentIncapacitated&) = default;
};
struct GoalChanged {
    int id = 0;
    std::string goal;
    friend bool operator==(const GoalChanged&, const GoalChanged&) = default;
};
struct SimEnded {
    std::string reason;  // AllResolved | Timeout | Aborted
    friend bool operator==(const SimEnded&, const SimEnded&) = default;
};
}  // namespace event

using EventData = std::variant<event::Ignition, event::Alarm, event::AgentEscaped, event::AgentIncapacitated,
                               event::GoalChanged, event::SimEnded>;

struct Event {
    long tick = 0;
    EventData data;
    friend bool operator==(const Event&, const Event&) = default;
};

/// Append-only, tick-ordered timeline of one run.
class EventLog {
public:
    void append(long tick, EventData data);
    const std::vector<Event>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    template <typename T>
    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += std::holds_alternative<T>(e.data);
        return n;
    }

    /// One JSON object per line; the canonical byte stream used for replay hashing.
    std::string to_jsonl() const;
    static EventLog from_jsonl(const std::string& text);
    /// SHA-256 of to_jsonl(), lowercase hex.
    std::string digest() const;

    friend bool operator==(const EventLog&, const EventLog&) = default;

private:
    std::vector<Event> entries_;
};

std::string sha256_hex(const std::string& bytes);

}  // namespace evacsim
