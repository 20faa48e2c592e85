#pragma once

#include "evacsim/events.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evacsim {

/// Participant category by (frequent gamer, building knowledge).
enum class GroupLabel : std::uint8_t { A, B, C, D };

inline constexpr std::array<GroupLabel, 4> kAllGroups = {GroupLabel::A, GroupLabel::B, GroupLabel::C, GroupLabel::D};

std::string_view group_name(GroupLabel g);
std::optional<GroupLabel> parse_group(std::string_view s);

enum class Outcome : std::uint8_t { AllResolved, Timeout, Aborted };

std::string_view outcome_name(Outcome o);
std::optional<Outcome> parse_outcome(std::string_view s);

/// One evacuation run.
struct SessionRecord {
    std::string session_id;
    std::optional<GroupLabel> group;
    std::uint64_t seed = 0;
    std::string config_digest;
    std::optional<double> player_egress_time;  // seconds since alarm
    std::vector<double> npc_egress_times;      // escaped NPCs only
    int npc_total = 0;
    EventLog events;
    Outcome outcome = Outcome::AllResolved;
    bool repeat = false;

    int npc_escaped() const { return static_cast<int>(npc_egress_times.size()); }
    friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

}  // namespace evacsim
