#pragma once

#include "evacsim/engine.hpp"
#include "evacsim/record.hpp"
#include "evacsim/scenario.hpp"

#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace evacsim {

GroupLabel classify_group(bool frequent_gamer, bool building_knowledge);

class AnalyticsError : public std::runtime_error {
public:
    enum class Kind { MissingGroup, MissingTime };
    AnalyticsError(Kind kind, std::string session_id, const std::string& what)
        : std::runtime_error(what), kind_(kind), session_id_(std::move(session_id)) {}
    Kind kind() const noexcept { return kind_; }
    const std::string& session_id() const noexcept { return session_id_; }

private:
    Kind kind_;
    std::string session_id_;
};

/// Arithmetic mean of player egress time per group; absent groups omitted.
std::map<GroupLabel, double> aggregate_means(std::span<const SessionRecord> records);

/// Synthetic-player encoding of a group: building knowledge sets exit
/// knowledge, gaming experience sets control proficiency.
struct GroupTraits {
    double knowledge = 1.0;
    double speed_multiplier = 1.0;
    double reaction_addend = 0.0;
};

GroupTraits group_traits(GroupLabel g);

/// The avatar's profile before group adjustment.
AgentProfile default_player_profile();
AgentProfile player_profile_for(GroupLabel g, const AgentProfile& base = default_player_profile());

/// n_runs headless runs with a synthetic player encoding `group`, seeds seed0..seed0+n_runs-1.
/// Runs fan out over `workers` threads; output is always in seed order.
std::vector<SessionRecord> run_cohort(const GridMap& map, const SimConfig& base_config, GroupLabel group, int n_runs,
                                      std::uint64_t seed0, unsigned workers = 1);

/// Tabular log header.
inline constexpr std::string_view kRecordHeader = "session_id,group,seed,outcome,player_egress_s,npc_escaped,npc_total";

class RecordFormatError : public std::runtime_error {
public:
    RecordFormatError(std::size_t row, const std::string& what)
        : std::runtime_error("row " + std::to_string(row) + ": " + what), row_(row) {}
    /// 1-based line number in the file; the header is row 1.
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

std::string format_decimal(double v);
std::string record_row(const SessionRecord& r);

/// Writes header plus one row per record. Returns bytes written.
std::size_t write_records(std::span<const SessionRecord> records, std::ostream& out);
std::size_t export_records(std::span<const SessionRecord> records, const std::string& path);
/// Appends rows, writing the header first if the file is new or empty.
std::size_t append_records(std::span<const SessionRecord> records, const std::string& path);

/// Reads the tabular fields back. npc_egress_times holds npc_escaped
/// placeholder entries, since per-NPC times live in the companion file.
std::vector<SessionRecord> read_records(std::istream& in);
std::vector<SessionRecord> import_records(const std::string& path);

/// Companion structured file holding the full record including the event log.
std::string record_to_json(const SessionRecord& r);
SessionRecord record_from_json(const std::string& text);

/// One-sided Welch t-test of H1: mean(a) < mean(b). Returns the p-value.
double welch_less_p_value(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> xs);

}  // namespace evacsim
