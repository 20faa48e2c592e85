#include "evacsim/experiment.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>

namespace evacsim {

using json = nlohmann::json;

std::string_view group_name(GroupLabel g) {
    static constexpr std::array<std::string_view, 4> names = {"A", "B", "C", "D"};
    return names[static_cast<std::size_t>(g)];
}

std::optional<GroupLabel> parse_group(std::string_view s) {
    for (GroupLabel g : kAllGroups)
        if (group_name(g) == s) return g;
    return std::nullopt;
}

std::string_view outcome_name(Outcome o) {
    switch (o) {
        case Outcome::AllResolved: return "AllResolved";
        case Outcome::Timeout: return "Timeout";
        case Outcome::Aborted: return "Aborted";
    }
    return "?";
}

std::optional<Outcome> parse_outcome(std::string_view s) {
    for (Outcome o : {Outcome::AllResolved, Outcome::Timeout, Outcome::Aborted})
        if (outcome_name(o) == s) return o;
    return std::nullopt;
}

GroupLabel classify_group(bool frequent_gamer, bool building_knowledge) {
    if (building_knowledge) return frequent_gamer ? GroupLabel::A : GroupLabel::B;
    return frequent_gamer ? GroupLabel::C : GroupLabel::D;
}

std::map<GroupLabel, double> aggregate_means(std::span<const SessionRecord> records) {
    std::map<GroupLabel, std::pair<double, int>> acc;
    for (const auto& r : records) {
        if (!r.group)
            throw AnalyticsError(AnalyticsError::Kind::MissingGroup, r.session_id,
                                 "record " + r.session_id + " has no group");
        if (!r.player_egress_time)
            throw AnalyticsError(AnalyticsError::Kind::MissingTime, r.session_id,
                                 "record " + r.session_id + " has no player egress time");
        auto& [sum, n] = acc[*r.group];
        sum += *r.player_egress_time;
        ++n;
    }
    std::map<GroupLabel, double> out;
    for (const auto& [g, sn] : acc) out[g] = sn.first / sn.second;
    return out;
}

GroupTraits group_traits(GroupLabel g) {
    const bool knows_building = g == GroupLabel::A || g == GroupLabel::B;
    const bool gamer = g == GroupLabel::A || g == GroupLabel::C;
    return {knows_building ? 1.0 : 0.1, gamer ? 1.0 : 0.45, gamer ? 0.0 : 3.0};
}

AgentProfile default_player_profile() {
    AgentProfile p;
    p.max_speed = 1.25;
    p.vision_range = 10.0;
    p.reaction_time = 1.0;
    p.collaboration = 0.0;
    p.insistence = 0.5;
    p.knowledge = 1.0;
    return p;
}

AgentProfile player_profile_for(GroupLabel g, const AgentProfile& base) {
    const GroupTraits t = group_traits(g);
    AgentProfile p = base;
    p.knowledge = t.knowledge;
    p.max_speed = base.max_speed * t.speed_multiplier;
    p.reaction_time = base.reaction_time + t.reaction_addend;
    return p;
}

std::vector<SessionRecord> run_cohort(const GridMap& map, const SimConfig& base_config, GroupLabel group, int n_runs,
                                      std::uint64_t seed0, unsigned workers) {
    if (n_runs < 1) throw std::invalid_argument("n_runs must be at least 1");
    const AgentProfile base = base_config.player ? base_config.player->profile : default_player_profile();
    auto one = [&](int i) {
        SimConfig cfg = base_config;
        cfg.seed = seed0 + static_cast<std::uint64_t>(i);
        cfg.player = PlayerSpec{player_profile_for(group, base), false};
        SessionRecord r = run_to_completion(map, cfg);
        r.group = group;
        r.session_id = "cohort-" + std::string(group_name(group)) + "-" + std::to_string(cfg.seed);
        return r;
    };

    std::vector<SessionRecord> out(static_cast<std::size_t>(n_runs));
    workers = std::max(1u, workers);
    if (workers == 1) {
        for (int i = 0; i < n_runs; ++i) out[i] = one(i);
        return out;
    }
    std::atomic<int> next{0};
    std::vector<std::future<void>> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.push_back(std::async(std::launch::async, [&] {
            for (int i = next++; i < n_runs; i = next++) out[i] = one(i);
        }));
    }
    for (auto& f : pool) f.get();
    return out;
}

// ---------------------------------------------------------------------------
// Tabular log

std::string format_decimal(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::string record_row(const SessionRecord& r) {
    if (r.session_id.find_first_of(",\n\r") != std::string::npos)
        throw std::invalid_argument("session id may not contain commas or newlines");
    std::string row = r.session_id;
    row += ',';
    if (r.group) row += group_name(*r.group);
    row += ',' + std::to_string(r.seed) + ',' + std::string(outcome_name(r.outcome)) + ',';
    if (r.player_egress_time) row += format_decimal(*r.player_egress_time);
    row += ',' + std::to_string(r.npc_escaped()) + ',' + std::to_string(r.npc_total);
    return row;
}

std::size_t write_records(std::span<const SessionRecord> records, std::ostream& out) {
    std::size_t bytes = 0;
    auto put = [&](const std::string& line) {
        out << line << '\n';
        bytes += line.size() + 1;
    };
    put(std::string(kRecordHeader));
    for (const auto& r : records) put(record_row(r));
    return bytes;
}

std::size_t export_records(std::span<const SessionRecord> records, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::ios_base::failure("cannot open " + path + " for writing");
    const std::size_t n = write_records(records, out);
    out.flush();
    if (!out) throw std::ios_base::failure("write failed: " + path);
    return n;
}

std::size_t append_records(std::span<const SessionRecord> records, const std::string& path) {
    bool need_header = true;
    {
        std::ifstream probe(path, std::ios::binary | std::ios::ate);
        need_header = !probe || probe.tellg() == 0;
    }
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw std::ios_base::failure("cannot open " + path + " for appending");
    std::size_t bytes = 0;
    if (need_header) {
        out << kRecordHeader << '\n';
        bytes += kRecordHeader.size() + 1;
    }
    for (const auto& r : records) {
        const auto row = record_row(r);
        out << row << '\n';
        bytes += row.size() + 1;
    }
    out.flush();
    if (!out) throw std::ios_base::failure("write failed: " + path);
    return bytes;
}

namespace {

template <typename T>
bool parse_number(std::string_view s, T& out) {
    if (s.empty()) return false;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

std::vector<SessionRecord> read_records(std::istream& in) {
    std::vector<SessionRecord> out;
    std::string line;
    std::size_t row = 0;
    if (!std::getline(in, line)) throw RecordFormatError(1, "missing header");
    ++row;
    if (line != kRecordHeader) throw RecordFormatError(row, "unexpected header");
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 7) throw RecordFormatError(row, "expected 7 fields, found " + std::to_string(f.size()));
        SessionRecord r;
        r.session_id = std::string(f[0]);
        if (r.session_id.empty()) throw RecordFormatError(row, "empty session_id");
        if (!f[1].empty()) {
            r.group = parse_group(f[1]);
            if (!r.group) throw RecordFormatError(row, "invalid group '" + std::string(f[1]) + "'");
        }
        if (!parse_number(f[2], r.seed)) throw RecordFormatError(row, "invalid seed");
        const auto outcome = parse_outcome(f[3]);
        if (!outcome) throw RecordFormatError(row, "invalid outcome '" + std::string(f[3]) + "'");
        r.outcome = *outcome;
        if (!f[4].empty()) {
            double t = 0.0;
            if (!parse_number(f[4], t) || !std::isfinite(t) || t < 0.0)
                throw RecordFormatError(row, "invalid player_egress_s");
            r.player_egress_time = t;
        }
        int escaped = 0;
        if (!parse_number(f[5], escaped) || escaped < 0) throw RecordFormatError(row, "invalid npc_escaped");
        if (!parse_number(f[6], r.npc_total) || r.npc_total < escaped)
            throw RecordFormatError(row, "invalid npc_total");
        r.npc_egress_times.assign(static_cast<std::size_t>(escaped), 0.0);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<SessionRecord> import_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open " + path);
    return read_records(in);
}

std::string record_to_json(const SessionRecord& r) {
    json j;
    j["session_id"] = r.session_id;
    j["group"] = r.group ? json(std::string(group_name(*r.group))) : json(nullptr);
    j["seed"] = r.seed;
    j["config_digest"] = r.config_digest;
    j["outcome"] = std::string(outcome_name(r.outcome));
    j["player_egress_s"] = r.player_egress_time ? json(*r.player_egress_time) : json(nullptr);
    j["npc_egress_s"] = r.npc_egress_times;
    j["npc_total"] = r.npc_total;
    j["repeat"] = r.repeat;
    j["events"] = json::array();
    std::istringstream lines(r.events.to_jsonl());
    std::string line;
    while (std::getline(lines, line))
        if (!line.empty()) j["events"].push_back(json::parse(line));
    return j.dump(1);
}

SessionRecord record_from_json(const std::string& text) {
    const json j = json::parse(text);
    SessionRecord r;
    r.session_id = j.at("session_id").get<std::string>();
    if (!j.at("group").is_null()) r.group = parse_group(j.at("group").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.outcome = parse_outcome(j.at("outcome").get<std::string>()).value_or(Outcome::Aborted);
    if (!j.at("player_egress_s").is_null()) r.player_egress_time = j.at("player_egress_s").get<double>();
    r.npc_egress_times = j.at("npc_egress_s").get<std::vector<double>>();
    r.npc_total = j.at("npc_total").get<int>();
    r.repeat = j.value("repeat", false);
    std::string events;
    for (const auto& e : j.at("events")) events += e.dump() + "\n";
    r.events = EventLog::from_jsonl(events);
    return r;
}

double mean(std::span<const double> xs) {
    if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double welch_less_p_value(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("Welch test needs at least two samples per group");
    auto var = [](std::span<const double> xs, double m) {
        double s = 0.0;
        for (double x : xs) s += (x - m) * (x - m);
        return s / static_cast<double>(xs.size() - 1);
    };
    const double ma = mean(a);
    const double mb = mean(b);
    const double va = var(a, ma) / static_cast<double>(a.size());
    const double vb = var(b, mb) / static_cast<double>(b.size());
    const double se2 = va + vb;
    if (se2 == 0.0) return ma < mb ? 0.0 : 1.0;
    const double t = (ma - mb) / std::sqrt(se2);
    const double df = se2 * se2 /
                      (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
    const boost::math::students_t dist(df);
    return boost::math::cdf(dist, t);
}

}  // namespace evacsim
