#include "evacsim/experiment.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace evacsim;

namespace {

SessionRecord record(const std::string& id, std::optional<GroupLabel> g, std::optional<double> t) {
    SessionRecord r;
    r.session_id = id;
    r.group = g;
    r.player_egress_time = t;
    return r;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() /
               ("evacsim-exp-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Student t density integrated numerically: an oracle independent of the library CDF.
double t_cdf_oracle(double t, double df) {
    const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
    auto pdf = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
    // P(T <= t) = 0.5 + integral_0^t pdf, Simpson's rule
    const int n = 20000;
    const double h = t / n;
    double s = pdf(0) + pdf(t);
    for (int i = 1; i < n; ++i) s += pdf(i * h) * (i % 2 ? 4 : 2);
    return 0.5 + s * h / 3;
}

}  // namespace

TEST(Groups, QuestionnaireMapping) {
    EXPECT_EQ(classify_group(true, true), GroupLabel::A);
    EXPECT_EQ(classify_group(false, true), GroupLabel::B);
    EXPECT_EQ(classify_group(true, false), GroupLabel::C);
    EXPECT_EQ(classify_group(false, false), GroupLabel::D);
}

TEST(Groups, Bijection) {
    std::set<GroupLabel> seen;
    for (bool gamer : {false, true})
        for (bool knows : {false, true}) seen.insert(classify_group(gamer, knows));
    EXPECT_EQ(seen.size(), 4u);
    for (GroupLabel g : kAllGroups) EXPECT_EQ(parse_group(group_name(g)), g);
}

TEST(Groups, TraitsEncoding) {
    EXPECT_DOUBLE_EQ(group_traits(GroupLabel::A).knowledge, 1.0);
    EXPECT_DOUBLE_EQ(group_traits(GroupLabel::B).knowledge, 1.0);
    EXPECT_DOUBLE_EQ(group_traits(GroupLabel::C).knowledge, 0.1);
    EXPECT_DOUBLE_EQ(group_traits(GroupLabel::D).knowledge, 0.1);
    EXPECT_DOUBLE_EQ(group_traits(GroupLabel::A).speed_multiplier, 1.0);
    EXPECT_DOUBLE_EQ(group_traits(GroupLabel::B).speed_multiplier, 0.45);
    EXPECT_DOUBLE_EQ(group_traits(GroupLabel::C).reaction_addend, 0.0);
    EXPECT_DOUBLE_EQ(group_traits(GroupLabel::D).reaction_addend, 3.0);
    const AgentProfile d = player_profile_for(GroupLabel::D);
    EXPECT_DOUBLE_EQ(d.max_speed, default_player_profile().max_speed * 0.45);
    EXPECT_DOUBLE_EQ(d.reaction_time, default_player_profile().reaction_time + 3.0);
}

TEST(Aggregate, FixtureMeans) {
    const auto records = import_records(evacsim::testing::fixture_path("group_means.csv"));
    ASSERT_EQ(records.size(), 30u);
    const auto means = aggregate_means(records);
    ASSERT_EQ(means.size(), 4u);
    // fixture built so the group means are 23.9, 43.9, 58.0, 145.1 s
    EXPECT_NEAR(means.at(GroupLabel::A), 23.9, 1e-9);
    EXPECT_NEAR(means.at(GroupLabel::B), 43.9, 1e-9);
    EXPECT_NEAR(means.at(GroupLabel::C), 58.0, 1e-9);
    EXPECT_NEAR(means.at(GroupLabel::D), 145.1, 1e-9);
    std::map<GroupLabel, int> sizes;
    for (const auto& r : records) ++sizes[*r.group];
    // Table I populations
    EXPECT_EQ(sizes, (std::map<GroupLabel, int>{{GroupLabel::A, 8}, {GroupLabel::B, 6}, {GroupLabel::C, 5},
                                                {GroupLabel::D, 11}}));
}

TEST(Aggregate, SingleAndEmpty) {
    const std::vector<SessionRecord> one = {record("s", GroupLabel::A, 22.0)};
    EXPECT_EQ(aggregate_means(one), (std::map<GroupLabel, double>{{GroupLabel::A, 22.0}}));
    EXPECT_TRUE(aggregate_means({}).empty());
}

TEST(Aggregate, MissingFieldsNameOffender) {
    std::vector<SessionRecord> rs = {record("ok", GroupLabel::A, 10.0), record("nogroup", std::nullopt, 5.0)};
    try {
        aggregate_means(rs);
        FAIL();
    } catch (const AnalyticsError& e) {
        EXPECT_EQ(e.kind(), AnalyticsError::Kind::MissingGroup);
        EXPECT_EQ(e.session_id(), "nogroup");
    }
    rs[1] = record("notime", GroupLabel::B, std::nullopt);
    try {
        aggregate_means(rs);
        FAIL();
    } catch (const AnalyticsError& e) {
        EXPECT_EQ(e.kind(), AnalyticsError::Kind::MissingTime);
        EXPECT_EQ(e.session_id(), "notime");
    }
}

TEST(Aggregate, PermutationInvariantAndScaleEquivariant) {
    std::mt19937 gen(4);
    std::uniform_real_distribution<double> t(5.0, 200.0);
    std::uniform_int_distribution<int> g(0, 3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<SessionRecord> rs;
        for (int i = 0; i < 40; ++i) rs.push_back(record("r" + std::to_string(i), kAllGroups[g(gen)], t(gen)));
        const auto base = aggregate_means(rs);
        std::shuffle(rs.begin(), rs.end(), gen);
        const auto shuffled = aggregate_means(rs);
        ASSERT_EQ(base.size(), shuffled.size());
        for (const auto& [k, v] : base) EXPECT_NEAR(shuffled.at(k), v, 1e-9 * v);
        const double c = 0.5 + trial * 0.1;
        for (auto& r : rs) r.player_egress_time = *r.player_egress_time * c;
        const auto scaled = aggregate_means(rs);
        for (const auto& [k, v] : base) EXPECT_NEAR(scaled.at(k), c * v, 1e-9 * c * v);
    }
}

TEST(Export, EmptyIsHeaderOnly) {
    const auto dir = temp_dir();
    export_records({}, (dir / "log.csv").string());
    EXPECT_EQ(read_file(dir / "log.csv"), std::string(kRecordHeader) + "\n");
    EXPECT_TRUE(import_records((dir / "log.csv").string()).empty());
}

TEST(Export, OneRecordOneRow) {
    SessionRecord r = record("session-1", GroupLabel::C, 61.25);
    r.seed = 7;
    r.npc_egress_times = {10.0, 12.5};
    r.npc_total = 3;
    r.outcome = Outcome::Timeout;
    std::ostringstream out;
    const std::vector<SessionRecord> rs = {r};
    write_records(rs, out);
    EXPECT_EQ(out.str(), std::string(kRecordHeader) + "\nsession-1,C,7,Timeout,61.25,2,3\n");
}

TEST(Export, RoundTripIsByteIdentical) {
    const auto dir = temp_dir();
    SimConfig c;
    c.npc_count = 10;
    const GridMap map = load_blueprint(evacsim::testing::scenario_path("dei_like.map"));
    const auto rs = run_cohort(map, c, GroupLabel::B, 3, 40);
    std::vector<SessionRecord> all = rs;
    all.push_back(record("no-group", std::nullopt, std::nullopt));
    all.back().outcome = Outcome::Aborted;
    export_records(all, (dir / "a.csv").string());
    const auto back = import_records((dir / "a.csv").string());
    export_records(back, (dir / "b.csv").string());
    EXPECT_EQ(read_file(dir / "a.csv"), read_file(dir / "b.csv"));
    ASSERT_EQ(back.size(), all.size());
    EXPECT_EQ(back[0].player_egress_time, all[0].player_egress_time);
}

TEST(Export, AppendWritesHeaderOnce) {
    const auto dir = temp_dir();
    const std::vector<SessionRecord> one = {record("x", GroupLabel::A, 1.5)};
    append_records(one, (dir / "log.csv").string());
    append_records(one, (dir / "log.csv").string());
    EXPECT_EQ(read_file(dir / "log.csv"), std::string(kRecordHeader) + "\nx,A,0,AllResolved,1.5,0,0\nx,A,0,AllResolved,1.5,0,0\n");
}

TEST(Import, CorruptRowReportsLineNumber) {
    std::istringstream in(std::string(kRecordHeader) +
                          "\na,A,1,AllResolved,10,0,0\nb,B,2,AllResolved,11,0,0\nc,C,3,AllResolved,12,0,0\n"
                          "d,Q,4,AllResolved,13,0,0\n");
    try {
        read_records(in);
        FAIL();
    } catch (const RecordFormatError& e) {
        EXPECT_EQ(e.row(), 5u);
        EXPECT_NE(std::string(e.what()).find("row 5"), std::string::npos);
    }
    std::istringstream bad_header("id,group\n");
    EXPECT_THROW(read_records(bad_header), RecordFormatError);
    std::istringstream short_row(std::string(kRecordHeader) + "\na,A,1\n");
    EXPECT_THROW(read_records(short_row), RecordFormatError);
}

TEST(CompanionFile, JsonRoundTrip) {
    SimConfig c;
    c.npc_count = 8;
    c.seed = 3;
    const GridMap map = load_blueprint(evacsim::testing::scenario_path("dei_like.map"));
    SessionRecord r = run_to_completion(map, c);
    r.session_id = "s-3";
    r.group = GroupLabel::D;
    r.repeat = true;
    EXPECT_EQ(record_from_json(record_to_json(r)), r);
}

TEST(Cohort, SingleRunUsesFirstSeed) {
    SimConfig c;
    c.npc_count = 5;
    const GridMap map = load_blueprint(evacsim::testing::scenario_path("dei_like.map"));
    const auto rs = run_cohort(map, c, GroupLabel::A, 1, 77);
    ASSERT_EQ(rs.size(), 1u);
    EXPECT_EQ(rs[0].seed, 77u);
    EXPECT_EQ(rs[0].group, GroupLabel::A);
    EXPECT_TRUE(rs[0].player_egress_time.has_value());
}

TEST(Cohort, WorkersDoNotChangeResults) {
    SimConfig c;
    c.npc_count = 10;
    const GridMap map = load_blueprint(evacsim::testing::scenario_path("dei_like.map"));
    const auto serial = run_cohort(map, c, GroupLabel::C, 4, 500, 1);
    const auto parallel = run_cohort(map, c, GroupLabel::C, 4, 500, 3);
    EXPECT_EQ(serial, parallel);
}

TEST(Welch, MatchesIntegratedDensity) {
    const std::vector<double> a = {20.1, 22.4, 19.8, 25.0, 23.3, 21.7, 24.9, 18.6};
    const std::vector<double> b = {24.0, 27.5, 22.9, 29.1, 26.3, 25.8};
    // hand Welch statistic
    auto mv = [](const std::vector<double>& x) {
        double m = 0;
        for (double v : x) m += v;
        m /= x.size();
        double s = 0;
        for (double v : x) s += (v - m) * (v - m);
        return std::pair{m, s / (x.size() - 1)};
    };
    const auto [ma, va] = mv(a);
    const auto [mb, vb] = mv(b);
    const double sa = va / a.size(), sb = vb / b.size();
    const double t = (ma - mb) / std::sqrt(sa + sb);
    const double df = (sa + sb) * (sa + sb) / (sa * sa / (a.size() - 1) + sb * sb / (b.size() - 1));
    EXPECT_NEAR(welch_less_p_value(a, b), t_cdf_oracle(t, df), 1e-8);
    EXPECT_LT(welch_less_p_value(a, b), 0.05);
    EXPECT_GT(welch_less_p_value(b, a), 0.95);
    EXPECT_NEAR(welch_less_p_value(a, a), 0.5, 1e-12);
    EXPECT_THROW(welch_less_p_value(std::vector<double>{1.0}, b), std::invalid_argument);
}
