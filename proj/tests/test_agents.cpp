#include "evacsim/agents.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace evacsim;
using evacsim::testing::make_map;

namespace {

std::map<int, FloorField> per_exit_fields(const GridMap& map) {
    std::map<int, FloorField> out;
    for (const auto& e : map.exits()) {
        const std::vector<int> one = {e.id};
        out.emplace(e.id, compute_floor_field(map, one));
    }
    return out;
}

AgentState evacuee(int id, const Vec2& pos) {
    AgentState a;
    a.id = id;
    a.position = pos;
    a.phase = Phase::Evacuating;
    return a;
}

GridMap open_room(int w, int h) {
    std::vector<std::string> rows(h, std::string(w, '.'));
    for (auto& r : rows) r.front() = r.back() = '#';
    rows.front() = rows.back() = std::string(w, '#');
    rows[0][1] = 'E';
    rows[1][1] = 'P';
    return make_map(rows);
}

}  // namespace

TEST(Population, ZeroCount) {
    const GridMap map = open_room(6, 6);
    RngStream rng(1);
    EXPECT_TRUE(sample_population(map, 0, ProfileDistribution{}, rng).empty());
}

TEST(Population, DistinctSpawnCellsAndInitialState) {
    const GridMap map = make_map({"#####E#####", "#PPPPPPPPP#", "#PPPPPPPPP#", "#PP.......#", "###########"});
    RngStream rng(4);
    const auto agents = sample_population(map, 20, ProfileDistribution{}, rng);
    ASSERT_EQ(agents.size(), 20u);
    std::set<Cell> cells;
    for (const auto& a : agents) {
        cells.insert(map.cell_of(a.position));
        EXPECT_EQ(a.phase, Phase::Normal);
        EXPECT_EQ(a.health, 100.0);
        EXPECT_GE(a.profile.max_speed, 1.0);
        EXPECT_LE(a.profile.max_speed, 1.5);
        EXPECT_GE(a.profile.reaction_time, 1.0);
        EXPECT_LE(a.profile.reaction_time, 10.0);
    }
    EXPECT_EQ(cells.size(), 20u);
    RngStream again(4);
    EXPECT_THROW(sample_population(map, 21, ProfileDistribution{}, again), OvercrowdedError);
}

TEST(Population, FullKnowledgeKnowsEveryExit) {
    const GridMap map = make_map({"####E####", "E..PPP..#", "#########"});
    ProfileDistribution dist;
    dist.fixed.knowledge = 1.0;
    RngStream rng(2);
    for (const auto& a : sample_population(map, 3, dist, rng)) EXPECT_EQ(a.known_exits, (std::set<int>{1, 2}));
}

TEST(Population, HalfKnowledgeIsBinomial) {
    const GridMap map = make_map({"####E####", "E..PPP..#", "#########"});
    ASSERT_EQ(map.exits().size(), 2u);
    RngStream rng(12);
    const int n = 10000;
    long total = 0;
    for (int i = 0; i < n; ++i) total += static_cast<long>(sample_known_exits(map, 0.5, rng).size());
    // Binomial(2, 0.5): mean 1
    EXPECT_NEAR(static_cast<double>(total) / n, 1.0, 0.05);
}

TEST(PhaseUpdate, ZeroReactionEvacuatesOnAlarmTick) {
    const GridMap map = open_room(6, 6);
    AgentState a;
    a.position = map.center({3, 3});
    EXPECT_EQ(update_phase(a, map, 0, 0, 0.1).phase, Phase::Evacuating);
    EXPECT_EQ(update_phase(a, map, 5, 4, 0.1).phase, Phase::Normal);
}

TEST(PhaseUpdate, ReactionTimeInTicks) {
    const GridMap map = open_room(6, 6);
    AgentState a;
    a.position = map.center({3, 3});
    a.profile.reaction_time = 5.0;
    const long alarm = 7;
    EXPECT_EQ(update_phase(a, map, alarm, alarm + 49, 0.1).phase, Phase::Normal);
    EXPECT_EQ(update_phase(a, map, alarm, alarm + 50, 0.1).phase, Phase::Evacuating);
}

TEST(PhaseUpdate, ExitCellEscapes) {
    const GridMap map = open_room(6, 6);
    AgentState a = evacuee(0, map.center({1, 5}));
    a.velocity = Vec2(0.0, 1.0);
    const AgentState out = update_phase(a, map, 0, 12, 0.05);
    EXPECT_EQ(out.phase, Phase::Escaped);
    ASSERT_TRUE(out.egress_time);
    EXPECT_DOUBLE_EQ(*out.egress_time, 0.6);
    EXPECT_TRUE(out.velocity.isZero());
    // terminal states absorb
    EXPECT_EQ(update_phase(out, map, 0, 50, 0.05), out);
}

TEST(PhaseMachine, AllowedTransitions) {
    const Phase all[] = {Phase::Normal, Phase::Evacuating, Phase::Escaped, Phase::Incapacitated};
    std::set<std::pair<Phase, Phase>> allowed = {{Phase::Normal, Phase::Evacuating},
                                                 {Phase::Evacuating, Phase::Escaped},
                                                 {Phase::Evacuating, Phase::Incapacitated}};
    for (Phase from : all)
        for (Phase to : all)
            EXPECT_EQ(phase_transition_allowed(from, to), from == to || allowed.count({from, to}) > 0);
}

TEST(DecideGoal, NearestKnownExitByField) {
    // exit 1 at the west end, exit 2 at the east end; agent 8 cells from the west
    const std::vector<std::string> rows = {"############################", "E.......P..................E",
                                           "############################"};
    const GridMap map = make_map(rows);
    const auto fields = per_exit_fields(map);
    const int west = *map.exit_at({0, 1});
    const int east = *map.exit_at({27, 1});
    const auto oracle_w = evacsim::testing::oracle_distances(rows, 0.5, {{0, 1}});
    const auto oracle_e = evacsim::testing::oracle_distances(rows, 0.5, {{27, 1}});
    EXPECT_DOUBLE_EQ(oracle_w[28 + 8], 4.0);
    EXPECT_DOUBLE_EQ(oracle_e[28 + 8], 9.5);
    EXPECT_DOUBLE_EQ(fields.at(west).at({8, 1}), oracle_w[28 + 8]);
    EXPECT_DOUBLE_EQ(fields.at(east).at({8, 1}), oracle_e[28 + 8]);

    AgentState a = evacuee(0, map.center({8, 1}));
    a.known_exits = {west, east};
    DecisionContext ctx;
    ctx.map = &map;
    ctx.exit_fields = &fields;
    RngStream rng(3);
    EXPECT_EQ(decide_goal(a, ctx, rng), Goal(ExitGoal{west}));
    a.known_exits = {east};
    EXPECT_EQ(decide_goal(a, ctx, rng), Goal(ExitGoal{east}));
}

TEST(DecideGoal, VisibleSignWithoutKnowledge) {
    const GridMap map = make_map({"###E###", "#.....#", "#..1..#", "#.....#", "#..P..#", "#######"},
                                 R"({"cell_size": 0.5, "signs": {"1": {"direction": "N", "visibility_range": 10}}})");
    const auto fields = per_exit_fields(map);
    AgentState a = evacuee(0, map.center({3, 1}));
    DecisionContext ctx;
    ctx.map = &map;
    ctx.exit_fields = &fields;
    RngStream rng(3);
    const Goal g = decide_goal(a, ctx, rng);
    ASSERT_TRUE(std::holds_alternative<SignGoal>(g));
    EXPECT_TRUE(std::get<SignGoal>(g).direction.isApprox(Vec2(0.0, 1.0)));
}

TEST(DecideGoal, HerdThenWander) {
    const GridMap map = open_room(10, 10);
    DecisionContext ctx;
    ctx.map = &map;
    AgentState me = evacuee(0, map.center({4, 4}));
    AgentState other = evacuee(1, map.center({5, 4}));
    other.velocity = Vec2(0.0, -1.0);
    const std::vector<AgentState> neighbours = {me, other};
    ctx.neighbours = neighbours;
    RngStream rng(8);
    EXPECT_EQ(decide_goal(me, ctx, rng), Goal(HerdGoal{Vec2(0.0, -1.0)}));
    ctx.neighbours = {};
    const Goal g = decide_goal(me, ctx, rng);
    ASSERT_TRUE(std::holds_alternative<WanderGoal>(g));
    EXPECT_NEAR(std::get<WanderGoal>(g).direction.norm(), 1.0, 1e-12);
}

TEST(DecideGoal, FullInsistenceKeepsFirstGoal) {
    const GridMap map = open_room(10, 10);
    const auto fields = per_exit_fields(map);
    DecisionContext ctx;
    ctx.map = &map;
    ctx.exit_fields = &fields;
    AgentState a = evacuee(0, map.center({4, 4}));
    a.profile.insistence = 1.0;
    RngStream rng(5);
    a.goal = decide_goal(a, ctx, rng);
    const Goal first = *a.goal;
    a.known_exits = {1};  // would now prefer the exit
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(decide_goal(a, ctx, rng), first);
    a.profile.insistence = 0.0;
    EXPECT_EQ(decide_goal(a, ctx, rng), Goal(ExitGoal{1}));
}

TEST(SocialForce, FixedPointWithoutInteractions) {
    const GridMap map = open_room(20, 20);
    AgentState a = evacuee(0, map.center({10, 10}));
    a.velocity = Vec2(1.2, 0.0);
    const Vec2 acc = social_force_acceleration(a, {}, map, ForceParams{}, Vec2(1.2, 0.0));
    EXPECT_EQ(acc, Vec2::Zero());
}

TEST(SocialForce, TouchingPairRepelsWithStrengthA) {
    const ForceParams p;
    const Vec2 xi(0.0, 0.0), xj(0.5, 0.0);
    const Vec2 f = pair_repulsion<double>(xi, 0.25, xj, 0.25, p.A, p.B);
    EXPECT_DOUBLE_EQ(f.norm(), p.A);
    EXPECT_LT(f.x(), 0.0);
}

TEST(SocialForce, ExponentialDecay) {
    const ForceParams p;
    for (double gap : {0.0, 0.05, 0.3}) {
        const double d = 0.5 + gap;
        const double near = pair_repulsion<double>(Vec2::Zero(), 0.25, Vec2(d, 0.0), 0.25, p.A, p.B).norm();
        const double far = pair_repulsion<double>(Vec2::Zero(), 0.25, Vec2(d + p.B, 0.0), 0.25, p.A, p.B).norm();
        EXPECT_NEAR(far / near, std::exp(-1.0), 1e-9);
    }
}

TEST(SocialForce, PairwiseSymmetry) {
    std::mt19937 gen(1);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 200; ++i) {
        const Vec2 xi(u(gen), u(gen)), xj(u(gen), u(gen));
        const Vec2 fij = pair_repulsion<double>(xi, 0.25, xj, 0.3, 2000.0, 0.08);
        const Vec2 fji = pair_repulsion<double>(xj, 0.3, xi, 0.25, 2000.0, 0.08);
        EXPECT_TRUE((fij + fji).norm() <= 1e-9 * std::max(1.0, fij.norm()));
    }
}

TEST(SocialForce, KernelsAcceptLongDouble) {
    const Vector2<long double> f =
        pair_repulsion<long double>({0.0L, 0.0L}, 0.25L, {0.5L, 0.0L}, 0.25L, 2000.0L, 0.08L);
    EXPECT_NEAR(static_cast<double>(f.norm()), 2000.0, 1e-9);
}

TEST(SocialForce, SpeedClampedAndWallsRespected) {
    const GridMap map = open_room(8, 8);
    AgentState a = evacuee(0, map.center({6, 3}));
    a.profile.max_speed = 1.0;
    MotionIntent intent{Vec2(1.0, 0.0), 1.0, nullptr};
    for (int i = 0; i < 200; ++i) {
        a = step_social_force(a, {}, map, ForceParams{}, intent, 0.05);
        EXPECT_LE(a.velocity.norm(), 1.0 + 1e-12);
        EXPECT_TRUE(map.walkable(map.cell_of(a.position)));
    }
}

TEST(SocialForce, HalvingDtConvergesAtFirstOrder) {
    const GridMap map = open_room(40, 12);
    auto simulate = [&](double dt) {
        AgentState a = evacuee(0, Vec2(3.0, 2.9));
        AgentState b = evacuee(1, Vec2(3.6, 3.0));
        a.profile.max_speed = 1.4;
        b.profile.max_speed = 1.0;
        const MotionIntent intent{Vec2(1.0, 0.0), 0.0, nullptr};
        const int steps = static_cast<int>(std::lround(4.0 / dt));
        for (int i = 0; i < steps; ++i) {
            const std::vector<AgentState> both = {a, b};
            MotionIntent ia = intent, ib = intent;
            ia.speed_limit = a.profile.max_speed;
            ib.speed_limit = b.profile.max_speed;
            const AgentState na = step_social_force(a, both, map, ForceParams{}, ia, dt);
            const AgentState nb = step_social_force(b, both, map, ForceParams{}, ib, dt);
            a = na;
            b = nb;
        }
        return std::pair{a.position, b.position};
    };
    const auto p1 = simulate(0.02), p2 = simulate(0.01), p3 = simulate(0.005);
    const double e1 = (p1.first - p2.first).norm() + (p1.second - p2.second).norm();
    const double e2 = (p2.first - p3.first).norm() + (p2.second - p3.second).norm();
    // error shrinks roughly in proportion to dt
    EXPECT_LT(e2, 0.75 * e1);
    EXPECT_LT(e1, 10.0 * 0.02);
}

TEST(CellularAutomaton, FullyBlockedStays) {
    const GridMap map = open_room(7, 7);
    const std::vector<int> ids = {1};
    const FloorField field = compute_floor_field(map, ids);
    Occupancy occ(map);
    AgentState a = evacuee(0, map.center({3, 3}));
    occ.claim({3, 3}, 0);
    int next = 1;
    for (const Cell& o : kNeighbourOffsets) occ.claim(Cell{3, 3} + o, next++);
    RngStream rng(1);
    const MotionIntent intent{Vec2::Zero(), 10.0, &field};
    for (int i = 0; i < 10; ++i) {
        const auto r = step_cellular_automaton(a, occ, intent, map, rng, 0.1);
        EXPECT_EQ(r.agent.position, a.position);
        EXPECT_LE(r.agent.move_credit, 1.0);
        EXPECT_FALSE(r.wall_contact);
        a = r.agent;
    }
}

TEST(CellularAutomaton, OneCellPerHalfSecondAtOneMetrePerSecond) {
    const GridMap map = make_map({"##############", "EP...........#", "##############"});
    const std::vector<int> ids = {1};
    const FloorField field = compute_floor_field(map, ids);
    Occupancy occ(map);
    AgentState a = evacuee(0, map.center({12, 1}));
    a.profile.max_speed = 1.0;
    occ.claim({12, 1}, 0);
    RngStream rng(1);
    const MotionIntent intent{Vec2::Zero(), 1.0, &field};
    const double dt = 0.05;
    for (int k = 1; k <= 100; ++k) {
        a = step_cellular_automaton(a, occ, intent, map, rng, dt).agent;
        // credit arithmetic: one cell per 0.5 s = every 10 ticks
        EXPECT_EQ(map.cell_of(a.position).x, 12 - k / 10) << "tick " << k;
    }
}

TEST(CellularAutomaton, TieBreakIsFair) {
    const GridMap map = make_map({"#########", "E...P...E", "#########"});
    const std::vector<int> ids = {1, 2};
    const FloorField field = compute_floor_field(map, ids);
    ASSERT_EQ(field.at({3, 1}), field.at({5, 1}));
    int west = 0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        Occupancy occ(map);
        AgentState a = evacuee(0, map.center({4, 1}));
        occ.claim({4, 1}, 0);
        RngStream rng(static_cast<std::uint64_t>(t) + 1);
        const MotionIntent intent{Vec2::Zero(), 10.0, &field};
        const auto r = step_cellular_automaton(a, occ, intent, map, rng, 0.05);
        west += map.cell_of(r.agent.position).x == 3;
    }
    EXPECT_NEAR(static_cast<double>(west) / trials, 0.5, 0.02);
}

TEST(CellularAutomaton, DirectionalIntentAndWallContact) {
    const GridMap map = make_map({"#####", "#.#E#", "#P..#", "#####"});
    Occupancy occ(map);
    AgentState a = evacuee(0, map.center({1, 1}));
    occ.claim({1, 1}, 0);
    RngStream rng(2);
    const auto r = step_cellular_automaton(a, occ, MotionIntent{Vec2(0.0, -1.0), 10.0, nullptr}, map, rng, 0.05);
    EXPECT_TRUE(r.wall_contact);
    EXPECT_EQ(r.agent.position, a.position);
}

TEST(Collaboration, ZeroNeverPairs) {
    const GridMap map = open_room(8, 8);
    AgentState helper = evacuee(0, map.center({3, 3}));
    helper.profile.collaboration = 0.0;
    AgentState hurt = evacuee(1, map.center({4, 3}));
    hurt.phase = Phase::Incapacitated;
    const std::vector<AgentState> n = {helper, hurt};
    RngStream rng(1);
    for (int i = 0; i < 500; ++i) EXPECT_FALSE(apply_collaboration(helper, n, map, nullptr, 0.5, rng).helping);
}

TEST(Collaboration, CertainPairingWithAdjacentCasualty) {
    const GridMap map = open_room(8, 8);
    AgentState helper = evacuee(0, map.center({3, 3}));
    helper.profile.collaboration = 1.0;
    AgentState hurt = evacuee(1, map.center({4, 3}));
    hurt.phase = Phase::Incapacitated;
    hurt.health = 0.0;
    const std::vector<AgentState> n = {helper, hurt};
    for (std::uint64_t s = 0; s < 200; ++s) {
        RngStream rng(s);
        EXPECT_EQ(apply_collaboration(helper, n, map, nullptr, 0.5, rng).helping, std::optional<int>(1));
    }
}

TEST(Collaboration, PairedSpeed) {
    AgentProfile a, b;
    a.max_speed = 1.4;
    b.max_speed = 0.9;
    EXPECT_DOUBLE_EQ(paired_speed(a, b), 0.45);
    EXPECT_DOUBLE_EQ(paired_speed(b, a), 0.45);
}

TEST(Profile, ValidationRejectsBadValues) {
    AgentProfile p;
    EXPECT_NO_THROW(p.validate());
    p.insistence = 1.5;
    EXPECT_ANY_THROW(p.validate());
    p = AgentProfile{};
    p.max_speed = 0.0;
    EXPECT_ANY_THROW(p.validate());
}
