#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "dyhyp/engine.hpp"

using namespace dyhyp;

TEST_CASE("approximate selection agrees with a full sort") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t size = 1 + rng() % 70;
        std::vector<Time> values(size);
        for (Time& v : values) {
            v = static_cast<Time>(rng() % 40);
        }
        std::vector<Time> sorted = values;
        std::sort(sorted.begin(), sorted.end(), std::greater<Time>());
        const std::uint64_t L = 1 + rng() % size;
        const SelectionResult r = approx_lth_largest(values, L);
        CHECK(r.value == sorted[L - 1]);
        std::uint64_t padded = 1;
        int rounds = 0;
        while (padded < size) {
            padded *= 2;
            ++rounds;
        }
        CHECK(r.rounds == rounds);
        CHECK(r.messages == padded - 1);
    }
    CHECK_THROWS(approx_lth_largest({}, 1));
    CHECK_THROWS(approx_lth_largest({1, 2, 3}, 0));
    CHECK_THROWS(approx_lth_largest({1, 2, 3}, 5));
}

TEST_CASE("selection rank") {
    // ((ceil(k/N) + 1) * 2^ceil(log2 |X|)) / N, clamped to [1, |X|]
    CHECK(selection_rank(1, 8, 4) == 4);
    CHECK(selection_rank(5, 5, 4) == 5);
    CHECK(selection_rank(1, 1, 5) == 1);
    CHECK(selection_rank(3, 20, 6) == 10);
    CHECK(selection_rank(0, 0, 3) == 0);
}

TEST_CASE("inter-group transformation moves the smaller group next to the larger") {
    DyHypesEngine e(3, 1);
    e.states().merge_groups(e.network(), 0, 1, 0, 2);
    REQUIRE(group_view(e.network(), e.states(), 0, 0).size() == 2u);
    Rng rng(1);
    TransformPlan plan = inter_group_transform(e.network(), e.states(), 0, 5, rng);
    CHECK(plan.phase == Phase::Inter);
    CHECK(plan.alpha == 0);
    CHECK(plan.merge_upto == 0);
    CHECK(plan.anchor == 0);
    CHECK(plan.mover == 5);
    e.apply(plan);
    CHECK(e.network().coord_of(5) == 2u);
    CHECK(e.network().coord_of(0) == 0u);
    CHECK(e.states().group(5, 0) == e.states().group(0, 0));
    CHECK(group_view(e.network(), e.states(), 5, 0).range == CoordRange{0, 2});
    CHECK(check_group_structure(e.network(), e.states()).empty());

    // the dominant side is the larger group, even when it is the second communicant
    DyHypesEngine f(3, 1);
    f.states().merge_groups(f.network(), 6, 7, 0, 2);
    plan = inter_group_transform(f.network(), f.states(), 1, 7, rng);
    CHECK(plan.anchor == 7);
    CHECK(plan.mover == 1);
    f.apply(plan);
    CHECK(f.network().coord_of(1) == 5u);
    CHECK(check_group_structure(f.network(), f.states()).empty());
}

TEST_CASE("inter-group transformation is skipped inside one group") {
    DyHypesEngine e(3, 1);
    e.states().merge_groups(e.network(), 0, 1, 0, 1);
    e.states().merge_groups(e.network(), 1, 2, 0, 1);
    Rng rng(1);
    CHECK(inter_group_transform(e.network(), e.states(), 0, 2, rng).empty());
}

TEST_CASE("subtree leap swaps the partner's block next to the relative pair") {
    DyHypesEngine e(4, 1);
    e.states().merge_groups(e.network(), 0, 1, 0, 3);
    // split the level-3 group {0,1} across the halves of the level-2 block [0..3]
    TransformPlan split;
    split.phase = Phase::Leap;
    split.anchor = 0;
    split.moves = {Move{1, 1, 2}, Move{2, 2, 1}};
    e.apply(split);
    REQUIRE(e.states().relatives().size() == 1);
    REQUIRE(e.states().relatives()[0].level == 2);
    CHECK(invariant_I_check(e.network(), e.states()).empty());

    TransformPlan leap = subtree_leap(e.network(), e.states(), 0, 8);
    REQUIRE_FALSE(leap.empty());
    CHECK(leap.moves.size() == 8);
    CHECK(leap.rounds == 1 + 2 + 2);
    CHECK(leap.messages == 1 + 6 + 8);
    e.apply(leap);
    CHECK(e.network().coord_of(8) == 4u);
    CHECK(e.network().coord_of(4) == 8u);
    CHECK(e.network().is_bijection());
    CHECK(check_group_structure(e.network(), e.states()).empty());

    // no leap when the pair sits one level below the common subtree
    REQUIRE(lca_level(e.network(), 0, 8) == 1);
    CHECK(subtree_leap(e.network(), e.states(), 0, 8).empty());
}

TEST_CASE("without relative pairs the leap runs at the last level") {
    DyHypesEngine e(4, 1);
    TransformPlan leap = subtree_leap(e.network(), e.states(), 0, 15);
    REQUIRE(leap.moves.size() == 2);
    e.apply(leap);
    CHECK(e.network().coord_of(15) == 1u);
    CHECK(e.network().coord_of(1) == 15u);
    // already adjacent: nothing to do
    CHECK(subtree_leap(e.network(), e.states(), 0, 15).empty());
    // adjacent communicants never leap
    DyHypesEngine f(3, 1);
    CHECK(subtree_leap(f.network(), f.states(), 0, 1).empty());
}

TEST_CASE("serving sets the last-level timestamps and makes the pair adjacent") {
    DyHypesEngine e(4, 9);
    ServeOutcome out = e.serve(1, 0, 15);
    CHECK(out.hops == 4);
    CHECK(out.alpha == 0);
    CHECK(out.adjacent_after);
    CHECK(e.states().T(0, 3) == 1);
    CHECK(e.states().T(15, 3) == 1);
    CHECK(e.states().K(0, 3) == 1);
    CHECK(e.states().group(0, 3) == e.states().group(15, 3));

    DyHypesEngine adj(3, 1);
    out = adj.serve(1, 0, 1);
    CHECK(out.hops == 1);
    CHECK(out.rounds == 0);
    CHECK(out.messages == 0);
    CHECK(adj.network().coord_of(0) == 0u);
    CHECK_THROWS(adj.serve(2, 3, 3));
}

namespace {

struct SweepTotals {
    std::uint64_t leaps = 0;
    std::uint64_t inters = 0;
    std::uint64_t intras = 0;
};

void sweep(int dim, std::uint64_t seed, std::size_t requests, SweepTotals& totals, bool skewed) {
    DyHypesEngine e(dim, seed);
    e.set_keep_plans(true);
    std::uint64_t phase_problems = 0;
    e.set_phase_hook([&](Phase, const NetworkState& net, const NodeStates& states) {
        if (!net.is_bijection() || !check_group_structure(net, states).empty()) {
            ++phase_problems;
        }
    });
    NetworkState mirror(dim);
    std::mt19937_64 rng(seed * 31 + 7);
    const std::uint32_t n = std::uint32_t{1} << dim;
    std::uniform_int_distribution<NodeId> pick(0, n - 1);
    std::uniform_int_distribution<NodeId> hot(0, std::min<NodeId>(n - 1, 5));
    for (std::size_t i = 0; i < requests; ++i) {
        NodeId u = skewed && (rng() & 1) ? hot(rng) : pick(rng);
        NodeId v = skewed && (rng() & 1) ? hot(rng) : pick(rng);
        if (u == v) {
            v = (u + 1) % n;
        }
        const int a = lca_level(mirror, u, v);
        const SubtreeRef scope = subtree_of(mirror.coord_of(u), a, dim);
        ServeOutcome out = e.serve(static_cast<Time>(i + 1), u, v);
        REQUIRE(out.adjacent_after);
        REQUIRE(out.alpha == a);

        int rounds = 0;
        std::uint64_t messages = 0;
        for (const TransformPlan& p : out.plans) {
            std::set<std::uint32_t> from;
            std::set<std::uint32_t> to;
            std::set<NodeId> nodes;
            for (const Move& m : p.moves) {
                REQUIRE(mirror.node_at(m.from) == m.node);
                CHECK(scope.contains(m.from, dim));
                CHECK(scope.contains(m.to, dim));
                from.insert(m.from);
                to.insert(m.to);
                nodes.insert(m.node);
            }
            CHECK(from == to);
            CHECK(nodes.size() == p.moves.size());
            for (const Move& m : p.moves) {
                mirror.place_raw(m.node, m.to);
            }
            REQUIRE(mirror.is_bijection());
            int stage_rounds = 0;
            std::uint64_t stage_messages = 0;
            for (const Stage& s : p.stages) {
                stage_rounds += s.rounds;
                stage_messages += s.messages;
            }
            CHECK(stage_rounds == p.rounds);
            CHECK(stage_messages == p.messages);
            rounds += p.rounds;
            messages += p.messages;
        }
        CHECK(rounds == out.rounds);
        CHECK(messages == out.messages);
        CHECK(mirror.placement() == e.network().placement());

        CHECK(check_group_structure(e.network(), e.states()).empty());
        e.states().sync_relative_fields(e.network());
        CHECK(invariant_I_check(e.network(), e.states()).empty());
        CHECK(e.states().T(u, dim - 1) == static_cast<Time>(i + 1));
    }
    CHECK(phase_problems == 0);
    CHECK(e.stats().k_order_failures == 0);
    totals.leaps += e.stats().leaps;
    totals.inters += e.stats().inters;
    totals.intras += e.stats().intras;
}

} // namespace

TEST_CASE("engine property sweep: moves, accounting and invariants") {
    SweepTotals totals;
    for (int dim = 2; dim <= 5; ++dim) {
        for (std::uint64_t seed = 1; seed <= 6; ++seed) {
            sweep(dim, seed, 500, totals, seed % 2 == 0);
        }
    }
    CHECK(totals.leaps > 0);
    CHECK(totals.inters > 0);
    CHECK(totals.intras > 0);
}

TEST_CASE("engine property sweep over many seeds") {
    SweepTotals totals;
    for (std::uint64_t seed = 100; seed < 300; ++seed) {
        sweep(3 + static_cast<int>(seed % 3), seed, 60, totals, true);
    }
    CHECK(totals.leaps > 0);
    CHECK(totals.inters > 0);
}

TEST_CASE("engine runs are deterministic per seed") {
    DyHypesEngine a(5, 42);
    DyHypesEngine b(5, 42);
    std::mt19937_64 rng(1);
    for (Time t = 1; t <= 300; ++t) {
        NodeId u = rng() % 32;
        NodeId v = (u + 1 + rng() % 31) % 32;
        const ServeOutcome x = a.serve(t, u, v);
        const ServeOutcome y = b.serve(t, u, v);
        CHECK(x.rounds == y.rounds);
        CHECK(x.messages == y.messages);
    }
    CHECK(a.network().placement() == b.network().placement());
}
