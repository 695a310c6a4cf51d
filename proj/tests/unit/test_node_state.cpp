#include <doctest.h>

#include <vector>

#include "dyhyp/node_state.hpp"

using namespace dyhyp;

TEST_CASE("initial state is all singletons with zero timestamps") {
    NetworkState net(3);
    NodeStates states(net);
    for (NodeId x = 0; x < 8; ++x) {
        for (int d = 0; d < 3; ++d) {
            const GroupView g = group_view(net, states, x, d);
            CHECK(g.range == CoordRange{x, x});
            CHECK(g.size() == 1u);
            CHECK(g.id == x);
            CHECK(states.T(x, d) == 0);
            CHECK(states.K(x, d) == 0);
        }
        CHECK(states.T(x, 3) == kInfinity);
        CHECK(states.K(x, 3) == kInfinity);
    }
    CHECK(invariant_I_check(net, states).empty());
    CHECK(check_group_structure(net, states).empty());
    CHECK(states.relatives().empty());
    CHECK(states.lowest_relative_level(5) == 3);
}

TEST_CASE("relative distance") {
    CHECK(relative_distance(3, 8) == 0);
    CHECK(relative_distance(4, 2) == 3);
    CHECK(relative_distance(5, 3) == 3);
    CHECK_THROWS(relative_distance(2, 0));
}

TEST_CASE("merging groups of sizes 3 and 2 gives a contiguous group of 5") {
    NetworkState net(3);
    NodeStates states(net);
    CHECK(states.merge_groups(net, 0, 1, 0, 0) == 1);
    CHECK(states.merge_groups(net, 1, 2, 0, 0) == 1);
    CHECK(states.merge_groups(net, 3, 4, 0, 0) == 1);
    CHECK(group_view(net, states, 0, 0).size() == 3u);
    CHECK(states.merge_groups(net, 2, 3, 0, 0) == 1);
    const GroupView g = group_view(net, states, 4, 0);
    CHECK(g.range == CoordRange{0, 4});
    CHECK(g.size() == 5u);
    // the larger side keeps its id
    CHECK(g.id == states.group(0, 0));
    CHECK(check_group_structure(net, states).empty());

    // nesting: a level-1 group inside the level-0 group
    CHECK(states.merge_groups(net, 0, 1, 1, 1) == 1);
    CHECK(group_view(net, states, 1, 1).range == CoordRange{0, 1});
    CHECK(check_group_structure(net, states).empty());

    // non-adjacent groups are not merged
    CHECK(states.merge_groups(net, 5, 7, 0, 0) == 0);
    CHECK(states.stats().merges_skipped == 1);
}

TEST_CASE("merging across subtrees or parents is refused") {
    NetworkState net(3);
    NodeStates states(net);
    // 3 and 4 are adjacent in coordinates but in different level-1 subtrees
    CHECK(states.merge_groups(net, 3, 4, 1, 1) == 0);
    // same level-1 subtree but different level-0 parents
    CHECK(states.merge_groups(net, 0, 1, 1, 1) == 0);
}

TEST_CASE("harmonization takes the group minimum") {
    NetworkState net(3);
    NodeStates states(net);
    states.merge_groups(net, 0, 1, 0, 1);
    states.at(0, 1).T = 5;
    states.at(1, 1).T = 3;
    states.at(0, 0).K = 9;
    states.at(1, 0).K = 4;
    states.harmonize_group(net, 0, 1);
    CHECK(states.T(0, 1) == 3);
    CHECK(states.T(1, 1) == 3);
    CHECK(states.K(0, 0) == 4);
    CHECK(states.K(1, 0) == 4);
}

TEST_CASE("corrupted ranges are reported") {
    NetworkState net(3);
    NodeStates states(net);
    states.merge_groups(net, 0, 1, 0, 0);
    states.at(1, 0).range = {1, 2};
    CHECK_THROWS(group_view(net, states, 0, 0));
    CHECK_FALSE(check_group_structure(net, states).empty());
}

TEST_CASE("two relative pairs in one subtree is one violation") {
    NetworkState net(3);
    NodeStates states(net);
    auto& pairs = states.relatives();
    pairs.push_back(RelativePair{0, 0, 4, states.group(0, 1), states.group(4, 1)});
    pairs.push_back(RelativePair{0, 1, 5, states.group(1, 1), states.group(5, 1)});
    const auto violations = invariant_I_check(net, states);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].level == 0);
    CHECK(violations[0].groups.size() == 4);

    // one pair per subtree is fine
    pairs.pop_back();
    CHECK(invariant_I_check(net, states).empty());
    states.sync_relative_fields(net);
    CHECK(invariant_I_check(net, states).empty());
    CHECK(states.at(2, 0).relative_here.has_value());
    CHECK(states.at(6, 0).relative_there.has_value());

    // a one-sided node range is caught
    states.at(3, 0).relative_there.reset();
    CHECK(invariant_I_check(net, states).size() == 1);
}

TEST_CASE("a pair whose fragments are not in sibling halves is a violation") {
    NetworkState net(3);
    NodeStates states(net);
    states.relatives().push_back(RelativePair{0, 0, 1, states.group(0, 1), states.group(1, 1)});
    CHECK(invariant_I_check(net, states).size() == 1);
}

TEST_CASE("splitting a group across a subtree boundary registers a relative pair") {
    NetworkState net(3);
    NodeStates states(net);
    for (NodeId x = 0; x < 3; ++x) {
        states.merge_groups(net, x, x + 1, 0, 1);
    }
    REQUIRE(group_view(net, states, 0, 1).range == CoordRange{0, 3});
    const GroupId old1 = states.group(0, 1);

    net.swap_positions(3, 4); // node 3 moves to the other level-1 subtree
    std::vector<std::uint32_t> touched = {3, 4};
    states.rebuild_after_moves(net, touched);

    CHECK(check_group_structure(net, states).empty());
    CHECK(states.group(0, 1) == old1);
    CHECK(group_view(net, states, 0, 1).range == CoordRange{0, 2});
    CHECK(group_view(net, states, 3, 1).range == CoordRange{4, 4});
    REQUIRE(states.relatives().size() == 1);
    const RelativePair& p = states.relatives()[0];
    CHECK(p.level == 0);
    CHECK(net.coord_of(p.rep_low) < 4u);
    CHECK(net.coord_of(p.rep_high) >= 4u);
    CHECK(states.lowest_relative_level(0) == 0);
    CHECK(invariant_I_check(net, states).empty());
    CHECK(states.stats().pairs_registered == 1);

    // moving the fragment back next to its partner reunites them
    net.swap_positions(3, 4);
    states.rebuild_after_moves(net, touched);
    CHECK(check_group_structure(net, states).empty());
    CHECK(invariant_I_check(net, states).empty());
    CHECK(states.relatives().empty());
}
