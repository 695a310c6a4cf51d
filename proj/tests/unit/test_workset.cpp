#include <doctest.h>

#include <algorithm>
#include <queue>
#include <random>
#include <set>

#include "dyhyp/workset.hpp"
#include "ws_oracle.hpp"

using namespace dyhyp;

TEST_CASE("record validates its input") {
    CommGraph g(8);
    g.record(1, 0, 1);
    CHECK(g.edges().size() == 1);
    CHECK_THROWS(g.record(1, 2, 3));
    CHECK_THROWS(g.record(0, 2, 3));
    CHECK_THROWS(g.record(2, 4, 4));
    CHECK_THROWS(g.record(3, 0, 8));
}

TEST_CASE("repeated communication trace gives working set number 5") {
    // nodes: u=0 v=1 e=2 a=3 k=4 b=5 c=6
    const Trace trace = {{1, 0, 1}, {2, 0, 2}, {3, 3, 2}, {4, 1, 4}, {5, 5, 6}, {6, 4, 3}, {7, 0, 1}};
    NetworkState net(3);
    CommGraph g(8);
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
        g.record(trace[i].t, trace[i].u, trace[i].v);
    }
    const auto q = ws_number(g, net, 7, 0, 1);
    CHECK(q.T == 5);
    CHECK(q.kind == WsCase::RepeatPair);
    CHECK(test_oracle::ws(trace, net, 7, 0, 1) == 5);
    g.record(7, 0, 1);
    CHECK(g.edges().size() == 7);
}

TEST_CASE("working set examples") {
    NetworkState net(3);
    CommGraph fresh(8);
    auto q = ws_number(fresh, net, 1, 0, 4);
    CHECK(q.T == 8);
    CHECK(q.kind == WsCase::DisjointComponents);
    CHECK(ws_number(fresh, net, 1, 0, 1).T == 2);

    CommGraph g(8);
    g.record(1, 0, 1); // a=0 b=1 c=2
    g.record(2, 1, 2);
    q = ws_number(g, net, 3, 0, 1);
    CHECK(q.T == 3);
    CHECK(q.kind == WsCase::RepeatPair);
    q = ws_number(g, net, 3, 0, 2);
    CHECK(q.T == 3);
    CHECK(q.kind == WsCase::SameComponent);
    // disjoint: {0,1,2} and {5} at tree distance 3
    q = ws_number(g, net, 3, 0, 5);
    CHECK(q.T == 8);
    // disjoint, adjacent: max(2, 3 + 1)
    CHECK(ws_number(g, net, 3, 2, 3).T == 4);
    CHECK_THROWS(ws_number(g, net, 3, 2, 2));
}

TEST_CASE("ws bound contributions") {
    NetworkState net(3);
    std::vector<NetworkState> nets = {net};
    CHECK(ws_bound(Trace{{1, 0, 1}}, nets) == 1);

    const Trace trace = {{1, 0, 1}, {2, 0, 2}, {3, 3, 2}, {4, 1, 4}, {5, 5, 6}, {6, 4, 3}, {7, 0, 1}};
    std::vector<NetworkState> same(trace.size(), net);
    std::uint64_t expected = 0;
    for (const Request& r : trace) {
        expected += ceil_log2(test_oracle::ws(trace, net, r.t, r.u, r.v));
    }
    CHECK(ws_bound(trace, same) == expected);
    // the last request contributes ceil(log2 5) = 3
    const Trace prefix(trace.begin(), trace.end() - 1);
    std::vector<NetworkState> fewer(prefix.size(), net);
    CHECK(ws_bound(trace, same) - ws_bound(prefix, fewer) == 3);
}

TEST_CASE("working set property examples") {
    NetworkState net(3);
    CommGraph g(8);
    g.record(1, 0, 1);
    CHECK(ws_property_holds(net, g, 2, 0, 1));
    g.record(2, 1, 4);
    g.record(3, 4, 5);
    // 0 and 4 share a component of 4 nodes but sit at tree distance 3
    CHECK(ws_number(g, net, 4, 0, 4).T == 4);
    CHECK_FALSE(ws_property_holds(net, g, 4, 0, 4));
}

TEST_CASE("ws_number matches breadth-first search on random traces") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int dim = 2 + static_cast<int>(rng() % 5);
        NetworkState net(dim);
        const std::uint32_t n = net.size();
        const std::size_t len = 1 + rng() % 100;
        std::uniform_int_distribution<NodeId> pick(0, n - 1);
        Trace trace;
        CommGraph g(n);
        std::vector<NetworkState> nets;
        // a small node pool forces repeats and shared components
        const NodeId pool = std::max<NodeId>(2, n / (1 + rng() % 4));
        std::uniform_int_distribution<NodeId> pool_pick(0, pool - 1);
        for (std::size_t i = 0; i < len; ++i) {
            NodeId u = pool_pick(rng);
            NodeId v = pool_pick(rng);
            if (u == v) {
                v = (u + 1) % pool;
            }
            const Time t = static_cast<Time>(i + 1);
            trace.push_back({t, u, v});
            const auto q = ws_number(g, net, t, u, v);
            REQUIRE(q.T == test_oracle::ws(trace, net, t, u, v));
            nets.push_back(net);
            g.record(t, u, v);
            net.swap_positions(pick(rng), pick(rng));
        }
        std::uint64_t expected = 0;
        for (std::size_t i = 0; i < trace.size(); ++i) {
            expected += ceil_log2(test_oracle::ws(trace, nets[i], trace[i].t, trace[i].u, trace[i].v));
        }
        CHECK(ws_bound(trace, nets) == expected);
    }
}

TEST_CASE("windowed components are symmetric and grow with the window") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::uint32_t n = 2 + rng() % 15;
        const std::size_t len = 1 + rng() % 20;
        CommGraph g(n);
        std::uniform_int_distribution<NodeId> pick(0, n - 1);
        for (std::size_t i = 0; i < len; ++i) {
            NodeId u = pick(rng);
            NodeId v = pick(rng);
            if (u == v) {
                v = (u + 1) % n;
            }
            g.record(static_cast<Time>(i + 1), u, v);
        }
        const Time end = static_cast<Time>(len + 1);
        for (Time from = 0; from <= end; ++from) {
            for (NodeId u = 0; u < n; ++u) {
                const auto mu = g.component_mask(u, from, end);
                CHECK(g.component_size(u, from, end) == static_cast<std::uint32_t>(std::count(mu.begin(), mu.end(), 1)));
                const auto oracle = test_oracle::component(g.edges(), from, end, u);
                for (NodeId v = 0; v < n; ++v) {
                    CHECK(static_cast<bool>(mu[v]) == static_cast<bool>(oracle.count(v)));
                    const auto mv = g.component_mask(v, from, end);
                    CHECK(mu[v] == mv[u]);
                }
                if (from > 0) {
                    CHECK(g.component_size(u, from - 1, end) >= g.component_size(u, from, end));
                }
            }
        }
    }
}

TEST_CASE("far-partner witness agrees with exhaustive scan") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const int dim = 2 + static_cast<int>(rng() % 3);
        NetworkState net(dim);
        const std::uint32_t n = net.size();
        CommGraph g(n);
        Trace trace;
        std::uniform_int_distribution<NodeId> pick(0, n - 1);
        for (int i = 0; i < 30; ++i) {
            NodeId u = pick(rng);
            NodeId v = pick(rng);
            if (u == v) {
                v = (u + 1) % n;
            }
            trace.push_back({i + 1, u, v});
            g.record(i + 1, u, v);
            net.swap_positions(pick(rng), pick(rng));
            for (NodeId x = 0; x < n; ++x) {
                bool any = false;
                for (NodeId y = 0; y < n && !any; ++y) {
                    if (y != x) {
                        any = tree_distance(net, x, y) >= ceil_log2(test_oracle::ws(trace, net, i + 2, x, y));
                    }
                }
                CHECK(tree_distance_witness_exists(net, g, i + 2, x) == any);
                CHECK(any);
            }
        }
    }
}
