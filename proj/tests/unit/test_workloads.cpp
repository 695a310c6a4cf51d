#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "dyhyp/engine.hpp"
#include "dyhyp/workloads.hpp"
#include "ws_oracle.hpp"

using namespace dyhyp;

namespace {

void check_valid(const Trace& trace, std::uint32_t n) {
    for (std::size_t i = 0; i < trace.size(); ++i) {
        CHECK(trace[i].u != trace[i].v);
        CHECK(trace[i].u < n);
        CHECK(trace[i].v < n);
        CHECK(trace[i].t == static_cast<Time>(i + 1));
    }
}

} // namespace

TEST_CASE("uniform pairs") {
    const Trace two = gen_uniform(2, 100, 1);
    check_valid(two, 2);
    for (const Request& r : two) {
        CHECK(((r.u == 0 && r.v == 1) || (r.u == 1 && r.v == 0)));
    }
    CHECK(gen_uniform(16, 500, 9) == gen_uniform(16, 500, 9));
    CHECK_FALSE(gen_uniform(16, 500, 9) == gen_uniform(16, 500, 10));

    // chi-square over the 56 ordered pairs of 8 nodes
    const std::uint32_t n = 8;
    const std::size_t m = 56000;
    const Trace trace = gen_uniform(n, m, 3);
    check_valid(trace, n);
    std::map<std::pair<NodeId, NodeId>, int> counts;
    for (const Request& r : trace) {
        ++counts[{r.u, r.v}];
    }
    CHECK(counts.size() == 56);
    const double expected = static_cast<double>(m) / 56.0;
    double chi2 = 0.0;
    for (const auto& [pair, c] : counts) {
        chi2 += (c - expected) * (c - expected) / expected;
    }
    // 55 degrees of freedom, 0.1% critical value
    CHECK(chi2 < 93.2);
}

TEST_CASE("repeating pattern") {
    const Trace t = gen_repeating({{0, 1}}, 5);
    REQUIRE(t.size() == 5);
    NetworkState net(3);
    CommGraph g(8);
    for (const Request& r : t) {
        if (r.t > 1) {
            CHECK(ws_number(g, net, r.t, r.u, r.v).T == 2);
        }
        g.record(r.t, r.u, r.v);
    }

    const Trace fig = gen_repeating({{0, 1}, {0, 2}, {3, 2}, {1, 4}, {5, 6}, {4, 3}, {0, 1}}, 1);
    CommGraph h(8);
    for (std::size_t i = 0; i + 1 < fig.size(); ++i) {
        h.record(fig[i].t, fig[i].u, fig[i].v);
    }
    CHECK(ws_number(h, net, 7, 0, 1).T == 5);

    const Trace mixed = gen_repeating({{0, 1}, {2, 3}, {1, 2}, {4, 0}}, 6);
    CommGraph k(8);
    for (const Request& r : mixed) {
        CHECK(ws_number(k, net, r.t, r.u, r.v).T == test_oracle::ws(mixed, net, r.t, r.u, r.v));
        k.record(r.t, r.u, r.v);
    }
    CHECK_THROWS(gen_repeating({}, 3));
    CHECK_THROWS(gen_repeating({{2, 2}}, 3));
}

TEST_CASE("zipf top partner mass") {
    const std::uint32_t n = 64;
    const double s = 1.2;
    const std::size_t m = 200000;
    const Trace trace = gen_zipf(n, m, s, 5);
    check_valid(trace, n);
    std::vector<std::map<NodeId, int>> per_source(n);
    std::vector<int> totals(n, 0);
    for (const Request& r : trace) {
        ++per_source[r.u][r.v];
        ++totals[r.u];
    }
    std::size_t top = 0;
    for (NodeId u = 0; u < n; ++u) {
        int best = 0;
        for (const auto& [v, c] : per_source[u]) {
            best = std::max(best, c);
        }
        top += static_cast<std::size_t>(best);
    }
    double harmonic = 0.0;
    for (std::uint32_t k = 1; k <= n - 1; ++k) {
        harmonic += 1.0 / std::pow(static_cast<double>(k), s);
    }
    const double analytic = 1.0 / harmonic;
    const double measured = static_cast<double>(top) / static_cast<double>(m);
    CHECK(std::abs(measured - analytic) <= 0.05 * analytic);

    // a vanishing exponent is nearly uniform
    const Trace flat = gen_zipf(16, 60000, 1e-9, 2);
    std::map<NodeId, int> from0;
    int total0 = 0;
    for (const Request& r : flat) {
        if (r.u == 0) {
            ++from0[r.v];
            ++total0;
        }
    }
    CHECK(from0.size() == 15);
    for (const auto& [v, c] : from0) {
        CHECK(std::abs(static_cast<double>(c) / total0 - 1.0 / 15.0) < 0.02);
    }
    CHECK(gen_zipf(32, 300, 1.2, 4) == gen_zipf(32, 300, 1.2, 4));
    CHECK_THROWS(gen_zipf(32, 10, 0.0, 1));
}

TEST_CASE("single-server traces") {
    const Trace cyc = gen_single_server(parse_workload("cyclic"), 16, 45, 3, 1);
    check_valid(cyc, 16);
    std::set<NodeId> first_round;
    for (std::size_t i = 0; i < 15; ++i) {
        CHECK(cyc[i].u == 3u);
        first_round.insert(cyc[i].v);
    }
    CHECK(first_round.size() == 15);
    for (const char* w : {"uniform", "zipf", "repeat:4"}) {
        const Trace t = gen_single_server(parse_workload(w), 32, 200, 7, 2);
        check_valid(t, 32);
        for (const Request& r : t) {
            CHECK(r.u == 7u);
        }
    }
}

TEST_CASE("workload spec parsing") {
    CHECK(parse_workload("uniform").kind == WorkloadKind::Uniform);
    CHECK(parse_workload("zipf:0.8").zipf_s == doctest::Approx(0.8));
    CHECK(parse_workload("repeat:5").pattern_length == 5u);
    CHECK(parse_workload("adversarial:2").adversary_c == doctest::Approx(2.0));
    CHECK(parse_workload("file:x.jsonl").path == "x.jsonl");
    CHECK(parse_workload("zipf:1.5").to_string() == "zipf:1.5");
    CHECK_THROWS(parse_workload("zipf:-1"));
    CHECK_THROWS(parse_workload("repeat:0"));
    CHECK_THROWS(parse_workload("bursty"));
    CHECK_THROWS(gen_workload(parse_workload("cyclic"), 8, 10, 1));
}

TEST_CASE("trace JSONL round trip and validation") {
    const Trace t = gen_uniform(8, 50, 1);
    std::stringstream buf;
    write_trace_jsonl(buf, t);
    CHECK(read_trace_jsonl(buf) == t);

    std::stringstream bad_order("{\"t\":2,\"u\":0,\"v\":1}\n{\"t\":2,\"u\":1,\"v\":0}\n");
    CHECK_THROWS(read_trace_jsonl(bad_order));
    std::stringstream self("{\"t\":1,\"u\":3,\"v\":3}\n");
    CHECK_THROWS(read_trace_jsonl(self));
    std::stringstream garbage("{\"t\":1,\"u\":3}\n");
    CHECK_THROWS(read_trace_jsonl(garbage));
}

TEST_CASE("adversarial construction") {
    // singleton start in three dimensions: the first request is always far enough
    {
        DyHypesEngine e(3, 1);
        AdversaryReport report;
        const Trace base = {{1, 0, 1}};
        const Trace out = gen_adversarial_ws([&]() -> const NetworkState& { return e.network(); },
                                             [&](const Request& r) { e.serve(r.t, r.u, r.v); }, base, 1.0, 1, &report);
        REQUIRE(out.size() == 1);
        CHECK(report.tree_distance_sum >= 1);
    }
    {
        DyHypesEngine e(5, 2);
        AdversaryReport report;
        const Trace base = gen_uniform(32, 2000, 3);
        const Trace out = gen_adversarial_ws([&]() -> const NetworkState& { return e.network(); },
                                             [&](const Request& r) { e.serve(r.t, r.u, r.v); }, base, 1.0, 4, &report);
        check_valid(out, 32);
        CHECK(report.threshold_factor == doctest::Approx(std::log2(5.0)));
        CHECK(static_cast<double>(report.tree_distance_sum) >=
              static_cast<double>(report.ws_bound) / report.threshold_factor);
        // same sources as the base sequence
        for (std::size_t i = 0; i < out.size(); ++i) {
            CHECK(out[i].u == base[i].u);
        }
    }
    CHECK_THROWS(gen_adversarial_ws([]() -> const NetworkState& { static NetworkState n(3); return n; },
                                    [](const Request&) {}, Trace{{1, 0, 1}}, 0.0, 1));
}

TEST_CASE("seed mixing separates salts") {
    CHECK(mix_seed(1, 1) != mix_seed(1, 2));
    CHECK(mix_seed(1, 1) != mix_seed(2, 1));
    CHECK(mix_seed(7, 3) == mix_seed(7, 3));
}
