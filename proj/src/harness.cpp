#include "dyhyp/harness.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <tuple>

#include "dyhyp/single_server.hpp"

namespace dyhyp {

const char* to_string(Algorithm a) {
    return a == Algorithm::DyHypes ? "dyhypes" : "ss";
}

Algorithm parse_algorithm(const std::string& text) {
    if (text == "dyhypes") {
        return Algorithm::DyHypes;
    }
    if (text == "ss" || text == "dyhypes_s" || text == "dyhypes-s") {
        return Algorithm::SingleServer;
    }
    throw std::invalid_argument("unknown algorithm: " + text);
}

void validate(const RunConfig& config) {
    if (config.dim < 2 || config.dim > kMaxDimension) {
        throw std::invalid_argument("dimension must be in [2, " + std::to_string(kMaxDimension) + "]");
    }
    if (config.m < 1 && !config.trace) {
        throw std::invalid_argument("m must be at least 1");
    }
    const std::uint32_t n = std::uint32_t{1} << config.dim;
    if (config.server >= n) {
        throw std::invalid_argument("server id out of range");
    }
    if (config.word_limit < 1) {
        throw std::invalid_argument("word limit must be positive");
    }
    if (config.trace) {
        if (config.trace->empty()) {
            throw std::invalid_argument("trace is empty");
        }
        for (const Request& r : *config.trace) {
            if (r.u >= n || r.v >= n || r.u == r.v) {
                throw std::invalid_argument("trace request out of range at t=" + std::to_string(r.t));
            }
            if (config.algorithm == Algorithm::SingleServer && r.u != config.server && r.v != config.server) {
                throw std::invalid_argument("single-server trace request without the server at t=" +
                                            std::to_string(r.t));
            }
        }
    }
    if (config.algorithm == Algorithm::DyHypes && config.workload.kind == WorkloadKind::Cyclic && !config.trace) {
        throw std::invalid_argument("cyclic workload needs the single-server algorithm");
    }
}

nlohmann::json to_json(const RunConfig& config) {
    return {{"dim", config.dim},
            {"algorithm", to_string(config.algorithm)},
            {"workload", config.trace ? std::string("trace") : config.workload.to_string()},
            {"m", config.trace ? config.trace->size() : config.m},
            {"seed", config.seed},
            {"checks", config.checks},
            {"server", config.server},
            {"word_limit", config.word_limit},
            {"sample_every", config.sample_every}};
}

nlohmann::json to_json(const RunSummary& s) {
    nlohmann::json j = {{"m", s.m},
                        {"total_hops", s.total_hops},
                        {"total_rounds", s.total_rounds},
                        {"total_cost", s.total_cost},
                        {"ws_bound", s.ws_bound},
                        {"cost_ratio", s.cost_ratio},
                        {"hop_ratio", s.hop_ratio},
                        {"total_messages", s.total_messages},
                        {"max_cost", s.max_cost},
                        {"max_rounds_per_depth", s.max_rounds_per_depth},
                        {"max_state_words", s.max_state_words},
                        {"adjacency_failures", s.adjacency_failures},
                        {"bijection_failures", s.bijection_failures},
                        {"invariant_failures", s.invariant_failures},
                        {"contiguity_failures", s.contiguity_failures},
                        {"phase_failures", s.phase_failures},
                        {"witness_failures", s.witness_failures},
                        {"congest_violations", s.congest_violations},
                        {"messages_by_alpha", s.messages_by_alpha},
                        {"requests_by_alpha", s.requests_by_alpha},
                        {"problems", s.first_problems}};
    j["engine"] = {{"leaps", s.engine.leaps},
                   {"inters", s.engine.inters},
                   {"intras", s.engine.intras},
                   {"k_order_checks", s.engine.k_order_checks},
                   {"k_order_failures", s.engine.k_order_failures},
                   {"t1_updates", s.engine.t1_updates}};
    j["groups"] = {{"pairs_registered", s.maintenance.pairs_registered},
                   {"pairs_suppressed", s.maintenance.pairs_suppressed},
                   {"pairs_dropped", s.maintenance.pairs_dropped},
                   {"pairs_reunited", s.maintenance.pairs_reunited},
                   {"merges_skipped", s.maintenance.merges_skipped}};
    if (!s.samples.empty()) {
        double sum = 0.0;
        for (const FractionSample& f : s.samples) {
            sum += f.fraction;
        }
        j["samples"] = {{"count", s.samples.size()}, {"mean_fraction", sum / static_cast<double>(s.samples.size())}};
    }
    if (s.adversary) {
        j["adversary"] = {{"substitutions", s.adversary->substitutions},
                          {"tree_distance_sum", s.adversary->tree_distance_sum},
                          {"ws_bound", s.adversary->ws_bound},
                          {"threshold_factor", s.adversary->threshold_factor}};
    }
    return j;
}

namespace {

struct Runner {
    const RunConfig& config;
    RunResult& result;
    std::optional<DyHypesEngine> dyhypes;
    std::optional<SingleServerEngine> single;
    CommGraph graph;
    Rng sampler;
    std::uint64_t phase_failures = 0;

    Runner(const RunConfig& c, RunResult& r)
        : config(c), result(r), graph(std::uint32_t{1} << c.dim), sampler(mix_seed(c.seed, 3)) {
        if (c.algorithm == Algorithm::DyHypes) {
            dyhypes.emplace(c.dim, mix_seed(c.seed, 2));
            dyhypes->set_keep_plans(c.keep_plans);
            if (c.checks & checks::kPerPhase) {
                dyhypes->set_phase_hook([this](Phase phase, const NetworkState& net, const NodeStates& states) {
                    bool ok = net.is_bijection();
                    std::vector<std::string> problems;
                    if (ok) {
                        problems = check_group_structure(net, states);
                        ok = problems.empty();
                    }
                    if (!ok) {
                        ++phase_failures;
                        note(std::string("after ") + to_string(phase) + ": " +
                             (problems.empty() ? std::string("placement is not a bijection") : problems.front()));
                    }
                });
            }
        } else {
            single.emplace(c.dim, c.server, mix_seed(c.seed, 2));
        }
    }

    const NetworkState& network() const {
        return dyhypes ? dyhypes->network() : single->network();
    }

    void note(const std::string& what) {
        if (result.summary.first_problems.size() < 10) {
            result.summary.first_problems.push_back(what);
        }
    }

    void sample_after(Time now) {
        const NetworkState& net = network();
        const int dim = net.dim();
        RunSummary& s = result.summary;
        if (dyhypes) {
            std::uniform_int_distribution<NodeId> pick(0, net.size() - 1);
            const NodeId u = pick(sampler);
            const NodeStates& states = dyhypes->states();
            for (int d = 0; d < dim; ++d) {
                const Time T = states.T(u, d);
                if (T <= 0) {
                    continue;
                }
                const std::vector<char> mask = graph.component_mask(u, T, now);
                const SubtreeRef block = subtree_of(net.coord_of(u), d, dim);
                std::uint32_t inside = 0;
                for (std::uint32_t c = block.first(dim); c <= block.last(dim); ++c) {
                    inside += mask[net.node_at(c)] ? 1 : 0;
                }
                s.samples.push_back(FractionSample{d, static_cast<double>(inside) / block.size(dim)});
            }
        } else {
            const NodeId u = config.server;
            for (int d = 0; d < dim; ++d) {
                const Time width = Time{1} << (dim - d);
                if (now - 1 < width + 1) {
                    continue;
                }
                const std::vector<char> mask = graph.component_mask(u, now - width - 1, now);
                const SubtreeRef block = subtree_of(net.coord_of(u), d, dim);
                std::uint32_t inside = 0;
                for (std::uint32_t c = block.first(dim); c <= block.last(dim); ++c) {
                    inside += mask[net.node_at(c)] ? 1 : 0;
                }
                s.samples.push_back(FractionSample{d, static_cast<double>(inside) / block.size(dim)});
            }
        }
    }

    void serve(const Request& r) {
        RunSummary& s = result.summary;
        const NetworkState& before = network();
        const int dim = before.dim();
        const WorkingSetQueryResult ws = ws_number(graph, before, r.t, r.u, r.v);

        RequestMetrics m;
        m.t = r.t;
        m.u = r.u;
        m.v = r.v;
        m.ws = ws.T;
        m.log_ws = ceil_log2(ws.T);
        m.tree_dist = tree_distance(before, r.u, r.v);
        bool adjacent = false;
        if (dyhypes) {
            ServeOutcome out = dyhypes->serve(r.t, r.u, r.v);
            m.hops = out.hops;
            m.rounds = out.rounds;
            m.messages = out.messages;
            m.alpha = out.alpha;
            adjacent = out.adjacent_after;
            for (TransformPlan& p : out.plans) {
                result.plans.push_back(std::move(p));
            }
        } else {
            const NodeId client = r.u == config.server ? r.v : r.u;
            SingleServerOutcome out = single->serve(client);
            m.hops = out.hops;
            m.rounds = out.rounds;
            m.messages = out.messages;
            m.alpha = out.alpha;
            adjacent = out.adjacent_after;
            if (config.keep_plans) {
                TransformPlan plan;
                plan.phase = Phase::Intra;
                plan.anchor = config.server;
                plan.mover = client;
                plan.alpha = out.alpha;
                plan.moves = out.swaps;
                for (int d = out.alpha + 1; d <= dim - 1; ++d) {
                    Stage swap;
                    swap.kind = StageKind::Exchange;
                    swap.rounds = 1;
                    swap.messages = 2;
                    const std::size_t k = static_cast<std::size_t>(d - out.alpha - 1);
                    // a draw that lands on the client itself still pays for the handshake
                    std::uint32_t a = single->network().coord_of(client);
                    std::uint32_t b = a;
                    if (k < out.swaps.size()) {
                        a = out.swaps[k].from;
                        b = out.swaps[k].to;
                    }
                    swap.pairs = {{a, b}, {b, a}};
                    plan.stages.push_back(swap);
                }
                finalize_accounting(plan);
                result.plans.push_back(std::move(plan));
            }
        }
        graph.record(r.t, r.u, r.v);
        m.cost = m.hops + m.rounds;

        const NetworkState& net = network();
        bool ok = true;
        if ((config.checks & checks::kAdjacency) && !adjacent) {
            ok = false;
            ++s.adjacency_failures;
            note("t=" + std::to_string(r.t) + ": communicants not adjacent after the request");
        }
        if ((config.checks & checks::kBijection) && !net.is_bijection()) {
            ok = false;
            ++s.bijection_failures;
            note("t=" + std::to_string(r.t) + ": placement is not a bijection");
        }
        if (dyhypes && (config.checks & checks::kInvariantI)) {
            dyhypes->states().sync_relative_fields(net);
            auto violations = invariant_I_check(net, dyhypes->states());
            if (!violations.empty()) {
                ok = false;
                ++s.invariant_failures;
                note("t=" + std::to_string(r.t) + ": " + violations.front().what);
            }
        }
        if (dyhypes && (config.checks & checks::kContiguity)) {
            auto problems = check_group_structure(net, dyhypes->states());
            if (!problems.empty()) {
                ok = false;
                ++s.contiguity_failures;
                note("t=" + std::to_string(r.t) + ": " + problems.front());
            }
        }
        if (config.checks & checks::kTreeDistanceWitness) {
            for (NodeId x = 0; x < net.size(); ++x) {
                if (!tree_distance_witness_exists(net, graph, r.t + 1, x)) {
                    ok = false;
                    ++s.witness_failures;
                    note("t=" + std::to_string(r.t) + ": no far partner for node " + std::to_string(x));
                    break;
                }
            }
        }
        m.invariant_ok = ok;

        s.total_hops += static_cast<std::uint64_t>(m.hops);
        s.total_rounds += static_cast<std::uint64_t>(m.rounds);
        s.total_cost += static_cast<std::uint64_t>(m.cost);
        s.total_messages += m.messages;
        s.ws_bound += static_cast<std::uint64_t>(m.log_ws);
        s.max_cost = std::max(s.max_cost, m.cost);
        s.max_rounds_per_depth =
            std::max(s.max_rounds_per_depth, static_cast<double>(m.rounds) / static_cast<double>(dim - m.alpha));
        s.messages_by_alpha[static_cast<std::size_t>(m.alpha)] += m.messages;
        s.requests_by_alpha[static_cast<std::size_t>(m.alpha)] += 1;
        result.metrics.push_back(m);
        result.trace.push_back(r);

        if (config.sample_every > 0 && result.metrics.size() % config.sample_every == 0) {
            sample_after(r.t + 1);
        }
    }
};

} // namespace

RunResult run(const RunConfig& config) {
    validate(config);
    RunResult result;
    result.config = config;
    const std::uint32_t n = std::uint32_t{1} << config.dim;
    RunSummary& s = result.summary;
    s.messages_by_alpha.assign(static_cast<std::size_t>(config.dim), 0);
    s.requests_by_alpha.assign(static_cast<std::size_t>(config.dim), 0);

    Runner runner(config, result);
    if (config.checks & checks::kTreeDistanceWitness) {
        for (NodeId x = 0; x < n; ++x) {
            if (!tree_distance_witness_exists(runner.network(), runner.graph, 1, x)) {
                ++s.witness_failures;
            }
        }
    }

    const std::uint64_t trace_seed = mix_seed(config.seed, 1);
    if (config.trace) {
        for (const Request& r : *config.trace) {
            runner.serve(r);
        }
    } else if (config.workload.kind == WorkloadKind::Adversarial) {
        Trace base = config.algorithm == Algorithm::DyHypes
                         ? gen_uniform(n, config.m, trace_seed)
                         : gen_single_server(config.workload, n, config.m, config.server, trace_seed);
        AdversaryReport report;
        if (config.algorithm == Algorithm::SingleServer) {
            // the source stays the server, so only substitute clients
            for (Request& r : base) {
                r.u = config.server;
            }
        }
        gen_adversarial_ws([&]() -> const NetworkState& { return runner.network(); },
                           [&](const Request& r) { runner.serve(r); }, base, config.workload.adversary_c,
                           mix_seed(config.seed, 4), &report);
        s.adversary = report;
    } else {
        Trace trace = config.algorithm == Algorithm::DyHypes
                          ? gen_workload(config.workload, n, config.m, trace_seed)
                          : gen_single_server(config.workload, n, config.m, config.server, trace_seed);
        for (const Request& r : trace) {
            runner.serve(r);
        }
    }

    s.m = result.metrics.size();
    s.phase_failures = runner.phase_failures;
    const double denom = static_cast<double>(s.ws_bound + s.m);
    s.cost_ratio = static_cast<double>(s.total_cost) / denom;
    s.hop_ratio = static_cast<double>(s.total_hops) / denom;
    if (runner.dyhypes) {
        s.engine = runner.dyhypes->stats();
        s.maintenance = runner.dyhypes->states().stats();
        for (NodeId x = 0; x < n; ++x) {
            s.max_state_words = std::max(s.max_state_words, runner.dyhypes->states().state_words(x));
        }
    } else {
        s.max_state_words = 1;
    }
    if (config.snapshot) {
        if (runner.dyhypes) {
            result.snapshot = snapshot_json(runner.dyhypes->network(), runner.dyhypes->states());
        } else {
            const NetworkState& net = runner.network();
            result.snapshot = {{"dim", net.dim()}, {"server", config.server}, {"placement", net.placement()}};
        }
    }
    if (config.keep_plans) {
        s.congest_violations = congest_audit(result.plans, config.dim, config.word_limit).size();
    }
    return result;
}

std::vector<CongestViolation> congest_audit(const std::vector<TransformPlan>& plans, int dim, int word_limit) {
    std::vector<CongestViolation> out;
    for (std::size_t p = 0; p < plans.size(); ++p) {
        std::map<std::tuple<int, std::uint32_t, std::uint32_t>, int> usage;
        int offset = 0;
        auto send = [&](int round, std::uint32_t a, std::uint32_t b) { ++usage[{round, a, b}]; };
        for (const Stage& stage : plans[p].stages) {
            if (stage.words > word_limit) {
                out.push_back({p, offset, 0, 0, "message carries more than the allowed O(log n) words"});
            }
            int rounds = 0;
            std::uint64_t messages = 0;
            switch (stage.kind) {
            case StageKind::Disseminate:
            case StageKind::Simulate:
                for (std::size_t r = 0; r < stage.regions.size(); ++r) {
                    const SubtreeRef& region = stage.regions[r];
                    const std::uint32_t root = stage.roots[r];
                    const int depth = dim - region.level;
                    rounds = std::max(rounds, depth);
                    for (int k = 1; k <= depth; ++k) {
                        // broadcast uses bit positions level+1, level+2, ...; the reduction runs them backwards
                        const int pos = stage.kind == StageKind::Disseminate ? region.level + k : dim - k + 1;
                        const std::uint32_t bit = std::uint32_t{1} << (dim - pos);
                        const std::uint32_t agree = bit - 1;
                        for (std::uint32_t x = region.first(dim); x <= region.last(dim); ++x) {
                            const std::uint32_t diff = x ^ root;
                            if (stage.kind == StageKind::Disseminate) {
                                if ((diff & (bit | agree)) == 0) {
                                    send(offset + k, x, x ^ bit);
                                    ++messages;
                                }
                            } else if ((diff & bit) && (diff & agree) == 0) {
                                send(offset + k, x, x ^ bit);
                                ++messages;
                            }
                        }
                    }
                }
                break;
            case StageKind::Select:
                for (const auto& members : stage.members) {
                    const std::size_t size = members.size();
                    const std::size_t padded = std::size_t{1} << ceil_log2(size);
                    const int depth = ceil_log2(size);
                    rounds = std::max(rounds, depth);
                    // dummies take the odd slot of the last pairs and are simulated by their even partner
                    const std::size_t dummies = padded - size;
                    std::vector<std::uint32_t> slot(padded);
                    std::size_t next = 0;
                    for (std::size_t q = 0; q < padded / 2; ++q) {
                        slot[2 * q] = members[next++];
                        slot[2 * q + 1] = q < padded / 2 - dummies ? members[next++] : slot[2 * q];
                    }
                    auto coord = [&](std::size_t j) { return slot[j]; };
                    for (int k = 1; k <= depth; ++k) {
                        const std::size_t step = std::size_t{1} << k;
                        for (std::size_t i = 0; i < padded; i += step) {
                            const std::uint32_t from = coord(i + step / 2);
                            const std::uint32_t to = coord(i);
                            ++messages;
                            if (from != to) {
                                send(offset + k, from, to);
                            }
                        }
                    }
                }
                break;
            case StageKind::Exchange:
                for (const auto& [a, b] : stage.pairs) {
                    rounds = 1;
                    ++messages;
                    if (a != b) {
                        send(offset + 1, a, b);
                    }
                }
                break;
            case StageKind::Relocate:
                // an overlay takeover: nodes acquire new links, no link-level schedule to audit
                rounds = stage.rounds;
                messages = stage.messages;
                break;
            }
            if (messages != stage.messages || rounds > stage.rounds) {
                out.push_back({p, offset, 0, 0, "stage schedule disagrees with its declared rounds or messages"});
            }
            offset += stage.rounds;
        }
        for (const auto& [key, count] : usage) {
            if (count > 1) {
                out.push_back({p, std::get<0>(key), std::get<1>(key), std::get<2>(key),
                               "link carries more than one message in a round"});
            }
        }
    }
    return out;
}

void write_metrics_csv(std::ostream& out, const std::vector<RequestMetrics>& metrics) {
    out << "t,u,v,hops,rounds,messages,ws,log_ws,cost,invariant_ok\n";
    for (const RequestMetrics& m : metrics) {
        out << m.t << ',' << m.u << ',' << m.v << ',' << m.hops << ',' << m.rounds << ',' << m.messages << ','
            << m.ws << ',' << m.log_ws << ',' << m.cost << ',' << (m.invariant_ok ? 1 : 0) << '\n';
    }
}

nlohmann::json plan_to_json(const TransformPlan& plan) {
    nlohmann::json moves = nlohmann::json::array();
    for (const Move& m : plan.moves) {
        moves.push_back({{"node", m.node}, {"from", m.from}, {"to", m.to}});
    }
    nlohmann::json j = {{"phase", to_string(plan.phase)},
                        {"alpha", plan.alpha},
                        {"anchor", plan.anchor},
                        {"mover", plan.mover},
                        {"rounds", plan.rounds},
                        {"messages", plan.messages},
                        {"moves", moves}};
    if (plan.phase == Phase::Intra && !plan.ranked.empty()) {
        nlohmann::json ranked = nlohmann::json::array();
        for (const RankedNode& r : plan.ranked) {
            ranked.push_back({{"node", r.node},
                              {"key", r.key == kInfinity ? nlohmann::json("inf") : nlohmann::json(r.key)},
                              {"bucket", r.bucket},
                              {"rank", r.rank}});
        }
        j["ranked"] = ranked;
        j["count_anchor"] = plan.reposition.count_anchor;
        j["count_mover"] = plan.reposition.count_mover;
        j["count_upto"] = plan.reposition.count_upto;
    }
    return j;
}

nlohmann::json snapshot_json(const NetworkState& net, NodeStates& states) {
    states.sync_relative_fields(net);
    auto range_json = [](const std::optional<CoordRange>& r) {
        return r ? nlohmann::json::array({r->start, r->end}) : nlohmann::json(nullptr);
    };
    nlohmann::json nodes = nlohmann::json::array();
    for (NodeId x = 0; x < net.size(); ++x) {
        nlohmann::json levels = nlohmann::json::array();
        for (int d = 0; d < net.dim(); ++d) {
            const LevelState& s = states.at(x, d);
            levels.push_back({{"group", s.group},
                              {"T", s.T},
                              {"K", s.K},
                              {"counter", s.counter},
                              {"next_t", s.next_t},
                              {"start", s.range.start},
                              {"end", s.range.end},
                              {"relative", range_json(s.relative_here)},
                              {"relative_other", range_json(s.relative_there)}});
        }
        nodes.push_back({{"id", x}, {"coord", net.coord_of(x)}, {"levels", levels}});
    }
    nlohmann::json pairs = nlohmann::json::array();
    for (const RelativePair& p : states.relatives()) {
        pairs.push_back({{"level", p.level}, {"low", p.id_low}, {"high", p.id_high}});
    }
    return {{"dim", net.dim()}, {"placement", net.placement()}, {"nodes", nodes}, {"relative_pairs", pairs}};
}

} // namespace dyhyp
