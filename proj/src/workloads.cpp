#include "dyhyp/workloads.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dyhyp {

namespace {

using Rng64 = std::mt19937_64;

class ZipfSampler {
public:
    ZipfSampler(std::size_t count, double s) : cdf_(count) {
        double total = 0.0;
        for (std::size_t r = 0; r < count; ++r) {
            total += 1.0 / std::pow(static_cast<double>(r + 1), s);
            cdf_[r] = total;
        }
        for (double& x : cdf_) {
            x /= total;
        }
    }

    // 0-based rank
    std::size_t operator()(Rng64& rng) const {
        double x = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        auto it = std::lower_bound(cdf_.begin(), cdf_.end(), x);
        if (it == cdf_.end()) {
            --it;
        }
        return static_cast<std::size_t>(it - cdf_.begin());
    }

private:
    std::vector<double> cdf_;
};

std::vector<NodeId> shuffled_except(std::uint32_t n, NodeId skip, std::uint64_t seed) {
    std::vector<NodeId> out;
    out.reserve(n - 1);
    for (NodeId x = 0; x < n; ++x) {
        if (x != skip) {
            out.push_back(x);
        }
    }
    Rng64 rng(seed);
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

void check_nodes(std::uint32_t n) {
    if (n < 2) {
        throw std::invalid_argument("workload needs at least two nodes");
    }
}

} // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string WorkloadSpec::to_string() const {
    std::ostringstream out;
    switch (kind) {
    case WorkloadKind::Uniform: out << "uniform"; break;
    case WorkloadKind::Zipf: out << "zipf:" << zipf_s; break;
    case WorkloadKind::Repeating: out << "repeat:" << pattern_length; break;
    case WorkloadKind::Cyclic: out << "cyclic"; break;
    case WorkloadKind::Adversarial: out << "adversarial:" << adversary_c; break;
    case WorkloadKind::File: out << "file:" << path; break;
    }
    return out.str();
}

WorkloadSpec parse_workload(const std::string& text) {
    WorkloadSpec spec;
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    try {
        if (name == "uniform") {
            spec.kind = WorkloadKind::Uniform;
        } else if (name == "zipf") {
            spec.kind = WorkloadKind::Zipf;
            if (!arg.empty()) {
                spec.zipf_s = std::stod(arg);
            }
            if (!(spec.zipf_s > 0.0)) {
                throw std::invalid_argument("zipf exponent must be positive");
            }
        } else if (name == "repeat" || name == "repeating") {
            spec.kind = WorkloadKind::Repeating;
            if (!arg.empty()) {
                spec.pattern_length = static_cast<std::uint32_t>(std::stoul(arg));
            }
            if (spec.pattern_length == 0) {
                throw std::invalid_argument("repeat pattern must be nonempty");
            }
        } else if (name == "cyclic") {
            spec.kind = WorkloadKind::Cyclic;
        } else if (name == "adversarial") {
            spec.kind = WorkloadKind::Adversarial;
            if (!arg.empty()) {
                spec.adversary_c = std::stod(arg);
            }
        } else if (name == "file") {
            spec.kind = WorkloadKind::File;
            spec.path = arg;
        } else {
            throw std::invalid_argument("unknown workload: " + text);
        }
    } catch (const std::logic_error& e) {
        throw std::invalid_argument(std::string("bad workload spec '") + text + "': " + e.what());
    }
    return spec;
}

Trace gen_uniform(std::uint32_t n, std::size_t m, std::uint64_t seed) {
    check_nodes(n);
    Rng64 rng(seed);
    std::uniform_int_distribution<NodeId> first(0, n - 1);
    std::uniform_int_distribution<NodeId> second(0, n - 2);
    Trace trace;
    trace.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        NodeId u = first(rng);
        NodeId v = second(rng);
        if (v >= u) {
            ++v;
        }
        trace.push_back(Request{static_cast<Time>(i + 1), u, v});
    }
    return trace;
}

Trace gen_repeating(const std::vector<std::pair<NodeId, NodeId>>& pattern, std::size_t repeats) {
    if (pattern.empty()) {
        throw std::invalid_argument("gen_repeating: empty pattern");
    }
    Trace trace;
    trace.reserve(pattern.size() * repeats);
    Time t = 1;
    for (std::size_t r = 0; r < repeats; ++r) {
        for (const auto& [u, v] : pattern) {
            if (u == v) {
                throw std::invalid_argument("gen_repeating: self pair in pattern");
            }
            trace.push_back(Request{t++, u, v});
        }
    }
    return trace;
}

Trace gen_zipf(std::uint32_t n, std::size_t m, double s, std::uint64_t seed) {
    check_nodes(n);
    if (!(s > 0.0)) {
        throw std::invalid_argument("gen_zipf: exponent must be positive");
    }
    Rng64 rng(seed);
    ZipfSampler zipf(n - 1, s);
    std::vector<std::vector<NodeId>> partners(n);
    std::uniform_int_distribution<NodeId> source(0, n - 1);
    Trace trace;
    trace.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        NodeId u = source(rng);
        if (partners[u].empty()) {
            partners[u] = shuffled_except(n, u, mix_seed(seed, u));
        }
        NodeId v = partners[u][zipf(rng)];
        trace.push_back(Request{static_cast<Time>(i + 1), u, v});
    }
    return trace;
}

Trace gen_single_server(const WorkloadSpec& spec, std::uint32_t n, std::size_t m, NodeId server, std::uint64_t seed) {
    check_nodes(n);
    Rng64 rng(seed);
    const std::vector<NodeId> clients = shuffled_except(n, server, mix_seed(seed, 0xc11e));
    Trace trace;
    trace.reserve(m);
    switch (spec.kind) {
    case WorkloadKind::Uniform:
    case WorkloadKind::Adversarial: {
        std::uniform_int_distribution<std::size_t> pick(0, clients.size() - 1);
        for (std::size_t i = 0; i < m; ++i) {
            trace.push_back(Request{static_cast<Time>(i + 1), server, clients[pick(rng)]});
        }
        break;
    }
    case WorkloadKind::Zipf: {
        ZipfSampler zipf(clients.size(), spec.zipf_s);
        for (std::size_t i = 0; i < m; ++i) {
            trace.push_back(Request{static_cast<Time>(i + 1), server, clients[zipf(rng)]});
        }
        break;
    }
    case WorkloadKind::Repeating: {
        std::uniform_int_distribution<std::size_t> pick(0, clients.size() - 1);
        std::vector<NodeId> pattern;
        for (std::uint32_t k = 0; k < spec.pattern_length; ++k) {
            pattern.push_back(clients[pick(rng)]);
        }
        for (std::size_t i = 0; i < m; ++i) {
            trace.push_back(Request{static_cast<Time>(i + 1), server, pattern[i % pattern.size()]});
        }
        break;
    }
    case WorkloadKind::Cyclic: {
        std::vector<NodeId> round = clients;
        while (trace.size() < m) {
            std::shuffle(round.begin(), round.end(), rng);
            for (std::size_t i = 0; i < round.size() && trace.size() < m; ++i) {
                trace.push_back(Request{static_cast<Time>(trace.size() + 1), server, round[i]});
            }
        }
        break;
    }
    case WorkloadKind::File:
        throw std::invalid_argument("gen_single_server: file workloads are read, not generated");
    }
    return trace;
}

Trace gen_workload(const WorkloadSpec& spec, std::uint32_t n, std::size_t m, std::uint64_t seed) {
    switch (spec.kind) {
    case WorkloadKind::Uniform:
    case WorkloadKind::Adversarial:
        return gen_uniform(n, m, seed);
    case WorkloadKind::Zipf:
        return gen_zipf(n, m, spec.zipf_s, seed);
    case WorkloadKind::Repeating: {
        Trace base = gen_uniform(n, spec.pattern_length, seed);
        std::vector<std::pair<NodeId, NodeId>> pattern;
        for (const Request& r : base) {
            pattern.emplace_back(r.u, r.v);
        }
        Trace trace = gen_repeating(pattern, (m + pattern.size() - 1) / pattern.size());
        trace.resize(m);
        return trace;
    }
    case WorkloadKind::Cyclic:
        throw std::invalid_argument("gen_workload: cyclic workloads need a single server");
    case WorkloadKind::File:
        break;
    }
    throw std::invalid_argument("gen_workload: file workloads are read, not generated");
}

Trace gen_adversarial_ws(const std::function<const NetworkState&()>& current,
                         const std::function<void(const Request&)>& serve, const Trace& base, double c,
                         std::uint64_t seed, AdversaryReport* report) {
    if (base.empty()) {
        return {};
    }
    if (!(c > 0.0)) {
        throw std::invalid_argument("gen_adversarial_ws: constant must be positive");
    }
    Rng64 rng(seed);
    const NetworkState& first = current();
    const std::uint32_t n = first.size();
    const double factor = c * std::max(1.0, std::log2(static_cast<double>(first.dim())));
    CommGraph graph(n);
    AdversaryReport local;
    local.threshold_factor = factor;
    Trace out;
    out.reserve(base.size());
    for (const Request& r : base) {
        const NetworkState& net = current();
        auto qualifies = [&](NodeId v, std::uint64_t* T) {
            WorkingSetQueryResult q = ws_number(graph, net, r.t, r.u, v);
            *T = q.T;
            return static_cast<double>(tree_distance(net, r.u, v)) >= ceil_log2(q.T) / factor;
        };
        Request chosen = r;
        std::uint64_t T = 0;
        if (!qualifies(r.v, &T)) {
            std::vector<std::pair<NodeId, std::uint64_t>> candidates;
            for (NodeId v = 0; v < n; ++v) {
                std::uint64_t Tv = 0;
                if (v != r.u && qualifies(v, &Tv)) {
                    candidates.emplace_back(v, Tv);
                }
            }
            if (candidates.empty()) {
                throw std::runtime_error("gen_adversarial_ws: no far partner exists for node " + std::to_string(r.u));
            }
            std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
            const auto& [v, Tv] = candidates[pick(rng)];
            chosen.v = v;
            T = Tv;
            ++local.substitutions;
        }
        local.tree_distance_sum += static_cast<std::uint64_t>(tree_distance(net, chosen.u, chosen.v));
        local.ws_bound += static_cast<std::uint64_t>(ceil_log2(T));
        graph.record(chosen.t, chosen.u, chosen.v);
        out.push_back(chosen);
        serve(chosen);
    }
    if (report) {
        *report = local;
    }
    return out;
}

void write_trace_jsonl(std::ostream& out, const Trace& trace) {
    for (const Request& r : trace) {
        nlohmann::json j = {{"t", r.t}, {"u", r.u}, {"v", r.v}};
        out << j.dump() << '\n';
    }
}

Trace read_trace_jsonl(std::istream& in) {
    Trace trace;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            Request r{j.at("t").get<Time>(), j.at("u").get<NodeId>(), j.at("v").get<NodeId>()};
            if (r.u == r.v) {
                throw std::invalid_argument("self request");
            }
            if (!trace.empty() && r.t <= trace.back().t) {
                throw std::invalid_argument("times must increase");
            }
            trace.push_back(r);
        } catch (const std::exception& e) {
            throw std::runtime_error("trace line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return trace;
}

} // namespace dyhyp
