#ifndef DYHYP_WORKLOADS_HPP
#define DYHYP_WORKLOADS_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dyhyp/hypercube.hpp"
#include "dyhyp/workset.hpp"

namespace dyhyp {

enum class WorkloadKind { Uniform, Zipf, Repeating, Cyclic, Adversarial, File };

struct WorkloadSpec {
    WorkloadKind kind = WorkloadKind::Uniform;
    double zipf_s = 1.2;
    std::uint32_t pattern_length = 8;
    double adversary_c = 1.0;
    std::string path;

    std::string to_string() const;
};

// "uniform", "zipf[:s]", "repeat[:k]", "cyclic", "adversarial[:c]", "file:<path>"
// cyclic: every node is requested once per shuffled round (single-server runs only).
WorkloadSpec parse_workload(const std::string& text);

Trace gen_uniform(std::uint32_t n, std::size_t m, std::uint64_t seed);
Trace gen_repeating(const std::vector<std::pair<NodeId, NodeId>>& pattern, std::size_t repeats);
Trace gen_zipf(std::uint32_t n, std::size_t m, double s, std::uint64_t seed);

// Requests whose source is always `server`; destinations follow the workload's distribution.
Trace gen_single_server(const WorkloadSpec& spec, std::uint32_t n, std::size_t m, NodeId server, std::uint64_t seed);

// Pair workload of m requests for the given spec (file and adversarial specs are not generated here).
Trace gen_workload(const WorkloadSpec& spec, std::uint32_t n, std::size_t m, std::uint64_t seed);

struct AdversaryReport {
    std::size_t substitutions = 0;
    std::uint64_t tree_distance_sum = 0;
    std::uint64_t ws_bound = 0;
    double threshold_factor = 0.0; // c * log2 log2 n
};

// Builds a request sequence interleaved with an algorithm. `current` exposes the live network and
// `serve` executes a request. A base request is kept when its tree distance reaches
// ceil(log2 T) / (c log log n); otherwise a qualifying partner for the same source replaces it.
Trace gen_adversarial_ws(const std::function<const NetworkState&()>& current,
                         const std::function<void(const Request&)>& serve, const Trace& base, double c,
                         std::uint64_t seed, AdversaryReport* report = nullptr);

void write_trace_jsonl(std::ostream& out, const Trace& trace);
Trace read_trace_jsonl(std::istream& in);

// Stateless 64-bit mixer used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

} // namespace dyhyp

#endif // DYHYP_WORKLOADS_HPP
