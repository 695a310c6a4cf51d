#ifndef DYHYP_HARNESS_HPP
#define DYHYP_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dyhyp/engine.hpp"
#include "dyhyp/workloads.hpp"
#include "dyhyp/workset.hpp"

namespace dyhyp {

enum class Algorithm { DyHypes, SingleServer };

const char* to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& text);

namespace checks {
constexpr unsigned kAdjacency = 1u << 0;
constexpr unsigned kBijection = 1u << 1;
constexpr unsigned kInvariantI = 1u << 2;
constexpr unsigned kContiguity = 1u << 3;
// bijection and contiguity after every phase, not only after every request
constexpr unsigned kPerPhase = 1u << 4;
// a far partner exists for every node in every visited state
constexpr unsigned kTreeDistanceWitness = 1u << 5;
constexpr unsigned kAll = kAdjacency | kBijection | kInvariantI | kContiguity | kPerPhase;
} // namespace checks

struct RunConfig {
    int dim = 4;
    Algorithm algorithm = Algorithm::DyHypes;
    WorkloadSpec workload;
    std::size_t m = 1000;
    std::uint64_t seed = 1;
    unsigned checks = checks::kAdjacency;
    NodeId server = 0;
    // message-size audit constant: words of log n bits per message
    int word_limit = 4;
    bool keep_plans = false;
    std::optional<Trace> trace;
    // Every k requests sample the timestamp fraction (DyHypes) or the recent-client fraction
    // (single server); 0 disables sampling.
    std::size_t sample_every = 0;
    // export the final per-node state (DyHypes) or placement (single server)
    bool snapshot = false;
};

void validate(const RunConfig& config);
nlohmann::json to_json(const RunConfig& config);

struct RequestMetrics {
    Time t = 0;
    NodeId u = 0;
    NodeId v = 0;
    int hops = 0;
    int rounds = 0;
    std::uint64_t messages = 0;
    std::uint64_t ws = 0;
    int log_ws = 0;
    int cost = 0;
    bool invariant_ok = true;
    int alpha = 0;
    int tree_dist = 0; // before serving
};

struct FractionSample {
    int level = 0;
    double fraction = 0.0;
};

struct RunSummary {
    std::size_t m = 0;
    std::uint64_t total_hops = 0;
    std::uint64_t total_rounds = 0;
    std::uint64_t total_cost = 0;
    std::uint64_t ws_bound = 0;
    std::uint64_t total_messages = 0;
    int max_cost = 0;
    double cost_ratio = 0.0; // total cost / (WS + m)
    double hop_ratio = 0.0;  // total hops / (WS + m)
    double max_rounds_per_depth = 0.0;
    // largest per-node state at the end of the run, in words of log n bits (single server: 1)
    std::size_t max_state_words = 0;
    std::uint64_t adjacency_failures = 0;
    std::uint64_t bijection_failures = 0;
    std::uint64_t invariant_failures = 0;
    std::uint64_t contiguity_failures = 0;
    std::uint64_t phase_failures = 0;
    std::uint64_t witness_failures = 0;
    std::uint64_t congest_violations = 0;
    std::vector<std::string> first_problems;
    // messages and request counts indexed by alpha
    std::vector<std::uint64_t> messages_by_alpha;
    std::vector<std::uint64_t> requests_by_alpha;
    std::vector<FractionSample> samples;
    EngineStats engine;
    MaintenanceStats maintenance;
    std::optional<AdversaryReport> adversary;
};

nlohmann::json to_json(const RunSummary& summary);

struct RunResult {
    RunConfig config;
    Trace trace;
    std::vector<RequestMetrics> metrics;
    RunSummary summary;
    std::vector<TransformPlan> plans;
    nlohmann::json snapshot;
};

RunResult run(const RunConfig& config);

struct CongestViolation {
    std::size_t plan = 0;
    int round = 0;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    std::string what;
};

// Expands link-level stages into per-round messages and flags links used twice in one round,
// oversized messages and stages whose expansion disagrees with their declared counts.
std::vector<CongestViolation> congest_audit(const std::vector<TransformPlan>& plans, int dim, int word_limit);

void write_metrics_csv(std::ostream& out, const std::vector<RequestMetrics>& metrics);
nlohmann::json plan_to_json(const TransformPlan& plan);
nlohmann::json snapshot_json(const NetworkState& net, NodeStates& states);

} // namespace dyhyp

#endif // DYHYP_HARNESS_HPP
