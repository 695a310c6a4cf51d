#ifndef DYHYP_ENGINE_HPP
#define DYHYP_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "dyhyp/hypercube.hpp"
#include "dyhyp/node_state.hpp"
#include "dyhyp/workset.hpp"

namespace dyhyp {

using Rng = std::mt19937_64;

enum class Phase { Leap, Inter, Intra };

const char* to_string(Phase p);

struct Move {
    NodeId node = 0;
    std::uint32_t from = 0;
    std::uint32_t to = 0;
};

enum class StageKind { Disseminate, Simulate, Select, Relocate, Exchange };

// One accounted step of a phase. Disseminate is a binomial broadcast over each region from its root,
// Simulate the matching reduction towards the root, Select a reduction over each member list,
// Relocate and Exchange point-to-point transfers between `pairs`.
struct Stage {
    StageKind kind = StageKind::Disseminate;
    std::vector<SubtreeRef> regions;
    std::vector<std::uint32_t> roots;
    int rounds = 0;
    std::uint64_t messages = 0;
    // O(log n)-bit words carried by each message
    int words = 2;
    std::vector<std::vector<std::uint32_t>> members;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
};

struct KOrderCheck {
    int level = 0;
    std::uint32_t closer = 0;
    std::uint32_t satisfied = 0;
};

struct RepositionSet {
    int alpha = 0;
    // selected[i - alpha - 1] holds S_i for i in (alpha, N-1]
    std::vector<std::vector<NodeId>> selected;
    std::vector<NodeId> mover_group;
    std::vector<std::uint32_t> count_anchor;
    std::vector<std::uint32_t> count_mover;
    std::vector<Time> t_list;              // T_1 >= T_2 >= ...
    std::vector<std::uint32_t> count_upto; // COUNT(i), 1-based in the list order
};

struct RankedNode {
    NodeId node = 0;
    Time key = 0;
    int bucket = 0; // k(x), 1-based
    std::uint32_t rank = 0;
};

struct TransformPlan {
    Phase phase = Phase::Leap;
    std::vector<Move> moves;
    int rounds = 0;
    std::uint64_t messages = 0;
    std::vector<Stage> stages;
    // Communicant that stays in place; T2 is measured relative to it.
    NodeId anchor = 0;
    NodeId mover = 0;
    int alpha = 0;
    // Inter-group phase: merge the communicants' groups at levels [0, merge_upto].
    int merge_upto = -1;
    // Intra-group phase details.
    RepositionSet reposition;
    std::vector<RankedNode> ranked;
    std::vector<KOrderCheck> k_order;

    bool empty() const { return moves.empty() && merge_upto < 0; }
};

struct SelectionResult {
    Time value = 0;
    int rounds = 0;
    std::uint64_t messages = 0;
};

int alpha(const NetworkState& net, NodeId u, NodeId v);

SelectionResult approx_lth_largest(std::vector<Time> values, std::uint64_t L);

// L as printed for the T1 rule, clamped to [1, set_size].
std::uint64_t selection_rank(std::uint64_t k, std::uint64_t set_size, int dim);

TransformPlan subtree_leap(const NetworkState& net, const NodeStates& states, NodeId u, NodeId v);
TransformPlan inter_group_transform(const NetworkState& net, const NodeStates& states, NodeId u, NodeId v, Rng& rng);
TransformPlan intra_group_transform(const NetworkState& net, const NodeStates& states, NodeId u, NodeId v, Rng& rng);

// Sum of stage rounds and messages.
void finalize_accounting(TransformPlan& plan);

struct EngineStats {
    std::uint64_t leaps = 0;
    std::uint64_t inters = 0;
    std::uint64_t intras = 0;
    std::uint64_t k_order_checks = 0;
    std::uint64_t k_order_failures = 0;
    std::uint64_t t1_updates = 0;
};

struct ServeOutcome {
    int hops = 0;
    int alpha = 0;
    int rounds = 0;
    std::uint64_t messages = 0;
    bool adjacent_after = false;
    std::vector<TransformPlan> plans;
};

using PhaseHook = std::function<void(Phase, const NetworkState&, const NodeStates&)>;

class DyHypesEngine {
public:
    DyHypesEngine(int dim, std::uint64_t seed);

    ServeOutcome serve(Time t, NodeId u, NodeId v);

    const NetworkState& network() const { return net_; }
    const NodeStates& states() const { return states_; }
    NodeStates& states() { return states_; }
    const EngineStats& stats() const { return stats_; }

    void set_phase_hook(PhaseHook hook) { hook_ = std::move(hook); }
    void set_keep_plans(bool keep) { keep_plans_ = keep; }

    // Applies a plan's moves, the K demotion rule and group maintenance.
    void apply(const TransformPlan& plan);

private:
    void apply_t1(const TransformPlan& plan);

    NetworkState net_;
    NodeStates states_;
    Rng rng_;
    EngineStats stats_;
    PhaseHook hook_;
    bool keep_plans_ = false;
    std::vector<std::uint32_t> touched_;
};

} // namespace dyhyp

#endif // DYHYP_ENGINE_HPP
