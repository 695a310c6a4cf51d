#ifndef DYHYP_NODE_STATE_HPP
#define DYHYP_NODE_STATE_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dyhyp/hypercube.hpp"
#include "dyhyp/workset.hpp"

namespace dyhyp {

constexpr Time kInfinity = std::numeric_limits<Time>::max();

using GroupId = std::uint64_t;

struct CoordRange {
    std::uint32_t start = 0;
    std::uint32_t end = 0;

    std::uint32_t size() const { return end - start + 1; }
    bool contains(std::uint32_t c) const { return start <= c && c <= end; }
    bool operator==(const CoordRange&) const = default;
};

struct LevelState {
    GroupId group = 0;
    Time T = 0;
    Time K = 0;
    std::uint64_t counter = 0;
    Time next_t = 0;
    CoordRange range;
    // Relative ranges: the fragment on this node's side of the level-d subtree and the one opposite.
    std::optional<CoordRange> relative_here;
    std::optional<CoordRange> relative_there;
};

// Two fragments of a former level-(level+1) group lying in the two halves of one level-`level` subtree.
// Fragments are tracked through a representative node and the group id it carried at registration.
struct RelativePair {
    int level = 0;
    NodeId rep_low = 0;
    NodeId rep_high = 0;
    GroupId id_low = 0;
    GroupId id_high = 0;
};

struct GroupView {
    int level = 0;
    GroupId id = 0;
    CoordRange range;
    std::optional<CoordRange> relative;

    std::uint32_t size() const { return range.size(); }
};

struct InvariantViolation {
    int level = 0;
    std::uint32_t prefix = 0;
    std::vector<GroupId> groups;
    std::string what;
};

struct MaintenanceStats {
    std::uint64_t pairs_registered = 0;
    std::uint64_t pairs_suppressed = 0;
    std::uint64_t pairs_dropped = 0;
    std::uint64_t pairs_reunited = 0;
    std::uint64_t merges_skipped = 0;
};

class NodeStates {
public:
    // Every node starts as a singleton group at every level with id = node id.
    explicit NodeStates(const NetworkState& net);

    int dim() const { return dim_; }
    std::uint32_t size() const { return n_; }

    LevelState& at(NodeId x, int d) { return levels_[static_cast<std::size_t>(x) * dim_ + d]; }
    const LevelState& at(NodeId x, int d) const { return levels_[static_cast<std::size_t>(x) * dim_ + d]; }

    // Level N entries are implicit: a singleton with T = K = infinity.
    Time T(NodeId x, int d) const { return d >= dim_ ? kInfinity : at(x, d).T; }
    Time K(NodeId x, int d) const { return d >= dim_ ? kInfinity : at(x, d).K; }
    GroupId group(NodeId x, int d) const { return at(x, d).group; }
    CoordRange range(NodeId x, int d) const;
    std::uint32_t group_size(NodeId x, int d) const { return d >= dim_ ? 1u : at(x, d).range.size(); }

    GroupId fresh_id() { return next_id_++; }

    // Words of log n bits held by node x: id, two timestamps, counter, deadline and range per level,
    // plus any relative ranges currently set.
    std::size_t state_words(NodeId x) const;

    const std::vector<RelativePair>& relatives() const { return relatives_; }
    std::vector<RelativePair>& relatives() { return relatives_; }
    // Registered pair inside the level-d subtree `block`, if any.
    const RelativePair* pair_in(int d, std::uint32_t block) const;
    // Lowest level with a registered pair in the subtree of coordinate c at that level; dim if none.
    int lowest_relative_level(std::uint32_t c) const;

    // Re-derives group ids and ranges after nodes moved, splitting groups that are no longer
    // contiguous and registering or dropping relative pairs.
    void rebuild_after_moves(const NetworkState& net, std::span<const std::uint32_t> touched);

    // Merges the level-d groups of a and b for every d in [from, to] where they are adjacent.
    // Returns the number of levels merged.
    int merge_groups(const NetworkState& net, NodeId a, NodeId b, int from, int to);

    // Every member of a level-d group gets the group minimum of T_d and K_{d-1}.
    void harmonize_group(const NetworkState& net, NodeId x, int d);

    // Writes relative ranges into every node's level records from the registry.
    void sync_relative_fields(const NetworkState& net);

    const MaintenanceStats& stats() const { return stats_; }

    void set_id_counter(GroupId next) { next_id_ = next; }
    GroupId id_counter() const { return next_id_; }

private:
    struct Run {
        std::uint32_t start;
        std::uint32_t end;
        GroupId old_id;
    };
    struct Candidate {
        int level;
        NodeId rep_low;
        NodeId rep_high;
    };

    void validate_pairs(const NetworkState& net);
    static std::uint64_t block_key(int d, std::uint32_t block) { return (std::uint64_t(d) << 32) | block; }

    int dim_;
    std::uint32_t n_;
    std::vector<LevelState> levels_;
    std::vector<RelativePair> relatives_;
    std::unordered_map<std::uint64_t, std::size_t> pair_index_;
    GroupId next_id_;
    MaintenanceStats stats_;

    std::vector<Run> runs_;
    std::vector<Candidate> candidates_;
    std::vector<std::uint32_t> blocks_;
};

std::vector<InvariantViolation> invariant_I_check(const NetworkState& net, const NodeStates& states);

// Contiguity, shared-field and monotonicity checks on every group; empty when consistent.
std::vector<std::string> check_group_structure(const NetworkState& net, const NodeStates& states);

GroupView group_view(const NetworkState& net, const NodeStates& states, NodeId x, int d);

int relative_distance(int k, std::uint64_t n);

} // namespace dyhyp

#endif // DYHYP_NODE_STATE_HPP
