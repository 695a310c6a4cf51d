#ifndef DYHYP_WORKSET_HPP
#define DYHYP_WORKSET_HPP

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "dyhyp/hypercube.hpp"

namespace dyhyp {

using Time = std::int64_t;

struct Request {
    Time t = 0;
    NodeId u = 0;
    NodeId v = 0;

    bool operator==(const Request&) const = default;
};

using Trace = std::vector<Request>;

enum class WsCase { RepeatPair, SameComponent, DisjointComponents };

const char* to_string(WsCase c);

struct WorkingSetQueryResult {
    std::uint64_t T = 2;
    WsCase kind = WsCase::DisjointComponents;
};

class CommGraph {
public:
    explicit CommGraph(std::uint32_t n);

    std::uint32_t node_count() const { return n_; }
    const std::vector<Request>& edges() const { return edges_; }

    void record(Time t, NodeId u, NodeId v);

    // Time of the latest (u,v) edge strictly before t, or -1.
    Time last_contact(NodeId u, NodeId v, Time t) const;

    // Size of u's component over edges with time in [from, to).
    std::uint32_t component_size(NodeId u, Time from, Time to) const;

    // Membership mask of u's component over edges with time in [from, to).
    std::vector<char> component_mask(NodeId u, Time from, Time to) const;

    bool same_prefix_component(NodeId u, NodeId v, Time t) const;
    std::uint32_t prefix_component_size(NodeId u, Time t) const;

private:
    static std::uint64_t pair_key(NodeId u, NodeId v);
    std::uint32_t prefix_find(std::uint32_t x) const;
    std::size_t first_edge_at_or_after(Time t) const;
    void window_union(NodeId u, Time from, Time to, bool stop_when_full) const;
    std::uint32_t scratch_find(std::uint32_t x) const;

    std::uint32_t n_;
    std::vector<Request> edges_;
    std::unordered_map<std::uint64_t, Time> last_pair_;

    // Union-find over every recorded edge (the [0, now) component).
    mutable std::vector<std::uint32_t> prefix_parent_;
    std::vector<std::uint32_t> prefix_size_;

    // Scratch union-find reused by windowed queries; entries are valid only when stamp matches.
    mutable std::vector<std::uint32_t> scratch_parent_;
    mutable std::vector<std::uint32_t> scratch_size_;
    mutable std::vector<std::uint32_t> scratch_stamp_;
    mutable std::uint32_t stamp_ = 0;
};

WorkingSetQueryResult ws_number(const CommGraph& graph, const NetworkState& net, Time t, NodeId u, NodeId v);

bool ws_property_holds(const NetworkState& net, const CommGraph& graph, Time t, NodeId u, NodeId v);

// Sum of ceil(log2 T_i); nets[i] is the network just before request i.
std::uint64_t ws_bound(const Trace& trace, std::span<const NetworkState> nets);

// True if some v has tree distance >= ceil(log2 T_t(u,v)).
bool tree_distance_witness_exists(const NetworkState& net, const CommGraph& graph, Time t, NodeId u);

} // namespace dyhyp

#endif // DYHYP_WORKSET_HPP
