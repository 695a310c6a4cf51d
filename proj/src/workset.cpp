#include "dyhyp/workset.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dyhyp {

const char* to_string(WsCase c) {
    switch (c) {
    case WsCase::RepeatPair: return "repeat-pair";
    case WsCase::SameComponent: return "same-component";
    case WsCase::DisjointComponents: return "disjoint-components";
    }
    return "?";
}

CommGraph::CommGraph(std::uint32_t n)
    : n_(n), prefix_parent_(n), prefix_size_(n, 1), scratch_parent_(n), scratch_size_(n), scratch_stamp_(n, 0) {
    std::iota(prefix_parent_.begin(), prefix_parent_.end(), 0u);
}

std::uint64_t CommGraph::pair_key(NodeId u, NodeId v) {
    if (u > v) {
        std::swap(u, v);
    }
    return (std::uint64_t{u} << 32) | v;
}

void CommGraph::record(Time t, NodeId u, NodeId v) {
    if (u == v) {
        throw std::invalid_argument("record: self edge");
    }
    if (u >= n_ || v >= n_) {
        throw std::out_of_range("record: node id out of range");
    }
    if (!edges_.empty() && t <= edges_.back().t) {
        throw std::invalid_argument("record: time must increase");
    }
    edges_.push_back(Request{t, u, v});
    last_pair_[pair_key(u, v)] = t;

    std::uint32_t a = prefix_find(u);
    std::uint32_t b = prefix_find(v);
    if (a != b) {
        if (prefix_size_[a] < prefix_size_[b]) {
            std::swap(a, b);
        }
        prefix_parent_[b] = a;
        prefix_size_[a] += prefix_size_[b];
    }
}

std::uint32_t CommGraph::prefix_find(std::uint32_t x) const {
    while (prefix_parent_[x] != x) {
        prefix_parent_[x] = prefix_parent_[prefix_parent_[x]];
        x = prefix_parent_[x];
    }
    return x;
}

std::size_t CommGraph::first_edge_at_or_after(Time t) const {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), t,
                               [](const Request& e, Time value) { return e.t < value; });
    return static_cast<std::size_t>(it - edges_.begin());
}

Time CommGraph::last_contact(NodeId u, NodeId v, Time t) const {
    auto it = last_pair_.find(pair_key(u, v));
    if (it == last_pair_.end()) {
        return -1;
    }
    if (it->second < t) {
        return it->second;
    }
    std::size_t end = first_edge_at_or_after(t);
    for (std::size_t i = end; i-- > 0;) {
        const Request& e = edges_[i];
        if ((e.u == u && e.v == v) || (e.u == v && e.v == u)) {
            return e.t;
        }
    }
    return -1;
}

std::uint32_t CommGraph::scratch_find(std::uint32_t x) const {
    if (scratch_stamp_[x] != stamp_) {
        scratch_stamp_[x] = stamp_;
        scratch_parent_[x] = x;
        scratch_size_[x] = 1;
        return x;
    }
    while (scratch_parent_[x] != x) {
        scratch_parent_[x] = scratch_parent_[scratch_parent_[x]];
        x = scratch_parent_[x];
    }
    return x;
}

void CommGraph::window_union(NodeId u, Time from, Time to, bool stop_when_full) const {
    if (++stamp_ == 0) {
        std::fill(scratch_stamp_.begin(), scratch_stamp_.end(), 0u);
        stamp_ = 1;
    }
    std::size_t lo = first_edge_at_or_after(from);
    std::size_t hi = first_edge_at_or_after(to);
    for (std::size_t i = hi; i-- > lo;) {
        std::uint32_t a = scratch_find(edges_[i].u);
        std::uint32_t b = scratch_find(edges_[i].v);
        if (a == b) {
            continue;
        }
        if (scratch_size_[a] < scratch_size_[b]) {
            std::swap(a, b);
        }
        scratch_parent_[b] = a;
        scratch_size_[a] += scratch_size_[b];
        if (stop_when_full && scratch_size_[a] == n_ && scratch_find(u) == a) {
            return;
        }
    }
}

std::uint32_t CommGraph::component_size(NodeId u, Time from, Time to) const {
    window_union(u, from, to, true);
    return scratch_size_[scratch_find(u)];
}

std::vector<char> CommGraph::component_mask(NodeId u, Time from, Time to) const {
    window_union(u, from, to, false);
    std::uint32_t root = scratch_find(u);
    std::vector<char> mask(n_, 0);
    for (std::uint32_t x = 0; x < n_; ++x) {
        if (scratch_stamp_[x] == stamp_ && scratch_find(x) == root) {
            mask[x] = 1;
        }
    }
    mask[u] = 1;
    return mask;
}

bool CommGraph::same_prefix_component(NodeId u, NodeId v, Time t) const {
    if (edges_.empty() || t > edges_.back().t) {
        return prefix_find(u) == prefix_find(v);
    }
    window_union(u, std::numeric_limits<Time>::min(), t, false);
    return scratch_find(u) == scratch_find(v);
}

std::uint32_t CommGraph::prefix_component_size(NodeId u, Time t) const {
    if (edges_.empty() || t > edges_.back().t) {
        return prefix_size_[prefix_find(u)];
    }
    return component_size(u, std::numeric_limits<Time>::min(), t);
}

WorkingSetQueryResult ws_number(const CommGraph& graph, const NetworkState& net, Time t, NodeId u, NodeId v) {
    if (u == v) {
        throw std::invalid_argument("ws_number: u == v");
    }
    Time last = graph.last_contact(u, v, t);
    if (last >= 0) {
        return {graph.component_size(u, last, t), WsCase::RepeatPair};
    }
    if (graph.same_prefix_component(u, v, t)) {
        return {graph.prefix_component_size(u, t), WsCase::SameComponent};
    }
    std::uint64_t floor_size = std::uint64_t{1} << tree_distance(net, u, v);
    std::uint64_t sum = std::uint64_t{graph.prefix_component_size(u, t)} + graph.prefix_component_size(v, t);
    return {std::max(floor_size, sum), WsCase::DisjointComponents};
}

bool ws_property_holds(const NetworkState& net, const CommGraph& graph, Time t, NodeId u, NodeId v) {
    return tree_distance(net, u, v) <= ceil_log2(ws_number(graph, net, t, u, v).T);
}

std::uint64_t ws_bound(const Trace& trace, std::span<const NetworkState> nets) {
    if (trace.empty()) {
        throw std::invalid_argument("ws_bound: empty trace");
    }
    if (nets.size() != trace.size()) {
        throw std::invalid_argument("ws_bound: one network per request required");
    }
    CommGraph graph(nets.front().size());
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const Request& r = trace[i];
        total += static_cast<std::uint64_t>(ceil_log2(ws_number(graph, nets[i], r.t, r.u, r.v).T));
        graph.record(r.t, r.u, r.v);
    }
    return total;
}

bool tree_distance_witness_exists(const NetworkState& net, const CommGraph& graph, Time t, NodeId u) {
    for (NodeId v = 0; v < net.size(); ++v) {
        if (v != u && tree_distance(net, u, v) >= ceil_log2(ws_number(graph, net, t, u, v).T)) {
            return true;
        }
    }
    return false;
}

} // namespace dyhyp
