#include "dyhyp/hypercube.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace dyhyp {

Coordinate::Coordinate(std::uint32_t bits, int dim) : bits_(bits), dim_(dim) {
    if (dim < 1 || dim > 31) {
        throw std::invalid_argument("coordinate dimension out of range: " + std::to_string(dim));
    }
    if (bits >> dim != 0) {
        throw std::invalid_argument("coordinate bits exceed dimension");
    }
}

int Coordinate::bit(int i) const {
    if (i < 1 || i > dim_) {
        throw std::out_of_range("bit index " + std::to_string(i));
    }
    return static_cast<int>((bits_ >> (dim_ - i)) & 1u);
}

NetworkState::NetworkState(int dim) : dim_(dim) {
    if (dim < 1 || dim > kMaxDimension) {
        throw std::invalid_argument("dimension must be in [1, " + std::to_string(kMaxDimension) + "]");
    }
    const std::uint32_t n = std::uint32_t{1} << dim;
    coord_of_.resize(n);
    node_at_.resize(n);
    std::iota(coord_of_.begin(), coord_of_.end(), 0u);
    std::iota(node_at_.begin(), node_at_.end(), 0u);
}

void NetworkState::swap_nodes(NodeId a, NodeId b) {
    swap_positions(coord_of_[a], coord_of_[b]);
}

void NetworkState::swap_positions(std::uint32_t ca, std::uint32_t cb) {
    NodeId a = node_at_[ca];
    NodeId b = node_at_[cb];
    node_at_[ca] = b;
    node_at_[cb] = a;
    coord_of_[a] = cb;
    coord_of_[b] = ca;
}

void NetworkState::place_raw(NodeId x, std::uint32_t c) {
    coord_of_[x] = c;
    node_at_[c] = x;
}

bool NetworkState::is_bijection() const {
    const std::uint32_t n = size();
    std::vector<char> seen(n, 0);
    for (std::uint32_t c = 0; c < n; ++c) {
        NodeId x = node_at_[c];
        if (x >= n || seen[x] || coord_of_[x] != c) {
            return false;
        }
        seen[x] = 1;
    }
    return true;
}

int hamming_distance(const Coordinate& a, const Coordinate& b) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("hamming_distance: dimension mismatch");
    }
    return std::popcount(a.bits() ^ b.bits());
}

int tree_distance(const NetworkState& net, NodeId u, NodeId v) {
    if (u == v) {
        throw std::invalid_argument("tree_distance: u == v");
    }
    return static_cast<int>(std::bit_width(net.coord_of(u) ^ net.coord_of(v)));
}

int lca_level(const NetworkState& net, NodeId u, NodeId v) {
    return net.dim() - tree_distance(net, u, v);
}

std::vector<Coordinate> route(const NetworkState& net, NodeId u, NodeId v) {
    if (u == v) {
        throw std::invalid_argument("route: u == v");
    }
    const int dim = net.dim();
    std::uint32_t cur = net.coord_of(u);
    const std::uint32_t target = net.coord_of(v);
    std::vector<Coordinate> path;
    path.emplace_back(cur, dim);
    for (int i = 1; i <= dim; ++i) {
        std::uint32_t mask = std::uint32_t{1} << (dim - i);
        if ((cur ^ target) & mask) {
            cur ^= mask;
            path.emplace_back(cur, dim);
        }
    }
    return path;
}

std::vector<NodeId> subtree_members(const NetworkState& net, const SubtreeRef& s) {
    const int dim = net.dim();
    if (s.level < 0 || s.level > dim) {
        throw std::invalid_argument("subtree level out of range");
    }
    std::vector<NodeId> out;
    out.reserve(s.size(dim));
    for (std::uint32_t c = s.first(dim); c <= s.last(dim); ++c) {
        out.push_back(net.node_at(c));
    }
    return out;
}

std::uint64_t count_within_distance(int dim, int k) {
    if (k < 0 || k > dim) {
        throw std::invalid_argument("count_within_distance: k out of range");
    }
    std::uint64_t total = 0;
    std::uint64_t binom = 1;
    for (int i = 1; i <= k; ++i) {
        binom = binom * static_cast<std::uint64_t>(dim - i + 1) / static_cast<std::uint64_t>(i);
        total += binom;
    }
    return total;
}

int ceil_log2(std::uint64_t x) {
    if (x <= 1) {
        return 0;
    }
    return static_cast<int>(std::bit_width(x - 1));
}

} // namespace dyhyp
