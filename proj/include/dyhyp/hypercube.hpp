#ifndef DYHYP_HYPERCUBE_HPP
#define DYHYP_HYPERCUBE_HPP

#include <bit>
#include <cstdint>
#include <vector>

namespace dyhyp {

using NodeId = std::uint32_t;

constexpr int kMaxDimension = 20;

// N-bit position. Bit 1 is the most significant bit (root split).
class Coordinate {
public:
    Coordinate(std::uint32_t bits, int dim);

    std::uint32_t bits() const { return bits_; }
    int dim() const { return dim_; }

    // 1-based, bit 1 = MSB
    int bit(int i) const;
    std::uint32_t prefix(int len) const { return len == 0 ? 0u : bits_ >> (dim_ - len); }

    bool operator==(const Coordinate& o) const { return bits_ == o.bits_ && dim_ == o.dim_; }
    bool operator!=(const Coordinate& o) const { return !(*this == o); }

private:
    std::uint32_t bits_;
    int dim_;
};

// Aligned block of 2^(N-level) coordinates sharing `prefix` as their first `level` bits.
struct SubtreeRef {
    int level = 0;
    std::uint32_t prefix = 0;

    std::uint32_t first(int dim) const { return prefix << (dim - level); }
    std::uint32_t last(int dim) const { return first(dim) + (std::uint32_t{1} << (dim - level)) - 1; }
    std::uint32_t size(int dim) const { return std::uint32_t{1} << (dim - level); }
    bool contains(std::uint32_t c, int dim) const {
        return level == 0 || (c >> (dim - level)) == prefix;
    }
};

// Raw coordinate helpers shared by the engines. `c` values are plain N-bit integers.
inline int common_prefix_length(std::uint32_t a, std::uint32_t b, int dim) {
    return dim - static_cast<int>(std::bit_width(a ^ b));
}

inline SubtreeRef subtree_of(std::uint32_t c, int level, int dim) {
    return SubtreeRef{level, level == 0 ? 0u : c >> (dim - level)};
}

// Sibling of the level-d subtree containing c (d >= 1).
inline SubtreeRef complementary_subtree(std::uint32_t c, int level, int dim) {
    return SubtreeRef{level, (c >> (dim - level)) ^ 1u};
}

class NetworkState {
public:
    // Identity placement: node i sits at coordinate i.
    explicit NetworkState(int dim);

    int dim() const { return dim_; }
    std::uint32_t size() const { return static_cast<std::uint32_t>(node_at_.size()); }

    std::uint32_t coord_of(NodeId x) const { return coord_of_[x]; }
    NodeId node_at(std::uint32_t c) const { return node_at_[c]; }
    Coordinate coordinate(NodeId x) const { return Coordinate(coord_of_[x], dim_); }

    void swap_nodes(NodeId a, NodeId b);
    void swap_positions(std::uint32_t ca, std::uint32_t cb);
    // Writes a node to a coordinate without touching the previous occupant's record.
    // Callers must restore a bijection before reading again.
    void place_raw(NodeId x, std::uint32_t c);

    bool is_bijection() const;

    const std::vector<NodeId>& placement() const { return node_at_; }

private:
    int dim_;
    std::vector<std::uint32_t> coord_of_;
    std::vector<NodeId> node_at_;
};

int hamming_distance(const Coordinate& a, const Coordinate& b);

// N - longest common prefix of the two coordinates.
int tree_distance(const NetworkState& net, NodeId u, NodeId v);

// Level of the smallest subtree containing both u and v.
int lca_level(const NetworkState& net, NodeId u, NodeId v);

// Bit-fixing path, differing bits fixed in ascending bit index.
std::vector<Coordinate> route(const NetworkState& net, NodeId u, NodeId v);

std::vector<NodeId> subtree_members(const NetworkState& net, const SubtreeRef& s);

// Number of nodes within Hamming distance 1..k of a node in an N-cube.
std::uint64_t count_within_distance(int dim, int k);

int ceil_log2(std::uint64_t x);

} // namespace dyhyp

#endif // DYHYP_HYPERCUBE_HPP
