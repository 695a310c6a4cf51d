#include "dyhyp/single_server.hpp"

#include <bit>
#include <stdexcept>

namespace dyhyp {

SingleServerOutcome serve_request_ss(NetworkState& net, NodeId server, NodeId client, Rng& rng) {
    if (server == client) {
        throw std::invalid_argument("serve_request_ss: client is the server");
    }
    const int dim = net.dim();
    const std::uint32_t cs = net.coord_of(server);
    SingleServerOutcome out;
    out.hops = std::popcount(cs ^ net.coord_of(client));
    out.alpha = lca_level(net, server, client);
    for (int d = out.alpha + 1; d <= dim - 1; ++d) {
        // next subtree towards the server: sibling of the server's level-(d+1) subtree
        const int shift = dim - d - 1;
        const std::uint32_t base = ((cs >> shift) ^ 1u) << shift;
        std::uniform_int_distribution<std::uint32_t> pick(0, (std::uint32_t{1} << shift) - 1);
        const std::uint32_t target = base + pick(rng);
        const std::uint32_t from = net.coord_of(client);
        out.rounds += 1;
        out.messages += 2;
        if (target != from) {
            out.swaps.push_back(Move{client, from, target});
            net.swap_positions(from, target);
        }
    }
    out.adjacent_after = (net.coord_of(client) ^ cs) == 1u;
    return out;
}

SingleServerEngine::SingleServerEngine(int dim, NodeId server, std::uint64_t seed)
    : net_(dim), server_(server), rng_(seed) {
    if (server >= net_.size()) {
        throw std::invalid_argument("server id out of range");
    }
}

} // namespace dyhyp
