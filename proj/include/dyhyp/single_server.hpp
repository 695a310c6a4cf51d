#ifndef DYHYP_SINGLE_SERVER_HPP
#define DYHYP_SINGLE_SERVER_HPP

#include <cstdint>
#include <vector>

#include "dyhyp/engine.hpp"
#include "dyhyp/hypercube.hpp"

namespace dyhyp {

struct SingleServerOutcome {
    int hops = 0;
    int alpha = 0;
    int rounds = 0;
    std::uint64_t messages = 0;
    bool adjacent_after = false;
    std::vector<Move> swaps;
};

// One request from `client` to the fixed `server`: for each level below the common subtree the
// client swaps with a uniformly random node of the next subtree towards the server.
SingleServerOutcome serve_request_ss(NetworkState& net, NodeId server, NodeId client, Rng& rng);

class SingleServerEngine {
public:
    SingleServerEngine(int dim, NodeId server, std::uint64_t seed);

    SingleServerOutcome serve(NodeId client) { return serve_request_ss(net_, server_, client, rng_); }

    const NetworkState& network() const { return net_; }
    NodeId server() const { return server_; }

private:
    NetworkState net_;
    NodeId server_;
    Rng rng_;
};

} // namespace dyhyp

#endif // DYHYP_SINGLE_SERVER_HPP
