#include "dyhyp/engine.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

namespace dyhyp {

namespace {

std::uint32_t block_base(std::uint32_t c, int level, int dim) {
    return level == 0 ? 0u : (c >> (dim - level)) << (dim - level);
}

std::uint32_t width_at(int level, int dim) {
    return std::uint32_t{1} << (dim - level);
}

// First coordinate of the sibling of c's level-`level` subtree.
std::uint32_t sibling_base(std::uint32_t c, int level, int dim) {
    return ((c >> (dim - level)) ^ 1u) << (dim - level);
}

Stage broadcast_stage(StageKind kind, const SubtreeRef& region, std::uint32_t root, int dim) {
    Stage s;
    s.kind = kind;
    s.regions.push_back(region);
    s.roots.push_back(root);
    s.rounds = dim - region.level;
    s.messages = region.size(dim) - 1;
    return s;
}

Stage relocate_stage(const std::vector<Move>& moves) {
    Stage s;
    s.kind = StageKind::Relocate;
    for (const Move& m : moves) {
        s.rounds = std::max(s.rounds, std::popcount(m.from ^ m.to));
        s.pairs.emplace_back(m.from, m.to);
    }
    s.messages = moves.size();
    return s;
}

std::vector<Move> diff_moves(const NetworkState& net, std::uint32_t lo, const std::vector<NodeId>& arranged) {
    std::vector<Move> moves;
    for (std::uint32_t i = 0; i < arranged.size(); ++i) {
        std::uint32_t c = lo + i;
        if (net.node_at(c) != arranged[i]) {
            moves.push_back(Move{arranged[i], net.coord_of(arranged[i]), c});
        }
    }
    return moves;
}

bool ranges_adjacent(const CoordRange& a, const CoordRange& b) {
    return a.end + 1 == b.start || b.end + 1 == a.start;
}

bool ranges_overlap(const CoordRange& a, const CoordRange& b) {
    return a.start <= b.end && b.start <= a.end;
}

// Highest level whose group of x still equals its level-0 group.
int compact_level(const NodeStates& states, NodeId x) {
    const int dim = states.dim();
    const std::uint32_t s0 = states.group_size(x, 0);
    int e = 0;
    while (e + 1 <= dim && states.group_size(x, e + 1) == s0) {
        ++e;
    }
    return e;
}

} // namespace

const char* to_string(Phase p) {
    switch (p) {
    case Phase::Leap: return "leap";
    case Phase::Inter: return "inter";
    case Phase::Intra: return "intra";
    }
    return "?";
}

int alpha(const NetworkState& net, NodeId u, NodeId v) {
    return lca_level(net, u, v);
}

SelectionResult approx_lth_largest(std::vector<Time> values, std::uint64_t L) {
    if (values.empty()) {
        throw std::invalid_argument("approx_lth_largest: empty input");
    }
    const std::uint64_t padded = std::uint64_t{1} << ceil_log2(values.size());
    if (L < 1 || L > padded) {
        throw std::invalid_argument("approx_lth_largest: L out of range");
    }
    L = std::min<std::uint64_t>(L, values.size());
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(L - 1), values.end(),
                     std::greater<Time>());
    SelectionResult r;
    r.value = values[L - 1];
    r.rounds = ceil_log2(values.size());
    r.messages = padded - 1;
    return r;
}

std::uint64_t selection_rank(std::uint64_t k, std::uint64_t set_size, int dim) {
    if (set_size == 0) {
        return 0;
    }
    const std::uint64_t n = static_cast<std::uint64_t>(dim);
    const std::uint64_t padded = std::uint64_t{1} << ceil_log2(set_size);
    std::uint64_t L = ((k + n - 1) / n + 1) * padded / n;
    return std::clamp<std::uint64_t>(L, 1, set_size);
}

void finalize_accounting(TransformPlan& plan) {
    plan.rounds = 0;
    plan.messages = 0;
    for (const Stage& s : plan.stages) {
        plan.rounds += s.rounds;
        plan.messages += s.messages;
    }
}

TransformPlan subtree_leap(const NetworkState& net, const NodeStates& states, NodeId u, NodeId v) {
    const int dim = net.dim();
    const std::uint32_t cu = net.coord_of(u);
    const std::uint32_t cv = net.coord_of(v);
    TransformPlan plan;
    plan.phase = Phase::Leap;
    plan.anchor = u;
    plan.mover = v;
    plan.alpha = alpha(net, u, v);
    const int m = std::min(states.lowest_relative_level(cu), states.lowest_relative_level(cv));
    if (!(plan.alpha < m) || m == plan.alpha + 1) {
        return plan;
    }
    const std::uint32_t w = width_at(m, dim);
    const std::uint32_t src = block_base(cv, m, dim);
    const std::uint32_t dst = sibling_base(cu, m, dim);
    for (std::uint32_t o = 0; o < w; ++o) {
        plan.moves.push_back(Move{net.node_at(src + o), src + o, dst + o});
        plan.moves.push_back(Move{net.node_at(dst + o), dst + o, src + o});
    }

    const std::uint32_t gate = cu ^ (std::uint32_t{1} << (dim - m));
    Stage hand;
    hand.kind = StageKind::Exchange;
    hand.pairs.emplace_back(cu, gate);
    hand.rounds = 1;
    hand.messages = 1;
    plan.stages.push_back(hand);

    Stage spread;
    spread.kind = StageKind::Disseminate;
    spread.regions = {subtree_of(cv, m, dim), subtree_of(gate, m, dim)};
    spread.roots = {cv, gate};
    spread.rounds = dim - m;
    spread.messages = 2 * (static_cast<std::uint64_t>(w) - 1);
    plan.stages.push_back(spread);

    plan.stages.push_back(relocate_stage(plan.moves));
    finalize_accounting(plan);
    return plan;
}

TransformPlan inter_group_transform(const NetworkState& net, const NodeStates& states, NodeId u, NodeId v, Rng& rng) {
    const int dim = net.dim();
    const int a = alpha(net, u, v);
    TransformPlan plan;
    plan.phase = Phase::Inter;
    plan.alpha = a;
    plan.anchor = u;
    plan.mover = v;
    if (states.group(u, a) == states.group(v, a)) {
        return plan;
    }
    if (!(compact_level(states, u) > a || compact_level(states, v) > a)) {
        return plan;
    }

    const CoordRange A = states.range(u, a);
    const CoordRange B = states.range(v, a);
    const bool u_dominant = A.size() >= B.size();
    const NodeId dom = u_dominant ? u : v;
    const CoordRange D = u_dominant ? A : B;
    const CoordRange M = u_dominant ? B : A;
    plan.anchor = dom;
    plan.mover = u_dominant ? v : u;
    plan.merge_upto = a;

    const std::uint32_t cd = net.coord_of(dom);
    const SubtreeRef region = subtree_of(cd, a, dim);
    if (ranges_adjacent(D, M)) {
        // two adjacent singletons learn each other's ids while routing
        if (D.size() > 1 || M.size() > 1) {
            plan.stages.push_back(broadcast_stage(StageKind::Disseminate, region, cd, dim));
        }
        finalize_accounting(plan);
        return plan;
    }

    plan.stages.push_back(broadcast_stage(StageKind::Disseminate, region, cd, dim));
    const std::uint32_t lo = region.first(dim);
    const std::uint32_t width = region.size(dim);
    std::vector<NodeId> cur(width);
    for (std::uint32_t i = 0; i < width; ++i) {
        cur[i] = net.node_at(lo + i);
    }
    auto at = [&](std::uint32_t c) { return cur.begin() + static_cast<std::ptrdiff_t>(c - lo); };

    const int half_shift = dim - a - 1;
    const std::uint32_t dom_half = cd >> half_shift;
    std::optional<CoordRange> C1;
    if (const RelativePair* p = states.pair_in(a, region.prefix)) {
        NodeId rep = (net.coord_of(p->rep_low) >> half_shift) == dom_half ? p->rep_low : p->rep_high;
        CoordRange r = states.range(rep, a + 1);
        if (!ranges_overlap(r, D) && !ranges_overlap(r, M)) {
            C1 = r;
        }
    }
    const std::uint32_t msz = M.size();
    const bool right = M.start > D.end;
    const CoordRange target = right ? CoordRange{D.end + 1, D.end + msz} : CoordRange{D.start - msz, D.start - 1};

    const bool covers_relative = C1 && msz >= C1->size() &&
                                 (right ? (C1->start > D.end && C1->end < M.start)
                                        : (C1->end < D.start && C1->start > M.end));
    if (covers_relative) {
        // Compact the relative fragment next to the dominant group, then let the mover take its block.
        if (right) {
            std::rotate(at(D.end + 1), at(C1->start), at(C1->end) + 1);
        } else {
            std::rotate(at(C1->start), at(C1->end) + 1, at(D.start));
        }
    } else {
        // Random filler block between the two groups, avoiding the relative fragment.
        std::vector<std::uint32_t> inside;
        std::vector<std::uint32_t> anywhere;
        std::uint32_t first = right ? D.end + 1 : M.end + 1;
        std::uint32_t last_start = right ? (M.start >= msz ? M.start - msz : 0) : D.start - msz;
        for (std::uint32_t r0 = first; r0 <= last_start && r0 + msz - 1 < lo + width; ++r0) {
            CoordRange R{r0, r0 + msz - 1};
            if (right ? R.end >= M.start : R.start <= M.end) {
                continue;
            }
            if (C1 && ranges_overlap(R, *C1)) {
                continue;
            }
            anywhere.push_back(r0);
            if ((R.start >> half_shift) == dom_half && (R.end >> half_shift) == dom_half) {
                inside.push_back(r0);
            }
        }
        const std::vector<std::uint32_t>& pool = inside.empty() ? anywhere : inside;
        if (!pool.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            const std::uint32_t r0 = pool[pick(rng)];
            if (right) {
                std::rotate(at(D.end + 1), at(r0), at(r0 + msz - 1) + 1);
            } else {
                std::rotate(at(r0), at(r0 + msz), at(D.start));
            }
        }
    }

    if (right) {
        if (target.end < M.start) {
            std::swap_ranges(at(target.start), at(target.end) + 1, at(M.start));
        } else {
            std::rotate(at(D.end + 1), at(M.start), at(M.end) + 1);
        }
    } else {
        if (M.end < target.start) {
            std::swap_ranges(at(target.start), at(target.end) + 1, at(M.start));
        } else {
            std::rotate(at(M.start), at(M.end) + 1, at(D.start));
        }
    }

    plan.moves = diff_moves(net, lo, cur);
    plan.stages.push_back(broadcast_stage(StageKind::Simulate, region, cd, dim));
    plan.stages.push_back(relocate_stage(plan.moves));
    finalize_accounting(plan);
    return plan;
}

TransformPlan intra_group_transform(const NetworkState& net, const NodeStates& states, NodeId u, NodeId v, Rng& rng) {
    const int dim = net.dim();
    const int a = alpha(net, u, v);
    TransformPlan plan;
    plan.phase = Phase::Intra;
    plan.alpha = a;
    plan.anchor = u;
    plan.mover = v;
    if (a >= dim - 1) {
        return plan;
    }
    const bool u_dominant = states.group_size(u, a + 1) >= states.group_size(v, a + 1);
    const NodeId an = u_dominant ? u : v;
    const NodeId mv = u_dominant ? v : u;
    plan.anchor = an;
    plan.mover = mv;
    const std::uint32_t ca = net.coord_of(an);
    const std::uint32_t cm = net.coord_of(mv);
    const CoordRange mover_range = states.range(mv, a + 1);

    RepositionSet& rs = plan.reposition;
    rs.alpha = a;
    for (int i = a + 1; i <= dim; ++i) {
        rs.t_list.push_back(states.T(an, i));
        rs.t_list.push_back(states.T(mv, i));
    }
    std::sort(rs.t_list.begin(), rs.t_list.end(), std::greater<Time>());

    // The mover itself always counts as attached.
    auto attach_key = [&](NodeId x) { return x == mv ? kInfinity : states.K(x, a); };
    for (int i = a + 1; i <= dim - 1; ++i) {
        std::uint32_t ca_count = 0;
        std::uint32_t cm_count = 0;
        for (std::uint32_t c = mover_range.start; c <= mover_range.end; ++c) {
            Time k = attach_key(net.node_at(c));
            ca_count += k >= states.T(an, i) ? 1 : 0;
            cm_count += k >= states.T(mv, i) ? 1 : 0;
        }
        rs.count_anchor.push_back(ca_count);
        rs.count_mover.push_back(cm_count);
    }

    std::vector<char> chosen(net.size(), 0);
    std::vector<NodeId> S;
    auto take = [&](NodeId x) {
        if (x != an && !chosen[x]) {
            chosen[x] = 1;
            S.push_back(x);
            return true;
        }
        return false;
    };
    for (std::uint32_t c = mover_range.start; c <= mover_range.end; ++c) {
        rs.mover_group.push_back(net.node_at(c));
        take(net.node_at(c));
    }

    rs.selected.resize(static_cast<std::size_t>(dim - 1 - a));
    for (int i = a + 1; i <= dim - 1; ++i) {
        std::vector<std::uint32_t> region;
        if (states.T(an, i + 1) > 0) {
            const std::uint32_t base = sibling_base(ca, i + 1, dim);
            for (std::uint32_t c = base; c < base + width_at(i + 1, dim); ++c) {
                region.push_back(c);
            }
        } else if (states.T(an, i) > 0) {
            const std::uint32_t base = block_base(ca, i, dim);
            const CoordRange own = states.range(an, i + 1);
            for (std::uint32_t c = base; c < base + width_at(i, dim); ++c) {
                if (!own.contains(c)) {
                    region.push_back(c);
                }
            }
        } else {
            continue;
        }
        std::vector<NodeId>& Si = rs.selected[static_cast<std::size_t>(i - a - 1)];
        const std::uint32_t count = rs.count_anchor[static_cast<std::size_t>(i - a - 1)];
        auto in_region = [&](std::uint32_t c) { return std::binary_search(region.begin(), region.end(), c); };
        std::vector<char> local(net.size(), 0);
        auto add = [&](NodeId x) {
            if (!local[x] && x != an) {
                local[x] = 1;
                Si.push_back(x);
            }
        };
        if (count >= region.size()) {
            for (std::uint32_t c : region) {
                add(net.node_at(c));
            }
        } else {
            for (const RelativePair& p : states.relatives()) {
                for (NodeId rep : {p.rep_low, p.rep_high}) {
                    CoordRange r = states.range(rep, p.level + 1);
                    if (in_region(r.start) && in_region(r.end) && r.size() <= region.size()) {
                        bool all = true;
                        for (std::uint32_t c = r.start; c <= r.end && all; ++c) {
                            all = in_region(c);
                        }
                        if (all) {
                            for (std::uint32_t c = r.start; c <= r.end; ++c) {
                                add(net.node_at(c));
                            }
                        }
                    }
                }
            }
            if (Si.size() < count) {
                std::vector<std::size_t> free_slots;
                for (std::size_t k = 0; k < region.size(); ++k) {
                    if (!local[net.node_at(region[k])]) {
                        free_slots.push_back(k);
                    }
                }
                if (!free_slots.empty()) {
                    std::uniform_int_distribution<std::size_t> pick(0, free_slots.size() - 1);
                    std::size_t start = free_slots[pick(rng)];
                    std::size_t need = count - Si.size();
                    std::vector<NodeId> filler;
                    for (std::size_t step = 0; step < region.size() && filler.size() < need; ++step) {
                        NodeId x = net.node_at(region[(start + step) % region.size()]);
                        if (!local[x] && x != an) {
                            filler.push_back(x);
                        }
                    }
                    for (NodeId x : filler) {
                        CoordRange g = states.range(x, std::min(i + 1, dim - 1));
                        for (std::uint32_t c = g.start; c <= g.end; ++c) {
                            if (in_region(c)) {
                                add(net.node_at(c));
                            }
                        }
                        add(x);
                    }
                }
            }
        }
        if (i == dim - 1) {
            add(net.node_at(ca ^ 1u));
        }
        for (NodeId x : Si) {
            take(x);
        }
    }

    // Ranking keys: K at the level shared with the nearer communicant.
    struct Entry {
        NodeId node;
        Time key;
        int bucket;
        int level;
        GroupId unit;
    };
    std::vector<Entry> entries;
    entries.reserve(S.size());
    auto bucket_of = [&](Time key) {
        for (std::size_t k = 0; k < rs.t_list.size(); ++k) {
            if (key >= rs.t_list[k]) {
                return static_cast<int>(k) + 1;
            }
        }
        return static_cast<int>(rs.t_list.size()) + 1;
    };
    for (NodeId x : S) {
        if (x == mv) {
            entries.push_back(Entry{x, kInfinity, 1, dim, GroupId(x)});
            continue;
        }
        const std::uint32_t cx = net.coord_of(x);
        const int j = std::max(common_prefix_length(cx, ca, dim), common_prefix_length(cx, cm, dim));
        const Time key = states.K(x, j);
        const GroupId unit = j + 1 < dim ? states.group(x, j + 1) : GroupId(x);
        entries.push_back(Entry{x, key, bucket_of(key), j, unit});
    }

    // Units: nodes sharing level, group and key move as one block of consecutive ranks.
    using UnitKey = std::tuple<int, GroupId, Time, bool>;
    std::map<UnitKey, std::vector<std::size_t>> units;
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const Entry& e = entries[k];
        units[UnitKey{e.level, e.unit, e.key, e.node == mv}].push_back(k);
    }
    struct UnitOrder {
        int bucket;
        Time key;
        int distance;
        std::uint32_t coord;
        const std::vector<std::size_t>* members;
    };
    std::vector<UnitOrder> order;
    for (auto& [key, members] : units) {
        std::sort(members.begin(), members.end(), [&](std::size_t x, std::size_t y) {
            return net.coord_of(entries[x].node) < net.coord_of(entries[y].node);
        });
        int dist = dim + 1;
        std::uint32_t first = net.coord_of(entries[members.front()].node);
        for (std::size_t k : members) {
            dist = std::min(dist, static_cast<int>(std::bit_width(net.coord_of(entries[k].node) ^ ca)));
        }
        order.push_back(UnitOrder{entries[members.front()].bucket, entries[members.front()].key, dist, first, &members});
    }
    std::sort(order.begin(), order.end(), [](const UnitOrder& x, const UnitOrder& y) {
        if (x.bucket != y.bucket) return x.bucket < y.bucket;
        if (x.key != y.key) return x.key > y.key;
        if (x.distance != y.distance) return x.distance < y.distance;
        return x.coord < y.coord;
    });

    std::vector<std::uint32_t> slots;
    slots.reserve(S.size());
    for (NodeId x : S) {
        slots.push_back(net.coord_of(x));
    }
    std::sort(slots.begin(), slots.end(), [&](std::uint32_t x, std::uint32_t y) {
        int dx = static_cast<int>(std::bit_width(x ^ ca));
        int dy = static_cast<int>(std::bit_width(y ^ ca));
        return dx != dy ? dx < dy : x < y;
    });

    std::uint32_t rank = 0;
    std::map<NodeId, std::uint32_t> placed;
    for (const UnitOrder& uo : order) {
        for (std::size_t k : *uo.members) {
            const Entry& e = entries[k];
            const std::uint32_t slot = slots[rank];
            ++rank;
            plan.ranked.push_back(RankedNode{e.node, e.key, e.bucket, rank});
            placed[e.node] = slot;
            if (net.coord_of(e.node) != slot) {
                plan.moves.push_back(Move{e.node, net.coord_of(e.node), slot});
            }
        }
    }

    rs.count_upto.assign(rs.t_list.size(), 0);
    for (const RankedNode& r : plan.ranked) {
        for (std::size_t k = static_cast<std::size_t>(r.bucket); k <= rs.count_upto.size(); ++k) {
            ++rs.count_upto[k - 1];
        }
    }

    for (int d = a + 1; d <= dim - 1; ++d) {
        const std::uint32_t near_base = sibling_base(ca, d + 1, dim);
        const std::uint32_t far_base = sibling_base(ca, d, dim);
        Time far_max = std::numeric_limits<Time>::min();
        for (const RankedNode& r : plan.ranked) {
            std::uint32_t c = placed[r.node];
            if (c >= far_base && c < far_base + width_at(d, dim)) {
                far_max = std::max(far_max, r.key);
            }
        }
        KOrderCheck check;
        check.level = d;
        for (const RankedNode& r : plan.ranked) {
            std::uint32_t c = placed[r.node];
            if (c >= near_base && c < near_base + width_at(d + 1, dim)) {
                ++check.closer;
                check.satisfied += r.key >= far_max ? 1 : 0;
            }
        }
        plan.k_order.push_back(check);
    }

    const SubtreeRef region = subtree_of(ca, a, dim);
    plan.stages.push_back(broadcast_stage(StageKind::Disseminate, region, ca, dim));
    plan.stages.push_back(broadcast_stage(StageKind::Simulate, region, ca, dim));
    Stage select;
    select.kind = StageKind::Select;
    std::map<int, std::vector<std::uint32_t>> buckets;
    for (const RankedNode& r : plan.ranked) {
        buckets[r.bucket].push_back(net.coord_of(r.node));
    }
    for (auto& [bucket, coords] : buckets) {
        if (coords.size() < 2) {
            continue;
        }
        select.rounds = std::max(select.rounds, ceil_log2(coords.size()));
        select.messages += (std::uint64_t{1} << ceil_log2(coords.size())) - 1;
        select.members.push_back(coords);
    }
    plan.stages.push_back(select);
    plan.stages.push_back(relocate_stage(plan.moves));
    finalize_accounting(plan);
    return plan;
}

DyHypesEngine::DyHypesEngine(int dim, std::uint64_t seed) : net_(dim), states_(net_), rng_(seed) {}

void DyHypesEngine::apply(const TransformPlan& plan) {
    const int dim = net_.dim();
    if (!plan.moves.empty()) {
        const std::uint32_t ca = net_.coord_of(plan.anchor);
        for (const Move& m : plan.moves) {
            if (m.node == plan.anchor) {
                throw std::logic_error("transformation moved its anchor");
            }
            net_.place_raw(m.node, m.to);
        }
        touched_.clear();
        std::vector<std::pair<NodeId, int>> demoted;
        for (const Move& m : plan.moves) {
            touched_.push_back(m.from);
            const int j_old = common_prefix_length(m.from, ca, dim);
            const int j_new = common_prefix_length(m.to, ca, dim);
            if (j_old == j_new) {
                continue;
            }
            LevelState& from = states_.at(m.node, j_old);
            LevelState& to = states_.at(m.node, j_new);
            to.K = from.K;
            if (j_new < j_old) {
                from.K = 0;
            }
            demoted.emplace_back(m.node, j_old + 1);
            demoted.emplace_back(m.node, j_new + 1);
        }
        states_.rebuild_after_moves(net_, touched_);
        std::set<std::pair<int, std::uint32_t>> done;
        for (const auto& [x, d] : demoted) {
            if (d >= dim) {
                continue;
            }
            if (done.insert({d, states_.range(x, d).start}).second) {
                states_.harmonize_group(net_, x, d);
            }
        }
    }
    if (plan.merge_upto >= 0) {
        states_.merge_groups(net_, plan.anchor, plan.mover, 0, plan.merge_upto);
    }
}

void DyHypesEngine::apply_t1(const TransformPlan& plan) {
    const int dim = net_.dim();
    const NodeId an = plan.anchor;
    const std::uint32_t ca = net_.coord_of(an);
    const int buckets = static_cast<int>(plan.reposition.t_list.size()) + 1;
    std::vector<std::vector<const RankedNode*>> by_bucket(static_cast<std::size_t>(buckets) + 1);
    for (const RankedNode& r : plan.ranked) {
        by_bucket[static_cast<std::size_t>(r.bucket)].push_back(&r);
    }
    for (int d = plan.alpha + 1; d <= dim - 1; ++d) {
        const int shift = dim - d;
        const std::uint32_t own = ca >> shift;
        const std::uint32_t sib = own ^ 1u;
        for (int i = 1; i <= buckets; ++i) {
            const auto& members = by_bucket[static_cast<std::size_t>(i)];
            std::uint64_t inside = 0;
            bool outside = false;
            for (const RankedNode* r : members) {
                std::uint32_t block = net_.coord_of(r->node) >> shift;
                inside += block == own ? 1 : 0;
                outside = outside || block == sib;
            }
            if (inside == 0 || !outside) {
                continue;
            }
            std::vector<Time> keys;
            for (const RankedNode* r : members) {
                keys.push_back(r->key);
            }
            const std::uint64_t L = selection_rank(inside, keys.size(), dim);
            const Time next = approx_lth_largest(std::move(keys), L).value;

            const std::uint32_t base = block_base(ca, d, dim);
            const std::uint32_t width = width_at(d, dim);
            Time floor_next = kInfinity;
            for (std::uint32_t c = base; c < base + width; ++c) {
                floor_next = std::min(floor_next, states_.T(net_.node_at(c), d + 1));
            }
            const std::uint64_t capacity = width / 2;
            const std::uint64_t total = states_.at(an, d).counter + inside;
            const bool overflow = total >= capacity;
            const Time raised = std::min(next, floor_next);
            for (std::uint32_t c = base; c < base + width; ++c) {
                LevelState& s = states_.at(net_.node_at(c), d);
                if (overflow) {
                    s.T = std::max(s.T, raised);
                }
                s.counter = total % capacity;
                s.next_t = next;
            }
            if (overflow) {
                ++stats_.t1_updates;
            }
            break;
        }
    }
}

ServeOutcome DyHypesEngine::serve(Time t, NodeId u, NodeId v) {
    if (u == v) {
        throw std::invalid_argument("serve: u == v");
    }
    const int dim = net_.dim();
    ServeOutcome out;
    out.hops = std::popcount(net_.coord_of(u) ^ net_.coord_of(v));
    out.alpha = alpha(net_, u, v);

    auto run_phase = [&](TransformPlan plan) {
        if (!plan.empty()) {
            apply(plan);
            if (plan.phase == Phase::Intra) {
                apply_t1(plan);
                for (const KOrderCheck& k : plan.k_order) {
                    ++stats_.k_order_checks;
                    const std::uint32_t needed = (8 * k.closer + 9) / 10;
                    stats_.k_order_failures += k.satisfied < needed ? 1 : 0;
                }
            }
            out.rounds += plan.rounds;
            out.messages += plan.messages;
            switch (plan.phase) {
            case Phase::Leap: ++stats_.leaps; break;
            case Phase::Inter: ++stats_.inters; break;
            case Phase::Intra: ++stats_.intras; break;
            }
        }
        const Phase phase = plan.phase;
        if (keep_plans_ && !plan.empty()) {
            out.plans.push_back(std::move(plan));
        }
        if (hook_) {
            hook_(phase, net_, states_);
        }
    };

    run_phase(subtree_leap(net_, states_, u, v));
    run_phase(inter_group_transform(net_, states_, u, v, rng_));
    run_phase(intra_group_transform(net_, states_, u, v, rng_));

    out.adjacent_after = (net_.coord_of(u) ^ net_.coord_of(v)) == 1u;
    if (out.adjacent_after) {
        states_.merge_groups(net_, u, v, 0, dim - 1);
    }
    for (NodeId x : {u, v}) {
        LevelState& s = states_.at(x, dim - 1);
        s.T = t;
        s.K = t;
    }
    states_.harmonize_group(net_, u, dim - 1);
    states_.harmonize_group(net_, v, dim - 1);
    return out;
}

} // namespace dyhyp
