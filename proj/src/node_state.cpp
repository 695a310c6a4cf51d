#include "dyhyp/node_state.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace dyhyp {

NodeStates::NodeStates(const NetworkState& net)
    : dim_(net.dim()), n_(net.size()), levels_(static_cast<std::size_t>(net.size()) * net.dim()), next_id_(net.size()) {
    for (NodeId x = 0; x < n_; ++x) {
        std::uint32_t c = net.coord_of(x);
        for (int d = 0; d < dim_; ++d) {
            LevelState& s = at(x, d);
            s.group = x;
            s.range = {c, c};
        }
    }
}

CoordRange NodeStates::range(NodeId x, int d) const {
    return at(x, d).range;
}

const RelativePair* NodeStates::pair_in(int d, std::uint32_t block) const {
    auto it = pair_index_.find(block_key(d, block));
    return it == pair_index_.end() ? nullptr : &relatives_[it->second];
}

int NodeStates::lowest_relative_level(std::uint32_t c) const {
    if (relatives_.empty()) {
        return dim_;
    }
    for (int d = 0; d < dim_; ++d) {
        std::uint32_t block = d == 0 ? 0u : c >> (dim_ - d);
        if (pair_index_.count(block_key(d, block))) {
            return d;
        }
    }
    return dim_;
}

void NodeStates::rebuild_after_moves(const NetworkState& net, std::span<const std::uint32_t> touched) {
    if (touched.empty()) {
        return;
    }
    candidates_.clear();
    std::vector<std::size_t> order;
    for (int d = 0; d < dim_; ++d) {
        const int shift = dim_ - d;
        blocks_.clear();
        for (std::uint32_t c : touched) {
            blocks_.push_back(d == 0 ? 0u : c >> shift);
        }
        std::sort(blocks_.begin(), blocks_.end());
        blocks_.erase(std::unique(blocks_.begin(), blocks_.end()), blocks_.end());

        runs_.clear();
        for (std::uint32_t b : blocks_) {
            const std::uint32_t first = d == 0 ? 0u : b << shift;
            const std::uint32_t last = first + (std::uint32_t{1} << shift) - 1;
            std::uint32_t c = first;
            while (c <= last) {
                NodeId x = net.node_at(c);
                GroupId id = group(x, d);
                GroupId parent = d == 0 ? 0 : group(x, d - 1);
                std::uint32_t e = c;
                while (e < last) {
                    NodeId y = net.node_at(e + 1);
                    if (group(y, d) != id || (d > 0 && group(y, d - 1) != parent)) {
                        break;
                    }
                    ++e;
                }
                runs_.push_back(Run{c, e, id});
                c = e + 1;
            }
        }

        order.resize(runs_.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const Run& ra = runs_[a];
            const Run& rb = runs_[b];
            if (ra.old_id != rb.old_id) {
                return ra.old_id < rb.old_id;
            }
            std::uint32_t sa = ra.end - ra.start;
            std::uint32_t sb = rb.end - rb.start;
            if (sa != sb) {
                return sa > sb;
            }
            return ra.start < rb.start;
        });

        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            while (j < order.size() && runs_[order[j]].old_id == runs_[order[i]].old_id) {
                ++j;
            }
            for (std::size_t k = i; k < j; ++k) {
                const Run& r = runs_[order[k]];
                GroupId id = k == i ? r.old_id : fresh_id();
                for (std::uint32_t c = r.start; c <= r.end; ++c) {
                    LevelState& s = at(net.node_at(c), d);
                    s.group = id;
                    s.range = {r.start, r.end};
                }
            }
            if (d > 0 && j - i >= 2) {
                // A group now lying in both halves of one level-(d-1) subtree leaves a relative pair.
                const std::uint32_t parent_block = runs_[order[i]].start >> (shift + 1);
                bool one_parent = true;
                const Run* low = nullptr;
                const Run* high = nullptr;
                for (std::size_t k = i; k < j; ++k) {
                    const Run& r = runs_[order[k]];
                    if ((r.start >> (shift + 1)) != parent_block) {
                        one_parent = false;
                        break;
                    }
                    bool is_high = ((r.start >> shift) & 1u) != 0;
                    if (is_high && !high) {
                        high = &r;
                    } else if (!is_high && !low) {
                        low = &r;
                    }
                }
                if (one_parent && low && high) {
                    candidates_.push_back(Candidate{d - 1, net.node_at(low->start), net.node_at(high->start)});
                }
            }
            i = j;
        }
    }

    validate_pairs(net);
    for (const Candidate& cand : candidates_) {
        std::uint32_t c = net.coord_of(cand.rep_low);
        std::uint32_t block = cand.level == 0 ? 0u : c >> (dim_ - cand.level);
        if (pair_index_.count(block_key(cand.level, block))) {
            ++stats_.pairs_suppressed;
            continue;
        }
        RelativePair p;
        p.level = cand.level;
        p.rep_low = cand.rep_low;
        p.rep_high = cand.rep_high;
        p.id_low = group(cand.rep_low, cand.level + 1);
        p.id_high = group(cand.rep_high, cand.level + 1);
        pair_index_[block_key(cand.level, block)] = relatives_.size();
        relatives_.push_back(p);
        ++stats_.pairs_registered;
    }
}

void NodeStates::validate_pairs(const NetworkState& net) {
    pair_index_.clear();
    std::vector<char> keep(relatives_.size(), 0);
    for (std::size_t i = 0; i < relatives_.size(); ++i) {
        // merges below may re-key later entries, so read them in place
        RelativePair& p = relatives_[i];
        const int d = p.level;
        const bool ids_ok = group(p.rep_low, d + 1) == p.id_low && group(p.rep_high, d + 1) == p.id_high;
        std::uint32_t cl = net.coord_of(p.rep_low);
        std::uint32_t ch = net.coord_of(p.rep_high);
        const int half_shift = dim_ - d - 1;
        if (ids_ok && (cl >> half_shift) == ((ch >> half_shift) ^ 1u)) {
            if ((cl >> half_shift) & 1u) {
                std::swap(p.rep_low, p.rep_high);
                std::swap(p.id_low, p.id_high);
            }
            std::uint32_t block = d == 0 ? 0u : net.coord_of(p.rep_low) >> (dim_ - d);
            if (pair_index_.count(block_key(d, block))) {
                ++stats_.pairs_dropped;
                continue;
            }
            pair_index_[block_key(d, block)] = i;
            keep[i] = 1;
            continue;
        }
        if (ids_ok && (cl >> half_shift) == (ch >> half_shift)) {
            CoordRange a = range(p.rep_low, d + 1);
            CoordRange b = range(p.rep_high, d + 1);
            bool adjacent = a.end + 1 == b.start || b.end + 1 == a.start;
            if (adjacent && group(p.rep_low, d) == group(p.rep_high, d)) {
                const NodeId lo = p.rep_low;
                const NodeId hi = p.rep_high;
                merge_groups(net, lo, hi, d + 1, d + 1);
                ++stats_.pairs_reunited;
                continue;
            }
        }
        ++stats_.pairs_dropped;
    }
    std::vector<RelativePair> kept;
    kept.reserve(relatives_.size());
    for (std::size_t i = 0; i < relatives_.size(); ++i) {
        if (keep[i]) {
            kept.push_back(relatives_[i]);
        }
    }
    relatives_ = std::move(kept);
    pair_index_.clear();
    for (std::size_t i = 0; i < relatives_.size(); ++i) {
        const RelativePair& p = relatives_[i];
        std::uint32_t block = p.level == 0 ? 0u : net.coord_of(p.rep_low) >> (dim_ - p.level);
        pair_index_[block_key(p.level, block)] = i;
    }
}

int NodeStates::merge_groups(const NetworkState& net, NodeId a, NodeId b, int from, int to) {
    int merged = 0;
    for (int d = std::max(from, 0); d <= to && d < dim_; ++d) {
        if (group(a, d) == group(b, d)) {
            continue;
        }
        CoordRange ra = range(a, d);
        CoordRange rb = range(b, d);
        const bool adjacent = ra.end + 1 == rb.start || rb.end + 1 == ra.start;
        const bool same_block = d == 0 || (net.coord_of(a) >> (dim_ - d)) == (net.coord_of(b) >> (dim_ - d));
        const bool same_parent = d == 0 || group(a, d - 1) == group(b, d - 1);
        if (!(adjacent && same_block && same_parent)) {
            ++stats_.merges_skipped;
            break;
        }
        GroupId keep = ra.size() >= rb.size() ? group(a, d) : group(b, d);
        CoordRange merged_range{std::min(ra.start, rb.start), std::max(ra.end, rb.end)};
        for (std::uint32_t c = merged_range.start; c <= merged_range.end; ++c) {
            LevelState& s = at(net.node_at(c), d);
            s.group = keep;
            s.range = merged_range;
        }
        // a fragment that absorbed a neighbour stays tracked under the surviving id
        for (RelativePair& p : relatives_) {
            if (p.level != d - 1) {
                continue;
            }
            if (merged_range.contains(net.coord_of(p.rep_low))) {
                p.id_low = keep;
            }
            if (merged_range.contains(net.coord_of(p.rep_high))) {
                p.id_high = keep;
            }
        }
        harmonize_group(net, a, d);
        ++merged;
    }
    return merged;
}

void NodeStates::harmonize_group(const NetworkState& net, NodeId x, int d) {
    CoordRange r = range(x, d);
    Time min_t = kInfinity;
    Time min_k = kInfinity;
    for (std::uint32_t c = r.start; c <= r.end; ++c) {
        NodeId y = net.node_at(c);
        min_t = std::min(min_t, at(y, d).T);
        if (d > 0) {
            min_k = std::min(min_k, at(y, d - 1).K);
        }
    }
    for (std::uint32_t c = r.start; c <= r.end; ++c) {
        NodeId y = net.node_at(c);
        at(y, d).T = min_t;
        if (d > 0) {
            at(y, d - 1).K = min_k;
        }
    }
}

void NodeStates::sync_relative_fields(const NetworkState& net) {
    for (LevelState& s : levels_) {
        s.relative_here.reset();
        s.relative_there.reset();
    }
    for (const RelativePair& p : relatives_) {
        const int d = p.level;
        CoordRange low = range(p.rep_low, d + 1);
        CoordRange high = range(p.rep_high, d + 1);
        SubtreeRef block = subtree_of(net.coord_of(p.rep_low), d, dim_);
        const std::uint32_t mid = block.first(dim_) + block.size(dim_) / 2;
        for (std::uint32_t c = block.first(dim_); c <= block.last(dim_); ++c) {
            LevelState& s = at(net.node_at(c), d);
            s.relative_here = c < mid ? low : high;
            s.relative_there = c < mid ? high : low;
        }
    }
}

std::vector<InvariantViolation> invariant_I_check(const NetworkState& net, const NodeStates& states) {
    const int dim = net.dim();
    std::vector<InvariantViolation> out;

    std::map<std::pair<int, std::uint32_t>, std::vector<GroupId>> pairs_per_block;
    for (const RelativePair& p : states.relatives()) {
        std::uint32_t cl = net.coord_of(p.rep_low);
        std::uint32_t ch = net.coord_of(p.rep_high);
        const int d = p.level;
        SubtreeRef block = subtree_of(cl, d, dim);
        const int half_shift = dim - d - 1;
        const bool siblings = ((cl >> half_shift) ^ (ch >> half_shift)) == 1u;
        const bool ids_ok = states.group(p.rep_low, d + 1) == p.id_low && states.group(p.rep_high, d + 1) == p.id_high;
        if (!siblings || !ids_ok) {
            out.push_back({d, block.prefix, {p.id_low, p.id_high}, "relative pair is not two fragments in sibling halves"});
            continue;
        }
        auto& ids = pairs_per_block[{d, block.prefix}];
        ids.push_back(p.id_low);
        ids.push_back(p.id_high);
    }
    for (const auto& [key, ids] : pairs_per_block) {
        if (ids.size() > 2) {
            out.push_back({key.first, key.second, ids, "more than one relative pair in subtree"});
        }
    }

    // Relative ranges written on the nodes must describe one pair per subtree and be present on both sides.
    for (int d = 0; d < dim; ++d) {
        const std::uint32_t blocks = std::uint32_t{1} << d;
        const std::uint32_t width = std::uint32_t{1} << (dim - d);
        for (std::uint32_t b = 0; b < blocks; ++b) {
            std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
            for (std::uint32_t c = b * width; c < (b + 1) * width; ++c) {
                const LevelState& s = states.at(net.node_at(c), d);
                if (s.relative_here.has_value() != s.relative_there.has_value()) {
                    out.push_back({d, b, {s.group}, "one-sided relative range"});
                    continue;
                }
                if (s.relative_here) {
                    std::uint32_t lo = std::min(s.relative_here->start, s.relative_there->start);
                    std::uint32_t hi = std::max(s.relative_here->start, s.relative_there->start);
                    seen.insert({lo, hi});
                }
            }
            if (seen.size() > 1) {
                std::vector<GroupId> ids;
                for (const auto& [lo, hi] : seen) {
                    ids.push_back(states.group(net.node_at(lo), d + 1 < dim ? d + 1 : d));
                    ids.push_back(states.group(net.node_at(hi), d + 1 < dim ? d + 1 : d));
                }
                out.push_back({d, b, ids, "node ranges name more than one relative pair"});
            }
        }
    }
    return out;
}

std::vector<std::string> check_group_structure(const NetworkState& net, const NodeStates& states) {
    const int dim = net.dim();
    const std::uint32_t n = net.size();
    std::vector<std::string> problems;
    auto report = [&](const std::string& msg) {
        if (problems.size() < 20) {
            problems.push_back(msg);
        }
    };
    for (int d = 0; d < dim; ++d) {
        std::map<GroupId, std::pair<CoordRange, std::uint32_t>> seen;
        for (std::uint32_t c = 0; c < n; ++c) {
            NodeId x = net.node_at(c);
            const LevelState& s = states.at(x, d);
            if (!s.range.contains(c)) {
                report("level " + std::to_string(d) + ": node " + std::to_string(x) + " outside its group range");
            }
            if (d > 0 && (s.range.start >> (dim - d)) != (s.range.end >> (dim - d))) {
                report("level " + std::to_string(d) + ": group " + std::to_string(s.group) + " spans two subtrees");
            }
            if (d > 0) {
                CoordRange parent = states.at(x, d - 1).range;
                if (s.range.start < parent.start || s.range.end > parent.end) {
                    report("level " + std::to_string(d) + ": group " + std::to_string(s.group) + " leaves its parent");
                }
            }
            auto [it, fresh] = seen.try_emplace(s.group, s.range, 0u);
            if (!fresh && !(it->second.first == s.range)) {
                report("level " + std::to_string(d) + ": group " + std::to_string(s.group) + " has two ranges");
            }
            ++it->second.second;
            if (d + 1 < dim && states.at(x, d + 1).T < s.T) {
                report("node " + std::to_string(x) + ": T decreases from level " + std::to_string(d));
            }
        }
        for (const auto& [id, info] : seen) {
            if (info.first.size() != info.second) {
                report("level " + std::to_string(d) + ": group " + std::to_string(id) + " is not contiguous");
                continue;
            }
            NodeId first = net.node_at(info.first.start);
            for (std::uint32_t c = info.first.start; c <= info.first.end; ++c) {
                NodeId y = net.node_at(c);
                if (states.at(y, d).T != states.at(first, d).T) {
                    report("level " + std::to_string(d) + ": group " + std::to_string(id) + " disagrees on T");
                    break;
                }
                if (d > 0 && states.at(y, d - 1).K != states.at(first, d - 1).K) {
                    report("level " + std::to_string(d) + ": group " + std::to_string(id) + " disagrees on K");
                    break;
                }
            }
        }
    }
    return problems;
}

GroupView group_view(const NetworkState& net, const NodeStates& states, NodeId x, int d) {
    if (d < 0 || d >= states.dim()) {
        throw std::out_of_range("group_view: level out of range");
    }
    const LevelState& s = states.at(x, d);
    for (std::uint32_t c = s.range.start; c <= s.range.end; ++c) {
        const LevelState& m = states.at(net.node_at(c), d);
        if (m.group != s.group || !(m.range == s.range)) {
            throw std::runtime_error("group_view: inconsistent group range at level " + std::to_string(d));
        }
    }
    GroupView view;
    view.level = d;
    view.id = s.group;
    view.range = s.range;
    view.relative = s.relative_there;
    return view;
}

int relative_distance(int k, std::uint64_t n) {
    if (n < 1) {
        throw std::invalid_argument("relative_distance: empty group");
    }
    return k - ceil_log2(n);
}

std::size_t NodeStates::state_words(NodeId x) const {
    std::size_t words = 0;
    for (int d = 0; d < dim_; ++d) {
        const LevelState& s = at(x, d);
        words += 7;
        words += s.relative_here ? 2 : 0;
        words += s.relative_there ? 2 : 0;
    }
    return words;
}

} // namespace dyhyp
