#pragma once

// Sufficient statistics of a labelled, ordered partition with O(degree + B)
// single-node updates and exact reversal.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "graph.hh"
#include "partition.hh"

namespace ordsbm {

inline constexpr group_t kNewGroup = -1;

/// Record of one applied single-node move, sufficient for exact reversal.
struct MoveDelta
{
    node_t node = -1;
    group_t from = -1;        // label before the move
    group_t to = -1;          // label after the move (post relabelling)
    bool noop = true;
    bool created = false;     // target was a new group
    bool removed = false;     // source group emptied and was dropped
    group_t removed_label = -1;
    double removed_u = 0;
};

/// Per-group edge counts of one node's incident edges, excluding self-loops.
struct NeighbourGroups
{
    std::vector<group_t> touched;      // groups with a non-zero count
    std::vector<std::int64_t> out_to;  // edges node -> group, indexed by group
    std::vector<std::int64_t> in_from; // edges group -> node
    std::int64_t self_loops = 0;
    std::int64_t non_loop_degree = 0;

    std::int64_t incident(group_t s) const
    {
        return std::size_t(s) < out_to.size() ? out_to[std::size_t(s)] + in_from[std::size_t(s)] : 0;
    }
};

using DegreeHistogram = std::unordered_map<std::int64_t, std::int64_t>;

class BlockState
{
public:
    /// The state keeps a reference to g, which must outlive it.
    BlockState(const DirectedMultigraph& g, const Partition& p) : _g(&g)
    {
        p.validate(g.num_nodes());
        _b = p.labels;
        _u = p.order_values;
        _B = group_t(p.num_groups());
        reserve(std::max<group_t>(_B, 1));
        _n.assign(std::size_t(_B), 0);
        _e_out.assign(std::size_t(_B), 0);
        _e_in.assign(std::size_t(_B), 0);
        _hist_out.assign(std::size_t(_B), {});
        _hist_in.assign(std::size_t(_B), {});
        _members.assign(std::size_t(_B), {});
        _pos.assign(g.num_nodes(), 0);

        for (std::size_t i = 0; i < g.num_nodes(); ++i)
        {
            group_t r = _b[i];
            _pos[i] = _members[std::size_t(r)].size();
            _members[std::size_t(r)].push_back(node_t(i));
            _n[std::size_t(r)]++;
            _hist_out[std::size_t(r)][g.out_degree(node_t(i))]++;
            _hist_in[std::size_t(r)][g.in_degree(node_t(i))]++;
            _e_out[std::size_t(r)] += g.out_degree(node_t(i));
            _e_in[std::size_t(r)] += g.in_degree(node_t(i));
        }
        for (const auto& edge : g.edges())
            add_entry(_b[std::size_t(edge.target)], _b[std::size_t(edge.source)],
                      edge.multiplicity);
    }

    const DirectedMultigraph& graph() const { return *_g; }
    std::size_t num_nodes() const { return _b.size(); }
    group_t num_groups() const { return _B; }
    std::int64_t num_edges() const { return _g->num_edges(); }

    group_t label(node_t i) const { return _b[std::size_t(i)]; }
    const std::vector<group_t>& labels() const { return _b; }
    double order_value(group_t r) const { return _u[std::size_t(r)]; }
    const std::vector<node_t>& members(group_t r) const { return _members[std::size_t(r)]; }

    /// e_rs: edges from group s to group r.
    std::int64_t affinity(group_t r, group_t s) const
    {
        return _e[std::size_t(r) * _cap + std::size_t(s)];
    }
    /// m_rs = e_rs + e_sr, or 2 e_rr on the diagonal.
    std::int64_t sym_affinity(group_t r, group_t s) const
    {
        return affinity(r, s) + affinity(s, r);
    }
    std::int64_t group_size(group_t r) const { return _n[std::size_t(r)]; }
    /// e_r^out = sum_s e_sr
    std::int64_t group_out_degree(group_t r) const { return _e_out[std::size_t(r)]; }
    /// e_r^in = sum_s e_rs
    std::int64_t group_in_degree(group_t r) const { return _e_in[std::size_t(r)]; }
    const DegreeHistogram& out_histogram(group_t r) const { return _hist_out[std::size_t(r)]; }
    const DegreeHistogram& in_histogram(group_t r) const { return _hist_in[std::size_t(r)]; }

    std::int64_t histogram_count(const DegreeHistogram& h, std::int64_t k) const
    {
        auto it = h.find(k);
        return it == h.end() ? 0 : it->second;
    }

    std::int64_t upstream() const { return _E_up; }
    std::int64_t downstream() const { return _E_down; }
    std::int64_t lateral() const { return _E_lat; }

    /// Edge from `from` to `to` goes upstream iff u_to > u_from.
    bool is_upstream(group_t to, group_t from) const
    {
        return _u[std::size_t(to)] > _u[std::size_t(from)];
    }

    Partition partition() const { return {_b, _u}; }

    std::vector<group_t> group_ranks() const { return partition().group_ranks(); }

    bool has_order_value(double u) const
    {
        return std::find(_u.begin(), _u.end(), u) != _u.end();
    }

    /// Fills and returns the shared scratch with the group counts of the
    /// neighbours of i. Valid until the next call or mutation.
    const NeighbourGroups& neighbour_groups(node_t i) const
    {
        auto& ng = _scratch;
        for (auto s : ng.touched)
        {
            ng.out_to[std::size_t(s)] = 0;
            ng.in_from[std::size_t(s)] = 0;
        }
        ng.touched.clear();
        if (ng.out_to.size() < std::size_t(_B) + 1)
        {
            ng.out_to.resize(std::size_t(_B) + 1, 0);
            ng.in_from.resize(std::size_t(_B) + 1, 0);
        }
        ng.self_loops = 0;
        ng.non_loop_degree = 0;
        auto touch = [&](group_t s) {
            if (ng.out_to[std::size_t(s)] == 0 && ng.in_from[std::size_t(s)] == 0)
                ng.touched.push_back(s);
        };
        for (const auto& [j, w] : _g->out_neighbours(i))
        {
            if (j == i)
            {
                ng.self_loops += w;
                continue;
            }
            group_t s = _b[std::size_t(j)];
            touch(s);
            ng.out_to[std::size_t(s)] += w;
            ng.non_loop_degree += w;
        }
        for (const auto& [j, w] : _g->in_neighbours(i))
        {
            if (j == i)
                continue;
            group_t s = _b[std::size_t(j)];
            touch(s);
            ng.in_from[std::size_t(s)] += w;
            ng.non_loop_degree += w;
        }
        return ng;
    }

    /// Moves node i to `target` (a label or kNewGroup with order value
    /// new_u). An emptied source group is dropped by moving the last label
    /// into its slot.
    MoveDelta apply_move(node_t i, group_t target, double new_u = 0)
    {
        MoveDelta d;
        d.node = i;
        group_t r = _b[std::size_t(i)];
        d.from = r;
        d.to = r;
        if (target == r)
            return d;
        if (target == kNewGroup && _B == 1 && _n[std::size_t(r)] == 1)
            return d;
        if (target != kNewGroup && (target < 0 || target >= _B))
            throw std::out_of_range("move target outside [0, B-1]");

        d.noop = false;
        group_t t = target;
        if (target == kNewGroup)
        {
            if (has_order_value(new_u))
                throw std::invalid_argument("order value of a new group must be distinct");
            t = add_empty_group(new_u);
            d.created = true;
        }
        move_node_raw(i, t);
        if (_n[std::size_t(r)] == 0)
        {
            d.removed = true;
            d.removed_label = r;
            d.removed_u = _u[std::size_t(r)];
            group_t last = _B - 1;
            if (r != last)
                swap_groups(r, last);
            remove_last_group();
        }
        d.to = _b[std::size_t(i)];
        return d;
    }

    /// Exactly undoes the most recent apply_move that produced d.
    void revert(const MoveDelta& d)
    {
        if (d.noop)
            return;
        if (d.removed)
        {
            group_t slot = add_empty_group(d.removed_u);
            if (d.removed_label != slot)
                swap_groups(d.removed_label, slot);
        }
        move_node_raw(d.node, d.from);
        if (d.created)
            remove_last_group();
    }

    /// Replaces u_r, reclassifying the edges incident on group r.
    void relocate_group(group_t r, double new_u)
    {
        if (has_order_value(new_u) && _u[std::size_t(r)] != new_u)
            throw std::invalid_argument("order value must be distinct");
        for (group_t s = 0; s < _B; ++s)
        {
            if (s == r)
                continue;
            classify(r, s, -affinity(r, s));
            classify(s, r, -affinity(s, r));
        }
        _u[std::size_t(r)] = new_u;
        for (group_t s = 0; s < _B; ++s)
        {
            if (s == r)
                continue;
            classify(r, s, affinity(r, s));
            classify(s, r, affinity(s, r));
        }
    }

    /// Equality of every counter, ignoring member-list order.
    bool counters_equal(const BlockState& o) const
    {
        if (_B != o._B || _b != o._b || _u != o._u || _n != o._n ||
            _e_out != o._e_out || _e_in != o._e_in || _E_up != o._E_up ||
            _E_down != o._E_down || _E_lat != o._E_lat ||
            _hist_out != o._hist_out || _hist_in != o._hist_in)
            return false;
        for (group_t r = 0; r < _B; ++r)
            for (group_t s = 0; s < _B; ++s)
                if (affinity(r, s) != o.affinity(r, s))
                    return false;
        return true;
    }

private:
    void reserve(group_t B)
    {
        if (std::size_t(B) <= _cap)
            return;
        std::size_t cap = std::max<std::size_t>(std::size_t(B), 2 * _cap);
        std::vector<std::int64_t> e(cap * cap, 0);
        for (std::size_t r = 0; r < _cap; ++r)
            for (std::size_t s = 0; s < _cap; ++s)
                e[r * cap + s] = _e[r * _cap + s];
        _e = std::move(e);
        _cap = cap;
    }

    std::int64_t& entry(group_t r, group_t s)
    {
        return _e[std::size_t(r) * _cap + std::size_t(s)];
    }

    void classify(group_t to, group_t from, std::int64_t delta)
    {
        if (to == from)
            _E_lat += delta;
        else if (is_upstream(to, from))
            _E_up += delta;
        else
            _E_down += delta;
    }

    void add_entry(group_t to, group_t from, std::int64_t delta)
    {
        entry(to, from) += delta;
        classify(to, from, delta);
    }

    group_t add_empty_group(double u)
    {
        reserve(_B + 1);
        _u.push_back(u);
        _n.push_back(0);
        _e_out.push_back(0);
        _e_in.push_back(0);
        _hist_out.emplace_back();
        _hist_in.emplace_back();
        _members.emplace_back();
        return _B++;
    }

    // The last group must be empty, hence its row and column are zero.
    void remove_last_group()
    {
        _B--;
        _u.pop_back();
        _n.pop_back();
        _e_out.pop_back();
        _e_in.pop_back();
        _hist_out.pop_back();
        _hist_in.pop_back();
        _members.pop_back();
    }

    void swap_groups(group_t a, group_t b)
    {
        if (a == b)
            return;
        for (group_t s = 0; s < _B; ++s)
            std::swap(entry(a, s), entry(b, s));
        for (group_t s = 0; s < _B; ++s)
            std::swap(entry(s, a), entry(s, b));
        auto sa = std::size_t(a), sb = std::size_t(b);
        std::swap(_u[sa], _u[sb]);
        std::swap(_n[sa], _n[sb]);
        std::swap(_e_out[sa], _e_out[sb]);
        std::swap(_e_in[sa], _e_in[sb]);
        std::swap(_hist_out[sa], _hist_out[sb]);
        std::swap(_hist_in[sa], _hist_in[sb]);
        std::swap(_members[sa], _members[sb]);
        for (auto v : _members[sa])
            _b[std::size_t(v)] = a;
        for (auto v : _members[sb])
            _b[std::size_t(v)] = b;
    }

    static void hist_add(DegreeHistogram& h, std::int64_t k, std::int64_t delta)
    {
        auto& c = h[k];
        c += delta;
        if (c == 0)
            h.erase(k);
    }

    void move_node_raw(node_t i, group_t t)
    {
        group_t r = _b[std::size_t(i)];
        if (r == t)
            return;
        const auto& ng = neighbour_groups(i);
        for (auto s : ng.touched)
        {
            if (auto c = ng.out_to[std::size_t(s)]; c != 0)
            {
                add_entry(s, r, -c);
                add_entry(s, t, c);
            }
            if (auto c = ng.in_from[std::size_t(s)]; c != 0)
            {
                add_entry(r, s, -c);
                add_entry(t, s, c);
            }
        }
        if (ng.self_loops != 0)
        {
            add_entry(r, r, -ng.self_loops);
            add_entry(t, t, ng.self_loops);
        }

        auto kout = _g->out_degree(i), kin = _g->in_degree(i);
        _e_out[std::size_t(r)] -= kout;
        _e_out[std::size_t(t)] += kout;
        _e_in[std::size_t(r)] -= kin;
        _e_in[std::size_t(t)] += kin;
        hist_add(_hist_out[std::size_t(r)], kout, -1);
        hist_add(_hist_out[std::size_t(t)], kout, +1);
        hist_add(_hist_in[std::size_t(r)], kin, -1);
        hist_add(_hist_in[std::size_t(t)], kin, +1);
        _n[std::size_t(r)]--;
        _n[std::size_t(t)]++;

        auto& src = _members[std::size_t(r)];
        std::size_t p = _pos[std::size_t(i)];
        _pos[std::size_t(src.back())] = p;
        src[p] = src.back();
        src.pop_back();
        _pos[std::size_t(i)] = _members[std::size_t(t)].size();
        _members[std::size_t(t)].push_back(i);
        _b[std::size_t(i)] = t;
    }

    const DirectedMultigraph* _g;
    std::vector<group_t> _b;
    std::vector<double> _u;
    group_t _B = 0;
    std::size_t _cap = 0;
    std::vector<std::int64_t> _e;
    std::vector<std::int64_t> _n;
    std::vector<std::int64_t> _e_out;
    std::vector<std::int64_t> _e_in;
    std::vector<DegreeHistogram> _hist_out;
    std::vector<DegreeHistogram> _hist_in;
    std::vector<std::vector<node_t>> _members;
    std::vector<std::size_t> _pos;
    std::int64_t _E_up = 0;
    std::int64_t _E_down = 0;
    std::int64_t _E_lat = 0;
    mutable NeighbourGroups _scratch;
};

/// Alignment summary: Delta_rs = e_rs - e_sr for rank(r) > rank(s).
struct AlignmentStats
{
    std::int64_t upstream = 0;
    std::int64_t downstream = 0;
    std::int64_t lateral = 0;
    std::int64_t delta = 0;
    /// Indexed [rank_hi][rank_lo] with rank_hi > rank_lo; zero elsewhere.
    std::vector<std::vector<std::int64_t>> pair_delta;
};

inline AlignmentStats alignment_stats(const BlockState& s)
{
    AlignmentStats a;
    a.upstream = s.upstream();
    a.downstream = s.downstream();
    a.lateral = s.lateral();
    a.delta = a.upstream - a.downstream;
    auto B = s.num_groups();
    auto rank = s.group_ranks();
    a.pair_delta.assign(std::size_t(B), std::vector<std::int64_t>(std::size_t(B), 0));
    for (group_t r = 0; r < B; ++r)
        for (group_t q = 0; q < B; ++q)
            if (rank[std::size_t(r)] > rank[std::size_t(q)])
                a.pair_delta[std::size_t(rank[std::size_t(r)])][std::size_t(rank[std::size_t(q)])] =
                    s.affinity(r, q) - s.affinity(q, r);
    return a;
}

} // namespace ordsbm
