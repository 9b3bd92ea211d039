#pragma once

// Directed multigraph with integer multiplicities.
//
// Multiplicities follow the column convention A(i, j) = number of edges
// j -> i. The edge-list text format is the usual "source target [mult]";
// the flip happens only in multiplicity(), everywhere else edges are
// (source, target) pairs.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "log_math.hh"

namespace ordsbm {

using node_t = std::int32_t;

struct Edge
{
    node_t source;
    node_t target;
    std::int64_t multiplicity = 1;

    friend bool operator==(const Edge&, const Edge&) = default;
};

struct DegreeSequence
{
    std::vector<std::int64_t> out_degrees;
    std::vector<std::int64_t> in_degrees;
};

class DirectedMultigraph
{
public:
    struct Neighbour
    {
        node_t node;
        std::int64_t multiplicity;
    };

    DirectedMultigraph() = default;

    /// Duplicate (source, target) entries are summed.
    DirectedMultigraph(std::size_t num_nodes, std::vector<Edge> edges)
        : _num_nodes(num_nodes)
    {
        for (const auto& e : edges)
        {
            if (e.source < 0 || e.target < 0 ||
                std::size_t(e.source) >= num_nodes ||
                std::size_t(e.target) >= num_nodes)
                throw std::out_of_range("edge endpoint outside [0, N-1]");
            if (e.multiplicity < 1)
                throw std::invalid_argument("edge multiplicity must be >= 1");
        }
        std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
            return std::pair(a.source, a.target) < std::pair(b.source, b.target);
        });
        for (const auto& e : edges)
        {
            if (!_edges.empty() && _edges.back().source == e.source &&
                _edges.back().target == e.target)
                _edges.back().multiplicity += e.multiplicity;
            else
                _edges.push_back(e);
        }

        _out.resize(num_nodes);
        _in.resize(num_nodes);
        _k_out.assign(num_nodes, 0);
        _k_in.assign(num_nodes, 0);
        for (const auto& e : _edges)
        {
            _out[std::size_t(e.source)].push_back({e.target, e.multiplicity});
            _in[std::size_t(e.target)].push_back({e.source, e.multiplicity});
            _k_out[std::size_t(e.source)] += e.multiplicity;
            _k_in[std::size_t(e.target)] += e.multiplicity;
            _num_edges += e.multiplicity;
            _sum_lfact_mult += lfact(e.multiplicity);
        }
        for (auto& adj : _in)
            std::sort(adj.begin(), adj.end(),
                      [](auto& a, auto& b) { return a.node < b.node; });
        for (std::size_t i = 0; i < num_nodes; ++i)
            _sum_lfact_deg += lfact(_k_out[i]) + lfact(_k_in[i]);
    }

    std::size_t num_nodes() const { return _num_nodes; }
    std::int64_t num_edges() const { return _num_edges; }

    /// Aggregated edges sorted by (source, target).
    const std::vector<Edge>& edges() const { return _edges; }

    const std::vector<Neighbour>& out_neighbours(node_t v) const
    {
        return _out[std::size_t(v)];
    }
    const std::vector<Neighbour>& in_neighbours(node_t v) const
    {
        return _in[std::size_t(v)];
    }

    std::int64_t out_degree(node_t v) const { return _k_out[std::size_t(v)]; }
    std::int64_t in_degree(node_t v) const { return _k_in[std::size_t(v)]; }

    /// A(i, j): number of edges from j to i.
    std::int64_t multiplicity(node_t i, node_t j) const
    {
        const auto& adj = _out[std::size_t(j)];
        auto it = std::lower_bound(adj.begin(), adj.end(), i,
                                   [](const Neighbour& n, node_t v) { return n.node < v; });
        return (it != adj.end() && it->node == i) ? it->multiplicity : 0;
    }

    std::int64_t self_loops(node_t v) const { return multiplicity(v, v); }

    /// sum_ij log2 A_ij!
    double sum_log_multiplicity_factorials() const { return _sum_lfact_mult; }
    /// sum_i log2 k_i^out! + log2 k_i^in!
    double sum_log_degree_factorials() const { return _sum_lfact_deg; }

    friend bool operator==(const DirectedMultigraph& a, const DirectedMultigraph& b)
    {
        return a._num_nodes == b._num_nodes && a._edges == b._edges;
    }

private:
    std::size_t _num_nodes = 0;
    std::int64_t _num_edges = 0;
    std::vector<Edge> _edges;
    std::vector<std::vector<Neighbour>> _out;
    std::vector<std::vector<Neighbour>> _in;
    std::vector<std::int64_t> _k_out;
    std::vector<std::int64_t> _k_in;
    double _sum_lfact_mult = 0;
    double _sum_lfact_deg = 0;
};

inline DegreeSequence degrees(const DirectedMultigraph& g)
{
    DegreeSequence d;
    d.out_degrees.resize(g.num_nodes());
    d.in_degrees.resize(g.num_nodes());
    for (std::size_t v = 0; v < g.num_nodes(); ++v)
    {
        d.out_degrees[v] = g.out_degree(node_t(v));
        d.in_degrees[v] = g.in_degree(node_t(v));
    }
    return d;
}

/// d_i = k_i^out - k_i^in
inline std::vector<std::int64_t> degree_imbalance(const DirectedMultigraph& g)
{
    std::vector<std::int64_t> d(g.num_nodes());
    for (std::size_t v = 0; v < g.num_nodes(); ++v)
        d[v] = g.out_degree(node_t(v)) - g.in_degree(node_t(v));
    return d;
}

// ---------------------------------------------------------------------------
// Edge-list I/O

enum class IdPolicy
{
    tokens,   // arbitrary tokens, densified in first-seen order
    integers  // non-negative integers used directly; N = max id + 1
};

class EdgeListError : public std::runtime_error
{
public:
    EdgeListError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what),
          line(line)
    {
    }
    std::size_t line;
};

struct LoadedGraph
{
    DirectedMultigraph graph;
    std::vector<std::string> ids; // dense index -> original id
};

inline LoadedGraph load_edge_list(std::istream& in, IdPolicy policy = IdPolicy::tokens)
{
    std::vector<Edge> edges;
    std::vector<std::string> ids;
    std::unordered_map<std::string, node_t> index;
    std::int64_t max_id = -1;

    auto resolve = [&](const std::string& tok, std::size_t lineno) -> node_t {
        if (policy == IdPolicy::integers)
        {
            std::size_t pos = 0;
            long long v = -1;
            try
            {
                v = std::stoll(tok, &pos);
            }
            catch (const std::exception&)
            {
                throw EdgeListError(lineno, "node id '" + tok + "' is not an integer");
            }
            if (pos != tok.size() || v < 0 || v > std::numeric_limits<node_t>::max() - 1)
                throw EdgeListError(lineno, "node id '" + tok + "' is not a valid index");
            max_id = std::max<std::int64_t>(max_id, v);
            return node_t(v);
        }
        auto [it, inserted] = index.try_emplace(tok, node_t(ids.size()));
        if (inserted)
            ids.push_back(tok);
        return it->second;
    };

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream fields(line);
        std::vector<std::string> tok;
        for (std::string t; fields >> t;)
            tok.push_back(std::move(t));
        if (tok.empty())
            continue;
        if (tok.size() < 2 || tok.size() > 3)
            throw EdgeListError(lineno, "expected 'source target [multiplicity]'");
        std::int64_t mult = 1;
        if (tok.size() == 3)
        {
            std::size_t pos = 0;
            try
            {
                mult = std::stoll(tok[2], &pos);
            }
            catch (const std::exception&)
            {
                throw EdgeListError(lineno, "multiplicity '" + tok[2] + "' is not an integer");
            }
            if (pos != tok[2].size())
                throw EdgeListError(lineno, "multiplicity '" + tok[2] + "' is not an integer");
            if (mult < 1)
                throw EdgeListError(lineno, "multiplicity must be positive");
        }
        node_t s = resolve(tok[0], lineno);
        node_t t = resolve(tok[1], lineno);
        edges.push_back({s, t, mult});
    }

    std::size_t n = ids.size();
    if (policy == IdPolicy::integers)
    {
        n = std::size_t(max_id + 1);
        ids.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            ids[i] = std::to_string(i);
    }
    return {DirectedMultigraph(n, std::move(edges)), std::move(ids)};
}

inline LoadedGraph load_edge_list(const std::string& text, IdPolicy policy = IdPolicy::tokens)
{
    std::istringstream in(text);
    return load_edge_list(in, policy);
}

/// Writes "source target multiplicity" lines; ids default to dense indices.
inline void write_edge_list(std::ostream& out, const DirectedMultigraph& g,
                            const std::vector<std::string>& ids = {})
{
    auto name = [&](node_t v) {
        return ids.empty() ? std::to_string(v) : ids[std::size_t(v)];
    };
    out << "# nodes " << g.num_nodes() << " edges " << g.num_edges() << "\n";
    for (const auto& e : g.edges())
        out << name(e.source) << ' ' << name(e.target) << ' ' << e.multiplicity << '\n';
}

} // namespace ordsbm
