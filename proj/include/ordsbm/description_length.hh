#pragma once

// Description length Sigma(A, b) of the four block-model variants, in bits,
// with exact O(k_i + B) deltas for single-node moves and group relocations.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "block_state.hh"
#include "log_math.hh"

namespace ordsbm {

struct ModelVariant
{
    bool degree_corrected = true;
    bool ordered = true;

    static constexpr ModelVariant sbm() { return {false, false}; }
    static constexpr ModelVariant dc_sbm() { return {true, false}; }
    static constexpr ModelVariant osbm() { return {false, true}; }
    static constexpr ModelVariant dc_osbm() { return {true, true}; }

    std::string name() const
    {
        return std::string(degree_corrected ? "dc-" : "") + (ordered ? "osbm" : "sbm");
    }

    static ModelVariant parse(const std::string& name)
    {
        if (name == "sbm")
            return sbm();
        if (name == "dc-sbm")
            return dc_sbm();
        if (name == "osbm")
            return osbm();
        if (name == "dc-osbm")
            return dc_osbm();
        throw std::invalid_argument("unknown model '" + name +
                                    "' (expected sbm, dc-sbm, osbm or dc-osbm)");
    }

    static std::vector<ModelVariant> all()
    {
        return {sbm(), dc_sbm(), osbm(), dc_osbm()};
    }

    friend bool operator==(const ModelVariant&, const ModelVariant&) = default;
};

/// Each term is -log2 of the corresponding probability.
struct DLBreakdown
{
    double likelihood = 0;
    double affinity = 0;
    double degree = 0;
    double partition = 0;
    double total = 0;
};

// ---------------------------------------------------------------------------
// Term building blocks shared by the full and incremental evaluations.

namespace terms {

inline double partition_global(std::int64_t N, std::int64_t B)
{
    return -lfact(N) - lbinom(N - 1, B - 1) - std::log2(double(N));
}

/// log2 of the marginal of the up/down split and the flat prior on m,
/// without the per-pair binomials.
inline double ordered_global(std::int64_t B, std::int64_t E, std::int64_t up,
                             std::int64_t down)
{
    return -lbinom(up + down, up) - std::log2(double(up + down + 1)) -
           lmultiset(B * (B + 1) / 2, E);
}

inline double uniform_affinity(std::int64_t B, std::int64_t E)
{
    return -lmultiset(B * B, E);
}

inline double ndc_group(std::int64_t n, std::int64_t e_out, std::int64_t e_in)
{
    if (n == 0)
        return 0;
    double ln = std::log2(double(n));
    return lfact(e_out) - double(e_out) * ln + lfact(e_in) - double(e_in) * ln;
}

/// Per-group DC degree prior excluding the histogram factorials.
inline double dc_group(const RestrictedPartitionTable& q, std::int64_t n,
                       std::int64_t e_out, std::int64_t e_in)
{
    if (n == 0)
        return 0;
    return -2 * lfact(n) - q.log_q(e_out, n) - q.log_q(e_in, n);
}

inline double histogram_lfact(const DegreeHistogram& h)
{
    double s = 0;
    for (const auto& [k, c] : h)
        s += lfact(c);
    return s;
}

} // namespace terms

// ---------------------------------------------------------------------------
// Individual log-probabilities (base 2, <= 0).

/// log2 P(A | k, e, b) of the microcanonical directed DC-SBM.
inline double log_likelihood_micro(const BlockState& s)
{
    const auto& g = s.graph();
    CompensatedSum acc;
    for (group_t r = 0; r < s.num_groups(); ++r)
    {
        for (group_t q = 0; q < s.num_groups(); ++q)
            acc += lfact(s.affinity(r, q));
        acc += -lfact(s.group_out_degree(r)) - lfact(s.group_in_degree(r));
    }
    acc += g.sum_log_degree_factorials();
    acc += -g.sum_log_multiplicity_factorials();
    return acc.value();
}

inline double log_q_restricted(const RestrictedPartitionTable& q, std::int64_t m,
                               std::int64_t n)
{
    return q.log_q(m, n);
}

/// log2 P(k | eta) P(eta | e, b)
inline double log_prior_degrees_dc(const BlockState& s, const RestrictedPartitionTable& q)
{
    CompensatedSum acc;
    for (group_t r = 0; r < s.num_groups(); ++r)
    {
        acc += terms::histogram_lfact(s.out_histogram(r));
        acc += terms::histogram_lfact(s.in_histogram(r));
        acc += terms::dc_group(q, s.group_size(r), s.group_out_degree(r),
                               s.group_in_degree(r));
    }
    return acc.value();
}

/// log2 P(k | e, b) without degree correction.
inline double log_prior_degrees_ndc(const BlockState& s)
{
    CompensatedSum acc;
    for (group_t r = 0; r < s.num_groups(); ++r)
        acc += terms::ndc_group(s.group_size(r), s.group_out_degree(r),
                                s.group_in_degree(r));
    acc += -s.graph().sum_log_degree_factorials();
    return acc.value();
}

/// log2 P(b) = log2 [prod_r n_r! / N!] - log2 C(N-1, B-1) - log2 N
inline double log_prior_partition(const BlockState& s)
{
    CompensatedSum acc;
    for (group_t r = 0; r < s.num_groups(); ++r)
        acc += lfact(s.group_size(r));
    acc += terms::partition_global(std::int64_t(s.num_nodes()), s.num_groups());
    return acc.value();
}

inline double log_prior_affinity_uniform(const BlockState& s)
{
    return terms::uniform_affinity(s.num_groups(), s.num_edges());
}

inline double log_prior_affinity_ordered(const BlockState& s)
{
    CompensatedSum acc;
    for (group_t r = 0; r < s.num_groups(); ++r)
        for (group_t q = r + 1; q < s.num_groups(); ++q)
            acc += lbinom(s.sym_affinity(r, q), s.affinity(r, q));
    acc += terms::ordered_global(s.num_groups(), s.num_edges(), s.upstream(),
                                 s.downstream());
    return acc.value();
}

/// Affinity matrix in rank order: e[r][s] = edges from rank s to rank r.
using AffinityMatrix = std::vector<std::vector<std::int64_t>>;

inline double log_prior_affinity_ordered(const AffinityMatrix& e)
{
    std::int64_t B = std::int64_t(e.size()), E = 0, up = 0, down = 0;
    CompensatedSum acc;
    for (std::int64_t r = 0; r < B; ++r)
        for (std::int64_t s = 0; s < B; ++s)
        {
            auto v = e[std::size_t(r)][std::size_t(s)];
            E += v;
            if (r > s)
                up += v;
            else if (r < s)
            {
                down += v;
                acc += lbinom(v + e[std::size_t(s)][std::size_t(r)], v);
            }
        }
    acc += terms::ordered_global(B, E, up, down);
    return acc.value();
}

inline double log_prior_affinity_uniform(const AffinityMatrix& e)
{
    std::int64_t E = 0;
    for (const auto& row : e)
        for (auto v : row)
            E += v;
    return terms::uniform_affinity(std::int64_t(e.size()), E);
}

// ---------------------------------------------------------------------------

/// Evaluates Sigma and its move deltas for one model variant. Immutable after
/// construction; may be shared by concurrent chains over the same graph.
class DescriptionLength
{
public:
    DescriptionLength(const DirectedMultigraph& g, ModelVariant v,
                      std::int64_t q_cap = RestrictedPartitionTable::kDefaultCap)
        : _v(v)
    {
        if (v.degree_corrected)
            _q = std::make_shared<const RestrictedPartitionTable>(
                g.num_edges(), std::int64_t(g.num_nodes()), q_cap);
    }

    DescriptionLength(ModelVariant v, std::shared_ptr<const RestrictedPartitionTable> q)
        : _v(v), _q(std::move(q))
    {
        if (v.degree_corrected && !_q)
            throw std::invalid_argument("degree-corrected variant needs a q table");
    }

    ModelVariant variant() const { return _v; }
    const std::shared_ptr<const RestrictedPartitionTable>& q_table() const { return _q; }

    DLBreakdown breakdown(const BlockState& s) const
    {
        DLBreakdown d;
        // 0 - x rather than -x keeps exact zeros positive
        d.likelihood = 0.0 - log_likelihood_micro(s);
        d.affinity = 0.0 - (_v.ordered ? log_prior_affinity_ordered(s)
                                       : log_prior_affinity_uniform(s));
        d.degree = 0.0 - (_v.degree_corrected ? log_prior_degrees_dc(s, *_q)
                                              : log_prior_degrees_ndc(s));
        d.partition = 0.0 - log_prior_partition(s);
        CompensatedSum t;
        t += d.likelihood;
        t += d.affinity;
        t += d.degree;
        t += d.partition;
        d.total = t.value();
        return d;
    }

    double total(const BlockState& s) const { return breakdown(s).total; }

    /// Sigma(after) - Sigma(before) for moving node i to target (a label or
    /// kNewGroup with order value new_u), without touching the state.
    double delta_move(const BlockState& s, node_t i, group_t target, double new_u = 0) const
    {
        group_t r = s.label(i);
        if (target == r)
            return 0;
        const group_t B = s.num_groups();
        if (target == kNewGroup && B == 1 && s.group_size(r) == 1)
            return 0;
        const bool fresh = (target == kNewGroup);
        const group_t t = fresh ? B : target;

        auto e_old = [&](group_t to, group_t from) -> std::int64_t {
            return (to < B && from < B) ? s.affinity(to, from) : 0;
        };
        auto u_of = [&](group_t x) { return x == B ? new_u : s.order_value(x); };

        thread_local std::vector<Change> changes;
        changes.clear();
        const auto& ng = s.neighbour_groups(i);
        for (auto q : ng.touched)
        {
            if (auto c = ng.out_to[std::size_t(q)]; c != 0)
            {
                changes.push_back({q, r, -c});
                changes.push_back({q, t, c});
            }
            if (auto c = ng.in_from[std::size_t(q)]; c != 0)
            {
                changes.push_back({r, q, -c});
                changes.push_back({t, q, c});
            }
        }
        if (ng.self_loops != 0)
        {
            changes.push_back({r, r, -ng.self_loops});
            changes.push_back({t, t, ng.self_loops});
        }
        std::sort(changes.begin(), changes.end());
        std::size_t w = 0;
        for (std::size_t k = 0; k < changes.size(); ++k)
        {
            if (w > 0 && changes[w - 1].to == changes[k].to &&
                changes[w - 1].from == changes[k].from)
                changes[w - 1].delta += changes[k].delta;
            else
                changes[w++] = changes[k];
        }
        changes.resize(w);

        auto find_delta = [&](group_t to, group_t from) -> std::int64_t {
            auto it = std::lower_bound(changes.begin(), changes.end(), Change{to, from, 0});
            return (it != changes.end() && it->to == to && it->from == from) ? it->delta : 0;
        };

        CompensatedSum dlog;
        std::int64_t d_up = 0, d_down = 0;
        for (const auto& c : changes)
        {
            if (c.delta == 0)
                continue;
            auto old = e_old(c.to, c.from);
            dlog += lfact(old + c.delta) - lfact(old);
            if (c.to == c.from)
                continue;
            if (u_of(c.to) > u_of(c.from))
                d_up += c.delta;
            else
                d_down += c.delta;
        }

        if (_v.ordered)
        {
            thread_local std::vector<std::pair<group_t, group_t>> pairs;
            pairs.clear();
            for (const auto& c : changes)
                if (c.to != c.from && c.delta != 0)
                    pairs.emplace_back(std::min(c.to, c.from), std::max(c.to, c.from));
            std::sort(pairs.begin(), pairs.end());
            pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
            for (auto [a, b] : pairs)
            {
                auto ab = e_old(a, b), ba = e_old(b, a);
                auto nab = ab + find_delta(a, b), nba = ba + find_delta(b, a);
                dlog += lbinom(nab + nba, nab) - lbinom(ab + ba, ab);
            }
        }

        const auto kout = s.graph().out_degree(i), kin = s.graph().in_degree(i);
        const std::int64_t n_r = s.group_size(r), n_t = fresh ? 0 : s.group_size(t);
        const std::int64_t eo_r = s.group_out_degree(r), ei_r = s.group_in_degree(r);
        const std::int64_t eo_t = fresh ? 0 : s.group_out_degree(t);
        const std::int64_t ei_t = fresh ? 0 : s.group_in_degree(t);

        // likelihood: group degree factorials
        dlog += -lfact(eo_r - kout) + lfact(eo_r) - lfact(ei_r - kin) + lfact(ei_r);
        dlog += -lfact(eo_t + kout) + lfact(eo_t) - lfact(ei_t + kin) + lfact(ei_t);

        // degree prior
        if (_v.degree_corrected)
        {
            dlog += -std::log2(double(s.histogram_count(s.out_histogram(r), kout)));
            dlog += -std::log2(double(s.histogram_count(s.in_histogram(r), kin)));
            if (!fresh)
            {
                dlog += std::log2(double(s.histogram_count(s.out_histogram(t), kout) + 1));
                dlog += std::log2(double(s.histogram_count(s.in_histogram(t), kin) + 1));
            }
            dlog += terms::dc_group(*_q, n_r - 1, eo_r - kout, ei_r - kin) -
                    terms::dc_group(*_q, n_r, eo_r, ei_r);
            dlog += terms::dc_group(*_q, n_t + 1, eo_t + kout, ei_t + kin) -
                    terms::dc_group(*_q, n_t, eo_t, ei_t);
        }
        else
        {
            dlog += terms::ndc_group(n_r - 1, eo_r - kout, ei_r - kin) -
                    terms::ndc_group(n_r, eo_r, ei_r);
            dlog += terms::ndc_group(n_t + 1, eo_t + kout, ei_t + kin) -
                    terms::ndc_group(n_t, eo_t, ei_t);
        }

        // partition prior
        const std::int64_t N = std::int64_t(s.num_nodes()), E = s.num_edges();
        const std::int64_t B_new = B - (n_r == 1 ? 1 : 0) + (fresh ? 1 : 0);
        dlog += lfact(n_r - 1) - lfact(n_r) + lfact(n_t + 1) - lfact(n_t);
        if (B_new != B)
            dlog += terms::partition_global(N, B_new) - terms::partition_global(N, B);

        // affinity prior globals
        if (_v.ordered)
            dlog += terms::ordered_global(B_new, E, s.upstream() + d_up,
                                          s.downstream() + d_down) -
                    terms::ordered_global(B, E, s.upstream(), s.downstream());
        else if (B_new != B)
            dlog += terms::uniform_affinity(B_new, E) - terms::uniform_affinity(B, E);

        return -dlog.value();
    }

    /// Sigma change from replacing u_r by new_u.
    double delta_relocate(const BlockState& s, group_t r, double new_u) const
    {
        if (!_v.ordered)
            return 0;
        std::int64_t d_up = 0, d_down = 0;
        double u_old = s.order_value(r);
        for (group_t q = 0; q < s.num_groups(); ++q)
        {
            if (q == r)
                continue;
            double uq = s.order_value(q);
            bool was_up = u_old > uq, now_up = new_u > uq;
            if (was_up == now_up)
                continue;
            // into r from q: upstream iff u_r > u_q
            auto into = s.affinity(r, q), out = s.affinity(q, r);
            std::int64_t up_change = now_up ? into - out : out - into;
            d_up += up_change;
            d_down -= up_change;
        }
        if (d_up == 0)
            return 0;
        auto B = s.num_groups();
        auto E = s.num_edges();
        return -(terms::ordered_global(B, E, s.upstream() + d_up, s.downstream() + d_down) -
                 terms::ordered_global(B, E, s.upstream(), s.downstream()));
    }

private:
    struct Change
    {
        group_t to;
        group_t from;
        std::int64_t delta;
        friend bool operator<(const Change& a, const Change& b)
        {
            return a.to != b.to ? a.to < b.to : a.from < b.from;
        }
    };

    ModelVariant _v;
    std::shared_ptr<const RestrictedPartitionTable> _q;
};

/// Sigma(A, b) for a partition, building the state and tables internally.
inline DLBreakdown description_length(const DirectedMultigraph& g, const Partition& p,
                                      ModelVariant v,
                                      std::int64_t q_cap = RestrictedPartitionTable::kDefaultCap)
{
    BlockState s(g, p);
    return DescriptionLength(g, v, q_cap).breakdown(s);
}

} // namespace ordsbm
