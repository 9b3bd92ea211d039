#pragma once

// Synthetic networks: microcanonical block-model samples, the imbalanced
// degree null model and planted upstream perturbations.

#include <algorithm>
#include <random>
#include <stdexcept>
#include <vector>

#include "description_length.hh"
#include "graph.hh"
#include "partition.hh"

namespace ordsbm {

struct GeneratorSpec
{
    /// Optional; when empty, every half-edge of group r lands on a node of r
    /// chosen uniformly at random.
    DegreeSequence degrees;
    /// e[r][s]: edges from group s to group r.
    AffinityMatrix affinities;
    std::vector<group_t> labels;
};

/// Uniform half-edge pairing respecting the degrees and the group-pair counts.
inline DirectedMultigraph sample_microcanonical(const GeneratorSpec& spec, Rng& rng)
{
    const std::size_t N = spec.labels.size();
    const std::size_t B = spec.affinities.size();
    for (const auto& row : spec.affinities)
        if (row.size() != B)
            throw std::invalid_argument("affinity matrix must be square");
    for (auto r : spec.labels)
        if (r < 0 || std::size_t(r) >= B)
            throw std::invalid_argument("label outside the affinity matrix");

    std::vector<std::int64_t> e_out(B, 0), e_in(B, 0);
    for (std::size_t r = 0; r < B; ++r)
        for (std::size_t s = 0; s < B; ++s)
        {
            auto v = spec.affinities[r][s];
            if (v < 0)
                throw std::invalid_argument("negative affinity");
            e_out[s] += v;
            e_in[r] += v;
        }

    std::vector<std::vector<node_t>> members(B);
    for (std::size_t i = 0; i < N; ++i)
        members[std::size_t(spec.labels[i])].push_back(node_t(i));

    // out-stubs and in-stubs per group
    std::vector<std::vector<node_t>> out_stubs(B), in_stubs(B);
    const bool dc = !spec.degrees.out_degrees.empty();
    if (dc)
    {
        if (spec.degrees.out_degrees.size() != N || spec.degrees.in_degrees.size() != N)
            throw std::invalid_argument("degree sequence size does not match labels");
        std::vector<std::int64_t> k_out(B, 0), k_in(B, 0);
        for (std::size_t i = 0; i < N; ++i)
        {
            auto r = std::size_t(spec.labels[i]);
            auto ko = spec.degrees.out_degrees[i], ki = spec.degrees.in_degrees[i];
            if (ko < 0 || ki < 0)
                throw std::invalid_argument("negative degree");
            k_out[r] += ko;
            k_in[r] += ki;
            out_stubs[r].insert(out_stubs[r].end(), std::size_t(ko), node_t(i));
            in_stubs[r].insert(in_stubs[r].end(), std::size_t(ki), node_t(i));
        }
        if (k_out != e_out || k_in != e_in)
            throw std::invalid_argument("degrees are inconsistent with the affinity matrix");
    }
    else
    {
        for (std::size_t r = 0; r < B; ++r)
        {
            if ((e_out[r] > 0 || e_in[r] > 0) && members[r].empty())
                throw std::invalid_argument("edges assigned to an empty group");
            if (members[r].empty())
                continue;
            std::uniform_int_distribution<std::size_t> pick(0, members[r].size() - 1);
            for (std::int64_t k = 0; k < e_out[r]; ++k)
                out_stubs[r].push_back(members[r][pick(rng)]);
            for (std::int64_t k = 0; k < e_in[r]; ++k)
                in_stubs[r].push_back(members[r][pick(rng)]);
        }
    }

    for (auto& v : out_stubs)
        std::shuffle(v.begin(), v.end(), rng);
    for (auto& v : in_stubs)
        std::shuffle(v.begin(), v.end(), rng);

    std::vector<Edge> edges;
    std::vector<std::size_t> out_pos(B, 0), in_pos(B, 0);
    for (std::size_t r = 0; r < B; ++r)
        for (std::size_t s = 0; s < B; ++s)
            for (std::int64_t k = 0; k < spec.affinities[r][s]; ++k)
            {
                node_t src = out_stubs[s][out_pos[s]++];
                node_t tgt = in_stubs[r][in_pos[r]++];
                edges.push_back({src, tgt, 1});
            }
    return DirectedMultigraph(N, std::move(edges));
}

/// k_i^out ~ Binomial(k, (N - i) / (N - 1)) for 1-based i, k_i^in = k - k_i^out,
/// resampling uniformly chosen nodes until in- and out-totals agree.
inline DegreeSequence sample_imbalanced_degrees(std::size_t N, std::int64_t k, Rng& rng)
{
    if (N < 2 || k < 1)
        throw std::invalid_argument("imbalanced degrees need N >= 2 and k >= 1");
    if ((std::int64_t(N) * k) % 2 != 0)
        throw std::invalid_argument("N * k must be even for a feasible pairing");
    DegreeSequence d;
    d.out_degrees.resize(N);
    d.in_degrees.resize(N);
    auto draw = [&](std::size_t i) {
        double p = double(N - 1 - i) / double(N - 1); // (N - i') / (N - 1), i' = i + 1
        d.out_degrees[i] = std::binomial_distribution<std::int64_t>(k, p)(rng);
        d.in_degrees[i] = k - d.out_degrees[i];
    };
    std::int64_t total_out = 0;
    for (std::size_t i = 0; i < N; ++i)
    {
        draw(i);
        total_out += d.out_degrees[i];
    }
    const std::int64_t target = std::int64_t(N) * k / 2;
    std::uniform_int_distribution<std::size_t> pick(0, N - 1);
    while (total_out != target)
    {
        auto i = pick(rng);
        total_out -= d.out_degrees[i];
        draw(i);
        total_out += d.out_degrees[i];
    }
    return d;
}

/// Null network: the imbalanced degrees paired uniformly at random in a
/// single group.
inline DirectedMultigraph sample_imbalanced_graph(std::size_t N, std::int64_t k, Rng& rng)
{
    GeneratorSpec spec;
    spec.degrees = sample_imbalanced_degrees(N, k, rng);
    std::int64_t E = 0;
    for (auto v : spec.degrees.out_degrees)
        E += v;
    spec.affinities = {{E}};
    spec.labels.assign(N, 0);
    return sample_microcanonical(spec, rng);
}

/// Adds `extra` edges u -> v between distinct nodes among the first
/// node_count indices, always from the higher index to the lower one.
inline DirectedMultigraph add_upstream_perturbation(const DirectedMultigraph& g,
                                                    std::size_t node_count,
                                                    std::int64_t extra, Rng& rng)
{
    if (node_count < 2)
        throw std::invalid_argument("perturbation needs at least two nodes");
    if (node_count > g.num_nodes())
        throw std::invalid_argument("perturbation node count exceeds N");
    if (extra < 0)
        throw std::invalid_argument("negative number of extra edges");
    std::vector<Edge> edges = g.edges();
    std::uniform_int_distribution<node_t> pick(0, node_t(node_count) - 1);
    for (std::int64_t k = 0; k < extra; ++k)
    {
        node_t a, b;
        do
        {
            a = pick(rng);
            b = pick(rng);
        } while (a == b);
        edges.push_back({std::max(a, b), std::min(a, b), 1});
    }
    return DirectedMultigraph(g.num_nodes(), std::move(edges));
}

} // namespace ordsbm
