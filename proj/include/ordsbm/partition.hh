#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace ordsbm {

using group_t = std::int32_t;

/// Reproducible, independently seedable generator for one chain.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0)
{
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32),
                      std::uint32_t(stream), std::uint32_t(stream >> 32),
                      0x6f72u, 0x6473u};
    return Rng(seq);
}

inline double uniform01(Rng& rng)
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Labelled partition with an auxiliary order value u_r per label.
///
/// Group r sits below group s in the hierarchy iff u_r < u_s. Ranks are
/// 0-based positions in ascending-u order.
struct Partition
{
    std::vector<group_t> labels;
    std::vector<double> order_values;

    std::size_t num_groups() const { return order_values.size(); }

    /// u_r = (r + 1) / (B + 1), i.e. rank equals label.
    static Partition with_label_order(std::vector<group_t> labels)
    {
        Partition p;
        group_t B = 0;
        for (auto r : labels)
            B = std::max(B, group_t(r + 1));
        p.labels = std::move(labels);
        p.order_values.resize(std::size_t(B));
        for (group_t r = 0; r < B; ++r)
            p.order_values[std::size_t(r)] = double(r + 1) / double(B + 1);
        return p;
    }

    static Partition single_group(std::size_t n)
    {
        return with_label_order(std::vector<group_t>(n, 0));
    }

    static Partition singletons(std::size_t n)
    {
        std::vector<group_t> labels(n);
        std::iota(labels.begin(), labels.end(), 0);
        return with_label_order(std::move(labels));
    }

    /// Rank of each label.
    std::vector<group_t> group_ranks() const
    {
        std::vector<group_t> order(num_groups());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](group_t a, group_t b) {
            return order_values[std::size_t(a)] < order_values[std::size_t(b)];
        });
        std::vector<group_t> rank(num_groups());
        for (std::size_t pos = 0; pos < order.size(); ++pos)
            rank[std::size_t(order[pos])] = group_t(pos);
        return rank;
    }

    /// Rank of each node.
    std::vector<group_t> node_ranks() const
    {
        auto rank = group_ranks();
        std::vector<group_t> out(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i)
            out[i] = rank[std::size_t(labels[i])];
        return out;
    }

    /// Same partition relabelled so that label == rank.
    Partition rank_labelled() const
    {
        return with_label_order(node_ranks());
    }

    /// u_r -> 1 - u_r
    Partition reversed() const
    {
        Partition p = *this;
        for (auto& u : p.order_values)
            u = 1.0 - u;
        return p;
    }

    /// Relabels occupied groups densely in first-seen order, keeping u.
    static Partition compacted(const std::vector<group_t>& labels,
                               const std::vector<double>& order_values)
    {
        std::unordered_map<group_t, group_t> remap;
        Partition p;
        p.labels.reserve(labels.size());
        for (auto r : labels)
        {
            auto [it, inserted] = remap.try_emplace(r, group_t(remap.size()));
            if (inserted)
                p.order_values.push_back(order_values.at(std::size_t(r)));
            p.labels.push_back(it->second);
        }
        return p;
    }

    /// Throws if a label is out of range, unoccupied, or u values collide.
    void validate(std::size_t num_nodes) const
    {
        if (labels.size() != num_nodes)
            throw std::invalid_argument("partition size does not match the graph");
        std::vector<char> seen(num_groups(), 0);
        for (auto r : labels)
        {
            if (r < 0 || std::size_t(r) >= num_groups())
                throw std::out_of_range("group label " + std::to_string(r) +
                                        " outside [0, B-1]");
            seen[std::size_t(r)] = 1;
        }
        for (std::size_t r = 0; r < seen.size(); ++r)
            if (!seen[r])
                throw std::invalid_argument("group label " + std::to_string(r) +
                                            " is unoccupied");
        auto u = order_values;
        std::sort(u.begin(), u.end());
        if (std::adjacent_find(u.begin(), u.end()) != u.end())
            throw std::invalid_argument("order values must be pairwise distinct");
    }
};

} // namespace ordsbm
