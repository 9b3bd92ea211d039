#pragma once

// Post-inference summaries: mean ranks, Kendall's tau-b, posterior odds and
// four-way model comparison.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "description_length.hh"
#include "mcmc.hh"

namespace ordsbm {

/// b_i = sum_r r pi_i(r)
inline std::vector<double> mean_rank(const RankMarginals& m)
{
    if (m.samples < 1)
        throw std::invalid_argument("mean rank needs at least one sample");
    std::vector<double> out(m.num_nodes(), 0.0);
    for (std::size_t i = 0; i < m.num_nodes(); ++i)
    {
        double s = 0;
        for (std::size_t r = 0; r < m.counts[i].size(); ++r)
            s += double(r) * double(m.counts[i][r]);
        out[i] = s / double(m.samples);
    }
    return out;
}

class UndefinedCorrelation : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

/// Kendall's tau-b in O(n log n) (Knight's merge-sort algorithm).
inline double kendall_tau(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n = x.size();
    if (y.size() != n)
        throw std::invalid_argument("kendall_tau: sequences differ in length");
    if (n < 2)
        throw std::invalid_argument("kendall_tau: need at least two observations");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) {
        return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
    });

    auto pairs = [](std::int64_t t) { return t * (t - 1) / 2; };
    const std::int64_t n0 = pairs(std::int64_t(n));
    std::int64_t tie_x = 0, tie_xy = 0;
    for (std::size_t a = 0; a < n;)
    {
        std::size_t b = a;
        while (b < n && x[idx[b]] == x[idx[a]])
            ++b;
        tie_x += pairs(std::int64_t(b - a));
        for (std::size_t c = a; c < b;)
        {
            std::size_t d = c;
            while (d < b && y[idx[d]] == y[idx[c]])
                ++d;
            tie_xy += pairs(std::int64_t(d - c));
            c = d;
        }
        a = b;
    }

    // count inversions in y while merge-sorting
    std::vector<double> ys(n), buf(n);
    for (std::size_t k = 0; k < n; ++k)
        ys[k] = y[idx[k]];
    std::int64_t swaps = 0;
    for (std::size_t width = 1; width < n; width *= 2)
    {
        for (std::size_t lo = 0; lo < n; lo += 2 * width)
        {
            std::size_t mid = std::min(lo + width, n), hi = std::min(lo + 2 * width, n);
            std::size_t a = lo, b = mid, o = lo;
            while (a < mid && b < hi)
            {
                if (ys[b] < ys[a])
                {
                    swaps += std::int64_t(mid - a);
                    buf[o++] = ys[b++];
                }
                else
                    buf[o++] = ys[a++];
            }
            while (a < mid)
                buf[o++] = ys[a++];
            while (b < hi)
                buf[o++] = ys[b++];
        }
        std::swap(ys, buf);
    }

    std::int64_t tie_y = 0;
    for (std::size_t a = 0; a < n;)
    {
        std::size_t b = a;
        while (b < n && ys[b] == ys[a])
            ++b;
        tie_y += pairs(std::int64_t(b - a));
        a = b;
    }

    const std::int64_t untied_x = n0 - tie_x, untied_y = n0 - tie_y;
    if (untied_x == 0 || untied_y == 0)
        throw UndefinedCorrelation("kendall_tau: a sequence has zero variance");
    const std::int64_t S = n0 - tie_x - tie_y + tie_xy - 2 * swaps;
    return double(S) / std::sqrt(double(untied_x) * double(untied_y));
}

template <class T, class U>
double kendall_tau(const std::vector<T>& x, const std::vector<U>& y)
{
    return kendall_tau(std::vector<double>(x.begin(), x.end()),
                       std::vector<double>(y.begin(), y.end()));
}

/// Odds in favour of model 1: prior_odds * 2^(sigma_2 - sigma_1).
inline double posterior_odds(double sigma_1, double sigma_2, double prior_odds = 1.0)
{
    return prior_odds * std::exp2(sigma_2 - sigma_1);
}

/// Node order by (rank, d_i), ascending.
inline std::vector<node_t> lexicographic_order(const std::vector<group_t>& ranks,
                                               const std::vector<std::int64_t>& imbalance)
{
    std::vector<node_t> order(ranks.size());
    std::iota(order.begin(), order.end(), node_t(0));
    std::stable_sort(order.begin(), order.end(), [&](node_t a, node_t b) {
        auto ka = std::pair(ranks[std::size_t(a)], imbalance[std::size_t(a)]);
        auto kb = std::pair(ranks[std::size_t(b)], imbalance[std::size_t(b)]);
        return ka < kb;
    });
    return order;
}

// ---------------------------------------------------------------------------

struct VariantFit
{
    ModelVariant variant;
    Partition partition; // label == rank
    DLBreakdown description_length;
    std::int64_t upstream = 0;
    std::int64_t downstream = 0;
    std::int64_t lateral = 0;
    /// E+ / (E+ + E-), or 0 if every edge is lateral; ordered fits only.
    std::optional<double> upstream_fraction;
};

inline double upstream_fraction(std::int64_t up, std::int64_t down)
{
    return (up + down) == 0 ? 0.0 : double(up) / double(up + down);
}

/// Packages a fitted partition for reporting: ordered fits are oriented so
/// that E+ >= E- (Sigma is unchanged by reversal), then relabelled by rank.
inline VariantFit make_fit(const DirectedMultigraph& g, ModelVariant v, Partition p,
                           const DescriptionLength& dl)
{
    {
        BlockState s(g, p);
        if (v.ordered && s.downstream() > s.upstream())
            p = p.reversed();
    }
    p = p.rank_labelled();
    BlockState s(g, p);
    VariantFit fit;
    fit.variant = v;
    fit.partition = p;
    fit.description_length = dl.breakdown(s);
    fit.upstream = s.upstream();
    fit.downstream = s.downstream();
    fit.lateral = s.lateral();
    if (v.ordered)
        fit.upstream_fraction = upstream_fraction(s.upstream(), s.downstream());
    return fit;
}

struct ModelComparison
{
    std::vector<VariantFit> fits;
    std::size_t best = 0;
    /// sigma_diff[a][b] = Sigma_b - Sigma_a
    std::vector<std::vector<double>> sigma_diff;
    /// odds[a][b]: posterior odds of model a over model b
    std::vector<std::vector<double>> odds;
};

/// Assembles the comparison from already fitted variants.
inline ModelComparison compare_fits(std::vector<VariantFit> fits)
{
    ModelComparison mc;
    mc.fits = std::move(fits);
    const std::size_t k = mc.fits.size();
    mc.sigma_diff.assign(k, std::vector<double>(k, 0.0));
    mc.odds.assign(k, std::vector<double>(k, 1.0));
    for (std::size_t a = 0; a < k; ++a)
    {
        if (mc.fits[a].description_length.total < mc.fits[mc.best].description_length.total)
            mc.best = a;
        for (std::size_t b = 0; b < k; ++b)
        {
            double sa = mc.fits[a].description_length.total;
            double sb = mc.fits[b].description_length.total;
            mc.sigma_diff[a][b] = sb - sa;
            mc.odds[a][b] = posterior_odds(sa, sb);
        }
    }
    return mc;
}

/// MAP fit of each variant followed by comparison. Every variant uses the
/// same seed.
inline ModelComparison model_select(const DirectedMultigraph& g,
                                    const std::vector<ModelVariant>& variants,
                                    const ChainConfig& cfg)
{
    std::vector<VariantFit> fits;
    std::shared_ptr<const RestrictedPartitionTable> q;
    for (auto v : variants)
    {
        if (v.degree_corrected && !q)
            q = std::make_shared<const RestrictedPartitionTable>(
                g.num_edges(), std::int64_t(g.num_nodes()), cfg.q_cap);
        DescriptionLength dl(v, v.degree_corrected ? q : nullptr);
        auto map = anneal_map(g, dl, cfg);
        fits.push_back(make_fit(g, v, map.partition, dl));
    }
    return compare_fits(std::move(fits));
}

} // namespace ordsbm
