#pragma once

// Metropolis-Hastings over ordered partitions.
//
// The chain state is a grouping of the nodes plus one order value u_r per
// group. With the target P(b|A)^beta * B! on (grouping, u) the induced
// ordered partition is distributed as P(b|A)^beta, and new order values can
// be drawn uniformly. Three move families are used, each satisfying detailed
// balance on its own:
//
//   * single-node moves to an existing group (uniform or edge-guided) or to a
//     new group with fresh u;
//   * relocation of one group to a fresh u;
//   * restricted-Gibbs merge-split moves on a random node pair, where the
//     split proposal probability is that of the final Gibbs scan from a
//     randomised launch state.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "block_state.hh"
#include "description_length.hh"

namespace ordsbm {

inline constexpr double kInfiniteBeta = std::numeric_limits<double>::infinity();

enum class InitKind
{
    single_group,
    singletons,
    given
};

struct ChainConfig
{
    std::uint64_t seed = 0;
    double beta = 1.0;
    std::size_t sweeps = 1000;
    std::size_t burn_in = 0;
    std::size_t thinning = 1;
    InitKind init = InitKind::single_group;
    std::optional<Partition> initial;

    // proposals
    double p_new = 0.1;
    double edge_guided = 0.5;
    bool merge_split = true;
    std::size_t merge_split_per_sweep = 1;
    std::size_t launch_scans = 3;
    bool relocation = true;

    // MAP search
    std::size_t restarts = 10;
    std::size_t explore_sweeps = 0;
    double explore_beta = 1.0;
    std::size_t patience = 0; // stop a restart after this many sweeps without improvement; 0 = never
    std::size_t threads = 1;

    std::int64_t q_cap = RestrictedPartitionTable::kDefaultCap;
    bool shadow_check = false;

    void validate() const
    {
        if (sweeps < 1)
            throw std::invalid_argument("sweeps must be >= 1");
        if (thinning < 1)
            throw std::invalid_argument("thinning must be >= 1");
        if (!(beta > 0))
            throw std::invalid_argument("beta must be positive or infinite");
        if (!(p_new > 0 && p_new < 1))
            throw std::invalid_argument("p_new must lie in (0, 1)");
        if (!(edge_guided >= 0 && edge_guided <= 1))
            throw std::invalid_argument("edge_guided must lie in [0, 1]");
        if (init == InitKind::given && !initial)
            throw std::invalid_argument("init = given requires an initial partition");
    }
};

struct MoveCounts
{
    std::size_t proposed = 0;
    std::size_t accepted = 0;
};

struct SweepStats
{
    MoveCounts single;
    MoveCounts relocate;
    MoveCounts merge;
    MoveCounts split;

    SweepStats& operator+=(const SweepStats& o)
    {
        for (auto [a, b] : {std::pair{&single, &o.single}, {&relocate, &o.relocate},
                            {&merge, &o.merge}, {&split, &o.split}})
        {
            a->proposed += b->proposed;
            a->accepted += b->accepted;
        }
        return *this;
    }

    std::size_t accepted() const
    {
        return single.accepted + relocate.accepted + merge.accepted + split.accepted;
    }
};

inline Partition initial_partition(std::size_t N, const ChainConfig& cfg, Rng& rng)
{
    switch (cfg.init)
    {
    case InitKind::singletons:
    {
        auto p = Partition::singletons(N);
        // random order
        for (auto& u : p.order_values)
            u = uniform01(rng);
        return p;
    }
    case InitKind::given:
        return *cfg.initial;
    case InitKind::single_group:
    default:
        return Partition::single_group(N);
    }
}

class Chain
{
public:
    Chain(const DirectedMultigraph& g, const DescriptionLength& dl, const Partition& init,
          const ChainConfig& cfg, Rng rng)
        : _dl(&dl), _state(g, init), _cfg(cfg), _beta(cfg.beta), _rng(std::move(rng))
    {
        _sigma = _dl->total(_state);
        _order.resize(g.num_nodes());
        std::iota(_order.begin(), _order.end(), node_t(0));
    }

    const BlockState& state() const { return _state; }
    double sigma() const { return _sigma; }
    double beta() const { return _beta; }
    void set_beta(double beta) { _beta = beta; }
    Rng& rng() { return _rng; }
    const DescriptionLength& description_length() const { return *_dl; }

    double recompute_sigma() const { return _dl->total(_state); }

    /// One sweep: a single-node move per node (random order), B relocation
    /// attempts, and the configured number of merge-split attempts.
    SweepStats sweep()
    {
        SweepStats st;
        std::shuffle(_order.begin(), _order.end(), _rng);
        for (auto v : _order)
            single_node_move(v, st);
        if (_cfg.relocation)
        {
            auto B = _state.num_groups();
            for (group_t k = 0; k < B; ++k)
                relocation_move(st);
        }
        if (_cfg.merge_split)
            for (std::size_t k = 0; k < _cfg.merge_split_per_sweep; ++k)
                merge_split_move(st);
        return st;
    }

    /// Proposes one single-node move for v; returns true if accepted.
    bool single_node_move(node_t v, SweepStats& st)
    {
        const group_t B = _state.num_groups();
        const group_t r = _state.label(v);
        const std::int64_t n_r = _state.group_size(r);
        if (B == 1 && n_r == 1)
            return false;

        const auto& ng = _state.neighbour_groups(v);
        const std::int64_t kdeg = ng.non_loop_degree;
        const double p_new = _cfg.p_new, w = _cfg.edge_guided;

        auto existing_prob = [&](group_t t, group_t groups) {
            double frac = kdeg > 0 ? double(ng.incident(t)) / double(kdeg)
                                   : 1.0 / double(groups);
            return (1 - p_new) * (w * frac + (1 - w) / double(groups));
        };

        group_t target;
        if (uniform01(_rng) < p_new)
            target = kNewGroup;
        else if (kdeg > 0 && uniform01(_rng) < w)
            target = sample_neighbour_group(ng);
        else
            target = group_t(std::uniform_int_distribution<group_t>(0, B - 1)(_rng));

        if (target == r)
            return false;
        st.single.proposed++;

        double new_u = 0;
        double log_h;
        if (target == kNewGroup)
        {
            new_u = fresh_order_value();
            if (n_r == 1)
                log_h = 0;
            else
                log_h = std::log2(existing_prob(r, B + 1)) - std::log2(p_new) +
                        std::log2(double(B + 1));
        }
        else if (n_r == 1)
        {
            log_h = std::log2(p_new) - std::log2(existing_prob(target, B)) -
                    std::log2(double(B));
        }
        else
        {
            log_h = std::log2(existing_prob(r, B)) - std::log2(existing_prob(target, B));
        }

        double dS = _dl->delta_move(_state, v, target, new_u);
        if (!accept(dS, log_h))
            return false;
        _state.apply_move(v, target, new_u);
        _sigma += dS;
        st.single.accepted++;
        shadow();
        return true;
    }

    bool relocation_move(SweepStats& st)
    {
        const group_t B = _state.num_groups();
        group_t r = std::uniform_int_distribution<group_t>(0, B - 1)(_rng);
        double u = fresh_order_value();
        st.relocate.proposed++;
        double dS = _dl->delta_relocate(_state, r, u);
        if (!accept(dS, 0))
            return false;
        _state.relocate_group(r, u);
        _sigma += dS;
        st.relocate.accepted++;
        shadow();
        return true;
    }

    bool merge_split_move(SweepStats& st)
    {
        const std::size_t N = _state.num_nodes();
        if (N < 2)
            return false;
        node_t i = node_t(std::uniform_int_distribution<std::size_t>(0, N - 1)(_rng));
        node_t j = node_t(std::uniform_int_distribution<std::size_t>(0, N - 2)(_rng));
        if (j >= i)
            ++j;
        if (_state.label(i) == _state.label(j))
            return split_move(i, j, st);
        return merge_move(i, j, st);
    }

private:
    group_t sample_neighbour_group(const NeighbourGroups& ng)
    {
        auto x = std::uniform_int_distribution<std::int64_t>(0, ng.non_loop_degree - 1)(_rng);
        for (auto s : ng.touched)
        {
            x -= ng.incident(s);
            if (x < 0)
                return s;
        }
        return ng.touched.back();
    }

    double fresh_order_value()
    {
        double u;
        do
            u = uniform01(_rng);
        while (_state.has_order_value(u));
        return u;
    }

    bool accept(double dS, double log_h)
    {
        if (std::isinf(_beta))
            return dS < 0;
        double a = -_beta * dS + log_h;
        if (a >= 0)
            return true;
        return std::log2(uniform01(_rng)) < a;
    }

    void shadow() const
    {
        if (!_cfg.shadow_check)
            return;
        double full = recompute_sigma();
        if (std::abs(full - _sigma) > 1e-6)
            throw std::logic_error("tracked description length drifted from recomputation");
    }

    static double log2_one_plus_exp2(double y)
    {
        if (y > 0)
            return y + std::log2(1.0 + std::exp2(-y));
        return std::log2(1.0 + std::exp2(y));
    }

    struct GibbsStep
    {
        double log_p_move;
        double log_p_stay;
        double dS; // Sigma change if the node moves
    };

    /// Restricted Gibbs conditional for moving node k into `other`.
    GibbsStep gibbs_step(node_t k, group_t other)
    {
        GibbsStep g;
        g.dS = _dl->delta_move(_state, k, other);
        if (std::isinf(_beta))
        {
            constexpr double ninf = -std::numeric_limits<double>::infinity();
            if (g.dS == 0)
                g.log_p_move = g.log_p_stay = -1.0;
            else if (g.dS < 0)
                g.log_p_move = 0, g.log_p_stay = ninf;
            else
                g.log_p_move = ninf, g.log_p_stay = 0;
            return g;
        }
        double x = -_beta * g.dS; // log2 weight ratio move / stay
        g.log_p_move = -log2_one_plus_exp2(-x);
        g.log_p_stay = -log2_one_plus_exp2(x);
        return g;
    }

    /// Samples a restricted Gibbs step; returns log2 probability of the outcome.
    double gibbs_sample(node_t k, group_t ga, group_t gb, double& acc)
    {
        group_t other = (_state.label(k) == ga) ? gb : ga;
        auto g = gibbs_step(k, other);
        if (std::log2(uniform01(_rng)) < g.log_p_move)
        {
            _state.apply_move(k, other);
            acc += g.dS;
            return g.log_p_move;
        }
        return g.log_p_stay;
    }

    /// Forces node k into `dest`; returns log2 probability of that outcome.
    double gibbs_force(node_t k, group_t dest, group_t ga, group_t gb, double& acc)
    {
        group_t cur = _state.label(k);
        if (cur == dest)
            return gibbs_step(k, cur == ga ? gb : ga).log_p_stay;
        auto g = gibbs_step(k, dest);
        _state.apply_move(k, dest);
        acc += g.dS;
        return g.log_p_move;
    }

    /// Random launch split followed by intermediate restricted Gibbs scans.
    void launch(std::vector<node_t>& S, group_t ga, group_t gb, double& acc)
    {
        std::shuffle(S.begin(), S.end(), _rng);
        for (auto k : S)
        {
            group_t dest = (uniform01(_rng) < 0.5) ? ga : gb;
            if (_state.label(k) != dest)
            {
                acc += _dl->delta_move(_state, k, dest);
                _state.apply_move(k, dest);
            }
        }
        for (std::size_t scan = 0; scan < _cfg.launch_scans; ++scan)
            for (auto k : S)
                gibbs_sample(k, ga, gb, acc);
    }

    bool split_move(node_t i, node_t j, SweepStats& st)
    {
        st.split.proposed++;
        const group_t ga = _state.label(i);
        const group_t B = _state.num_groups();
        const double sigma0 = _sigma;

        std::vector<node_t> S;
        for (auto v : _state.members(ga))
            if (v != i && v != j)
                S.push_back(v);

        double acc = 0;
        double u = fresh_order_value();
        acc += _dl->delta_move(_state, j, kNewGroup, u);
        _state.apply_move(j, kNewGroup, u);
        const group_t gb = _state.label(j);

        launch(S, ga, gb, acc);
        double log_q = 0;
        for (auto k : S)
            log_q += gibbs_sample(k, ga, gb, acc);

        double log_h = std::log2(double(B + 1)) - log_q;
        if (accept(acc, log_h))
        {
            _sigma = sigma0 + acc;
            st.split.accepted++;
            shadow();
            return true;
        }
        // gb is the last label and is the only group that can empty
        for (auto v : std::vector<node_t>(_state.members(gb)))
            _state.apply_move(v, ga);
        _sigma = sigma0;
        return false;
    }

    bool merge_move(node_t i, node_t j, SweepStats& st)
    {
        st.merge.proposed++;
        const group_t ga = _state.label(i), gb = _state.label(j);
        const group_t B = _state.num_groups();
        const double sigma0 = _sigma;

        std::vector<node_t> S;
        std::vector<std::pair<node_t, group_t>> original;
        for (group_t g : {ga, gb})
            for (auto v : _state.members(g))
                if (v != i && v != j)
                {
                    S.push_back(v);
                    original.emplace_back(v, g);
                }
        std::sort(original.begin(), original.end());

        // probability that a split from the launch state reproduces the
        // current two groups
        double acc = 0;
        launch(S, ga, gb, acc);
        double log_q = 0;
        for (auto k : S)
        {
            auto it = std::lower_bound(original.begin(), original.end(),
                                       std::pair{k, group_t(-1)});
            log_q += gibbs_force(k, it->second, ga, gb, acc);
        }
        _sigma = sigma0;

        // merge gb into ga, one node at a time
        std::vector<MoveDelta> undo;
        double dS = 0;
        for (auto v : std::vector<node_t>(_state.members(gb)))
        {
            dS += _dl->delta_move(_state, v, _state.label(i));
            undo.push_back(_state.apply_move(v, _state.label(i)));
        }
        double log_h = log_q - std::log2(double(B));
        bool ok = std::isinf(_beta) ? accept(dS, 0) : (std::isfinite(log_q) && accept(dS, log_h));
        if (ok)
        {
            _sigma = sigma0 + dS;
            st.merge.accepted++;
            shadow();
            return true;
        }
        for (auto it = undo.rbegin(); it != undo.rend(); ++it)
            _state.revert(*it);
        _sigma = sigma0;
        return false;
    }

    const DescriptionLength* _dl;
    BlockState _state;
    ChainConfig _cfg;
    double _beta;
    Rng _rng;
    double _sigma = 0;
    std::vector<node_t> _order;
};

// ---------------------------------------------------------------------------

struct MapResult
{
    Partition partition;
    DLBreakdown description_length;
    std::vector<double> restart_sigmas;
    SweepStats stats;
};

/// MAP search: per restart, optional finite-beta exploration followed by
/// beta = infinity sweeps; returns the lowest-Sigma partition seen.
inline MapResult anneal_map(const DirectedMultigraph& g, const DescriptionLength& dl,
                            const ChainConfig& cfg)
{
    cfg.validate();
    const std::size_t restarts = std::max<std::size_t>(cfg.restarts, 1);
    struct Best
    {
        double sigma = std::numeric_limits<double>::infinity();
        Partition partition;
        SweepStats stats;
    };
    std::vector<Best> per_restart(restarts);

    auto run = [&](std::size_t k) {
        Rng rng = make_rng(cfg.seed, k);
        Partition init = initial_partition(g.num_nodes(), cfg, rng);
        Chain chain(g, dl, init, cfg, std::move(rng));
        Best best;
        auto consider = [&] {
            if (chain.sigma() < best.sigma)
            {
                best.sigma = chain.sigma();
                best.partition = chain.state().partition();
                return true;
            }
            return false;
        };
        consider();
        chain.set_beta(cfg.explore_beta);
        for (std::size_t s = 0; s < cfg.explore_sweeps; ++s)
        {
            best.stats += chain.sweep();
            consider();
        }
        chain.set_beta(kInfiniteBeta);
        std::size_t idle = 0;
        for (std::size_t s = 0; s < cfg.sweeps; ++s)
        {
            best.stats += chain.sweep();
            if (consider())
                idle = 0;
            else if (cfg.patience > 0 && ++idle >= cfg.patience)
                break;
        }
        per_restart[k] = std::move(best);
    };

    const std::size_t workers = std::clamp<std::size_t>(cfg.threads, 1, restarts);
    if (workers == 1)
    {
        for (std::size_t k = 0; k < restarts; ++k)
            run(k);
    }
    else
    {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t k; (k = next++) < restarts;)
                    run(k);
            });
    }

    MapResult result;
    std::size_t arg = 0;
    for (std::size_t k = 0; k < restarts; ++k)
    {
        result.restart_sigmas.push_back(per_restart[k].sigma);
        result.stats += per_restart[k].stats;
        if (per_restart[k].sigma < per_restart[arg].sigma)
            arg = k;
    }
    result.partition = per_restart[arg].partition;
    result.description_length = dl.breakdown(BlockState(g, result.partition));
    return result;
}

inline MapResult anneal_map(const DirectedMultigraph& g, ModelVariant v, const ChainConfig& cfg)
{
    DescriptionLength dl(g, v, cfg.q_cap);
    return anneal_map(g, dl, cfg);
}

// ---------------------------------------------------------------------------

/// Accumulated rank occupancies; pi_i(r) = counts[i][r] / samples.
struct RankMarginals
{
    std::vector<std::vector<std::int64_t>> counts;
    std::int64_t samples = 0;

    explicit RankMarginals(std::size_t N = 0) : counts(N) {}

    std::size_t num_nodes() const { return counts.size(); }

    std::size_t max_ranks() const
    {
        std::size_t R = 0;
        for (const auto& c : counts)
            R = std::max(R, c.size());
        return R;
    }

    void record(const std::vector<group_t>& node_ranks)
    {
        for (std::size_t i = 0; i < counts.size(); ++i)
        {
            auto r = std::size_t(node_ranks[i]);
            if (counts[i].size() <= r)
                counts[i].resize(r + 1, 0);
            counts[i][r]++;
        }
        samples++;
    }

    double probability(std::size_t i, std::size_t r) const
    {
        if (samples == 0 || r >= counts[i].size())
            return 0;
        return double(counts[i][r]) / double(samples);
    }

    /// Dense N x R matrix of pi_i(r).
    std::vector<std::vector<double>> distribution() const
    {
        std::size_t R = std::max<std::size_t>(max_ranks(), 1);
        std::vector<std::vector<double>> pi(counts.size(), std::vector<double>(R, 0.0));
        for (std::size_t i = 0; i < counts.size(); ++i)
            for (std::size_t r = 0; r < R; ++r)
                pi[i][r] = probability(i, r);
        return pi;
    }

    RankMarginals& operator+=(const RankMarginals& o)
    {
        for (std::size_t i = 0; i < counts.size(); ++i)
        {
            if (counts[i].size() < o.counts[i].size())
                counts[i].resize(o.counts[i].size(), 0);
            for (std::size_t r = 0; r < o.counts[i].size(); ++r)
                counts[i][r] += o.counts[i][r];
        }
        samples += o.samples;
        return *this;
    }
};

/// Runs burn_in sweeps, then `sweeps` sweeps, calling on_sample with the
/// chain after every thinning-th of them.
inline SweepStats run_chain(Chain& chain, const ChainConfig& cfg,
                            const std::function<void(const Chain&)>& on_sample)
{
    SweepStats st;
    for (std::size_t s = 0; s < cfg.burn_in; ++s)
        st += chain.sweep();
    for (std::size_t s = 0; s < cfg.sweeps; ++s)
    {
        st += chain.sweep();
        if ((s + 1) % cfg.thinning == 0)
            on_sample(chain);
    }
    return st;
}

/// Posterior rank marginals at beta = 1.
inline RankMarginals collect_marginals(const DirectedMultigraph& g, const DescriptionLength& dl,
                                       const ChainConfig& cfg)
{
    cfg.validate();
    if (cfg.beta != 1.0)
        throw std::invalid_argument("rank marginals require beta = 1");
    Rng rng = make_rng(cfg.seed, 0);
    Partition init = initial_partition(g.num_nodes(), cfg, rng);
    Chain chain(g, dl, init, cfg, std::move(rng));
    RankMarginals m(g.num_nodes());
    run_chain(chain, cfg, [&](const Chain& c) { m.record(c.state().partition().node_ranks()); });
    return m;
}

inline RankMarginals collect_marginals(const DirectedMultigraph& g, ModelVariant v,
                                       const ChainConfig& cfg)
{
    DescriptionLength dl(g, v, cfg.q_cap);
    return collect_marginals(g, dl, cfg);
}

} // namespace ordsbm
