#pragma once

// Command-line front end: fit, compare, marginals, generate and rank.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ordsbm.hh"

namespace ordsbm::cli {

using json = nlohmann::ordered_json;

inline constexpr int kUsageError = 1;
inline constexpr int kRuntimeError = 2;

struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct Options
{
    std::string graph;
    std::string model = "dc-osbm";
    std::string degree_correction; // "", "on" or "off"
    std::uint64_t seed = 0;
    std::size_t sweeps = 1000;
    std::size_t burn_in = 0;
    std::size_t thin = 1;
    std::size_t restarts = 10;
    std::string beta = "1";
    std::size_t explore_sweeps = 0;
    std::size_t patience = 0;
    std::size_t threads = 1;
    std::int64_t q_cap = RestrictedPartitionTable::kDefaultCap;
    std::string output;
    std::string format = "json";
    bool integer_ids = false;
    bool timing = false;

    // generate
    std::vector<std::int64_t> imbalanced;
    std::string planted;
    std::size_t perturb_nodes = 0;
    std::int64_t perturb_edges = 0;

    // rank
    std::string fit_file;
    std::string marginals_file;
    bool mean_rank = false;
    bool tau = false;
    bool order = false;
};

inline double parse_beta(const std::string& s)
{
    if (s == "inf" || s == "infinity")
        return kInfiniteBeta;
    std::size_t pos = 0;
    double b = 0;
    try
    {
        b = std::stod(s, &pos);
    }
    catch (const std::exception&)
    {
        throw UsageError("--beta expects a positive number or 'inf', got '" + s + "'");
    }
    if (pos != s.size() || !(b > 0))
        throw UsageError("--beta expects a positive number or 'inf', got '" + s + "'");
    return b;
}

inline ModelVariant resolve_variant(const Options& o)
{
    ModelVariant v;
    try
    {
        v = ModelVariant::parse(o.model);
    }
    catch (const std::invalid_argument& e)
    {
        throw UsageError(e.what());
    }
    if (o.degree_correction == "on")
        v.degree_corrected = true;
    else if (o.degree_correction == "off")
        v.degree_corrected = false;
    return v;
}

inline ChainConfig chain_config(const Options& o)
{
    ChainConfig cfg;
    cfg.seed = o.seed;
    cfg.sweeps = o.sweeps;
    cfg.burn_in = o.burn_in;
    cfg.thinning = o.thin;
    cfg.restarts = o.restarts;
    cfg.explore_sweeps = o.explore_sweeps;
    cfg.explore_beta = parse_beta(o.beta);
    cfg.beta = cfg.explore_beta;
    cfg.patience = o.patience;
    cfg.threads = o.threads;
    cfg.q_cap = o.q_cap;
    try
    {
        cfg.validate();
    }
    catch (const std::invalid_argument& e)
    {
        throw UsageError(e.what());
    }
    return cfg;
}

inline LoadedGraph read_graph(const Options& o)
{
    std::ifstream in(o.graph);
    if (!in)
        throw std::runtime_error("cannot read '" + o.graph + "'");
    return load_edge_list(in, o.integer_ids ? IdPolicy::integers : IdPolicy::tokens);
}

inline json input_digest(const Options& o, const DirectedMultigraph& g)
{
    return {{"path", o.graph}, {"nodes", g.num_nodes()}, {"edges", g.num_edges()}};
}

inline json breakdown_json(const DLBreakdown& d)
{
    return {{"likelihood", d.likelihood},
            {"affinity", d.affinity},
            {"degree", d.degree},
            {"partition", d.partition},
            {"total", d.total}};
}

inline json fit_json(const VariantFit& f, const LoadedGraph& lg)
{
    const auto& p = f.partition;
    json groups = json::array();
    std::vector<std::int64_t> sizes(p.num_groups(), 0);
    for (auto r : p.labels)
        sizes[std::size_t(r)]++;
    for (std::size_t r = 0; r < p.num_groups(); ++r)
        groups.push_back({{"rank", r}, {"size", sizes[r]}});
    json nodes = json::array();
    for (std::size_t i = 0; i < p.labels.size(); ++i)
        nodes.push_back({{"id", lg.ids[i]}, {"group", p.labels[i]}, {"rank", p.labels[i]}});
    json align = {{"upstream", f.upstream},
                  {"downstream", f.downstream},
                  {"lateral", f.lateral},
                  {"delta", f.upstream - f.downstream}};
    if (f.upstream_fraction)
        align["upstream_fraction"] = *f.upstream_fraction;
    else
        align["upstream_fraction"] = nullptr;

    // per-pair alignment, lower rank first
    json pairs = json::array();
    BlockState s(lg.graph, p);
    auto stats = alignment_stats(s);
    for (std::size_t hi = 0; hi < stats.pair_delta.size(); ++hi)
        for (std::size_t lo = 0; lo < hi; ++lo)
            if (s.sym_affinity(group_t(hi), group_t(lo)) > 0)
                pairs.push_back({{"lower", lo},
                                 {"upper", hi},
                                 {"edges", s.sym_affinity(group_t(hi), group_t(lo))},
                                 {"delta", stats.pair_delta[hi][lo]}});
    align["pairs"] = pairs;

    return {{"model", f.variant.name()},
            {"description_length", breakdown_json(f.description_length)},
            {"num_groups", p.num_groups()},
            {"groups", groups},
            {"alignment", align},
            {"partition", nodes}};
}

inline json schedule_json(const ChainConfig& cfg)
{
    json j = {{"restarts", cfg.restarts},
              {"sweeps", cfg.sweeps},
              {"explore_sweeps", cfg.explore_sweeps},
              {"patience", cfg.patience},
              {"q_cap", cfg.q_cap}};
    if (cfg.explore_sweeps > 0)
        j["explore_beta"] = cfg.explore_beta;
    return j;
}

inline void write_tsv(std::ostream& out, const VariantFit& f, const LoadedGraph& lg)
{
    out << "node_id\tgroup\trank\n";
    for (std::size_t i = 0; i < f.partition.labels.size(); ++i)
        out << lg.ids[i] << '\t' << f.partition.labels[i] << '\t' << f.partition.labels[i]
            << '\n';
}

class Emitter
{
public:
    Emitter(const Options& o, std::ostream& out) : _out(&out)
    {
        if (!o.output.empty())
        {
            _file.open(o.output);
            if (!_file)
                throw std::runtime_error("cannot write '" + o.output + "'");
            _out = &_file;
        }
    }
    std::ostream& stream() { return *_out; }
    void json_out(const json& j) { *_out << j.dump(2) << '\n'; }

private:
    std::ofstream _file;
    std::ostream* _out;
};

using Clock = std::chrono::steady_clock;

inline void add_timing(json& j, const Options& o, Clock::time_point t0)
{
    if (o.timing)
        j["wall_clock_seconds"] = std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

inline int cmd_fit(const Options& o, std::ostream& out)
{
    auto t0 = Clock::now();
    auto v = resolve_variant(o);
    auto cfg = chain_config(o);
    auto lg = read_graph(o);
    DescriptionLength dl(lg.graph, v, cfg.q_cap);
    auto map = anneal_map(lg.graph, dl, cfg);
    auto fit = make_fit(lg.graph, v, map.partition, dl);

    Emitter em(o, out);
    if (o.format == "tsv")
    {
        write_tsv(em.stream(), fit, lg);
        return 0;
    }
    json j = {{"command", "fit"}, {"input", input_digest(o, lg.graph)}, {"seed", o.seed},
              {"schedule", schedule_json(cfg)}};
    json body = fit_json(fit, lg);
    for (auto& [k, val] : body.items())
        j[k] = val;
    j["restart_description_lengths"] = map.restart_sigmas;
    add_timing(j, o, t0);
    em.json_out(j);
    return 0;
}

inline int cmd_compare(const Options& o, std::ostream& out)
{
    auto t0 = Clock::now();
    auto cfg = chain_config(o);
    auto lg = read_graph(o);
    auto variants = ModelVariant::all();
    auto mc = model_select(lg.graph, variants, cfg);

    Emitter em(o, out);
    if (o.format == "tsv")
    {
        write_tsv(em.stream(), mc.fits[mc.best], lg);
        return 0;
    }
    json fits = json::array();
    for (const auto& f : mc.fits)
        fits.push_back(fit_json(f, lg));
    json names = json::array();
    for (const auto& f : mc.fits)
        names.push_back(f.variant.name());
    json j = {{"command", "compare"},
              {"input", input_digest(o, lg.graph)},
              {"seed", o.seed},
              {"schedule", schedule_json(cfg)},
              {"models", names},
              {"best", mc.fits[mc.best].variant.name()},
              {"sigma_difference", mc.sigma_diff},
              {"posterior_odds", mc.odds},
              {"fits", fits}};
    add_timing(j, o, t0);
    em.json_out(j);
    return 0;
}

inline int cmd_marginals(const Options& o, std::ostream& out)
{
    auto t0 = Clock::now();
    auto v = resolve_variant(o);
    auto cfg = chain_config(o);
    if (cfg.beta != 1.0)
        throw UsageError("marginals sample the posterior and require --beta 1");
    if (o.format != "json")
        throw UsageError("marginals only support --format json");
    auto lg = read_graph(o);
    DescriptionLength dl(lg.graph, v, cfg.q_cap);
    auto m = collect_marginals(lg.graph, dl, cfg);
    auto pi = m.distribution();
    auto mean = mean_rank(m);
    json nodes = json::array();
    for (std::size_t i = 0; i < pi.size(); ++i)
        nodes.push_back({{"id", lg.ids[i]}, {"distribution", pi[i]}, {"mean_rank", mean[i]}});
    json j = {{"command", "marginals"},
              {"input", input_digest(o, lg.graph)},
              {"model", v.name()},
              {"seed", o.seed},
              {"schedule",
               {{"sweeps", cfg.sweeps}, {"burn_in", cfg.burn_in}, {"thinning", cfg.thinning}}},
              {"samples", m.samples},
              {"nodes", nodes}};
    add_timing(j, o, t0);
    Emitter(o, out).json_out(j);
    return 0;
}

inline GeneratorSpec read_planted(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read '" + path + "'");
    json j = json::parse(in);
    GeneratorSpec spec;
    spec.labels = j.at("labels").get<std::vector<group_t>>();
    spec.affinities = j.at("affinities").get<AffinityMatrix>();
    if (j.contains("out_degrees"))
    {
        spec.degrees.out_degrees = j.at("out_degrees").get<std::vector<std::int64_t>>();
        spec.degrees.in_degrees = j.at("in_degrees").get<std::vector<std::int64_t>>();
    }
    return spec;
}

inline int cmd_generate(const Options& o, std::ostream& out)
{
    if (o.imbalanced.empty() == o.planted.empty())
        throw UsageError("generate needs exactly one of --imbalanced N k or --planted FILE");
    Rng rng = make_rng(o.seed, 0);
    std::optional<DirectedMultigraph> g;
    if (!o.imbalanced.empty())
    {
        auto N = o.imbalanced[0], k = o.imbalanced[1];
        if (N < 2 || k < 1)
            throw UsageError("--imbalanced needs N >= 2 and k >= 1");
        if ((N * k) % 2 != 0)
            throw UsageError("--imbalanced needs N * k to be even");
        g = sample_imbalanced_graph(std::size_t(N), k, rng);
    }
    else
    {
        g = sample_microcanonical(read_planted(o.planted), rng);
    }
    if (o.perturb_edges > 0 || o.perturb_nodes > 0)
    {
        if (o.perturb_nodes < 2 || o.perturb_nodes > g->num_nodes())
            throw UsageError("--perturb-nodes must lie in [2, N]");
        if (o.perturb_edges < 0)
            throw UsageError("--perturb-edges must be non-negative");
        g = add_upstream_perturbation(*g, o.perturb_nodes, o.perturb_edges, rng);
    }
    if (o.format == "tsv")
        throw UsageError("generate writes an edge list; --format tsv is not supported");
    Emitter em(o, out);
    write_edge_list(em.stream(), *g);
    return 0;
}

inline int cmd_rank(const Options& o, std::ostream& out)
{
    auto lg = read_graph(o);
    const std::size_t N = lg.graph.num_nodes();
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < N; ++i)
        index[lg.ids[i]] = i;

    auto read_json = [](const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot read '" + path + "'");
        return json::parse(in);
    };

    std::vector<double> rank(N, std::numeric_limits<double>::quiet_NaN());
    std::string source;
    if (o.mean_rank)
    {
        if (o.marginals_file.empty())
            throw UsageError("--mean-rank needs --marginals FILE");
        const json marg = read_json(o.marginals_file);
        for (const auto& n : marg.at("nodes"))
            rank.at(index.at(n.at("id").get<std::string>())) = n.at("mean_rank").get<double>();
        source = "mean";
    }
    else
    {
        if (o.fit_file.empty())
            throw UsageError("rank needs --fit FILE (or --mean-rank with --marginals FILE)");
        auto fit = read_json(o.fit_file);
        const json* part = nullptr;
        if (fit.contains("fits")) // compare output: use the best model
        {
            for (const auto& f : fit.at("fits"))
                if (f.at("model") == fit.at("best"))
                    part = &f.at("partition");
        }
        else
            part = &fit.at("partition");
        if (!part)
            throw std::runtime_error("fit file has no partition");
        for (const auto& n : *part)
            rank.at(index.at(n.at("id").get<std::string>())) = n.at("rank").get<double>();
        source = "map";
    }
    for (double r : rank)
        if (std::isnan(r))
            throw std::runtime_error("rank file does not cover every node of the graph");

    auto d = degree_imbalance(lg.graph);
    json j = {{"command", "rank"}, {"input", input_digest(o, lg.graph)}, {"rank_source", source}};
    const bool want_tau = o.tau || !o.order;
    if (want_tau)
    {
        try
        {
            j["tau"] = kendall_tau(d, rank);
        }
        catch (const UndefinedCorrelation&)
        {
            j["tau"] = nullptr;
            j["tau_undefined"] = "zero variance in the ranks or the degree imbalance";
        }
    }
    if (o.order)
    {
        // ties in the rank are refined by d_i
        std::vector<double> key(rank);
        std::vector<std::size_t> idx(N);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
            return std::pair(key[a], d[a]) < std::pair(key[b], d[b]);
        });
        json ord = json::array();
        for (auto i : idx)
            ord.push_back({{"id", lg.ids[i]}, {"rank", rank[i]}, {"imbalance", d[i]}});
        j["lexicographic_order"] = ord;
    }
    Emitter(o, out).json_out(j);
    return 0;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Ordered and unordered degree-corrected stochastic block models for directed "
                 "multigraphs"};
    app.name("ordsbm");
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a key = value file (flags take precedence)");

    Options o;
    app.add_option("--model", o.model, "sbm, dc-sbm, osbm or dc-osbm")
        ->check(CLI::IsMember({"sbm", "dc-sbm", "osbm", "dc-osbm"}));
    app.add_option("--degree-correction", o.degree_correction, "Override degree correction")
        ->check(CLI::IsMember({"on", "off"}));
    app.add_option("--seed", o.seed, "RNG seed");
    app.add_option("--sweeps", o.sweeps, "Sweeps per restart (fit) or sampled sweeps (marginals)");
    app.add_option("--burn-in", o.burn_in, "Sweeps discarded before sampling");
    app.add_option("--thin", o.thin, "Record every n-th sweep");
    app.add_option("--restarts", o.restarts, "Independent MAP restarts");
    app.add_option("--beta", o.beta, "Inverse temperature of the sampling phase ('inf' allowed)");
    app.add_option("--explore-sweeps", o.explore_sweeps,
                   "Sweeps at --beta before the zero-temperature phase of a fit");
    app.add_option("--patience", o.patience,
                   "End a restart after this many sweeps without improvement (0 = never)");
    app.add_option("--threads", o.threads, "Worker threads for restarts");
    app.add_option("--q-cap", o.q_cap, "Largest edge count for the restricted-partition table");
    app.add_option("--output", o.output, "Write to this file instead of stdout");
    app.add_option("--format", o.format, "json or tsv")->check(CLI::IsMember({"json", "tsv"}));
    app.add_flag("--integer-ids", o.integer_ids, "Node ids are integer indices");
    app.add_flag("--timing", o.timing, "Include wall-clock time in the report");

    auto graph_arg = [&](CLI::App* sub) {
        sub->fallthrough();
        sub->add_option("graph", o.graph, "Edge list: 'source target [multiplicity]' per line")
            ->required();
        return sub;
    };
    auto* fit = graph_arg(app.add_subcommand("fit", "MAP fit of one model"));
    auto* compare = graph_arg(app.add_subcommand("compare", "Fit all four models and compare"));
    auto* marg = graph_arg(app.add_subcommand("marginals", "Posterior rank marginals"));
    auto* rank = graph_arg(app.add_subcommand("rank", "Rank correlation with degree imbalance"));
    rank->add_option("--fit", o.fit_file, "Output of fit or compare");
    rank->add_option("--marginals", o.marginals_file, "Output of marginals");
    rank->add_flag("--mean-rank", o.mean_rank, "Use mean ranks from --marginals");
    rank->add_flag("--tau", o.tau, "Kendall tau-b between d_i and rank (default)");
    rank->add_flag("--order", o.order, "Emit the (rank, d_i) lexicographic order");

    auto* gen = app.add_subcommand("generate", "Sample a synthetic network");
    gen->fallthrough();
    gen->add_option("--imbalanced", o.imbalanced, "Imbalanced-degree null model with N nodes of degree k")
        ->expected(2);
    gen->add_option("--planted", o.planted, "JSON with labels, affinities and optional degrees");
    gen->add_option("--perturb-nodes", o.perturb_nodes, "Add upstream edges among the first M nodes");
    gen->add_option("--perturb-edges", o.perturb_edges, "Number of upstream edges to add");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : kUsageError;
    }

    try
    {
        if (*fit)
            return cmd_fit(o, out);
        if (*compare)
            return cmd_compare(o, out);
        if (*marg)
            return cmd_marginals(o, out);
        if (*gen)
            return cmd_generate(o, out);
        if (*rank)
            return cmd_rank(o, out);
    }
    catch (const UsageError& e)
    {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }
    catch (const std::exception& e)
    {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kUsageError;
}

} // namespace ordsbm::cli
