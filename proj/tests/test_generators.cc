#include <gtest/gtest.h>

#include "ordsbm/block_state.hh"
#include "ordsbm/generators.hh"

using namespace ordsbm;

TEST(Microcanonical, DegreesAndAffinitiesAreExact)
{
    GeneratorSpec spec;
    spec.labels = {0, 0, 1, 1, 1};
    spec.affinities = {{2, 1}, {3, 4}};
    spec.degrees.out_degrees = {3, 2, 1, 2, 2};
    spec.degrees.in_degrees = {1, 2, 3, 2, 2};
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
        auto rng = make_rng(seed);
        auto g = sample_microcanonical(spec, rng);
        auto d = degrees(g);
        EXPECT_EQ(d.out_degrees, spec.degrees.out_degrees);
        EXPECT_EQ(d.in_degrees, spec.degrees.in_degrees);
        BlockState s(g, Partition::with_label_order(spec.labels));
        for (group_t r = 0; r < 2; ++r)
            for (group_t q = 0; q < 2; ++q)
                EXPECT_EQ(s.affinity(r, q), spec.affinities[std::size_t(r)][std::size_t(q)]);
    }
}

TEST(Microcanonical, WithoutDegreesOnlyAffinitiesAreFixed)
{
    GeneratorSpec spec;
    spec.labels = {0, 0, 0, 1, 1};
    spec.affinities = {{3, 0}, {5, 2}};
    auto rng = make_rng(1);
    auto g = sample_microcanonical(spec, rng);
    BlockState s(g, Partition::with_label_order(spec.labels));
    EXPECT_EQ(s.affinity(0, 0), 3);
    EXPECT_EQ(s.affinity(1, 0), 5);
    EXPECT_EQ(s.affinity(1, 1), 2);
    EXPECT_EQ(s.affinity(0, 1), 0);
}

TEST(Microcanonical, TwoNodeStubsAreUniform)
{
    // one group, one edge between two nodes with unit degrees either way
    GeneratorSpec spec;
    spec.labels = {0, 0};
    spec.affinities = {{1}};
    spec.degrees.out_degrees = {1, 0};
    spec.degrees.in_degrees = {0, 1};
    auto rng = make_rng(2);
    auto g = sample_microcanonical(spec, rng);
    EXPECT_EQ(g.multiplicity(1, 0), 1);

    // uniform stubs: a self-loop or either orientation
    GeneratorSpec free;
    free.labels = {0, 0};
    free.affinities = {{1}};
    int forward = 0;
    const int trials = 20000;
    for (int t = 0; t < trials; ++t)
    {
        auto h = sample_microcanonical(free, rng);
        forward += int(h.multiplicity(1, 0));
    }
    EXPECT_NEAR(double(forward) / trials, 0.25, 0.02);
}

TEST(Microcanonical, RejectsInconsistentInput)
{
    auto rng = make_rng(0);
    GeneratorSpec spec;
    spec.labels = {0, 1};
    spec.affinities = {{1, 0}, {0, 1}};
    spec.degrees.out_degrees = {2, 0};
    spec.degrees.in_degrees = {1, 1};
    EXPECT_THROW(sample_microcanonical(spec, rng), std::invalid_argument);
    spec.labels = {0, 2};
    EXPECT_THROW(sample_microcanonical(spec, rng), std::invalid_argument);
}

TEST(Imbalanced, TotalsAndBoundaries)
{
    auto rng = make_rng(3);
    const std::size_t N = 200;
    const std::int64_t k = 10;
    auto d = sample_imbalanced_degrees(N, k, rng);
    std::int64_t total_out = 0, total_in = 0;
    for (std::size_t i = 0; i < N; ++i)
    {
        EXPECT_EQ(d.out_degrees[i] + d.in_degrees[i], k);
        total_out += d.out_degrees[i];
        total_in += d.in_degrees[i];
    }
    EXPECT_EQ(total_out, total_in);
    // p = 1 for the first node and 0 for the last
    EXPECT_EQ(d.out_degrees.front(), k);
    EXPECT_EQ(d.out_degrees.back(), 0);
}

TEST(Imbalanced, MeanOutDegreeFollowsIndex)
{
    const std::size_t N = 11;
    const std::int64_t k = 8;
    std::vector<double> mean(N, 0);
    const int trials = 4000;
    auto rng = make_rng(4);
    for (int t = 0; t < trials; ++t)
    {
        auto d = sample_imbalanced_degrees(N, k, rng);
        for (std::size_t i = 0; i < N; ++i)
            mean[i] += double(d.out_degrees[i]) / trials;
    }
    for (std::size_t i = 0; i < N; ++i)
        EXPECT_NEAR(mean[i], double(k) * double(N - 1 - i) / double(N - 1), 0.25) << i;
}

TEST(Imbalanced, GraphHasTheDegrees)
{
    auto rng = make_rng(5);
    auto g = sample_imbalanced_graph(1000, 50, rng);
    EXPECT_EQ(g.num_edges(), 1000 * 50 / 2);
    for (node_t v = 0; v < 1000; ++v)
        EXPECT_EQ(g.out_degree(v) + g.in_degree(v), 50);
}

TEST(Imbalanced, RejectsInfeasibleSizes)
{
    auto rng = make_rng(0);
    EXPECT_THROW(sample_imbalanced_degrees(3, 3, rng), std::invalid_argument);
    EXPECT_THROW(sample_imbalanced_degrees(1, 2, rng), std::invalid_argument);
    EXPECT_THROW(sample_imbalanced_degrees(4, 0, rng), std::invalid_argument);
}

TEST(Perturbation, EdgesPointDownTheIndexOrder)
{
    auto rng = make_rng(6);
    auto g = sample_imbalanced_graph(100, 6, rng);
    auto h = add_upstream_perturbation(g, 15, 40, rng);
    EXPECT_EQ(h.num_edges(), g.num_edges() + 40);
    std::int64_t added = 0;
    for (node_t i = 0; i < 100; ++i)
        for (node_t j = 0; j < 100; ++j)
        {
            auto extra = h.multiplicity(i, j) - g.multiplicity(i, j);
            ASSERT_GE(extra, 0);
            if (extra > 0)
            {
                EXPECT_LT(i, 15);
                EXPECT_LT(j, 15);
                EXPECT_GT(j, i); // from the higher index to the lower one
                added += extra;
            }
        }
    EXPECT_EQ(added, 40);
    EXPECT_THROW(add_upstream_perturbation(g, 1, 1, rng), std::invalid_argument);
    EXPECT_THROW(add_upstream_perturbation(g, 101, 1, rng), std::invalid_argument);
}
