#include <deque>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "test_util.hpp"
#include "vsearch/flat_index.hpp"
#include "vsearch/hnsw_index.hpp"

namespace vsearch {
namespace {

using testing::ids_of;

HnswIndex build_hnsw(const std::vector<NormalizedEmbedding>& vectors, std::size_t M = 16,
                     std::size_t efc = 200, std::uint64_t seed = 42) {
    auto index = HnswIndex::init_index(vectors.size(), vectors.front().dim(), M, efc, seed);
    for (std::size_t i = 0; i < vectors.size(); ++i) index.add(i, vectors[i]);
    index.freeze();
    return index;
}

FlatIndex build_flat(const std::vector<NormalizedEmbedding>& vectors) {
    FlatIndex index(vectors.front().dim());
    for (std::size_t i = 0; i < vectors.size(); ++i) index.add(i, vectors[i]);
    index.freeze();
    return index;
}

std::size_t reachable_at_layer0(const HnswIndex& g) {
    if (!g.entry_point()) return 0;
    std::vector<bool> seen(g.size(), false);
    std::deque<HnswIndex::Slot> frontier{*g.entry_point()};
    seen[*g.entry_point()] = true;
    std::size_t count = 1;
    while (!frontier.empty()) {
        const auto s = frontier.front();
        frontier.pop_front();
        for (auto n : g.neighbors(s, 0)) {
            if (!seen[n]) {
                seen[n] = true;
                ++count;
                frontier.push_back(n);
            }
        }
    }
    return count;
}

double mean_recall(const HnswIndex& g, const FlatIndex& flat, const std::vector<NormalizedEmbedding>& queries,
                   std::size_t ef) {
    double sum = 0.0;
    for (const auto& q : queries) {
        sum += testing::overlap_at_k(ids_of(g.search(q, 10, {ef})), ids_of(flat.search(q, 10)), 10);
    }
    return sum / static_cast<double>(queries.size());
}

TEST(HnswIndex, InitIndexIsEmpty) {
    const auto g = HnswIndex::init_index(1000, 32, 16, 200, 42);
    EXPECT_EQ(g.size(), 0u);
    EXPECT_FALSE(g.entry_point().has_value());
    EXPECT_EQ(g.params().capacity, 1000u);
    EXPECT_EQ(g.max_neighbors(0), 32u);
    EXPECT_EQ(g.max_neighbors(1), 16u);
}

TEST(HnswIndex, InitIndexRejectsBadParams) {
    EXPECT_VSEARCH_ERROR(HnswIndex::init_index(10, 4, 1, 200, 42), ErrorCode::InvalidParam);
    EXPECT_VSEARCH_ERROR(HnswIndex::init_index(0, 4, 16, 200, 42), ErrorCode::InvalidParam);
    EXPECT_VSEARCH_ERROR(HnswIndex::init_index(10, 0, 16, 200, 42), ErrorCode::InvalidParam);
    EXPECT_VSEARCH_ERROR(HnswIndex::init_index(10, 4, 16, 0, 42), ErrorCode::InvalidParam);
}

TEST(HnswIndex, SingleItemIsEntryWithoutEdges) {
    auto g = HnswIndex::init_index(4, 3, 4, 10, 1);
    g.add(9, normalize(Embedding({1.0, 0.0, 0.0})));
    ASSERT_TRUE(g.entry_point().has_value());
    EXPECT_EQ(g.id_at(*g.entry_point()), 9u);
    EXPECT_EQ(g.edge_count(), 0u);
}

TEST(HnswIndex, TwoItemsLinkMutuallyOnSharedLayers) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto g = HnswIndex::init_index(2, 3, 2, 10, seed);
        g.add(0, normalize(Embedding({1.0, 0.0, 0.0})));
        g.add(1, normalize(Embedding({0.0, 1.0, 0.0})));
        const int shared = std::min(g.level_of(0), g.level_of(1));
        for (int layer = 0; layer <= shared; ++layer) {
            EXPECT_EQ(std::vector<HnswIndex::Slot>(g.neighbors(0, layer).begin(), g.neighbors(0, layer).end()),
                      std::vector<HnswIndex::Slot>{1});
            EXPECT_EQ(std::vector<HnswIndex::Slot>(g.neighbors(1, layer).begin(), g.neighbors(1, layer).end()),
                      std::vector<HnswIndex::Slot>{0});
        }
    }
}

TEST(HnswIndex, Layer0ConnectedOnClusteredData) {
    const auto vectors = testing::clustered(200, 16, 5, 0.4, 3).normalized();
    const auto g = build_hnsw(vectors);
    EXPECT_EQ(reachable_at_layer0(g), 200u);
}

TEST(HnswIndex, Layer0ConnectedWithManyTightClusters) {
    const auto vectors = testing::clustered(2000, 32, 100, 0.5, 4).normalized();
    const auto g = build_hnsw(vectors, 8, 100);
    EXPECT_EQ(reachable_at_layer0(g), vectors.size());
}

TEST(HnswIndex, StructuralInvariants) {
    const auto vectors = testing::random_unit(1500, 16, 5).normalized();
    for (std::size_t M : {2, 4, 12}) {
        const auto g = build_hnsw(vectors, M, 40);
        std::size_t edges = 0;
        for (HnswIndex::Slot s = 0; s < g.size(); ++s) {
            const int top = g.level_of(s);
            EXPECT_GE(top, 0);
            EXPECT_LE(top, g.max_level());
            for (int layer = 0; layer <= top; ++layer) {
                const auto nbrs = g.neighbors(s, layer);
                EXPECT_LE(nbrs.size(), g.max_neighbors(layer));
                edges += nbrs.size();
                for (auto n : nbrs) {
                    ASSERT_LT(n, g.size());
                    EXPECT_NE(n, s);
                    EXPECT_GE(g.level_of(n), layer) << "edge to a node absent from layer " << layer;
                }
            }
        }
        EXPECT_EQ(edges, g.edge_count());
        EXPECT_EQ(g.level_of(*g.entry_point()), g.max_level());
        EXPECT_EQ(reachable_at_layer0(g), g.size()) << "M=" << M;
    }
}

TEST(HnswIndex, LevelDistributionIsGeometric) {
    const auto vectors = testing::random_unit(8000, 4, 6).normalized();
    const auto g = build_hnsw(vectors, 16, 16);
    std::size_t above = 0;
    for (HnswIndex::Slot s = 0; s < g.size(); ++s) above += g.level_of(s) >= 1;
    EXPECT_NEAR(static_cast<double>(above) / 8000.0, 1.0 / 16.0, 0.015);
}

TEST(HnswIndex, SameSeedSameStructure) {
    const auto vectors = testing::clustered(500, 8, 4, 0.6, 7).normalized();
    const auto a = build_hnsw(vectors, 8, 50, 99);
    const auto b = build_hnsw(vectors, 8, 50, 99);
    for (HnswIndex::Slot s = 0; s < a.size(); ++s) {
        ASSERT_EQ(a.level_of(s), b.level_of(s));
        for (int layer = 0; layer <= a.level_of(s); ++layer) {
            EXPECT_TRUE(std::ranges::equal(a.neighbors(s, layer), b.neighbors(s, layer)));
        }
    }
    const auto q = testing::random_unit(1, 8, 8).normalized()[0];
    EXPECT_EQ(a.search(q, 10, {40}), b.search(q, 10, {40}));
}

TEST(HnswIndex, BatchValidationLeavesIndexUnchanged) {
    const auto vectors = testing::random_unit(5, 4, 9).normalized();
    auto g = HnswIndex::init_index(3, 4, 4, 20, 1);
    g.add(0, vectors[0]);

    std::vector<std::pair<DocId, NormalizedEmbedding>> too_many{{1, vectors[1]}, {2, vectors[2]}, {3, vectors[3]}};
    EXPECT_VSEARCH_ERROR(g.add_items(too_many), ErrorCode::CapacityExceeded);
    std::vector<std::pair<DocId, NormalizedEmbedding>> dup{{1, vectors[1]}, {1, vectors[2]}};
    EXPECT_VSEARCH_ERROR(g.add_items(dup), ErrorCode::DuplicateId);
    std::vector<std::pair<DocId, NormalizedEmbedding>> existing{{0, vectors[1]}};
    EXPECT_VSEARCH_ERROR(g.add_items(existing), ErrorCode::DuplicateId);
    std::vector<std::pair<DocId, NormalizedEmbedding>> wrong_dim{{1, vectors[1]},
                                                                 {2, normalize(Embedding({1.0, 0.0}))}};
    EXPECT_VSEARCH_ERROR(g.add_items(wrong_dim), ErrorCode::DimMismatch);
    EXPECT_EQ(g.size(), 1u);

    std::vector<std::pair<DocId, NormalizedEmbedding>> ok{{1, vectors[1]}, {2, vectors[2]}};
    g.add_items(ok);
    EXPECT_EQ(g.size(), 3u);
    g.freeze();
    EXPECT_VSEARCH_ERROR(g.add(4, vectors[4]), ErrorCode::IndexFrozen);
}

TEST(HnswIndex, SearchPreconditions) {
    auto g = HnswIndex::init_index(4, 2, 4, 10, 1);
    const auto q = normalize(Embedding({1.0, 0.0}));
    EXPECT_VSEARCH_ERROR((void)g.search(q, 1), ErrorCode::NotFrozen);
    g.freeze();
    EXPECT_TRUE(g.search(q, 3, {10}).empty());
    EXPECT_VSEARCH_ERROR((void)g.search(q, 10, {5}), ErrorCode::InvalidParam);
    EXPECT_VSEARCH_ERROR((void)g.search(normalize(Embedding({1.0, 0.0, 0.0})), 1, {10}), ErrorCode::DimMismatch);
}

TEST(HnswIndex, SelfRetrieval) {
    const auto vectors = testing::clustered(1000, 32, 10, 1.0, 10).normalized();
    const std::size_t M = 16;
    const auto g = build_hnsw(vectors, M);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        const auto hits = g.search(vectors[i], 1, {4 * M});
        ASSERT_EQ(hits.size(), 1u);
        EXPECT_EQ(hits[0].doc_id, i);
        EXPECT_NEAR(hits[0].score, 1.0, 1e-6);
    }
}

TEST(HnswIndex, ExhaustiveEfIsExactOnSmallGraph) {
    const auto vectors = testing::random_unit(200, 16, 11).normalized();
    const auto g = build_hnsw(vectors);
    const auto flat = build_flat(vectors);
    const auto queries = testing::random_unit(100, 16, 12).normalized();
    EXPECT_EQ(mean_recall(g, flat, queries, 200), 1.0);
}

TEST(HnswIndex, OrderingMatchesFlatRules) {
    const auto vectors = testing::random_unit(300, 8, 13).normalized();
    const auto g = build_hnsw(vectors);
    const auto flat = build_flat(vectors);
    const auto q = testing::random_unit(1, 8, 14).normalized()[0];
    const auto hits = g.search(q, 20, {300});
    EXPECT_EQ(hits, flat.search(q, 20));
}

TEST(HnswIndex, RecallNonDecreasingInEf) {
    const auto vectors = testing::clustered(3000, 32, 30, 1.2, 15).normalized();
    const auto g = build_hnsw(vectors, 8, 64);
    const auto flat = build_flat(vectors);
    const auto queries = testing::clustered_queries(100, 32, 30, 1.2, 15, 16).normalized();
    double previous = 0.0;
    for (std::size_t ef : {10, 16, 32, 64, 128}) {
        const double r = mean_recall(g, flat, queries, ef);
        EXPECT_GE(r, previous - 0.01) << "ef " << ef;
        previous = r;
    }
    EXPECT_GE(previous, 0.95);
}

}  // namespace
}  // namespace vsearch
