#include <benchmark/benchmark.h>

#include <cmath>
#include <cstddef>
#include <memory>
#include <random>
#include <vector>

#include "vsearch/flat_index.hpp"
#include "vsearch/hnsw_index.hpp"
#include "vsearch/ivf_index.hpp"
#include "vsearch/vector.hpp"

namespace {

using vsearch::NormalizedEmbedding;

constexpr std::size_t kDim = 64;
constexpr std::size_t kClusters = 100;
constexpr std::size_t kQueries = 256;
constexpr std::size_t kTopK = 10;

std::vector<NormalizedEmbedding> blobs(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double noise = 1.0 / std::sqrt(static_cast<double>(kDim));

    std::vector<std::vector<double>> centers(kClusters, std::vector<double>(kDim));
    for (auto& c : centers)
        for (auto& x : c) x = gauss(rng);

    std::uniform_int_distribution<std::size_t> pick(0, kClusters - 1);
    std::vector<NormalizedEmbedding> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = centers[pick(rng)];
        std::vector<double> v(kDim);
        double c_norm = 0.0;
        for (double x : c) c_norm += x * x;
        c_norm = std::sqrt(c_norm);
        for (std::size_t j = 0; j < kDim; ++j) v[j] = c[j] / c_norm + noise * gauss(rng);
        out.push_back(vsearch::normalize(vsearch::Embedding(std::move(v))));
    }
    return out;
}

struct Corpus {
    std::vector<NormalizedEmbedding> docs;
    std::vector<NormalizedEmbedding> queries;
};

const Corpus& corpus(std::size_t n) {
    static std::size_t cached_n = 0;
    static std::unique_ptr<Corpus> cached;
    if (!cached || cached_n != n) {
        cached = std::make_unique<Corpus>(Corpus{blobs(n, 7), blobs(kQueries, 8)});
        cached_n = n;
    }
    return *cached;
}

void BM_FlatSearch(benchmark::State& state) {
    const auto& data = corpus(static_cast<std::size_t>(state.range(0)));
    vsearch::FlatIndex index(kDim);
    for (std::size_t i = 0; i < data.docs.size(); ++i) index.add(i, data.docs[i]);
    index.freeze();

    std::size_t q = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(index.search(data.queries[q], kTopK));
        q = (q + 1) % data.queries.size();
    }
}
BENCHMARK(BM_FlatSearch)->Arg(1000)->Arg(10000);

void BM_IvfSearch(benchmark::State& state) {
    const auto& data = corpus(static_cast<std::size_t>(state.range(0)));
    const std::size_t nlist = vsearch::default_nlist(data.docs.size());
    vsearch::IvfIndex index(kDim, nlist);
    index.train(data.docs, 42);
    for (std::size_t i = 0; i < data.docs.size(); ++i) index.add(i, data.docs[i]);
    index.freeze();

    const vsearch::ProbeParams probe{static_cast<std::size_t>(state.range(1))};
    std::size_t q = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(index.search(data.queries[q], kTopK, probe));
        q = (q + 1) % data.queries.size();
    }
}
BENCHMARK(BM_IvfSearch)->Args({10000, 4})->Args({10000, 10})->Args({10000, 32});

void BM_HnswSearch(benchmark::State& state) {
    const auto& data = corpus(static_cast<std::size_t>(state.range(0)));
    auto index = vsearch::HnswIndex::init_index(data.docs.size(), kDim, 16, 200, 42);
    for (std::size_t i = 0; i < data.docs.size(); ++i) index.add(i, data.docs[i]);
    index.freeze();

    const vsearch::EfParams ef{static_cast<std::size_t>(state.range(1))};
    std::size_t q = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(index.search(data.queries[q], kTopK, ef));
        q = (q + 1) % data.queries.size();
    }
}
BENCHMARK(BM_HnswSearch)->Args({10000, 16})->Args({10000, 64})->Args({10000, 128});

void BM_HnswBuild(benchmark::State& state) {
    const auto& data = corpus(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto index = vsearch::HnswIndex::init_index(data.docs.size(), kDim, 16, 200, 42);
        for (std::size_t i = 0; i < data.docs.size(); ++i) index.add(i, data.docs[i]);
        benchmark::DoNotOptimize(index.size());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HnswBuild)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
