#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vsearch/document.hpp"
#include "vsearch/error.hpp"
#include "vsearch/flat_index.hpp"
#include "vsearch/hnsw_index.hpp"
#include "vsearch/ivf_index.hpp"

namespace vsearch {

enum class Backend { Flat, Ivf, Hnsw, Hybrid };

std::string_view to_string(Backend b) noexcept;
/// Accepts "flat", "ivf", "hnsw", "hybrid". Throws InvalidParam otherwise.
Backend parse_backend(std::string_view name);

/// Stage-one candidates per index in hybrid search are this multiple of k.
inline constexpr std::size_t kHybridCandidateMultiplier = 4;
inline constexpr std::size_t kDefaultEfSearch = 100;

struct SearchParams {
    /// Defaults to min(kDefaultNprobe, nlist).
    std::optional<std::size_t> nprobe;
    /// Defaults to the engine's ef_search, raised to k when smaller.
    std::optional<std::size_t> ef_search;
};

struct QuerySpec {
    std::vector<NormalizedEmbedding> vectors;
    std::size_t k = 10;
    double threshold = -1.0;
    Backend backend = Backend::Flat;
    SearchParams params;
    /// Final truncation of the merged list; defaults to k. A larger value
    /// exposes the raw deduplicated union.
    std::optional<std::size_t> result_limit;
};

struct QueryError {
    ErrorCode code;
    std::string message;
};

struct ResultSet {
    /// Unique doc ids, descending score then ascending doc id, all >= threshold.
    std::vector<SearchHit> hits;
    /// Wall-clock seconds spent in index search and merge.
    double query_time_s = 0.0;
    /// Parallel to hits when the engine holds document records (nullptr otherwise).
    std::vector<const DocumentRecord*> documents;
    /// Set by retrieve() when this query failed; hits are then empty.
    std::optional<QueryError> error;
};

struct IvfBuildOptions {
    std::size_t nlist = 0;  // 0 selects default_nlist(N)
    std::uint64_t seed = 42;
};

struct HnswBuildOptions {
    std::size_t M = 16;
    std::size_t ef_construction = 200;
    std::uint64_t seed = 42;
};

struct EngineOptions {
    bool flat = true;
    std::optional<IvfBuildOptions> ivf;
    std::optional<HnswBuildOptions> hnsw;
    std::size_t ef_search = kDefaultEfSearch;
};

/// Query orchestration over a fixed corpus. Vector i of the build input gets
/// doc id i. Immutable once constructed; all query methods are const and
/// safe to call concurrently.
class SearchEngine {
public:
    static SearchEngine build(std::span<const NormalizedEmbedding> vectors, const EngineOptions& options,
                              std::vector<DocumentRecord> documents = {});

    /// Assembles an engine from frozen indexes, e.g. loaded snapshots.
    SearchEngine(std::size_t dim, std::optional<FlatIndex> flat, std::optional<IvfIndex> ivf,
                 std::optional<HnswIndex> hnsw, std::vector<DocumentRecord> documents = {},
                 std::size_t ef_search = kDefaultEfSearch);

    /// Raw top-k from one backend, no threshold.
    [[nodiscard]] std::vector<SearchHit> single_vector_search(const NormalizedEmbedding& q, std::size_t k,
                                                              Backend backend,
                                                              const SearchParams& params = {}) const;

    /// Searches each query vector, keeps each doc's best score, applies the
    /// threshold, sorts and truncates. Throws EmptyQuery, InvalidParam, DimMismatch.
    [[nodiscard]] ResultSet multi_vector_search(const QuerySpec& spec) const;

    /// multi_vector_search with the hybrid backend: candidates from the
    /// inverted-file (or flat) index and the graph, re-scored exactly.
    /// Throws BackendMissing when either side is absent.
    [[nodiscard]] ResultSet hybrid_search(QuerySpec spec) const;

    /// Runs a batch; results are in input order and joined with document
    /// records. A failing query records its error and the batch continues.
    [[nodiscard]] std::vector<ResultSet> retrieve(std::span<const QuerySpec> queries,
                                                  std::size_t workers = 1) const;

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] bool has(Backend b) const noexcept;
    [[nodiscard]] const std::optional<FlatIndex>& flat() const noexcept { return flat_; }
    [[nodiscard]] const std::optional<IvfIndex>& ivf() const noexcept { return ivf_; }
    [[nodiscard]] const std::optional<HnswIndex>& hnsw() const noexcept { return hnsw_; }
    [[nodiscard]] std::span<const DocumentRecord> documents() const noexcept { return documents_; }

private:
    std::vector<SearchHit> hybrid_single(const NormalizedEmbedding& q, std::size_t k,
                                         const SearchParams& params) const;
    std::optional<std::span<const double>> stored_vector(DocId id) const;
    std::size_t resolve_nprobe(const SearchParams& params) const;
    std::size_t resolve_ef(const SearchParams& params, std::size_t k) const;
    void join_documents(ResultSet& rs) const;

    std::size_t dim_;
    std::size_t size_ = 0;
    std::optional<FlatIndex> flat_;
    std::optional<IvfIndex> ivf_;
    std::optional<HnswIndex> hnsw_;
    std::vector<DocumentRecord> documents_;
    std::size_t ef_search_;
};

}  // namespace vsearch
