#include "vsearch/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <limits>
#include <thread>
#include <unordered_map>

namespace vsearch {

std::string_view to_string(Backend b) noexcept {
    switch (b) {
        case Backend::Flat: return "flat";
        case Backend::Ivf: return "ivf";
        case Backend::Hnsw: return "hnsw";
        case Backend::Hybrid: return "hybrid";
    }
    return "unknown";
}

Backend parse_backend(std::string_view name) {
    if (name == "flat") return Backend::Flat;
    if (name == "ivf") return Backend::Ivf;
    if (name == "hnsw") return Backend::Hnsw;
    if (name == "hybrid") return Backend::Hybrid;
    fail(ErrorCode::InvalidParam, "unknown backend '" + std::string(name) + "'");
}

SearchEngine SearchEngine::build(std::span<const NormalizedEmbedding> vectors, const EngineOptions& options,
                                 std::vector<DocumentRecord> documents) {
    if (vectors.empty()) fail(ErrorCode::Empty, "cannot build an engine over an empty corpus");
    const std::size_t dim = vectors.front().dim();

    std::optional<FlatIndex> flat;
    if (options.flat) {
        flat.emplace(dim);
        for (std::size_t i = 0; i < vectors.size(); ++i) flat->add(i, vectors[i]);
        flat->freeze();
    }

    std::optional<IvfIndex> ivf;
    if (options.ivf) {
        const std::size_t nlist = options.ivf->nlist ? options.ivf->nlist : default_nlist(vectors.size());
        ivf.emplace(dim, nlist);
        ivf->train(vectors, options.ivf->seed);
        for (std::size_t i = 0; i < vectors.size(); ++i) ivf->add(i, vectors[i]);
        ivf->freeze();
    }

    std::optional<HnswIndex> hnsw;
    if (options.hnsw) {
        hnsw.emplace(HnswIndex::init_index(vectors.size(), dim, options.hnsw->M,
                                           options.hnsw->ef_construction, options.hnsw->seed));
        for (std::size_t i = 0; i < vectors.size(); ++i) hnsw->add(i, vectors[i]);
        hnsw->freeze();
    }

    return SearchEngine(dim, std::move(flat), std::move(ivf), std::move(hnsw), std::move(documents),
                        options.ef_search);
}

SearchEngine::SearchEngine(std::size_t dim, std::optional<FlatIndex> flat, std::optional<IvfIndex> ivf,
                           std::optional<HnswIndex> hnsw, std::vector<DocumentRecord> documents,
                           std::size_t ef_search)
    : dim_(dim),
      flat_(std::move(flat)),
      ivf_(std::move(ivf)),
      hnsw_(std::move(hnsw)),
      documents_(std::move(documents)),
      ef_search_(ef_search) {
    if (ef_search_ == 0) fail(ErrorCode::InvalidParam, "ef_search must be positive");
    std::optional<std::size_t> size;
    auto adopt = [&](const auto& index, std::string_view name) {
        if (!index) return;
        if (!index->frozen()) fail(ErrorCode::NotFrozen, std::string(name) + " index is not frozen");
        if (index->dim() != dim_) fail(ErrorCode::DimMismatch, std::string(name) + " index dim differs from engine");
        if (size && *size != index->size()) {
            fail(ErrorCode::InvalidParam, "indexes cover corpora of different sizes");
        }
        size = index->size();
    };
    adopt(flat_, "flat");
    adopt(ivf_, "ivf");
    adopt(hnsw_, "hnsw");
    size_ = size.value_or(0);
    if (!documents_.empty() && documents_.size() != size_) {
        fail(ErrorCode::InvalidParam, "document count does not match index size");
    }
}

bool SearchEngine::has(Backend b) const noexcept {
    switch (b) {
        case Backend::Flat: return flat_.has_value();
        case Backend::Ivf: return ivf_.has_value();
        case Backend::Hnsw: return hnsw_.has_value();
        case Backend::Hybrid: return hnsw_.has_value() && (ivf_.has_value() || flat_.has_value());
    }
    return false;
}

std::size_t SearchEngine::resolve_nprobe(const SearchParams& params) const {
    return params.nprobe.value_or(std::min(kDefaultNprobe, ivf_->nlist()));
}

std::size_t SearchEngine::resolve_ef(const SearchParams& params, std::size_t k) const {
    if (params.ef_search) return *params.ef_search;
    return std::max(ef_search_, k);
}

std::optional<std::span<const double>> SearchEngine::stored_vector(DocId id) const {
    if (flat_) return flat_->find(id);
    if (ivf_) return ivf_->find(id);
    if (hnsw_) return hnsw_->find(id);
    return std::nullopt;
}

std::vector<SearchHit> SearchEngine::single_vector_search(const NormalizedEmbedding& q, std::size_t k,
                                                          Backend backend, const SearchParams& params) const {
    if (!has(backend)) {
        fail(ErrorCode::BackendMissing, "engine has no " + std::string(to_string(backend)) + " index");
    }
    switch (backend) {
        case Backend::Flat: return flat_->search(q, k);
        case Backend::Ivf: return ivf_->search(q, k, ProbeParams{resolve_nprobe(params)});
        case Backend::Hnsw: return hnsw_->search(q, k, EfParams{resolve_ef(params, k)});
        case Backend::Hybrid: return hybrid_single(q, k, params);
    }
    return {};
}

std::vector<SearchHit> SearchEngine::hybrid_single(const NormalizedEmbedding& q, std::size_t k,
                                                   const SearchParams& params) const {
    const std::size_t wide = k * kHybridCandidateMultiplier;
    std::vector<SearchHit> broad = ivf_ ? ivf_->search(q, wide, ProbeParams{resolve_nprobe(params)})
                                        : flat_->search(q, wide);
    const std::size_t ef = std::max(resolve_ef(params, k), wide);
    std::vector<SearchHit> graph = hnsw_->search(q, wide, EfParams{ef});

    std::vector<DocId> ids;
    ids.reserve(broad.size() + graph.size());
    for (const auto& h : broad) ids.push_back(h.doc_id);
    for (const auto& h : graph) ids.push_back(h.doc_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    std::vector<detail::ScoredCandidate> rescored;
    rescored.reserve(ids.size());
    for (DocId id : ids) {
        const auto v = stored_vector(id);
        if (!v) fail(ErrorCode::InvalidParam, "hybrid candidate " + std::to_string(id) + " has no stored vector");
        rescored.push_back({cosine_similarity(q.values(), *v), id, id});
    }
    return detail::take_top_k(rescored, k);
}

ResultSet SearchEngine::multi_vector_search(const QuerySpec& spec) const {
    if (spec.vectors.empty()) fail(ErrorCode::EmptyQuery, "query has no vectors");
    if (spec.k == 0) fail(ErrorCode::InvalidParam, "k must be at least 1");
    if (!(spec.threshold >= -1.0 && spec.threshold <= 1.0)) {
        fail(ErrorCode::InvalidParam, "threshold must lie in [-1, 1]");
    }
    for (const auto& v : spec.vectors) {
        if (v.dim() != dim_) {
            fail(ErrorCode::DimMismatch, "query vector dim " + std::to_string(v.dim()) +
                                             " vs engine dim " + std::to_string(dim_));
        }
    }

    const auto start = std::chrono::steady_clock::now();
    std::unordered_map<DocId, double> best;
    for (const auto& q : spec.vectors) {
        for (const auto& hit : single_vector_search(q, spec.k, spec.backend, spec.params)) {
            auto [it, inserted] = best.try_emplace(hit.doc_id, hit.score);
            if (!inserted) it->second = std::max(it->second, hit.score);
        }
    }
    std::vector<detail::ScoredCandidate> merged;
    merged.reserve(best.size());
    for (const auto& [id, score] : best) {
        if (score >= spec.threshold) merged.push_back({score, id, id});
    }
    ResultSet rs;
    rs.hits = detail::take_top_k(merged, spec.result_limit.value_or(spec.k));
    rs.query_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rs;
}

ResultSet SearchEngine::hybrid_search(QuerySpec spec) const {
    spec.backend = Backend::Hybrid;
    return multi_vector_search(spec);
}

void SearchEngine::join_documents(ResultSet& rs) const {
    rs.documents.clear();
    rs.documents.reserve(rs.hits.size());
    for (const auto& h : rs.hits) {
        rs.documents.push_back(h.doc_id < documents_.size() ? &documents_[h.doc_id] : nullptr);
    }
}

std::vector<ResultSet> SearchEngine::retrieve(std::span<const QuerySpec> queries, std::size_t workers) const {
    std::vector<ResultSet> results(queries.size());
    auto run_one = [&](std::size_t i) {
        try {
            results[i] = multi_vector_search(queries[i]);
            join_documents(results[i]);
        } catch (const Error& e) {
            results[i] = ResultSet{};
            results[i].error = QueryError{e.code(), e.what()};
        }
    };

    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, queries.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < queries.size(); ++i) run_one(i);
        return results;
    }
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < queries.size(); i = next++) run_one(i);
            });
        }
    }
    return results;
}

}  // namespace vsearch
