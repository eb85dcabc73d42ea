#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace vsearch {

using DocId = std::uint64_t;

/// One ranked result. Within a list, scores are non-increasing and ranks run 0, 1, 2, ...
struct SearchHit {
    DocId doc_id = 0;
    double score = 0.0;
    std::size_t rank = 0;

    friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

namespace detail {

/// Candidate before ranking. `order` is the tie-breaker (insertion order inside
/// an index, doc id inside the engine); lower wins on equal score.
struct ScoredCandidate {
    double score;
    std::uint64_t order;
    DocId doc_id;
};

inline bool ranks_before(const ScoredCandidate& a, const ScoredCandidate& b) noexcept {
    if (a.score != b.score) return a.score > b.score;
    return a.order < b.order;
}

/// Sorts the best min(k, size) candidates to the front and converts them to hits.
std::vector<SearchHit> take_top_k(std::vector<ScoredCandidate>& candidates, std::size_t k);

}  // namespace detail

}  // namespace vsearch
