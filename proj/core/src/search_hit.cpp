#include "vsearch/search_hit.hpp"

#include <algorithm>

namespace vsearch::detail {

std::vector<SearchHit> take_top_k(std::vector<ScoredCandidate>& candidates, std::size_t k) {
    const std::size_t n = std::min(k, candidates.size());
    if (n < candidates.size()) {
        std::nth_element(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n),
                         candidates.end(), ranks_before);
    }
    std::sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n), ranks_before);

    std::vector<SearchHit> hits;
    hits.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        hits.push_back({candidates[i].doc_id, candidates[i].score, i});
    }
    return hits;
}

}  // namespace vsearch::detail
