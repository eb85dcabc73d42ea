#include "vsearch/flat_index.hpp"

#include <string>

#include "vsearch/error.hpp"

namespace vsearch {

FlatIndex::FlatIndex(std::size_t dim) : dim_(dim) {
    if (dim == 0) fail(ErrorCode::InvalidParam, "flat index dimension must be positive");
}

void FlatIndex::add(DocId id, const NormalizedEmbedding& e) {
    if (frozen_) fail(ErrorCode::IndexFrozen, "flat index is frozen");
    if (e.dim() != dim_) {
        fail(ErrorCode::DimMismatch, "flat index has dim " + std::to_string(dim_) +
                                         ", vector has dim " + std::to_string(e.dim()));
    }
    if (!slot_of_.emplace(id, ids_.size()).second) {
        fail(ErrorCode::DuplicateId, "document id " + std::to_string(id) + " already indexed");
    }
    ids_.push_back(id);
    data_.insert(data_.end(), e.values().begin(), e.values().end());
}

std::span<const double> FlatIndex::row(std::size_t slot) const {
    return std::span<const double>(data_).subspan(slot * dim_, dim_);
}

std::optional<std::span<const double>> FlatIndex::find(DocId id) const {
    auto it = slot_of_.find(id);
    if (it == slot_of_.end()) return std::nullopt;
    return row(it->second);
}

std::vector<SearchHit> FlatIndex::search(const NormalizedEmbedding& q, std::size_t k) const {
    if (!frozen_) fail(ErrorCode::NotFrozen, "flat index must be frozen before search");
    if (k == 0) fail(ErrorCode::InvalidParam, "k must be at least 1");
    if (q.dim() != dim_) {
        fail(ErrorCode::DimMismatch, "query dim " + std::to_string(q.dim()) + " vs index dim " +
                                         std::to_string(dim_));
    }
    std::vector<detail::ScoredCandidate> scored;
    scored.reserve(ids_.size());
    for (std::size_t slot = 0; slot < ids_.size(); ++slot) {
        scored.push_back({cosine_similarity(q.values(), row(slot)), slot, ids_[slot]});
    }
    return detail::take_top_k(scored, k);
}

void FlatIndex::serialize(ByteWriter& out) const {
    out.put_u64(ids_.size());
    for (std::size_t slot = 0; slot < ids_.size(); ++slot) {
        out.put_u64(ids_[slot]);
        for (double x : row(slot)) out.put_f64(x);
    }
}

FlatIndex FlatIndex::deserialize(ByteReader& in, std::size_t dim) {
    FlatIndex index(dim);
    const std::uint64_t count = in.get_u64();
    std::vector<double> values(dim);
    for (std::uint64_t i = 0; i < count; ++i) {
        const DocId id = in.get_u64();
        for (double& x : values) x = in.get_f64();
        index.add(id, NormalizedEmbedding::from_unit(values));
    }
    index.freeze();
    return index;
}

}  // namespace vsearch
