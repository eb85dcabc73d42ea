#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "vsearch/bytes.hpp"
#include "vsearch/search_hit.hpp"
#include "vsearch/vector.hpp"

namespace vsearch {

/// Exact brute-force top-k over unit vectors. Also the ground truth every
/// approximate index is measured against.
///
/// Build phase is single-writer; after freeze() the index is immutable and
/// search() may be called concurrently.
class FlatIndex {
public:
    explicit FlatIndex(std::size_t dim);

    /// Throws IndexFrozen, DimMismatch or DuplicateId.
    void add(DocId id, const NormalizedEmbedding& e);
    void freeze() noexcept { frozen_ = true; }

    /// Returns min(k, size()) hits by descending score, ties by insertion order.
    /// An empty index yields an empty list.
    [[nodiscard]] std::vector<SearchHit> search(const NormalizedEmbedding& q, std::size_t k) const;

    [[nodiscard]] bool frozen() const noexcept { return frozen_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return ids_.size(); }
    [[nodiscard]] DocId id_at(std::size_t slot) const { return ids_.at(slot); }
    [[nodiscard]] std::span<const double> row(std::size_t slot) const;
    [[nodiscard]] std::optional<std::span<const double>> find(DocId id) const;

    void serialize(ByteWriter& out) const;
    static FlatIndex deserialize(ByteReader& in, std::size_t dim);

private:
    std::size_t dim_;
    std::vector<double> data_;
    std::vector<DocId> ids_;
    std::unordered_map<DocId, std::size_t> slot_of_;
    bool frozen_ = false;
};

}  // namespace vsearch
