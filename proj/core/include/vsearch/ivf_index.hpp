#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vsearch/bytes.hpp"
#include "vsearch/search_hit.hpp"
#include "vsearch/vector.hpp"

namespace vsearch {

/// Probe width used by single-vector search unless overridden.
inline constexpr std::size_t kDefaultNprobe = 10;

struct ProbeParams {
    std::size_t nprobe = kDefaultNprobe;
};

/// ceil(sqrt(n)), at least 1.
std::size_t default_nlist(std::size_t n) noexcept;

struct KMeansOptions {
    std::size_t max_iterations = 25;
    /// Stop once no centroid moves further than this (Euclidean).
    double tolerance = 1e-4;
};

/// Spherical k-means with k-means++ seeding. Every centroid is unit length.
/// Deterministic for a fixed seed and input order. Throws TooFewVectors when
/// vectors.size() < nlist and DimMismatch on ragged input.
std::vector<NormalizedEmbedding> train_coarse_quantizer(std::span<const NormalizedEmbedding> vectors,
                                                        std::size_t nlist, std::uint64_t seed,
                                                        const KMeansOptions& options = {});

/// Inverted-file index: each vector lives in the bucket of its nearest centroid,
/// a query scans only the nprobe buckets whose centroids are nearest to it.
class IvfIndex {
public:
    IvfIndex(std::size_t dim, std::size_t nlist);

    void train(std::span<const NormalizedEmbedding> vectors, std::uint64_t seed);
    /// Installs an externally trained quantizer. Requires exactly nlist centroids.
    void set_centroids(std::vector<NormalizedEmbedding> centroids);

    /// Throws NotTrained, IndexFrozen, DimMismatch or DuplicateId.
    void add(DocId id, const NormalizedEmbedding& e);
    void freeze() noexcept { frozen_ = true; }

    /// Exact top-k over the union of the probed buckets. Returns fewer than k
    /// hits when the probed buckets hold fewer vectors.
    [[nodiscard]] std::vector<SearchHit> search(const NormalizedEmbedding& q, std::size_t k,
                                                ProbeParams probe = {}) const;

    /// Bucket that `e` would be assigned to (nearest centroid, lowest index on ties).
    [[nodiscard]] std::size_t assign(std::span<const double> e) const;

    [[nodiscard]] bool trained() const noexcept { return !centroids_.empty(); }
    [[nodiscard]] bool frozen() const noexcept { return frozen_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t nlist() const noexcept { return nlist_; }
    [[nodiscard]] std::size_t size() const noexcept { return location_.size(); }
    [[nodiscard]] std::size_t bucket_size(std::size_t bucket) const { return buckets_.at(bucket).ids.size(); }
    [[nodiscard]] const std::vector<NormalizedEmbedding>& centroids() const noexcept { return centroids_; }
    [[nodiscard]] std::optional<std::size_t> bucket_of(DocId id) const;
    [[nodiscard]] std::optional<std::span<const double>> find(DocId id) const;

    void serialize(ByteWriter& out) const;
    static IvfIndex deserialize(ByteReader& in, std::size_t dim);

private:
    struct Bucket {
        std::vector<DocId> ids;
        std::vector<std::uint64_t> insertion_seq;
        std::vector<double> data;
    };

    void require_dim(std::size_t d) const;
    void insert(DocId id, std::uint64_t seq, std::span<const double> values, std::size_t bucket);

    std::size_t dim_;
    std::size_t nlist_;
    std::vector<NormalizedEmbedding> centroids_;
    std::vector<Bucket> buckets_;
    std::unordered_map<DocId, std::pair<std::size_t, std::size_t>> location_;
    std::uint64_t next_seq_ = 0;
    bool frozen_ = false;
};

}  // namespace vsearch
