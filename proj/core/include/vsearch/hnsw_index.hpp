#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vsearch/bytes.hpp"
#include "vsearch/search_hit.hpp"
#include "vsearch/vector.hpp"

namespace vsearch {

struct HnswParams {
    std::size_t capacity = 0;
    /// Neighbor bound on layers above 0; layer 0 allows 2 * M.
    std::size_t M = 16;
    std::size_t ef_construction = 200;
    std::uint64_t seed = 42;
};

struct EfParams {
    std::size_t ef_search = 100;
};

/// Hierarchical navigable small-world graph over unit vectors.
///
/// Node levels are drawn geometrically with multiplier 1/ln(M). Insertion
/// descends greedily from the entry point, then runs an ef_construction-wide
/// best-first search on each of the node's layers and links it to at most M
/// candidates chosen by the diversity rule in select_diverse(). Overfull
/// neighbor lists are re-selected with the same rule. Queries descend greedily to layer 0 and finish with a
/// best-first search of width ef_search.
///
/// Construction is single-writer. A frozen index is immutable and each
/// search() call allocates its own scratch state, so concurrent queries are safe.
class HnswIndex {
public:
    using Slot = std::uint32_t;

    HnswIndex(std::size_t dim, const HnswParams& params);

    /// Throws InvalidParam if M < 2 or any parameter is zero.
    static HnswIndex init_index(std::size_t capacity, std::size_t dim, std::size_t M,
                                std::size_t ef_construction, std::uint64_t seed);

    /// Inserts in order. The whole batch is validated first: CapacityExceeded,
    /// DimMismatch and DuplicateId leave the index unchanged.
    void add_items(std::span<const std::pair<DocId, NormalizedEmbedding>> items);
    void add(DocId id, const NormalizedEmbedding& e);
    /// Makes every node reachable from the entry point on layer 0, then locks
    /// the index. Idempotent.
    void freeze();

    /// Throws InvalidParam if ef_search < k. Empty index yields an empty list.
    [[nodiscard]] std::vector<SearchHit> search(const NormalizedEmbedding& q, std::size_t k,
                                                EfParams ef = {}) const;

    [[nodiscard]] bool frozen() const noexcept { return frozen_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return ids_.size(); }
    [[nodiscard]] const HnswParams& params() const noexcept { return params_; }
    [[nodiscard]] std::size_t max_neighbors(int layer) const noexcept {
        return layer == 0 ? 2 * params_.M : params_.M;
    }
    [[nodiscard]] std::optional<Slot> entry_point() const noexcept { return entry_; }
    [[nodiscard]] int max_level() const noexcept { return max_level_; }
    [[nodiscard]] int level_of(Slot s) const { return static_cast<int>(links_.at(s).size()) - 1; }
    [[nodiscard]] std::span<const Slot> neighbors(Slot s, int layer) const;
    [[nodiscard]] DocId id_at(Slot s) const { return ids_.at(s); }
    [[nodiscard]] std::span<const double> vector_at(Slot s) const;
    [[nodiscard]] std::optional<std::span<const double>> find(DocId id) const;
    [[nodiscard]] std::size_t edge_count() const noexcept;

    void serialize(ByteWriter& out) const;
    static HnswIndex deserialize(ByteReader& in, std::size_t dim);

private:
    struct Candidate {
        double sim;
        Slot slot;
    };

    // Epoch-stamped visited marks; reset() is O(1) amortized.
    class VisitedSet {
    public:
        void reset(std::size_t n);
        bool insert(Slot s);

    private:
        std::vector<std::uint32_t> marks_;
        std::uint32_t epoch_ = 0;
    };

    int draw_level();
    void insert_node(DocId id, std::span<const double> values);
    Slot greedy_descend(std::span<const double> q, Slot entry, int from_layer, int to_layer) const;
    std::vector<Candidate> search_layer(std::span<const double> q, std::span<const Candidate> entries,
                                        std::size_t ef, int layer, VisitedSet& visited) const;
    void prune(Slot node, int layer);
    void connect_layer0();
    std::vector<Candidate> select_diverse(const std::vector<Candidate>& sorted, std::size_t m) const;
    void check_params() const;

    std::size_t dim_;
    HnswParams params_;
    double level_multiplier_;
    std::mt19937_64 rng_;

    std::vector<double> data_;
    std::vector<DocId> ids_;
    std::vector<std::vector<std::vector<Slot>>> links_;  // [slot][layer] -> neighbors
    std::unordered_map<DocId, Slot> slot_of_;
    std::optional<Slot> entry_;
    int max_level_ = -1;
    bool frozen_ = false;
    VisitedSet build_visited_;
};

}  // namespace vsearch
