#include "vsearch/ivf_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "vsearch/error.hpp"

namespace vsearch {

namespace {

// Portable uniform draw in [0, 1); std::uniform_real_distribution differs across
// standard libraries and we want identical centroids everywhere.
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t nearest(std::span<const NormalizedEmbedding> centroids, std::span<const double> v) {
    std::size_t best = 0;
    double best_sim = -2.0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double s = dot(centroids[c].values(), v);
        if (s > best_sim) {
            best_sim = s;
            best = c;
        }
    }
    return best;
}

std::vector<NormalizedEmbedding> seed_plus_plus(std::span<const NormalizedEmbedding> vectors,
                                                std::size_t nlist, std::mt19937_64& rng) {
    const std::size_t n = vectors.size();
    std::vector<NormalizedEmbedding> centroids;
    centroids.reserve(nlist);
    centroids.push_back(vectors[static_cast<std::size_t>(rng() % n)]);

    // Squared Euclidean distance between unit vectors is 2(1 - cos).
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        d2[i] = std::max(0.0, 2.0 * (1.0 - dot(vectors[i].values(), centroids[0].values())));
    }
    while (centroids.size() < nlist) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = 0;
        if (total <= 0.0) {
            pick = static_cast<std::size_t>(rng() % n);
        } else {
            const double target = unit_draw(rng) * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > target && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.push_back(vectors[pick]);
        const auto c = centroids.back().values();
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], std::max(0.0, 2.0 * (1.0 - dot(vectors[i].values(), c))));
        }
    }
    return centroids;
}

}  // namespace

std::size_t default_nlist(std::size_t n) noexcept {
    if (n <= 1) return 1;
    auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    while (r * r < n) ++r;
    while (r > 1 && (r - 1) * (r - 1) >= n) --r;
    return r;
}

std::vector<NormalizedEmbedding> train_coarse_quantizer(std::span<const NormalizedEmbedding> vectors,
                                                        std::size_t nlist, std::uint64_t seed,
                                                        const KMeansOptions& options) {
    if (nlist == 0) fail(ErrorCode::InvalidParam, "nlist must be positive");
    if (vectors.size() < nlist) {
        fail(ErrorCode::TooFewVectors, "need at least " + std::to_string(nlist) +
                                           " training vectors, got " + std::to_string(vectors.size()));
    }
    const std::size_t dim = vectors.front().dim();
    for (const auto& v : vectors) {
        if (v.dim() != dim) fail(ErrorCode::DimMismatch, "training vectors have mixed dimensions");
    }

    std::mt19937_64 rng(seed);
    std::vector<NormalizedEmbedding> centroids = seed_plus_plus(vectors, nlist, rng);

    std::vector<std::size_t> assignment(vectors.size());
    std::vector<double> sums(nlist * dim);
    std::vector<std::size_t> counts(nlist);
    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            assignment[i] = nearest(centroids, vectors[i].values());
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            double* sum = sums.data() + assignment[i] * dim;
            const auto v = vectors[i].values();
            for (std::size_t d = 0; d < dim; ++d) sum[d] += v[d];
            ++counts[assignment[i]];
        }

        double max_shift = 0.0;
        for (std::size_t c = 0; c < nlist; ++c) {
            if (counts[c] == 0) continue;  // empty cell keeps its previous centroid
            std::vector<double> mean(sums.begin() + static_cast<std::ptrdiff_t>(c * dim),
                                     sums.begin() + static_cast<std::ptrdiff_t>((c + 1) * dim));
            if (std::sqrt(dot(mean, mean)) < kZeroNormEpsilon) continue;
            NormalizedEmbedding updated = normalize(Embedding(std::move(mean)));
            double shift2 = 0.0;
            const auto old = centroids[c].values();
            const auto now = updated.values();
            for (std::size_t d = 0; d < dim; ++d) shift2 += (now[d] - old[d]) * (now[d] - old[d]);
            max_shift = std::max(max_shift, std::sqrt(shift2));
            centroids[c] = std::move(updated);
        }
        if (max_shift < options.tolerance) break;
    }
    return centroids;
}

IvfIndex::IvfIndex(std::size_t dim, std::size_t nlist) : dim_(dim), nlist_(nlist) {
    if (dim == 0) fail(ErrorCode::InvalidParam, "ivf dimension must be positive");
    if (nlist == 0) fail(ErrorCode::InvalidParam, "nlist must be positive");
}

void IvfIndex::require_dim(std::size_t d) const {
    if (d != dim_) {
        fail(ErrorCode::DimMismatch,
             "ivf index has dim " + std::to_string(dim_) + ", got " + std::to_string(d));
    }
}

void IvfIndex::train(std::span<const NormalizedEmbedding> vectors, std::uint64_t seed) {
    if (!vectors.empty()) require_dim(vectors.front().dim());
    set_centroids(train_coarse_quantizer(vectors, nlist_, seed));
}

void IvfIndex::set_centroids(std::vector<NormalizedEmbedding> centroids) {
    if (frozen_) fail(ErrorCode::IndexFrozen, "ivf index is frozen");
    if (!location_.empty()) fail(ErrorCode::InvalidParam, "cannot retrain a populated ivf index");
    if (centroids.size() != nlist_) {
        fail(ErrorCode::InvalidParam, "expected " + std::to_string(nlist_) + " centroids, got " +
                                          std::to_string(centroids.size()));
    }
    for (const auto& c : centroids) require_dim(c.dim());
    centroids_ = std::move(centroids);
    buckets_.assign(nlist_, Bucket{});
}

std::size_t IvfIndex::assign(std::span<const double> e) const {
    if (!trained()) fail(ErrorCode::NotTrained, "ivf index has no centroids");
    require_dim(e.size());
    return nearest(centroids_, e);
}

void IvfIndex::insert(DocId id, std::uint64_t seq, std::span<const double> values,
                      std::size_t bucket) {
    Bucket& b = buckets_[bucket];
    if (!location_.emplace(id, std::pair{bucket, b.ids.size()}).second) {
        fail(ErrorCode::DuplicateId, "document id " + std::to_string(id) + " already indexed");
    }
    b.ids.push_back(id);
    b.insertion_seq.push_back(seq);
    b.data.insert(b.data.end(), values.begin(), values.end());
}

void IvfIndex::add(DocId id, const NormalizedEmbedding& e) {
    if (!trained()) fail(ErrorCode::NotTrained, "ivf index must be trained before add");
    if (frozen_) fail(ErrorCode::IndexFrozen, "ivf index is frozen");
    const std::size_t bucket = assign(e.values());
    insert(id, next_seq_, e.values(), bucket);
    ++next_seq_;
}

std::vector<SearchHit> IvfIndex::search(const NormalizedEmbedding& q, std::size_t k,
                                        ProbeParams probe) const {
    if (!trained()) fail(ErrorCode::NotTrained, "ivf index is not trained");
    if (!frozen_) fail(ErrorCode::NotFrozen, "ivf index must be frozen before search");
    if (k == 0) fail(ErrorCode::InvalidParam, "k must be at least 1");
    if (probe.nprobe == 0 || probe.nprobe > nlist_) {
        fail(ErrorCode::InvalidParam, "nprobe must be in [1, " + std::to_string(nlist_) + "]");
    }
    require_dim(q.dim());

    std::vector<std::pair<double, std::size_t>> cells;
    cells.reserve(nlist_);
    for (std::size_t c = 0; c < nlist_; ++c) {
        cells.emplace_back(dot(centroids_[c].values(), q.values()), c);
    }
    const auto probe_end = cells.begin() + static_cast<std::ptrdiff_t>(probe.nprobe);
    std::partial_sort(cells.begin(), probe_end, cells.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });

    std::vector<detail::ScoredCandidate> scored;
    for (auto it = cells.begin(); it != probe_end; ++it) {
        const Bucket& b = buckets_[it->second];
        for (std::size_t i = 0; i < b.ids.size(); ++i) {
            std::span<const double> row(b.data.data() + i * dim_, dim_);
            scored.push_back({cosine_similarity(q.values(), row), b.insertion_seq[i], b.ids[i]});
        }
    }
    return detail::take_top_k(scored, k);
}

std::optional<std::size_t> IvfIndex::bucket_of(DocId id) const {
    auto it = location_.find(id);
    if (it == location_.end()) return std::nullopt;
    return it->second.first;
}

std::optional<std::span<const double>> IvfIndex::find(DocId id) const {
    auto it = location_.find(id);
    if (it == location_.end()) return std::nullopt;
    const auto [bucket, pos] = it->second;
    return std::span<const double>(buckets_[bucket].data.data() + pos * dim_, dim_);
}

void IvfIndex::serialize(ByteWriter& out) const {
    out.put_u32(static_cast<std::uint32_t>(nlist_));
    out.put_u8(trained() ? 1 : 0);
    out.put_u64(next_seq_);
    for (const auto& c : centroids_) {
        for (double x : c.values()) out.put_f64(x);
    }
    for (const auto& b : buckets_) {
        out.put_u64(b.ids.size());
        for (std::size_t i = 0; i < b.ids.size(); ++i) {
            out.put_u64(b.ids[i]);
            out.put_u64(b.insertion_seq[i]);
            for (std::size_t d = 0; d < dim_; ++d) out.put_f64(b.data[i * dim_ + d]);
        }
    }
}

IvfIndex IvfIndex::deserialize(ByteReader& in, std::size_t dim) {
    const std::uint32_t nlist = in.get_u32();
    IvfIndex index(dim, nlist);
    const bool trained = in.get_u8() != 0;
    index.next_seq_ = in.get_u64();
    if (trained) {
        std::vector<NormalizedEmbedding> centroids;
        centroids.reserve(nlist);
        std::vector<double> values(dim);
        for (std::uint32_t c = 0; c < nlist; ++c) {
            for (double& x : values) x = in.get_f64();
            centroids.push_back(NormalizedEmbedding::from_unit(values));
        }
        index.set_centroids(std::move(centroids));
        std::vector<double> row(dim);
        for (std::uint32_t c = 0; c < nlist; ++c) {
            const std::uint64_t count = in.get_u64();
            for (std::uint64_t i = 0; i < count; ++i) {
                const DocId id = in.get_u64();
                const std::uint64_t seq = in.get_u64();
                for (double& x : row) x = in.get_f64();
                index.insert(id, seq, row, c);
            }
        }
    }
    index.freeze();
    return index;
}

}  // namespace vsearch
