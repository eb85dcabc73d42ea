#include "vsearch/hnsw_index.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <unordered_set>

#include "vsearch/error.hpp"

namespace vsearch {

namespace {

constexpr int kMaxLevel = 30;
constexpr HnswIndex::Slot kNoEntry = 0xFFFFFFFFu;

}  // namespace

void HnswIndex::VisitedSet::reset(std::size_t n) {
    if (marks_.size() < n) marks_.resize(n, 0);
    if (++epoch_ == 0) {
        std::fill(marks_.begin(), marks_.end(), 0);
        epoch_ = 1;
    }
}

bool HnswIndex::VisitedSet::insert(Slot s) {
    if (marks_[s] == epoch_) return false;
    marks_[s] = epoch_;
    return true;
}

HnswIndex::HnswIndex(std::size_t dim, const HnswParams& params)
    : dim_(dim), params_(params), level_multiplier_(0.0), rng_(params.seed) {
    check_params();
    level_multiplier_ = 1.0 / std::log(static_cast<double>(params_.M));
}

HnswIndex HnswIndex::init_index(std::size_t capacity, std::size_t dim, std::size_t M,
                                std::size_t ef_construction, std::uint64_t seed) {
    return HnswIndex(dim, HnswParams{capacity, M, ef_construction, seed});
}

void HnswIndex::check_params() const {
    if (params_.M < 2) fail(ErrorCode::InvalidParam, "M must be at least 2");
    if (dim_ == 0 || params_.capacity == 0 || params_.ef_construction == 0) {
        fail(ErrorCode::InvalidParam, "capacity, dim and ef_construction must be positive");
    }
    if (params_.capacity >= kNoEntry) fail(ErrorCode::InvalidParam, "capacity too large");
}

int HnswIndex::draw_level() {
    // u in (0, 1]
    const double u = 1.0 - static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    const auto level = static_cast<int>(std::floor(-std::log(u) * level_multiplier_));
    return std::min(level, kMaxLevel);
}

std::span<const double> HnswIndex::vector_at(Slot s) const {
    return std::span<const double>(data_).subspan(static_cast<std::size_t>(s) * dim_, dim_);
}

std::span<const HnswIndex::Slot> HnswIndex::neighbors(Slot s, int layer) const {
    const auto& per_layer = links_.at(s);
    if (layer < 0 || static_cast<std::size_t>(layer) >= per_layer.size()) return {};
    return per_layer[static_cast<std::size_t>(layer)];
}

std::optional<std::span<const double>> HnswIndex::find(DocId id) const {
    auto it = slot_of_.find(id);
    if (it == slot_of_.end()) return std::nullopt;
    return vector_at(it->second);
}

std::size_t HnswIndex::edge_count() const noexcept {
    std::size_t n = 0;
    for (const auto& node : links_) {
        for (const auto& layer : node) n += layer.size();
    }
    return n;
}

void HnswIndex::add(DocId id, const NormalizedEmbedding& e) {
    const std::pair<DocId, NormalizedEmbedding> item{id, e};
    add_items(std::span(&item, 1));
}

void HnswIndex::add_items(std::span<const std::pair<DocId, NormalizedEmbedding>> items) {
    if (frozen_) fail(ErrorCode::IndexFrozen, "hnsw index is frozen");
    if (ids_.size() + items.size() > params_.capacity) {
        fail(ErrorCode::CapacityExceeded, "adding " + std::to_string(items.size()) + " items to " +
                                              std::to_string(ids_.size()) + " exceeds capacity " +
                                              std::to_string(params_.capacity));
    }
    std::unordered_set<DocId> batch;
    for (const auto& [id, e] : items) {
        if (e.dim() != dim_) {
            fail(ErrorCode::DimMismatch, "hnsw index has dim " + std::to_string(dim_) +
                                             ", vector has dim " + std::to_string(e.dim()));
        }
        if (slot_of_.contains(id) || !batch.insert(id).second) {
            fail(ErrorCode::DuplicateId, "document id " + std::to_string(id) + " already indexed");
        }
    }
    for (const auto& [id, e] : items) insert_node(id, e.values());
}

void HnswIndex::insert_node(DocId id, std::span<const double> values) {
    const auto slot = static_cast<Slot>(ids_.size());
    const int level = draw_level();
    data_.insert(data_.end(), values.begin(), values.end());
    ids_.push_back(id);
    links_.emplace_back(static_cast<std::size_t>(level) + 1);
    slot_of_.emplace(id, slot);

    if (!entry_) {
        entry_ = slot;
        max_level_ = level;
        return;
    }

    Slot ep = greedy_descend(values, *entry_, max_level_, level);
    std::vector<Candidate> entries{{dot(values, vector_at(ep)), ep}};
    for (int layer = std::min(level, max_level_); layer >= 0; --layer) {
        build_visited_.reset(ids_.size());
        std::vector<Candidate> found =
            search_layer(values, entries, params_.ef_construction, layer, build_visited_);

        const std::vector<Candidate> chosen = select_diverse(found, params_.M);
        auto& own = links_[slot][static_cast<std::size_t>(layer)];
        own.reserve(chosen.size());
        for (std::size_t i = 0; i < chosen.size(); ++i) {
            const Slot n = chosen[i].slot;
            own.push_back(n);
            auto& back = links_[n][static_cast<std::size_t>(layer)];
            back.push_back(slot);
            if (back.size() > max_neighbors(layer)) prune(n, layer);
        }
        entries = std::move(found);
    }
    if (level > max_level_) {
        entry_ = slot;
        max_level_ = level;
    }
}

// Keeps a candidate only if it is closer to the base than to every neighbor
// already kept, so links spread across directions instead of piling into one
// dense region.
std::vector<HnswIndex::Candidate> HnswIndex::select_diverse(const std::vector<Candidate>& sorted,
                                                           std::size_t m) const {
    std::vector<Candidate> out;
    for (const auto& c : sorted) {
        if (out.size() >= m) break;
        bool good = true;
        for (const auto& r : out) {
            if (dot(vector_at(c.slot), vector_at(r.slot)) > c.sim) { good = false; break; }
        }
        if (good) out.push_back(c);
    }
    return out;
}

void HnswIndex::prune(Slot node, int layer) {
    auto& list = links_[node][static_cast<std::size_t>(layer)];
    const auto base = vector_at(node);
    std::vector<Candidate> scored;
    scored.reserve(list.size());
    for (Slot n : list) scored.push_back({dot(base, vector_at(n)), n});
    std::sort(scored.begin(), scored.end(), [](const Candidate& a, const Candidate& b) {
        return a.sim != b.sim ? a.sim > b.sim : a.slot < b.slot;
    });
    scored = select_diverse(scored, max_neighbors(layer));
    list.clear();
    for (const auto& c : scored) list.push_back(c.slot);
}

void HnswIndex::freeze() {
    if (frozen_) return;
    connect_layer0();
    frozen_ = true;
}

// Degree-bounded pruning can leave a few nodes with no path from the entry
// point. Each one gets an edge from the nearest reachable node with a free
// slot, or else replaces that node's farthest link. Replacing can cut off the
// evicted target, so passes repeat until one finds nothing to fix.
void HnswIndex::connect_layer0() {
    if (!entry_) return;
    const std::size_t n = ids_.size();
    const std::size_t cap = max_neighbors(0);
    const std::size_t width = std::max(params_.ef_construction, cap);
    std::vector<bool> seen(n);
    std::vector<Slot> stack;
    const auto walk = [&](Slot from) {
        seen[from] = true;
        stack.push_back(from);
        while (!stack.empty()) {
            const Slot s = stack.back();
            stack.pop_back();
            for (Slot t : links_[s][0]) {
                if (!seen[t]) {
                    seen[t] = true;
                    stack.push_back(t);
                }
            }
        }
    };

    constexpr int kMaxPasses = 8;
    for (int pass = 0; pass < kMaxPasses; ++pass) {
        std::fill(seen.begin(), seen.end(), false);
        walk(*entry_);
        bool repaired = false;
        for (Slot u = 0; u < n; ++u) {
            if (seen[u]) continue;
            repaired = true;
            const auto q = vector_at(u);
            // Searching layer 0 from the entry point only visits reachable
            // nodes, so every result is a valid host.
            const std::vector<Candidate> entries{{dot(q, vector_at(*entry_)), *entry_}};
            build_visited_.reset(n);
            const auto near = search_layer(q, entries, width, 0, build_visited_);
            const auto roomy = std::find_if(near.begin(), near.end(), [&](const Candidate& c) {
                return links_[c.slot][0].size() < cap;
            });
            if (roomy != near.end()) {
                links_[roomy->slot][0].push_back(u);
            } else {
                const Slot host = near.front().slot;
                auto& list = links_[host][0];
                const auto base = vector_at(host);
                *std::min_element(list.begin(), list.end(), [&](Slot a, Slot b) {
                    return dot(base, vector_at(a)) < dot(base, vector_at(b));
                }) = u;
            }
            walk(u);
        }
        if (!repaired) return;
    }
}

HnswIndex::Slot HnswIndex::greedy_descend(std::span<const double> q, Slot entry, int from_layer,
                                          int to_layer) const {
    Slot cur = entry;
    double cur_sim = dot(q, vector_at(cur));
    for (int layer = from_layer; layer > to_layer; --layer) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (Slot n : neighbors(cur, layer)) {
                const double s = dot(q, vector_at(n));
                if (s > cur_sim) {
                    cur_sim = s;
                    cur = n;
                    moved = true;
                }
            }
        }
    }
    return cur;
}

std::vector<HnswIndex::Candidate> HnswIndex::search_layer(std::span<const double> q,
                                                          std::span<const Candidate> entries,
                                                          std::size_t ef, int layer,
                                                          VisitedSet& visited) const {
    const auto better = [](const Candidate& a, const Candidate& b) {
        return a.sim != b.sim ? a.sim > b.sim : a.slot < b.slot;
    };
    // frontier: best on top; results: worst on top.
    const auto worse = [&](const Candidate& a, const Candidate& b) { return better(b, a); };
    std::priority_queue<Candidate, std::vector<Candidate>, decltype(worse)> frontier(worse);
    std::priority_queue<Candidate, std::vector<Candidate>, decltype(better)> results(better);

    for (const Candidate& e : entries) {
        if (!visited.insert(e.slot)) continue;
        frontier.push(e);
        results.push(e);
        if (results.size() > ef) results.pop();
    }

    while (!frontier.empty()) {
        const Candidate current = frontier.top();
        if (better(results.top(), current) && results.size() >= ef) break;
        frontier.pop();
        for (Slot n : neighbors(current.slot, layer)) {
            if (!visited.insert(n)) continue;
            const double s = dot(q, vector_at(n));
            if (results.size() < ef || s > results.top().sim) {
                frontier.push({s, n});
                results.push({s, n});
                if (results.size() > ef) results.pop();
            }
        }
    }

    std::vector<Candidate> out;
    out.reserve(results.size());
    while (!results.empty()) {
        out.push_back(results.top());
        results.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<SearchHit> HnswIndex::search(const NormalizedEmbedding& q, std::size_t k,
                                         EfParams ef) const {
    if (!frozen_) fail(ErrorCode::NotFrozen, "hnsw index must be frozen before search");
    if (k == 0) fail(ErrorCode::InvalidParam, "k must be at least 1");
    if (ef.ef_search < k) {
        fail(ErrorCode::InvalidParam, "ef_search " + std::to_string(ef.ef_search) +
                                          " must be >= k " + std::to_string(k));
    }
    if (q.dim() != dim_) {
        fail(ErrorCode::DimMismatch, "query dim " + std::to_string(q.dim()) + " vs index dim " +
                                         std::to_string(dim_));
    }
    if (!entry_) return {};

    const auto query = q.values();
    const Slot ep = greedy_descend(query, *entry_, max_level_, 0);
    VisitedSet visited;
    visited.reset(ids_.size());
    const Candidate start{dot(query, vector_at(ep)), ep};
    const auto found = search_layer(query, std::span(&start, 1), ef.ef_search, 0, visited);

    std::vector<detail::ScoredCandidate> scored;
    scored.reserve(found.size());
    for (const auto& c : found) {
        scored.push_back({cosine_similarity(query, vector_at(c.slot)), c.slot, ids_[c.slot]});
    }
    return detail::take_top_k(scored, k);
}

void HnswIndex::serialize(ByteWriter& out) const {
    out.put_u64(params_.capacity);
    out.put_u32(static_cast<std::uint32_t>(params_.M));
    out.put_u32(static_cast<std::uint32_t>(params_.ef_construction));
    out.put_u64(params_.seed);
    out.put_u64(ids_.size());
    out.put_u32(entry_ ? *entry_ : kNoEntry);
    out.put_i32(max_level_);
    for (std::size_t s = 0; s < ids_.size(); ++s) {
        out.put_u64(ids_[s]);
        out.put_i32(static_cast<std::int32_t>(links_[s].size()) - 1);
        for (double x : vector_at(static_cast<Slot>(s))) out.put_f64(x);
        for (const auto& layer : links_[s]) {
            out.put_u32(static_cast<std::uint32_t>(layer.size()));
            for (Slot n : layer) out.put_u32(n);
        }
    }
}

HnswIndex HnswIndex::deserialize(ByteReader& in, std::size_t dim) {
    HnswParams params;
    params.capacity = in.get_u64();
    params.M = in.get_u32();
    params.ef_construction = in.get_u32();
    params.seed = in.get_u64();
    HnswIndex index(dim, params);

    const std::uint64_t count = in.get_u64();
    if (count > params.capacity) fail(ErrorCode::CorruptFile, "hnsw node count exceeds capacity");
    const std::uint32_t entry = in.get_u32();
    index.max_level_ = in.get_i32();

    std::vector<double> values(dim);
    for (std::uint64_t s = 0; s < count; ++s) {
        const DocId id = in.get_u64();
        const std::int32_t level = in.get_i32();
        if (level < 0 || level > kMaxLevel) fail(ErrorCode::CorruptFile, "bad hnsw node level");
        for (double& x : values) x = in.get_f64();
        const auto unit = NormalizedEmbedding::from_unit(values);
        index.data_.insert(index.data_.end(), unit.values().begin(), unit.values().end());
        index.ids_.push_back(id);
        if (!index.slot_of_.emplace(id, static_cast<Slot>(s)).second) {
            fail(ErrorCode::DuplicateId, "duplicate id in hnsw snapshot");
        }
        auto& node = index.links_.emplace_back(static_cast<std::size_t>(level) + 1);
        for (auto& layer : node) {
            const std::uint32_t n = in.get_u32();
            layer.reserve(n);
            for (std::uint32_t i = 0; i < n; ++i) {
                const Slot neighbor = in.get_u32();
                if (neighbor >= count) fail(ErrorCode::CorruptFile, "hnsw edge out of range");
                layer.push_back(neighbor);
            }
        }
    }
    if (entry != kNoEntry) {
        if (entry >= count) fail(ErrorCode::CorruptFile, "hnsw entry point out of range");
        index.entry_ = entry;
    }
    index.freeze();
    return index;
}

}  // namespace vsearch
