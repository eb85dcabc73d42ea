#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "vsearch/document.hpp"
#include "vsearch/engine.hpp"

namespace vsearch {

// ---------------------------------------------------------------------------
// Relevance

/// Per-query sets of relevant doc ids.
///
/// same_label() issues one query per document (query i is document i) and
/// treats every other document with the same label as relevant. The query
/// document itself is excluded from both its relevant and retrieved sets.
class RelevanceJudgments {
public:
    /// Throws InvalidParam if some label occurs only once.
    static RelevanceJudgments same_label(std::span<const std::string> labels);
    static RelevanceJudgments same_label(std::span<const DocumentRecord> records);
    static RelevanceJudgments explicit_sets(std::vector<std::vector<DocId>> relevant);

    [[nodiscard]] std::size_t query_count() const noexcept { return relevant_.size(); }
    /// Sorted, unique.
    [[nodiscard]] const std::vector<DocId>& relevant(std::size_t query) const { return relevant_.at(query); }
    /// The query's own document under same_label(), which must not count as retrieved.
    [[nodiscard]] std::optional<DocId> self_doc(std::size_t query) const;

private:
    std::vector<std::vector<DocId>> relevant_;
    bool self_queries_ = false;
};

// ---------------------------------------------------------------------------
// Metrics

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
};

/// Macro-averaged over queries using the first k hits of each result.
/// A query that retrieves nothing scores precision 1 if it has no relevant
/// documents and 0 otherwise; a query with no relevant documents scores recall 1.
/// Throws MissingJudgment when results and judgments differ in length.
PrecisionRecall precision_recall(std::span<const ResultSet> results, const RelevanceJudgments& judgments,
                                 std::size_t k);

/// Mean over queries of |top-k ∩ oracle top-k| / k. When the corpus is
/// smaller than k the denominator is the oracle's hit count. Throws KMismatch
/// if an oracle list is short although the corpus holds at least k documents.
double recall_at_k(std::span<const ResultSet> results, std::span<const ResultSet> oracle, std::size_t k,
                   std::size_t corpus_size);

/// 2PR / (P + R), or 0 when P + R == 0.
double harmonic_mean(double precision, double recall) noexcept;

struct QueryTimeStats {
    double mean = 0.0;
    double p50 = 0.0;
    double p90 = 0.0;
    double p99 = 0.0;
    /// (time, fraction of queries <= time) at every distinct observed time.
    std::vector<std::pair<double, double>> cdf;
};

/// Nearest-rank percentiles. Failed results are skipped. Throws Empty.
QueryTimeStats query_time_stats(std::span<const ResultSet> results);
QueryTimeStats query_time_stats(std::span<const double> times);

/// One self-query per vector: searches k + 1 neighbors, drops the query's own
/// document, keeps k. Doc id i is assumed to be vector i.
std::vector<ResultSet> self_query(const SearchEngine& engine, std::span<const NormalizedEmbedding> vectors,
                                  Backend backend, std::size_t k, double threshold,
                                  const SearchParams& params = {});

// ---------------------------------------------------------------------------
// Grid search

struct TrialParams {
    std::string model;
    std::size_t dim = 0;
    double threshold = 0.0;
    Backend index_type = Backend::Flat;

    friend bool operator==(const TrialParams&, const TrialParams&) = default;
};

struct TrialMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double mean_query_time_s = 0.0;
};

struct TrialResult {
    TrialParams params;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double mean_query_time_s = 0.0;
    bool ok = true;
    std::string error;
};

/// Cartesian product dims x thresholds x models x index_types, each axis
/// deduplicated and ascending (index types by name).
struct ParameterGrid {
    std::vector<std::size_t> dims;
    std::vector<double> thresholds;
    std::vector<std::string> models;
    std::vector<Backend> index_types;

    [[nodiscard]] std::vector<TrialParams> enumerate() const;
    [[nodiscard]] std::size_t size() const;
};

enum class Objective {
    MaxPrecision,      ///< argmax precision
    PrecisionPerTime,  ///< argmax precision / mean query time
};

/// Mean query times below this are raised to it before dividing.
inline constexpr double kMinQueryTimeS = 1e-6;

Objective parse_objective(std::string_view name);
std::string_view to_string(Objective o) noexcept;
double objective_value(Objective objective, const TrialResult& trial) noexcept;

struct GridOutcome {
    std::optional<std::size_t> best;  ///< index into trials
    std::vector<TrialResult> trials;  ///< grid order, failed cells included with ok == false

    [[nodiscard]] const TrialResult* best_trial() const noexcept {
        return best ? &trials[*best] : nullptr;
    }
};

using TrialEvaluator = std::function<TrialMetrics(const TrialParams&)>;

/// Evaluates every cell in grid order. A throwing cell becomes a failed trial
/// and is excluded from the argmax; ties go to the earliest cell.
GridOutcome run_grid(const ParameterGrid& grid, const TrialEvaluator& evaluate, Objective objective);

struct EvaluationSettings {
    std::size_t k = 10;
    std::size_t nlist = 0;  // 0 selects default_nlist(N)
    std::size_t nprobe = kDefaultNprobe;
    std::size_t M = 16;
    std::size_t ef_construction = 200;
    std::size_t ef_search = kDefaultEfSearch;
    std::uint64_t seed = 42;
};

/// Embeddings per model name; every corpus must list the same documents.
using ModelCorpora = std::map<std::string, Corpus>;

/// The f(θ) of the tuner: adapts a model's embeddings to θ's dimension,
/// builds θ's index, self-queries every document and scores the results.
/// Engines are cached per (model, dim, index type), so sweeping thresholds
/// does not rebuild.
class CorpusEvaluator {
public:
    CorpusEvaluator(const ModelCorpora& corpora, RelevanceJudgments judgments, EvaluationSettings settings);

    TrialMetrics operator()(const TrialParams& params);

private:
    struct Prepared {
        std::vector<NormalizedEmbedding> vectors;
        SearchEngine engine;
    };
    const Prepared& prepare(const TrialParams& params);

    const ModelCorpora& corpora_;
    RelevanceJudgments judgments_;
    EvaluationSettings settings_;
    std::map<std::tuple<std::string, std::size_t, Backend>, Prepared> cache_;
};

GridOutcome run_grid(const ModelCorpora& corpora, const ParameterGrid& grid,
                     const RelevanceJudgments& judgments, Objective objective,
                     const EvaluationSettings& settings = {});

// ---------------------------------------------------------------------------
// Reports

/// Header: model,index_type,dim,threshold,precision,recall,f1,mean_query_time_s.
/// Successful trials only, in grid order. Numbers use shortest round-trip form.
void write_trials_csv(std::ostream& out, std::span<const TrialResult> trials);
std::vector<TrialResult> read_trials_csv(std::istream& in);
/// {"objective":..., "best":{...}|null, "trials":[...], "failed":[...]}
std::string trials_to_json(const GridOutcome& outcome, Objective objective);
/// Header: time_s,cum_fraction.
void write_cdf_csv(std::ostream& out, const QueryTimeStats& stats);

std::string format_number(double v);

}  // namespace vsearch
