#include "vsearch/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

namespace vsearch {

// ---------------------------------------------------------------------------
// Relevance

RelevanceJudgments RelevanceJudgments::same_label(std::span<const std::string> labels) {
    std::unordered_map<std::string, std::vector<DocId>> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);

    RelevanceJudgments j;
    j.self_queries_ = true;
    j.relevant_.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& group = by_label[labels[i]];
        if (group.size() < 2) {
            fail(ErrorCode::InvalidParam, "label '" + labels[i] + "' has a single document");
        }
        std::vector<DocId> rel;
        rel.reserve(group.size() - 1);
        for (DocId d : group) {
            if (d != i) rel.push_back(d);
        }
        j.relevant_.push_back(std::move(rel));
    }
    return j;
}

RelevanceJudgments RelevanceJudgments::same_label(std::span<const DocumentRecord> records) {
    std::vector<std::string> labels;
    labels.reserve(records.size());
    for (const auto& r : records) labels.push_back(r.label);
    return same_label(labels);
}

RelevanceJudgments RelevanceJudgments::explicit_sets(std::vector<std::vector<DocId>> relevant) {
    RelevanceJudgments j;
    for (auto& set : relevant) {
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());
    }
    j.relevant_ = std::move(relevant);
    return j;
}

std::optional<DocId> RelevanceJudgments::self_doc(std::size_t query) const {
    if (!self_queries_) return std::nullopt;
    return query;
}

// ---------------------------------------------------------------------------
// Metrics

double harmonic_mean(double precision, double recall) noexcept {
    const double sum = precision + recall;
    return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

PrecisionRecall precision_recall(std::span<const ResultSet> results, const RelevanceJudgments& judgments,
                                 std::size_t k) {
    if (results.size() != judgments.query_count()) {
        fail(ErrorCode::MissingJudgment, std::to_string(results.size()) + " results but " +
                                             std::to_string(judgments.query_count()) + " judgments");
    }
    if (results.empty()) fail(ErrorCode::Empty, "no results to score");

    double p_sum = 0.0;
    double r_sum = 0.0;
    for (std::size_t q = 0; q < results.size(); ++q) {
        const auto& rel = judgments.relevant(q);
        const auto self = judgments.self_doc(q);
        std::size_t retrieved = 0;
        std::size_t hits = 0;
        for (const auto& h : results[q].hits) {
            if (retrieved == k) break;
            if (self && h.doc_id == *self) continue;
            ++retrieved;
            if (std::binary_search(rel.begin(), rel.end(), h.doc_id)) ++hits;
        }
        if (retrieved == 0) {
            p_sum += rel.empty() ? 1.0 : 0.0;
        } else {
            p_sum += static_cast<double>(hits) / static_cast<double>(retrieved);
        }
        r_sum += rel.empty() ? 1.0 : static_cast<double>(hits) / static_cast<double>(rel.size());
    }
    const auto n = static_cast<double>(results.size());
    return {p_sum / n, r_sum / n};
}

double recall_at_k(std::span<const ResultSet> results, std::span<const ResultSet> oracle, std::size_t k,
                   std::size_t corpus_size) {
    if (k == 0) fail(ErrorCode::InvalidParam, "k must be at least 1");
    if (results.size() != oracle.size()) {
        fail(ErrorCode::InvalidParam, "results and oracle cover different query counts");
    }
    if (results.empty()) fail(ErrorCode::Empty, "no results to score");

    double sum = 0.0;
    for (std::size_t q = 0; q < results.size(); ++q) {
        const auto& truth = oracle[q].hits;
        if (truth.size() < k && corpus_size >= k) {
            fail(ErrorCode::KMismatch, "oracle query " + std::to_string(q) + " has " +
                                           std::to_string(truth.size()) + " hits, expected " +
                                           std::to_string(k));
        }
        const std::size_t truth_n = std::min(k, truth.size());
        std::set<DocId> expected;
        for (std::size_t i = 0; i < truth_n; ++i) expected.insert(truth[i].doc_id);

        std::size_t overlap = 0;
        const auto& got = results[q].hits;
        for (std::size_t i = 0; i < std::min(k, got.size()); ++i) {
            if (expected.contains(got[i].doc_id)) ++overlap;
        }
        const std::size_t denom = corpus_size >= k ? k : truth_n;
        sum += denom == 0 ? 1.0 : static_cast<double>(overlap) / static_cast<double>(denom);
    }
    return sum / static_cast<double>(results.size());
}

QueryTimeStats query_time_stats(std::span<const double> times) {
    if (times.empty()) fail(ErrorCode::Empty, "no query times");
    std::vector<double> sorted(times.begin(), times.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();

    auto nearest_rank = [&](double p) {
        auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
        rank = std::clamp<std::size_t>(rank, 1, n);
        return sorted[rank - 1];
    };

    QueryTimeStats s;
    s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
    s.p50 = nearest_rank(0.50);
    s.p90 = nearest_rank(0.90);
    s.p99 = nearest_rank(0.99);
    for (std::size_t i = 0; i < n; ++i) {
        if (i + 1 < n && sorted[i + 1] == sorted[i]) continue;
        s.cdf.emplace_back(sorted[i], static_cast<double>(i + 1) / static_cast<double>(n));
    }
    return s;
}

QueryTimeStats query_time_stats(std::span<const ResultSet> results) {
    std::vector<double> times;
    times.reserve(results.size());
    for (const auto& r : results) {
        if (!r.error) times.push_back(r.query_time_s);
    }
    return query_time_stats(times);
}

std::vector<ResultSet> self_query(const SearchEngine& engine, std::span<const NormalizedEmbedding> vectors,
                                  Backend backend, std::size_t k, double threshold,
                                  const SearchParams& params) {
    std::vector<ResultSet> out;
    out.reserve(vectors.size());
    QuerySpec spec;
    spec.k = k + 1;
    spec.threshold = threshold;
    spec.backend = backend;
    spec.params = params;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        spec.vectors.assign(1, vectors[i]);
        ResultSet rs = engine.multi_vector_search(spec);
        std::erase_if(rs.hits, [i](const SearchHit& h) { return h.doc_id == i; });
        if (rs.hits.size() > k) rs.hits.resize(k);
        for (std::size_t r = 0; r < rs.hits.size(); ++r) rs.hits[r].rank = r;
        out.push_back(std::move(rs));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Grid search

std::vector<TrialParams> ParameterGrid::enumerate() const {
    auto dims_sorted = std::set<std::size_t>(dims.begin(), dims.end());
    auto thresholds_sorted = std::set<double>(thresholds.begin(), thresholds.end());
    auto models_sorted = std::set<std::string>(models.begin(), models.end());
    std::map<std::string, Backend> types_sorted;
    for (Backend b : index_types) types_sorted.emplace(std::string(to_string(b)), b);

    std::vector<TrialParams> cells;
    for (std::size_t d : dims_sorted) {
        for (double t : thresholds_sorted) {
            for (const auto& m : models_sorted) {
                for (const auto& [name, b] : types_sorted) cells.push_back({m, d, t, b});
            }
        }
    }
    return cells;
}

std::size_t ParameterGrid::size() const { return enumerate().size(); }

Objective parse_objective(std::string_view name) {
    if (name == "max_precision") return Objective::MaxPrecision;
    if (name == "precision_per_time") return Objective::PrecisionPerTime;
    fail(ErrorCode::InvalidParam, "unknown objective '" + std::string(name) + "'");
}

std::string_view to_string(Objective o) noexcept {
    return o == Objective::MaxPrecision ? "max_precision" : "precision_per_time";
}

double objective_value(Objective objective, const TrialResult& trial) noexcept {
    if (objective == Objective::MaxPrecision) return trial.precision;
    return trial.precision / std::max(trial.mean_query_time_s, kMinQueryTimeS);
}

GridOutcome run_grid(const ParameterGrid& grid, const TrialEvaluator& evaluate, Objective objective) {
    const auto cells = grid.enumerate();
    if (cells.empty()) fail(ErrorCode::Empty, "parameter grid is empty");

    GridOutcome outcome;
    outcome.trials.reserve(cells.size());
    for (const auto& cell : cells) {
        TrialResult t;
        t.params = cell;
        try {
            const TrialMetrics m = evaluate(cell);
            const auto unit_interval = [](double x) { return x >= 0.0 && x <= 1.0; };
            if (!unit_interval(m.precision) || !unit_interval(m.recall) || !(m.mean_query_time_s >= 0.0)) {
                fail(ErrorCode::InvalidParam, "trial metrics out of range");
            }
            t.precision = m.precision;
            t.recall = m.recall;
            t.mean_query_time_s = m.mean_query_time_s;
            t.f1 = harmonic_mean(m.precision, m.recall);
        } catch (const std::exception& e) {
            t.ok = false;
            t.error = e.what();
        }
        outcome.trials.push_back(std::move(t));
    }

    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < outcome.trials.size(); ++i) {
        if (!outcome.trials[i].ok) continue;
        const double v = objective_value(objective, outcome.trials[i]);
        if (!outcome.best || v > best_value) {
            best_value = v;
            outcome.best = i;
        }
    }
    return outcome;
}

CorpusEvaluator::CorpusEvaluator(const ModelCorpora& corpora, RelevanceJudgments judgments,
                                 EvaluationSettings settings)
    : corpora_(corpora), judgments_(std::move(judgments)), settings_(settings) {}

const CorpusEvaluator::Prepared& CorpusEvaluator::prepare(const TrialParams& params) {
    const auto key = std::tuple{params.model, params.dim, params.index_type};
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;

    auto corpus_it = corpora_.find(params.model);
    if (corpus_it == corpora_.end()) {
        fail(ErrorCode::InvalidParam, "no embeddings for model '" + params.model + "'");
    }
    const Corpus& corpus = corpus_it->second;
    if (corpus.size() != judgments_.query_count()) {
        fail(ErrorCode::MissingJudgment, "corpus size does not match judgment count");
    }

    std::vector<NormalizedEmbedding> vectors;
    vectors.reserve(corpus.size());
    for (const auto& e : corpus.embeddings) vectors.push_back(normalize(adapt_dimension(e, params.dim)));

    EngineOptions options;
    options.flat = true;
    options.ef_search = settings_.ef_search;
    if (params.index_type == Backend::Ivf || params.index_type == Backend::Hybrid) {
        options.ivf = IvfBuildOptions{settings_.nlist, settings_.seed};
    }
    if (params.index_type == Backend::Hnsw || params.index_type == Backend::Hybrid) {
        options.hnsw = HnswBuildOptions{settings_.M, settings_.ef_construction, settings_.seed};
    }
    SearchEngine engine = SearchEngine::build(vectors, options);
    return cache_.emplace(key, Prepared{std::move(vectors), std::move(engine)}).first->second;
}

TrialMetrics CorpusEvaluator::operator()(const TrialParams& params) {
    const Prepared& p = prepare(params);
    SearchParams search;
    search.ef_search = std::max(settings_.ef_search, settings_.k + 1);
    if (p.engine.ivf()) search.nprobe = std::min(settings_.nprobe, p.engine.ivf()->nlist());

    const auto results = self_query(p.engine, p.vectors, params.index_type, settings_.k, params.threshold, search);
    const auto pr = precision_recall(results, judgments_, settings_.k);
    double total_time = 0.0;
    for (const auto& r : results) total_time += r.query_time_s;
    return {pr.precision, pr.recall, total_time / static_cast<double>(results.size())};
}

GridOutcome run_grid(const ModelCorpora& corpora, const ParameterGrid& grid,
                     const RelevanceJudgments& judgments, Objective objective,
                     const EvaluationSettings& settings) {
    CorpusEvaluator evaluator(corpora, judgments, settings);
    return run_grid(grid, std::ref(evaluator), objective);
}

// ---------------------------------------------------------------------------
// Reports

std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, end);
}

namespace {

constexpr std::string_view kTrialsHeader =
    "model,index_type,dim,threshold,precision,recall,f1,mean_query_time_s";

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else if (c != '\r') {
            fields.back() += c;
        }
    }
    return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
    return v;
}

nlohmann::ordered_json trial_json(const TrialResult& t) {
    nlohmann::ordered_json j;
    j["model"] = t.params.model;
    j["index_type"] = to_string(t.params.index_type);
    j["dim"] = t.params.dim;
    j["threshold"] = t.params.threshold;
    if (t.ok) {
        j["precision"] = t.precision;
        j["recall"] = t.recall;
        j["f1"] = t.f1;
        j["mean_query_time_s"] = t.mean_query_time_s;
    } else {
        j["error"] = t.error;
    }
    return j;
}

}  // namespace

void write_trials_csv(std::ostream& out, std::span<const TrialResult> trials) {
    out << kTrialsHeader << '\n';
    for (const auto& t : trials) {
        if (!t.ok) continue;
        out << csv_field(t.params.model) << ',' << to_string(t.params.index_type) << ',' << t.params.dim
            << ',' << format_number(t.params.threshold) << ',' << format_number(t.precision) << ','
            << format_number(t.recall) << ',' << format_number(t.f1) << ','
            << format_number(t.mean_query_time_s) << '\n';
    }
}

std::vector<TrialResult> read_trials_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::ParseError, "missing trials header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTrialsHeader) fail(ErrorCode::ParseError, "unexpected trials header '" + line + "'");

    std::vector<TrialResult> trials;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 8) {
            fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 8 fields");
        }
        TrialResult t;
        t.params.model = f[0];
        try {
            t.params.index_type = parse_backend(f[1]);
        } catch (const Error& e) {
            fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
        }
        t.params.dim = static_cast<std::size_t>(parse_double(f[2], line_no));
        t.params.threshold = parse_double(f[3], line_no);
        t.precision = parse_double(f[4], line_no);
        t.recall = parse_double(f[5], line_no);
        t.f1 = parse_double(f[6], line_no);
        t.mean_query_time_s = parse_double(f[7], line_no);
        trials.push_back(std::move(t));
    }
    return trials;
}

std::string trials_to_json(const GridOutcome& outcome, Objective objective) {
    nlohmann::ordered_json root;
    root["objective"] = to_string(objective);
    root["best"] = outcome.best_trial() ? trial_json(*outcome.best_trial()) : nlohmann::ordered_json(nullptr);
    root["trials"] = nlohmann::ordered_json::array();
    root["failed"] = nlohmann::ordered_json::array();
    for (const auto& t : outcome.trials) {
        (t.ok ? root["trials"] : root["failed"]).push_back(trial_json(t));
    }
    return root.dump(2) + "\n";
}

void write_cdf_csv(std::ostream& out, const QueryTimeStats& stats) {
    out << "time_s,cum_fraction\n";
    for (const auto& [t, f] : stats.cdf) out << format_number(t) << ',' << format_number(f) << '\n';
}

}  // namespace vsearch
