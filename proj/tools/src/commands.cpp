#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "embedder_client.hpp"
#include "vsearch/error.hpp"
#include "vsearch/storage.hpp"

namespace vsearch::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr std::size_t kEmbedBatch = 64;
constexpr double kExportNormTolerance = 1e-5;

std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_text(const fs::path& path, const std::string& text) {
    write_file_atomic(path, std::as_bytes(std::span(text.data(), text.size())));
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

/// Adapts to the configured index dimension (when set) and normalizes.
NormalizedEmbedding prepare(const Embedding& e, const RunConfig& config) {
    return normalize(config.index.dim ? adapt_dimension(e, *config.index.dim) : e);
}

std::vector<NormalizedEmbedding> prepare_all(const std::vector<Embedding>& rows, const RunConfig& config) {
    std::vector<NormalizedEmbedding> out;
    out.reserve(rows.size());
    for (const auto& e : rows) out.push_back(prepare(e, config));
    return out;
}

Corpus load_model_corpus(const RunConfig& config, const std::string& model) {
    return load_corpus(config.embedding_file(model), config.catalog_file(), config.subset);
}

std::vector<Embedding> matrix_rows(const EmbeddingMatrix& m) {
    std::vector<Embedding> rows;
    rows.reserve(m.count);
    for (std::size_t i = 0; i < m.count; ++i) rows.push_back(m.embedding(i));
    return rows;
}

EmbeddingMatrix embed_titles(const RunConfig& config, const std::string& model,
                             const std::vector<DocumentRecord>& records) {
    std::vector<std::string> titles(records.size());
    for (const auto& r : records) {
        if (r.row >= titles.size()) fail(ErrorCode::RowOutOfRange, "catalog row " + std::to_string(r.row) + " is not dense");
        titles[r.row] = r.title;
    }
    const EmbedderClient client(*config.embedder_url);
    std::vector<std::vector<float>> rows;
    rows.reserve(titles.size());
    for (std::size_t start = 0; start < titles.size(); start += kEmbedBatch) {
        const std::size_t end = std::min(titles.size(), start + kEmbedBatch);
        const std::vector<std::string> batch(titles.begin() + static_cast<std::ptrdiff_t>(start),
                                             titles.begin() + static_cast<std::ptrdiff_t>(end));
        for (const auto& v : client.embed(batch, model)) {
            rows.emplace_back(v.values().begin(), v.values().end());
        }
    }
    return EmbeddingMatrix::from_rows(rows);
}

ordered_json hit_json(const SearchHit& h, const DocumentRecord* doc) {
    ordered_json j{{"rank", h.rank}, {"doc_id", h.doc_id}, {"score", h.score}};
    if (doc != nullptr) {
        j["id"] = doc->id;
        j["title"] = doc->title;
        j["label"] = doc->label;
    }
    return j;
}

ordered_json time_stats_json(const QueryTimeStats& s) {
    return ordered_json{{"mean", s.mean}, {"p50", s.p50}, {"p90", s.p90}, {"p99", s.p99}};
}

std::string backend_name(Backend b) { return std::string(to_string(b)); }

}  // namespace

// ---------------------------------------------------------------------------

std::vector<IngestedModel> cmd_ingest(const CommandEnv& env) {
    const RunConfig& config = env.config;
    const auto records = read_catalog(config.catalog_file());

    std::vector<IngestedModel> models;
    for (const auto& model : config.grid.models) {
        IngestedModel info;
        info.model = model;
        info.path = config.embedding_file(model);

        fs::path sidecar = info.path;
        sidecar += ".crc32";
        EmbeddingMatrix matrix;
        if (fs::exists(sidecar) || (!fs::exists(info.path) && config.embedder_url)) {
            if (info.path.extension() != ".vsem") {
                fail(ErrorCode::ConfigError, "cached embedding path must end in .vsem: " + info.path.string());
            }
            EmbeddingCache cache(info.path.parent_path().empty() ? fs::path(".") : info.path.parent_path());
            if (!fs::exists(info.path) && !config.embedder_url) {
                fail(ErrorCode::Io, "embedding file '" + info.path.string() + "' is missing");
            }
            auto entry = cache.get_or_compute(info.path.stem().string(),
                                              [&] { return embed_titles(config, model, records); });
            matrix = std::move(entry.matrix);
            info.content_hash = entry.content_hash;
            info.source = entry.hit ? "cache" : "embedder";
        } else if (fs::exists(info.path)) {
            matrix = read_embeddings(info.path);
            info.content_hash = content_hash(matrix);
            info.source = "file";
        } else {
            fail(ErrorCode::Io, "embedding file '" + info.path.string() + "' not found and no embedder_url set");
        }

        validate_catalog_dense(records, matrix.count);
        for (std::size_t i = 0; i < matrix.count; ++i) {
            const Embedding e = matrix.embedding(i);
            if (e.norm() < kZeroNormEpsilon) {
                fail(ErrorCode::ZeroVector, model + ": row " + std::to_string(i) + " is a zero vector");
            }
            if (std::abs(e.norm() - 1.0) > kExportNormTolerance) ++info.non_unit_rows;
        }
        info.count = matrix.count;
        info.dim = matrix.dim;
        models.push_back(std::move(info));
    }

    std::map<std::string, std::size_t> labels;
    for (const auto& r : records) ++labels[r.label];

    ordered_json j;
    j["catalog"] = {{"path", config.catalog_file().string()}, {"records", records.size()}, {"labels", labels}};
    j["models"] = ordered_json::array();
    for (const auto& m : models) {
        j["models"].push_back({{"model", m.model},
                               {"path", m.path.string()},
                               {"count", m.count},
                               {"dim", m.dim},
                               {"content_hash", hex32(m.content_hash)},
                               {"source", m.source},
                               {"non_unit_rows", m.non_unit_rows}});
    }
    fs::create_directories(env.out_dir);
    write_json(env.out_dir / "ingest.json", j);

    env.log << "catalog: " << records.size() << " records, " << labels.size() << " labels\n";
    for (const auto& m : models) {
        env.log << m.model << ": " << m.count << " x " << m.dim << " (" << m.source << ", crc32 "
                << hex32(m.content_hash) << ")";
        if (m.non_unit_rows > 0) env.log << ", " << m.non_unit_rows << " rows not unit length";
        env.log << "\n";
    }
    return models;
}

// ---------------------------------------------------------------------------

BuildSummary cmd_build(const CommandEnv& env) {
    const RunConfig& config = env.config;
    const Corpus corpus = load_model_corpus(config, config.primary_model());
    const auto vectors = prepare_all(corpus.embeddings, config);

    EngineOptions options = config.engine_options();
    options.flat = config.index.type == Backend::Flat;

    const auto t0 = std::chrono::steady_clock::now();
    const SearchEngine engine = SearchEngine::build(vectors, options);
    BuildSummary summary;
    summary.build_time_s = seconds_since(t0);

    fs::create_directories(env.out_dir);
    ordered_json stats{{"backend", backend_name(config.index.type)},
                       {"model", config.primary_model()},
                       {"documents", engine.size()},
                       {"dim", engine.dim()},
                       {"build_time_s", summary.build_time_s}};

    const bool hybrid = config.index.type == Backend::Hybrid;
    auto snapshot = [&](const char* kind) { return env.out_dir / (hybrid ? std::string("index.") + kind + ".vsix" : "index.vsix"); };

    if (engine.flat()) {
        summary.snapshots.push_back(snapshot("flat"));
        save_index(summary.snapshots.back(), *engine.flat());
    }
    if (engine.ivf()) {
        const IvfIndex& ivf = *engine.ivf();
        std::size_t smallest = ivf.size(), largest = 0, empty = 0;
        for (std::size_t b = 0; b < ivf.nlist(); ++b) {
            smallest = std::min(smallest, ivf.bucket_size(b));
            largest = std::max(largest, ivf.bucket_size(b));
            empty += ivf.bucket_size(b) == 0;
        }
        stats["ivf"] = {{"nlist", ivf.nlist()}, {"min_bucket", smallest}, {"max_bucket", largest}, {"empty_buckets", empty}};
        summary.snapshots.push_back(snapshot("ivf"));
        save_index(summary.snapshots.back(), ivf);
    }
    if (engine.hnsw()) {
        const HnswIndex& g = *engine.hnsw();
        stats["hnsw"] = {{"M", g.params().M},
                         {"ef_construction", g.params().ef_construction},
                         {"max_level", g.max_level()},
                         {"edges", g.edge_count()}};
        summary.snapshots.push_back(snapshot("hnsw"));
        save_index(summary.snapshots.back(), g);
    }
    stats["snapshots"] = ordered_json::array();
    for (const auto& p : summary.snapshots) stats["snapshots"].push_back(p.filename().string());
    write_json(env.out_dir / "build.json", stats);

    env.log << "built " << backend_name(config.index.type) << " index over " << engine.size() << " x "
            << engine.dim() << " in " << format_number(summary.build_time_s) << " s\n";
    if (stats.contains("ivf")) env.log << "ivf: " << stats["ivf"].dump() << "\n";
    if (stats.contains("hnsw")) env.log << "hnsw: " << stats["hnsw"].dump() << "\n";
    for (const auto& p : summary.snapshots) env.log << "wrote " << p.string() << "\n";
    return summary;
}

// ---------------------------------------------------------------------------

ResultSet cmd_search(const CommandEnv& env, const SearchInput& input) {
    const RunConfig& config = env.config;
    if (input.query_file.has_value() == !input.texts.empty()) {
        fail(ErrorCode::ConfigError, "search needs exactly one of --query or --text");
    }

    Corpus corpus = load_model_corpus(config, config.primary_model());

    std::optional<SearchEngine> engine;
    if (input.index_files.empty()) {
        engine.emplace(SearchEngine::build(prepare_all(corpus.embeddings, config), config.engine_options(),
                                           std::move(corpus.records)));
    } else {
        std::optional<FlatIndex> flat;
        std::optional<IvfIndex> ivf;
        std::optional<HnswIndex> hnsw;
        std::size_t dim = 0;
        for (const auto& path : input.index_files) {
            AnyIndex loaded = load_index(path);
            std::visit([&](auto& idx) { dim = idx.dim(); }, loaded);
            if (auto* f = std::get_if<FlatIndex>(&loaded)) flat = std::move(*f);
            if (auto* v = std::get_if<IvfIndex>(&loaded)) ivf = std::move(*v);
            if (auto* h = std::get_if<HnswIndex>(&loaded)) hnsw = std::move(*h);
        }
        engine.emplace(dim, std::move(flat), std::move(ivf), std::move(hnsw), std::move(corpus.records),
                       config.index.ef_search);
    }

    QuerySpec spec;
    spec.k = config.search.k;
    spec.threshold = config.search.threshold;
    spec.backend = config.index.type;
    spec.params.nprobe = config.index.nprobe;
    spec.params.ef_search = config.index.ef_search;
    if (input.query_file) {
        const EmbeddingMatrix m = read_embeddings(*input.query_file);
        for (const auto& row : matrix_rows(m)) spec.vectors.push_back(prepare(row, config));
    } else {
        if (!config.embedder_url) fail(ErrorCode::ConfigError, "text queries need embedder_url");
        const EmbedderClient client(*config.embedder_url);
        for (const auto& v : client.embed(input.texts, config.primary_model())) {
            spec.vectors.push_back(prepare(Embedding(std::vector<double>(v.values().begin(), v.values().end())), config));
        }
    }
    if (spec.params.nprobe && engine->ivf()) spec.params.nprobe = std::min(*spec.params.nprobe, engine->ivf()->nlist());

    auto results = engine->retrieve(std::span(&spec, 1));
    ResultSet rs = std::move(results.front());
    if (rs.error) fail(rs.error->code, rs.error->message);

    ordered_json j{{"backend", backend_name(spec.backend)},
                   {"k", spec.k},
                   {"threshold", spec.threshold},
                   {"query_vectors", spec.vectors.size()},
                   {"query_time_s", rs.query_time_s}};
    j["hits"] = ordered_json::array();
    for (std::size_t i = 0; i < rs.hits.size(); ++i) {
        j["hits"].push_back(hit_json(rs.hits[i], i < rs.documents.size() ? rs.documents[i] : nullptr));
    }
    fs::create_directories(env.out_dir);
    write_json(env.out_dir / "results.json", j);
    env.log << j.dump(2) << "\n";
    return rs;
}

// ---------------------------------------------------------------------------

GridOutcome cmd_tune(const CommandEnv& env) {
    const RunConfig& config = env.config;
    ModelCorpora corpora;
    for (const auto& model : config.grid.models) {
        Corpus c = load_model_corpus(config, model);
        if (!corpora.empty() && c.records != corpora.begin()->second.records) {
            fail(ErrorCode::ConfigError, "model '" + model + "' does not cover the same documents");
        }
        corpora.emplace(model, std::move(c));
    }
    const auto judgments = RelevanceJudgments::same_label(corpora.begin()->second.records);

    GridOutcome outcome = run_grid(corpora, config.grid, judgments, config.objective, config.evaluation_settings());

    fs::create_directories(env.out_dir);
    std::ostringstream csv;
    write_trials_csv(csv, outcome.trials);
    write_text(env.out_dir / "trials.csv", csv.str());
    write_text(env.out_dir / "trials.json", trials_to_json(outcome, config.objective));

    std::size_t failed = 0;
    for (const auto& t : outcome.trials) {
        if (!t.ok) {
            ++failed;
            env.log << "failed: " << t.params.model << " " << to_string(t.params.index_type) << " dim="
                    << t.params.dim << " threshold=" << format_number(t.params.threshold) << ": " << t.error << "\n";
        }
    }
    env.log << outcome.trials.size() - failed << " of " << outcome.trials.size() << " trials succeeded\n";
    if (const TrialResult* best = outcome.best_trial()) {
        env.log << "best (" << to_string(config.objective) << "): model=" << best->params.model
                << " index_type=" << to_string(best->params.index_type) << " dim=" << best->params.dim
                << " threshold=" << format_number(best->params.threshold)
                << " precision=" << format_number(best->precision) << " recall=" << format_number(best->recall)
                << " f1=" << format_number(best->f1)
                << " mean_query_time_s=" << format_number(best->mean_query_time_s) << "\n";
    } else {
        env.log << "best: none\n";
    }
    return outcome;
}

// ---------------------------------------------------------------------------

BenchSummary cmd_bench(const CommandEnv& env, const BenchInput& input) {
    const RunConfig& config = env.config;
    const Corpus corpus = load_model_corpus(config, config.primary_model());
    const auto vectors = prepare_all(corpus.embeddings, config);

    EngineOptions options = config.engine_options();
    options.flat = true;
    const SearchEngine engine = SearchEngine::build(vectors, options);

    std::vector<NormalizedEmbedding> queries;
    if (input.query_file) {
        for (const auto& row : matrix_rows(read_embeddings(*input.query_file))) queries.push_back(prepare(row, config));
    } else {
        queries = vectors;
    }
    if (queries.empty()) fail(ErrorCode::Empty, "no queries to run");

    const Backend backend = config.index.type;
    auto batch = [&](Backend b, std::size_t k) {
        std::vector<QuerySpec> specs;
        specs.reserve(queries.size());
        for (const auto& q : queries) {
            QuerySpec s;
            s.vectors = {q};
            s.k = k;
            s.threshold = config.search.threshold;
            s.backend = b;
            s.params.nprobe = engine.ivf() ? std::min(config.index.nprobe, engine.ivf()->nlist()) : config.index.nprobe;
            s.params.ef_search = config.index.ef_search;
            specs.push_back(std::move(s));
        }
        auto out = engine.retrieve(specs);
        for (const auto& rs : out) {
            if (rs.error) fail(rs.error->code, rs.error->message);
        }
        return out;
    };

    BenchSummary summary;
    summary.queries = queries.size();
    const auto at10 = batch(backend, 10);
    const auto at100 = batch(backend, 100);
    summary.recall_at_10 = recall_at_k(at10, batch(Backend::Flat, 10), 10, engine.size());
    summary.recall_at_100 = recall_at_k(at100, batch(Backend::Flat, 100), 100, engine.size());
    summary.times = query_time_stats(at10);

    fs::create_directories(env.out_dir);
    std::ostringstream cdf;
    write_cdf_csv(cdf, summary.times);
    write_text(env.out_dir / "cdf.csv", cdf.str());
    ordered_json j{{"backend", backend_name(backend)},
                   {"model", config.primary_model()},
                   {"documents", engine.size()},
                   {"queries", summary.queries},
                   {"threshold", config.search.threshold},
                   {"recall_at_10", summary.recall_at_10},
                   {"recall_at_100", summary.recall_at_100},
                   {"query_time_s", time_stats_json(summary.times)}};
    write_json(env.out_dir / "bench.json", j);

    env.log << backend_name(backend) << ": " << summary.queries << " queries over " << engine.size()
            << " documents\n"
            << "recall@10=" << format_number(summary.recall_at_10)
            << " recall@100=" << format_number(summary.recall_at_100) << "\n"
            << "query time s: mean=" << format_number(summary.times.mean) << " p50=" << format_number(summary.times.p50)
            << " p90=" << format_number(summary.times.p90) << " p99=" << format_number(summary.times.p99) << "\n";
    return summary;
}

}  // namespace vsearch::cli
