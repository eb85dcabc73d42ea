#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "app.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "embedder_client.hpp"
#include "oracle.hpp"
#include "test_util.hpp"
#include "vsearch/storage.hpp"

namespace vsearch {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::TempDir;

struct RunResult {
    int code;
    std::string out;
    std::string err;
};

RunResult run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "vsearch");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

EmbeddingMatrix to_matrix(const std::vector<std::vector<double>>& rows) {
    std::vector<std::vector<float>> f;
    for (const auto& r : rows) f.emplace_back(r.begin(), r.end());
    return EmbeddingMatrix::from_rows(f);
}

/// Writes emb-<model>.vsem per model, catalog.ndjson and config.json into dir.
fs::path write_corpus(const TempDir& dir, const testing::Dataset& d, const std::vector<std::string>& models,
                      json extra = json::object()) {
    for (const auto& m : models) write_embeddings(dir / ("emb-" + m + ".vsem"), to_matrix(d.rows));
    std::vector<DocumentRecord> recs;
    const auto labels = d.label_strings();
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        recs.push_back({"doc" + std::to_string(i), "title " + std::to_string(i), "", labels[i],
                        static_cast<std::uint32_t>(i)});
    }
    write_catalog(dir / "catalog.ndjson", recs);
    json cfg{{"embedding_path", "emb-{model}.vsem"}, {"catalog_path", "catalog.ndjson"}};
    cfg["grid"] = {{"models", models}};
    cfg.update(extra, true);
    std::ofstream(dir / "config.json") << cfg.dump(2);
    return dir / "config.json";
}

// ---------------------------------------------------------------------------
// Fake embedding service speaking the /embed contract.

std::vector<double> fake_vector(const std::string& text, std::size_t dim) {
    std::vector<double> v(dim);
    std::uint64_t h = std::hash<std::string>{}(text);
    for (auto& x : v) {
        h = h * 6364136223846793005ULL + 1442695040888963407ULL;
        x = static_cast<double>(h >> 11) / 9007199254740992.0 - 0.5;
    }
    double n = 0.0;
    for (double x : v) n += x * x;
    for (double& x : v) x /= std::sqrt(n);
    return v;
}

class FakeEmbedder {
public:
    explicit FakeEmbedder(std::size_t dim) : dim_(dim) {
        server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
            ++requests;
            json body;
            try {
                body = json::parse(req.body);
            } catch (const json::parse_error&) {
                res.status = 400;
                res.set_content(R"({"detail":"malformed JSON"})", "application/json");
                return;
            }
            if (!body.contains("texts") || !body["texts"].is_array() || !body.contains("model")) {
                res.status = 400;
                return;
            }
            if (body["texts"].empty()) {
                res.status = 422;
                res.set_content(R"({"detail":"empty text list"})", "application/json");
                return;
            }
            last_model = body["model"].get<std::string>();
            json vectors = json::array();
            for (const auto& t : body["texts"]) vectors.push_back(fake_vector(t.get<std::string>(), dim_));
            if (override_body) {
                res.set_content(*override_body, "application/json");
                return;
            }
            res.set_content(json{{"dim", dim_}, {"vectors", vectors}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeEmbedder() {
        server_.stop();
        thread_.join();
    }

    [[nodiscard]] std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    int requests = 0;
    std::string last_model;
    std::optional<std::string> override_body;

private:
    std::size_t dim_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

// ---------------------------------------------------------------------------

TEST(Config, DefaultsAndPlaceholder) {
    const auto c = cli::parse_config(json{{"embedding_path", "e/{model}.vsem"}, {"catalog_path", "c.ndjson"}}, "/base");
    EXPECT_EQ(c.search.k, 10u);
    EXPECT_EQ(c.search.threshold, -1.0);
    EXPECT_EQ(c.index.nprobe, 10u);
    EXPECT_EQ(c.index.M, 16u);
    EXPECT_EQ(c.index.ef_construction, 200u);
    EXPECT_EQ(c.index.ef_search, 100u);
    EXPECT_EQ(c.seed, 42u);
    EXPECT_EQ(c.index.type, Backend::Flat);
    EXPECT_EQ(c.objective, Objective::MaxPrecision);
    EXPECT_EQ(c.grid.dims, (std::vector<std::size_t>{256, 512, 1024}));
    EXPECT_EQ(c.grid.thresholds, (std::vector<double>{0.7, 0.8, 0.9}));
    EXPECT_EQ(c.grid.models, (std::vector<std::string>{"default"}));
    EXPECT_EQ(c.embedding_file("minilm"), fs::path("/base/e/minilm.vsem"));
    EXPECT_EQ(c.catalog_file(), fs::path("/base/c.ndjson"));
    EXPECT_FALSE(c.embedder_url.has_value());
}

TEST(Config, FullDocument) {
    const json j = json::parse(R"({
        "embedding_path": "/abs/emb.vsem", "catalog_path": "cat.ndjson", "subset": 1000,
        "index": {"type": "hnsw", "dim": 256, "M": 8, "ef_construction": 100, "ef_search": 50, "nlist": 20, "nprobe": 4},
        "search": {"k": 5, "threshold": 0.8},
        "grid": {"dims": [256], "thresholds": [0.8], "models": ["a", "b"], "index_types": ["flat", "ivf"]},
        "objective": "precision_per_time", "seed": 7, "embedder_url": "http://localhost:1"})");
    const auto c = cli::parse_config(j, "/base");
    EXPECT_EQ(c.subset, std::size_t{1000});
    EXPECT_EQ(c.index.type, Backend::Hnsw);
    EXPECT_EQ(c.index.dim, std::size_t{256});
    EXPECT_EQ(c.index.nlist, 20u);
    EXPECT_EQ(c.search.k, 5u);
    EXPECT_EQ(c.grid.index_types, (std::vector<Backend>{Backend::Flat, Backend::Ivf}));
    EXPECT_EQ(c.objective, Objective::PrecisionPerTime);
    EXPECT_EQ(c.seed, 7u);
    EXPECT_EQ(c.embedding_file("a"), fs::path("/abs/emb.vsem"));
    EXPECT_EQ(*c.embedder_url, "http://localhost:1");
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    const json base{{"embedding_path", "e"}, {"catalog_path", "c"}};
    auto with = [&](const json& extra) {
        json j = base;
        j.update(extra, true);
        return j;
    };
    EXPECT_VSEARCH_ERROR(cli::parse_config(with({{"colour", 1}}), ""), ErrorCode::ConfigError);
    EXPECT_VSEARCH_ERROR(cli::parse_config(with({{"index", {{"efSearch", 1}}}}), ""), ErrorCode::ConfigError);
    EXPECT_VSEARCH_ERROR(cli::parse_config(with({{"search", {{"top", 1}}}}), ""), ErrorCode::ConfigError);
    EXPECT_VSEARCH_ERROR(cli::parse_config(with({{"grid", {{"sizes", {1}}}}}), ""), ErrorCode::ConfigError);
    EXPECT_VSEARCH_ERROR(cli::parse_config(with({{"index", {{"M", 1}}}}), ""), ErrorCode::ConfigError);
    EXPECT_VSEARCH_ERROR(cli::parse_config(with({{"index", {{"type", "lsh"}}}}), ""), ErrorCode::ConfigError);
    EXPECT_VSEARCH_ERROR(cli::parse_config(with({{"search", {{"k", 0}}}}), ""), ErrorCode::ConfigError);
    EXPECT_VSEARCH_ERROR(cli::parse_config(with({{"search", {{"k", "10"}}}}), ""), ErrorCode::ConfigError);
    EXPECT_VSEARCH_ERROR(cli::parse_config(with({{"search", {{"threshold", 1.5}}}}), ""), ErrorCode::ConfigError);
    EXPECT_VSEARCH_ERROR(cli::parse_config(with({{"grid", {{"dims", json::array()}}}}), ""), ErrorCode::ConfigError);
    EXPECT_VSEARCH_ERROR(cli::parse_config(with({{"objective", "fastest"}}), ""), ErrorCode::ConfigError);
    EXPECT_VSEARCH_ERROR(cli::parse_config(with({{"seed", -1}}), ""), ErrorCode::ConfigError);
    EXPECT_VSEARCH_ERROR(cli::parse_config(json{{"catalog_path", "c"}}, ""), ErrorCode::ConfigError);
    EXPECT_VSEARCH_ERROR(cli::parse_config(json::array(), ""), ErrorCode::ConfigError);
}

TEST(Config, OverridesApply) {
    auto c = cli::parse_config(json{{"embedding_path", "e"}, {"catalog_path", "c"}}, "");
    cli::apply(c, {std::uint64_t{9}, Backend::Ivf, std::size_t{3}, 0.5});
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.index.type, Backend::Ivf);
    EXPECT_EQ(c.grid.index_types, std::vector<Backend>{Backend::Ivf});
    EXPECT_EQ(c.search.k, 3u);
    EXPECT_EQ(c.search.threshold, 0.5);
    EXPECT_VSEARCH_ERROR(cli::apply(c, {std::nullopt, std::nullopt, std::nullopt, 2.0}), ErrorCode::ConfigError);
}

// ---------------------------------------------------------------------------

TEST(EmbedderClient, ContractRoundTrip) {
    FakeEmbedder server(8);
    const cli::EmbedderClient client(server.url());
    const auto v = client.embed({"hello", "world", "hello"}, "minilm");
    ASSERT_EQ(v.size(), 3u);
    EXPECT_EQ(v[0].dim(), 8u);
    EXPECT_EQ(v[0], v[2]);
    EXPECT_NEAR(cosine_similarity(v[0], v[2]), 1.0, 1e-12);
    EXPECT_EQ(server.last_model, "minilm");
}

TEST(EmbedderClient, ServerErrorStatusesSurface) {
    FakeEmbedder server(8);
    httplib::Client raw("127.0.0.1", std::stoi(server.url().substr(server.url().rfind(':') + 1)));
    auto empty = raw.Post("/embed", R"({"texts":[],"model":"m"})", "application/json");
    ASSERT_TRUE(empty);
    EXPECT_EQ(empty->status, 422);
    auto malformed = raw.Post("/embed", "{nope", "application/json");
    ASSERT_TRUE(malformed);
    EXPECT_EQ(malformed->status, 400);

    const cli::EmbedderClient client(server.url());
    EXPECT_VSEARCH_ERROR((void)client.embed({}, "m"), ErrorCode::InvalidParam);
    server.override_body = R"({"dim": 8})";
    EXPECT_VSEARCH_ERROR((void)client.embed({"a"}, "m"), ErrorCode::EmbedderError);
}

TEST(EmbedderClient, UnreachableServer) {
    const cli::EmbedderClient client("http://127.0.0.1:1", 2.0);
    EXPECT_VSEARCH_ERROR((void)client.embed({"a"}, "m"), ErrorCode::EmbedderError);
    EXPECT_VSEARCH_ERROR(cli::EmbedderClient("localhost:80"), ErrorCode::EmbedderError);
}

TEST(EmbedderClient, ResponseValidation) {
    const json good{{"dim", 2}, {"vectors", {{0.6, 0.8}, {1.0, 0.0}}}};
    EXPECT_EQ(cli::parse_embed_response(good, 2).size(), 2u);
    EXPECT_VSEARCH_ERROR(cli::parse_embed_response(good, 3), ErrorCode::EmbedderError);
    EXPECT_VSEARCH_ERROR(cli::parse_embed_response(json{{"dim", 3}, {"vectors", {{0.6, 0.8}}}}, 1),
                         ErrorCode::EmbedderError);
    EXPECT_VSEARCH_ERROR(cli::parse_embed_response(json{{"dim", 2}, {"vectors", {{3.0, 4.0}}}}, 1),
                         ErrorCode::EmbedderError);
    EXPECT_VSEARCH_ERROR(cli::parse_embed_response(json{{"dim", 2}, {"vectors", {{0.0, 0.0}}}}, 1),
                         ErrorCode::EmbedderError);
    EXPECT_VSEARCH_ERROR(cli::parse_embed_response(json{{"dim", 2}, {"vectors", {{"a", 1}}}}, 1),
                         ErrorCode::EmbedderError);
    EXPECT_VSEARCH_ERROR(cli::parse_embed_response(json{{"dim", 0}, {"vectors", json::array()}}, 0),
                         ErrorCode::EmbedderError);
    EXPECT_VSEARCH_ERROR(cli::parse_embed_response(json::array(), 0), ErrorCode::EmbedderError);
}

TEST(EmbedderClient, SchemaFileDescribesResponse) {
    const auto schema = read_json(fs::path(VSEARCH_FIXTURE_DIR) / ".." / ".." / "tools" / "schema" /
                                  "embed_response.schema.json");
    EXPECT_EQ(schema["required"], (json{"dim", "vectors"}));
    EXPECT_EQ(schema["properties"]["dim"]["type"], "integer");
}

// ---------------------------------------------------------------------------

TEST(Cli, UsageAndErrorLines) {
    auto r = run_cli({});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.err.rfind("error: Usage: ", 0), 0u) << r.err;

    TempDir dir;
    r = run_cli({"tune", "--config", (dir / "missing.json").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(r.err, "error: Io: cannot open config '" + (dir / "missing.json").string() + "'\n");

    std::ofstream(dir / "bad.json") << R"({"embedding_path":"e","catalog_path":"c","extra":1})";
    r = run_cli({"build", "--config", (dir / "bad.json").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(r.err.rfind("error: ConfigError: ", 0), 0u) << r.err;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);

    std::ofstream(dir / "ok.json") << R"({"embedding_path":"nope.vsem","catalog_path":"nope.ndjson"})";
    r = run_cli({"build", "--config", (dir / "ok.json").string(), "--out", (dir / "o").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(r.err.rfind("error: Io: ", 0), 0u) << r.err;

    r = run_cli({"build", "--config", (dir / "ok.json").string(), "--backend", "lsh"});
    EXPECT_EQ(r.err.rfind("error: InvalidParam: ", 0), 0u) << r.err;

    r = run_cli({"search", "--config", (dir / "ok.json").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.err, "error: Usage: search needs exactly one of --query or --text\n");
}

TEST(Cli, IngestValidatesFiles) {
    TempDir dir;
    const auto d = testing::clustered(60, 8, 3, 0.5, 1);
    const auto cfg = write_corpus(dir, d, {"a", "b"});
    auto r = run_cli({"ingest", "--config", cfg.string(), "--out", (dir / "out").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto summary = read_json(dir / "out" / "ingest.json");
    EXPECT_EQ(summary["catalog"]["records"], 60);
    EXPECT_EQ(summary["catalog"]["labels"].size(), 3u);
    ASSERT_EQ(summary["models"].size(), 2u);
    EXPECT_EQ(summary["models"][0]["dim"], 8);
    EXPECT_EQ(summary["models"][0]["source"], "file");
    EXPECT_EQ(summary["models"][0]["non_unit_rows"], 0);

    write_embeddings(dir / "emb-b.vsem", to_matrix(testing::random_unit(59, 8, 2).rows));
    r = run_cli({"ingest", "--config", cfg.string(), "--out", (dir / "out").string()});
    EXPECT_EQ(r.err.rfind("error: RowOutOfRange: ", 0), 0u) << r.err;
}

TEST(Cli, IngestComputesMissingEmbeddingsOnceThroughEmbedder) {
    FakeEmbedder server(12);
    TempDir dir;
    const auto d = testing::clustered(70, 8, 2, 0.5, 1);
    const auto cfg = write_corpus(dir, d, {"m"}, json{{"embedding_path", "cache/{model}.vsem"}, {"embedder_url", server.url()}});
    auto r = run_cli({"ingest", "--config", cfg.string(), "--out", (dir / "out").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(server.requests, 2);  // 70 titles in batches of 64
    auto first = read_json(dir / "out" / "ingest.json")["models"][0];
    EXPECT_EQ(first["source"], "embedder");
    EXPECT_EQ(first["dim"], 12);
    const auto m = read_embeddings(dir / "cache" / "m.vsem");
    EXPECT_EQ(m.row(5)[0], static_cast<float>(fake_vector("title 5", 12)[0]));

    r = run_cli({"ingest", "--config", cfg.string(), "--out", (dir / "out").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(server.requests, 2);
    auto second = read_json(dir / "out" / "ingest.json")["models"][0];
    EXPECT_EQ(second["source"], "cache");
    EXPECT_EQ(second["content_hash"], first["content_hash"]);
}

TEST(Cli, BuildWritesSnapshotsAndStats) {
    TempDir dir;
    const auto cfg = write_corpus(dir, testing::clustered(300, 16, 4, 0.6, 3), {"a"});
    for (const char* backend : {"flat", "ivf", "hnsw"}) {
        const auto out = dir / (std::string("out-") + backend);
        auto r = run_cli({"build", "--config", cfg.string(), "--out", out.string(), "--backend", backend});
        ASSERT_EQ(r.code, 0) << r.err;
        EXPECT_NO_THROW((void)load_index(out / "index.vsix"));
        const auto stats = read_json(out / "build.json");
        EXPECT_EQ(stats["documents"], 300);
        EXPECT_EQ(stats["backend"], backend);
        EXPECT_NE(r.out.find("built"), std::string::npos);
    }
    EXPECT_EQ(read_json(dir / "out-ivf" / "build.json")["ivf"]["nlist"], 18);
    auto r = run_cli({"build", "--config", cfg.string(), "--out", (dir / "hy").string(), "--backend", "hybrid"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "hy" / "index.ivf.vsix"));
    EXPECT_TRUE(fs::exists(dir / "hy" / "index.hnsw.vsix"));
}

TEST(Cli, SearchSaturatesOnTinyCorpus) {
    TempDir dir;
    const auto d = testing::clustered(3, 4, 1, 0.5, 4);
    const auto cfg = write_corpus(dir, d, {"a"});
    write_embeddings(dir / "q.vsem", to_matrix({d.rows[1]}));
    auto r = run_cli({"search", "--config", cfg.string(), "--out", (dir / "o").string(), "--k", "5", "--query",
                      (dir / "q.vsem").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto res = read_json(dir / "o" / "results.json");
    ASSERT_EQ(res["hits"].size(), 3u);
    EXPECT_EQ(res["hits"][0]["id"], "doc1");
    EXPECT_EQ(res["hits"][0]["rank"], 0);
    EXPECT_EQ(json::parse(r.out), res);
}

TEST(Cli, SearchFromSnapshotMatchesFreshBuildAndMergesRows) {
    TempDir dir;
    const auto d = testing::clustered(400, 16, 4, 0.8, 5);
    const auto cfg = write_corpus(dir, d, {"a"}, json{{"index", {{"type", "hnsw"}}}});
    ASSERT_EQ(run_cli({"build", "--config", cfg.string(), "--out", (dir / "b").string()}).code, 0);
    write_embeddings(dir / "q.vsem", to_matrix({d.rows[10], d.rows[200]}));
    const std::vector<std::string> common{"search", "--config", cfg.string(), "--query", (dir / "q.vsem").string(),
                                          "--k", "8", "--threshold", "0.1"};
    auto with = [&](std::vector<std::string> extra, const std::string& out) {
        auto args = common;
        args.insert(args.end(), extra.begin(), extra.end());
        args.insert(args.end(), {"--out", (dir / out).string()});
        return run_cli(args);
    };
    ASSERT_EQ(with({}, "fresh").code, 0);
    auto r = with({"--index", (dir / "b" / "index.vsix").string()}, "snap");
    ASSERT_EQ(r.code, 0) << r.err;
    auto fresh = read_json(dir / "fresh" / "results.json");
    auto snap = read_json(dir / "snap" / "results.json");
    EXPECT_EQ(fresh["hits"], snap["hits"]);
    EXPECT_EQ(snap["query_vectors"], 2);
    std::set<std::string> ids;
    for (const auto& h : snap["hits"]) ids.insert(h["id"].get<std::string>());
    EXPECT_TRUE(ids.contains("doc10"));
    EXPECT_TRUE(ids.contains("doc200"));

    r = with({"--index", (dir / "b" / "index.vsix").string(), "--backend", "ivf"}, "missing");
    EXPECT_EQ(r.err.rfind("error: BackendMissing: ", 0), 0u) << r.err;
}

TEST(Cli, SearchByTextUsesEmbedder) {
    FakeEmbedder server(8);
    TempDir dir;
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 20; ++i) rows.push_back(fake_vector("title " + std::to_string(i), 8));
    testing::Dataset d{rows, std::vector<int>(20, 0)};
    const auto cfg = write_corpus(dir, d, {"mini"}, json{{"embedder_url", server.url()}});
    auto r = run_cli({"search", "--config", cfg.string(), "--out", (dir / "o").string(), "--text", "title 7"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto res = read_json(dir / "o" / "results.json");
    EXPECT_EQ(res["hits"][0]["id"], "doc7");
    EXPECT_EQ(server.last_model, "mini");

    r = run_cli({"search", "--config", cfg.string(), "--out", (dir / "o").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.err.rfind("error: Usage: ", 0), 0u) << r.err;
}

TEST(Cli, TuneWritesNineRowsForThreeByThreeGrid) {
    TempDir dir;
    const auto cfg = write_corpus(dir, testing::clustered(120, 32, 4, 0.5, 6), {"a"},
                                  json{{"grid", {{"dims", {8, 16, 32}}, {"models", {"a"}}}}});
    auto r = run_cli({"tune", "--config", cfg.string(), "--out", (dir / "o").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream csv(dir / "o" / "trials.csv");
    const auto rows = read_trials_csv(csv);
    EXPECT_EQ(rows.size(), 9u);
    EXPECT_NE(r.out.find("best (max_precision): model=a"), std::string::npos) << r.out;
    const auto j = read_json(dir / "o" / "trials.json");
    EXPECT_EQ(j["trials"].size(), 9u);
    EXPECT_TRUE(j["failed"].empty());
}

TEST(Cli, BenchFlatAgainstItselfIsExact) {
    TempDir dir;
    const auto cfg = write_corpus(dir, testing::clustered(150, 16, 3, 0.7, 7), {"a"});
    auto r = run_cli({"bench", "--config", cfg.string(), "--out", (dir / "o").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto b = read_json(dir / "o" / "bench.json");
    EXPECT_EQ(b["recall_at_10"], 1.0);
    EXPECT_EQ(b["recall_at_100"], 1.0);
    EXPECT_EQ(b["queries"], 150);
    const auto cdf = read_text(dir / "o" / "cdf.csv");
    EXPECT_EQ(cdf.rfind("time_s,cum_fraction\n", 0), 0u);
    EXPECT_NE(cdf.find(",1\n"), std::string::npos);

    r = run_cli({"bench", "--config", cfg.string(), "--out", (dir / "o2").string(), "--backend", "hnsw"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_GE(read_json(dir / "o2" / "bench.json")["recall_at_10"].get<double>(), 0.95);
}

}  // namespace
}  // namespace vsearch
