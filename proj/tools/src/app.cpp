#include "app.hpp"

#include <filesystem>
#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "vsearch/error.hpp"

namespace vsearch::cli {

namespace fs = std::filesystem;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Vector-search document retrieval: ingest, build, search, tune, bench", "vsearch"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> backend;
    std::optional<std::size_t> k;
    std::optional<double> threshold;
    app.add_option("--config", config_path, "Run configuration (JSON)")->required();
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--seed", seed, "Overrides the config seed");
    app.add_option("--backend", backend, "flat, ivf, hnsw or hybrid; overrides index.type");
    app.add_option("--k", k, "Overrides search.k");
    app.add_option("--threshold", threshold, "Overrides search.threshold");

    auto* ingest = app.add_subcommand("ingest", "Validate catalog and embedding files; write ingest.json");
    auto* build = app.add_subcommand("build", "Build the configured index and snapshot it");
    auto* search = app.add_subcommand("search", "Run one query; write results.json");
    auto* tune = app.add_subcommand("tune", "Grid search; write trials.csv and trials.json");
    auto* bench = app.add_subcommand("bench", "Latency CDF and recall@10/100 against the flat index");
    for (auto* sub : {ingest, build, search, tune, bench}) sub->fallthrough();

    SearchInput search_input;
    std::string search_query;
    std::vector<std::string> index_files;
    search->add_option("--query", search_query, "Embedding file; its rows form one multi-vector query");
    search->add_option("--text", search_input.texts, "Query text, repeatable (needs embedder_url)");
    search->add_option("--index", index_files, "Index snapshot(s) from build, repeatable");

    std::string bench_query;
    bench->add_option("--query", bench_query, "Embedding file with one query per row (default: every document)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: Usage: " << e.what() << "\n";
        return 2;
    }
    if (search->parsed() && search_query.empty() == search_input.texts.empty()) {
        err << "error: Usage: search needs exactly one of --query or --text\n";
        return 2;
    }

    try {
        RunConfig config = load_config(config_path);
        Overrides overrides{seed, std::nullopt, k, threshold};
        if (backend) overrides.backend = parse_backend(*backend);
        apply(config, overrides);
        const CommandEnv env{std::move(config), fs::path(out_dir), out};

        if (ingest->parsed()) {
            cmd_ingest(env);
        } else if (build->parsed()) {
            cmd_build(env);
        } else if (search->parsed()) {
            if (!search_query.empty()) search_input.query_file = search_query;
            for (const auto& p : index_files) search_input.index_files.emplace_back(p);
            cmd_search(env, search_input);
        } else if (tune->parsed()) {
            cmd_tune(env);
        } else if (bench->parsed()) {
            BenchInput input;
            if (!bench_query.empty()) input.query_file = bench_query;
            cmd_bench(env, input);
        }
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 1;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << to_string(ErrorCode::Io) << ": " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << to_string(ErrorCode::ParseError) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: Internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace vsearch::cli
