#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "vsearch/evaluation.hpp"

namespace vsearch::cli {

/// Every command writes machine-readable files to `out_dir` and a short
/// human summary to `log`.
struct CommandEnv {
    RunConfig config;
    std::filesystem::path out_dir;
    std::ostream& log;
};

struct IngestedModel {
    std::string model;
    std::filesystem::path path;
    std::uint32_t count = 0;
    std::uint32_t dim = 0;
    std::uint32_t content_hash = 0;
    std::string source;  // "file", "cache" or "embedder"
    std::size_t non_unit_rows = 0;
};

/// Validates the catalog and each model's embedding file. Missing files are
/// computed through the embedder (titles only) when embedder_url is set and
/// kept in an embedding cache next to the configured path. Writes ingest.json.
std::vector<IngestedModel> cmd_ingest(const CommandEnv& env);

struct BuildSummary {
    std::vector<std::filesystem::path> snapshots;
    double build_time_s = 0.0;
};

/// Builds the configured index over the primary model's embeddings and writes
/// index.vsix (hybrid: index.ivf.vsix and index.hnsw.vsix) plus build.json.
BuildSummary cmd_build(const CommandEnv& env);

struct SearchInput {
    /// Embedding file; all rows together form one multi-vector query.
    std::optional<std::filesystem::path> query_file;
    /// Encoded through the embedder, one query vector per text.
    std::vector<std::string> texts;
    /// Snapshots to search instead of building from the corpus.
    std::vector<std::filesystem::path> index_files;
};

/// Writes results.json and prints the same document.
ResultSet cmd_search(const CommandEnv& env, const SearchInput& input);

/// Runs the grid and writes trials.csv and trials.json.
GridOutcome cmd_tune(const CommandEnv& env);

struct BenchInput {
    /// Embedding file with one single-vector query per row; defaults to
    /// every corpus document.
    std::optional<std::filesystem::path> query_file;
};

struct BenchSummary {
    std::size_t queries = 0;
    double recall_at_10 = 0.0;
    double recall_at_100 = 0.0;
    QueryTimeStats times;
};

/// Times the configured backend and scores it against the flat index.
/// Writes cdf.csv and bench.json.
BenchSummary cmd_bench(const CommandEnv& env, const BenchInput& input);

}  // namespace vsearch::cli
