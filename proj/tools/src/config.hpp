#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vsearch/engine.hpp"
#include "vsearch/evaluation.hpp"

namespace vsearch::cli {

struct IndexConfig {
    Backend type = Backend::Flat;
    /// Target dimension for build/search/bench; embeddings are truncated or padded.
    std::optional<std::size_t> dim;
    std::size_t M = 16;
    std::size_t ef_construction = 200;
    std::size_t ef_search = 100;
    std::size_t nlist = 0;  // 0: ceil(sqrt(N))
    std::size_t nprobe = kDefaultNprobe;
};

struct SearchConfig {
    std::size_t k = 10;
    double threshold = -1.0;
};

struct RunConfig {
    /// May contain "{model}", replaced by the model name.
    std::string embedding_path;
    std::filesystem::path catalog_path;
    std::optional<std::size_t> subset;
    IndexConfig index;
    SearchConfig search;
    ParameterGrid grid;
    /// False when grid.index_types was defaulted from index.type.
    bool grid_index_types_set = false;
    Objective objective = Objective::MaxPrecision;
    std::uint64_t seed = 42;
    std::optional<std::string> embedder_url;
    /// Directory relative paths are resolved against.
    std::filesystem::path base_dir;

    [[nodiscard]] std::filesystem::path embedding_file(const std::string& model) const;
    [[nodiscard]] std::filesystem::path catalog_file() const;
    /// Model used by build, search and bench: the first grid model.
    [[nodiscard]] const std::string& primary_model() const { return grid.models.front(); }
    [[nodiscard]] EngineOptions engine_options() const;
    [[nodiscard]] EvaluationSettings evaluation_settings() const;
};

/// Throws ConfigError on unknown keys, wrong types or out-of-range values.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<Backend> backend;
    std::optional<std::size_t> k;
    std::optional<double> threshold;
};

void apply(RunConfig& config, const Overrides& overrides);

}  // namespace vsearch::cli
