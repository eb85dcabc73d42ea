#include "config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

#include "vsearch/error.hpp"

namespace vsearch::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    fail(ErrorCode::ConfigError, where + ": " + what);
}

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) bad(where, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items()) {
        if (!ok.contains(key)) bad(where, "unknown key '" + key + "'");
    }
}

std::string join(const std::string& where, const char* key) {
    return where.empty() ? key : where + "." + key;
}

std::size_t as_count(const json& v, const std::string& where, bool allow_zero = false) {
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0)) {
        bad(where, "expected a non-negative integer");
    }
    const auto n = v.get<std::uint64_t>();
    if (n == 0 && !allow_zero) bad(where, "must be positive");
    return static_cast<std::size_t>(n);
}

double as_real(const json& v, const std::string& where) {
    if (!v.is_number()) bad(where, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) bad(where, "must be finite");
    return x;
}

std::string as_string(const json& v, const std::string& where) {
    if (!v.is_string()) bad(where, "expected a string");
    return v.get<std::string>();
}

const json& array_at(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) bad(where, "expected a non-empty array");
    return v;
}

Backend as_backend(const json& v, const std::string& where) {
    try {
        return parse_backend(as_string(v, where));
    } catch (const Error& e) {
        bad(where, e.what());
    }
}

void parse_index(const json& j, IndexConfig& out) {
    const std::string w = "index";
    only_keys(j, w, {"type", "dim", "M", "ef_construction", "ef_search", "nlist", "nprobe"});
    if (j.contains("type")) out.type = as_backend(j["type"], join(w, "type"));
    if (j.contains("dim")) out.dim = as_count(j["dim"], join(w, "dim"));
    if (j.contains("M")) out.M = as_count(j["M"], join(w, "M"));
    if (j.contains("ef_construction")) out.ef_construction = as_count(j["ef_construction"], join(w, "ef_construction"));
    if (j.contains("ef_search")) out.ef_search = as_count(j["ef_search"], join(w, "ef_search"));
    if (j.contains("nlist")) out.nlist = as_count(j["nlist"], join(w, "nlist"), true);
    if (j.contains("nprobe")) out.nprobe = as_count(j["nprobe"], join(w, "nprobe"));
    if (out.M < 2) bad(join(w, "M"), "must be at least 2");
}

void parse_search(const json& j, SearchConfig& out) {
    only_keys(j, "search", {"k", "threshold"});
    if (j.contains("k")) out.k = as_count(j["k"], "search.k");
    if (j.contains("threshold")) {
        out.threshold = as_real(j["threshold"], "search.threshold");
        if (out.threshold < -1.0 || out.threshold > 1.0) bad("search.threshold", "must lie in [-1, 1]");
    }
}

void parse_grid(const json& j, ParameterGrid& out) {
    only_keys(j, "grid", {"dims", "thresholds", "models", "index_types"});
    if (j.contains("dims")) {
        out.dims.clear();
        for (const auto& v : array_at(j["dims"], "grid.dims")) out.dims.push_back(as_count(v, "grid.dims"));
    }
    if (j.contains("thresholds")) {
        out.thresholds.clear();
        for (const auto& v : array_at(j["thresholds"], "grid.thresholds")) {
            out.thresholds.push_back(as_real(v, "grid.thresholds"));
        }
    }
    if (j.contains("models")) {
        out.models.clear();
        for (const auto& v : array_at(j["models"], "grid.models")) {
            auto name = as_string(v, "grid.models");
            if (name.empty()) bad("grid.models", "empty model name");
            out.models.push_back(std::move(name));
        }
    }
    if (j.contains("index_types")) {
        out.index_types.clear();
        for (const auto& v : array_at(j["index_types"], "grid.index_types")) {
            out.index_types.push_back(as_backend(v, "grid.index_types"));
        }
    }
}

fs::path resolve(const fs::path& base, const fs::path& p) {
    return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

fs::path RunConfig::embedding_file(const std::string& model) const {
    std::string p = embedding_path;
    const std::string tag = "{model}";
    for (auto pos = p.find(tag); pos != std::string::npos; pos = p.find(tag, pos + model.size())) {
        p.replace(pos, tag.size(), model);
    }
    return resolve(base_dir, p);
}

fs::path RunConfig::catalog_file() const { return resolve(base_dir, catalog_path); }

EngineOptions RunConfig::engine_options() const {
    EngineOptions o;
    o.ef_search = index.ef_search;
    const IvfBuildOptions ivf{index.nlist, seed};
    const HnswBuildOptions hnsw{index.M, index.ef_construction, seed};
    switch (index.type) {
        case Backend::Flat: break;
        case Backend::Ivf: o.ivf = ivf; break;
        case Backend::Hnsw: o.hnsw = hnsw; break;
        case Backend::Hybrid:
            o.ivf = ivf;
            o.hnsw = hnsw;
            break;
    }
    return o;
}

EvaluationSettings RunConfig::evaluation_settings() const {
    EvaluationSettings s;
    s.k = search.k;
    s.nlist = index.nlist;
    s.nprobe = index.nprobe;
    s.M = index.M;
    s.ef_construction = index.ef_construction;
    s.ef_search = index.ef_search;
    s.seed = seed;
    return s;
}

RunConfig parse_config(const json& j, const fs::path& base_dir) {
    only_keys(j, "config", {"embedding_path", "catalog_path", "subset", "index", "search", "grid", "objective",
                            "seed", "embedder_url"});
    RunConfig c;
    c.base_dir = base_dir;
    c.grid.dims = {256, 512, 1024};
    c.grid.thresholds = {0.7, 0.8, 0.9};

    if (!j.contains("embedding_path")) bad("config", "missing 'embedding_path'");
    if (!j.contains("catalog_path")) bad("config", "missing 'catalog_path'");
    c.embedding_path = as_string(j["embedding_path"], "embedding_path");
    c.catalog_path = as_string(j["catalog_path"], "catalog_path");
    if (j.contains("subset") && !j["subset"].is_null()) c.subset = as_count(j["subset"], "subset");
    if (j.contains("index")) parse_index(j["index"], c.index);
    if (j.contains("search")) parse_search(j["search"], c.search);
    if (j.contains("grid")) parse_grid(j["grid"], c.grid);
    if (j.contains("objective")) {
        try {
            c.objective = parse_objective(as_string(j["objective"], "objective"));
        } catch (const Error& e) {
            bad("objective", e.what());
        }
    }
    if (j.contains("seed")) c.seed = as_count(j["seed"], "seed", true);
    if (j.contains("embedder_url") && !j["embedder_url"].is_null()) {
        c.embedder_url = as_string(j["embedder_url"], "embedder_url");
    }

    if (c.grid.models.empty()) c.grid.models = {"default"};
    c.grid_index_types_set = !c.grid.index_types.empty();
    if (!c.grid_index_types_set) c.grid.index_types = {c.index.type};
    return c;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        bad(path.string(), e.what());
    }
    return parse_config(j, path.parent_path());
}

void apply(RunConfig& config, const Overrides& overrides) {
    if (overrides.seed) config.seed = *overrides.seed;
    if (overrides.backend) {
        config.index.type = *overrides.backend;
        if (!config.grid_index_types_set) config.grid.index_types = {*overrides.backend};
    }
    if (overrides.k) {
        if (*overrides.k == 0) fail(ErrorCode::ConfigError, "--k must be positive");
        config.search.k = *overrides.k;
    }
    if (overrides.threshold) {
        if (!(*overrides.threshold >= -1.0 && *overrides.threshold <= 1.0)) {
            fail(ErrorCode::ConfigError, "--threshold must lie in [-1, 1]");
        }
        config.search.threshold = *overrides.threshold;
    }
}

}  // namespace vsearch::cli
