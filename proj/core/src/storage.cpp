#include "vsearch/storage.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unordered_set>

#include "vsearch/bytes.hpp"
#include "vsearch/error.hpp"

namespace vsearch {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kEmbeddingMagic = "VSEM";
constexpr std::string_view kSnapshotMagic = "VSIX";

void check_magic(ByteReader& in, std::string_view expected) {
    if (in.remaining() < expected.size()) {
        fail(ErrorCode::TruncatedFile, "file too short for magic");
    }
    const std::string magic = in.get_raw(expected.size());
    if (magic != expected) {
        fail(ErrorCode::BadMagic, "expected magic '" + std::string(expected) + "'");
    }
}

std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

IndexType type_of(const AnyIndex& index) {
    return std::visit(
        [](const auto& idx) {
            using T = std::decay_t<decltype(idx)>;
            if constexpr (std::is_same_v<T, FlatIndex>) return IndexType::Flat;
            else if constexpr (std::is_same_v<T, IvfIndex>) return IndexType::Ivf;
            else return IndexType::Hnsw;
        },
        index);
}

template <typename T>
T load_typed(const fs::path& path, IndexType expected) {
    AnyIndex any = load_index(path);
    if (type_of(any) != expected) {
        fail(ErrorCode::TypeMismatch, "snapshot holds a " + std::string(to_string(type_of(any))) +
                                          " index, expected " + std::string(to_string(expected)));
    }
    return std::get<T>(std::move(any));
}

}  // namespace

std::uint32_t crc32(std::span<const std::byte> bytes) noexcept {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in chunks.
    std::size_t offset = 0;
    while (offset < bytes.size()) {
        const std::size_t n = std::min<std::size_t>(bytes.size() - offset, 1u << 30);
        crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + offset), static_cast<uInt>(n));
        offset += n;
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::byte> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::byte> out(raw.size());
    std::transform(raw.begin(), raw.end(), out.begin(), [](char c) { return static_cast<std::byte>(c); });
    return out;
}

void write_file_atomic(const fs::path& path, std::span<const std::byte> bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::Io, "cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) fail(ErrorCode::Io, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Embedding files

Embedding EmbeddingMatrix::embedding(std::size_t i) const {
    auto r = row(i);
    return Embedding(std::vector<double>(r.begin(), r.end()));
}

EmbeddingMatrix EmbeddingMatrix::from_rows(std::span<const std::vector<float>> rows) {
    EmbeddingMatrix m;
    m.count = static_cast<std::uint32_t>(rows.size());
    m.dim = rows.empty() ? 0 : static_cast<std::uint32_t>(rows.front().size());
    m.data.reserve(static_cast<std::size_t>(m.count) * m.dim);
    for (const auto& r : rows) {
        if (r.size() != m.dim) fail(ErrorCode::DimMismatch, "rows have mixed dimensions");
        m.data.insert(m.data.end(), r.begin(), r.end());
    }
    return m;
}

std::vector<std::byte> encode_embeddings(const EmbeddingMatrix& m) {
    if (m.data.size() != static_cast<std::size_t>(m.count) * m.dim) {
        fail(ErrorCode::DimMismatch, "matrix payload does not match count x dim");
    }
    ByteWriter out;
    out.put_raw(kEmbeddingMagic);
    out.put_u32(kEmbeddingFormatVersion);
    out.put_u32(m.count);
    out.put_u32(m.dim);
    for (float x : m.data) out.put_f32(x);
    return std::move(out).take();
}

EmbeddingMatrix decode_embeddings(std::span<const std::byte> bytes) {
    ByteReader in(bytes);
    check_magic(in, kEmbeddingMagic);
    const std::uint32_t version = in.get_u32();
    if (version != kEmbeddingFormatVersion) {
        fail(ErrorCode::VersionUnsupported, "embedding format version " + std::to_string(version));
    }
    EmbeddingMatrix m;
    m.count = in.get_u32();
    m.dim = in.get_u32();
    const std::uint64_t payload = 4ull * m.count * m.dim;
    if (in.remaining() < payload) {
        fail(ErrorCode::TruncatedFile, "embedding payload needs " + std::to_string(payload) +
                                           " bytes, file has " + std::to_string(in.remaining()));
    }
    if (in.remaining() > payload) {
        fail(ErrorCode::CorruptFile, "trailing bytes after embedding payload");
    }
    m.data.resize(static_cast<std::size_t>(m.count) * m.dim);
    for (float& x : m.data) x = in.get_f32();
    return m;
}

std::uint32_t content_hash(const EmbeddingMatrix& m) { return crc32(encode_embeddings(m)); }

std::uint32_t write_embeddings(const fs::path& path, const EmbeddingMatrix& m) {
    const auto bytes = encode_embeddings(m);
    write_file_atomic(path, bytes);
    return crc32(bytes);
}

EmbeddingMatrix read_embeddings(const fs::path& path) { return decode_embeddings(read_file(path)); }

// ---------------------------------------------------------------------------
// Catalog

std::vector<DocumentRecord> read_catalog(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());

    std::vector<DocumentRecord> records;
    std::unordered_set<std::string> ids;
    std::unordered_set<std::uint32_t> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = "line " + std::to_string(line_no) + ": ";
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            fail(ErrorCode::ParseError, where + e.what());
        }
        DocumentRecord rec;
        try {
            rec.id = j.at("id").get<std::string>();
            rec.title = j.at("title").get<std::string>();
            rec.label = j.at("label").get<std::string>();
            if (j.contains("text") && !j["text"].is_null()) rec.text = j["text"].get<std::string>();
            const auto& row = j.at("row");
            if (!row.is_number_unsigned()) fail(ErrorCode::ParseError, where + "row must be a non-negative integer");
            rec.row = row.get<std::uint32_t>();
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::ParseError, where + e.what());
        }
        if (!ids.insert(rec.id).second) fail(ErrorCode::DuplicateId, where + "duplicate id '" + rec.id + "'");
        if (!rows.insert(rec.row).second) {
            fail(ErrorCode::DuplicateRow, where + "duplicate row " + std::to_string(rec.row));
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void write_catalog(const fs::path& path, std::span<const DocumentRecord> records) {
    std::ostringstream out;
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["id"] = r.id;
        j["title"] = r.title;
        if (!r.text.empty()) j["text"] = r.text;
        j["label"] = r.label;
        j["row"] = r.row;
        out << j.dump() << '\n';
    }
    const std::string s = out.str();
    write_file_atomic(path, std::as_bytes(std::span(s.data(), s.size())));
}

void validate_catalog_dense(std::span<const DocumentRecord> records, std::uint32_t embedding_count) {
    if (records.size() != embedding_count) {
        fail(ErrorCode::RowOutOfRange, "catalog has " + std::to_string(records.size()) +
                                           " records for " + std::to_string(embedding_count) +
                                           " embedding rows");
    }
    std::vector<bool> seen(embedding_count, false);
    for (const auto& r : records) {
        if (r.row >= embedding_count) {
            fail(ErrorCode::RowOutOfRange, "record '" + r.id + "' row " + std::to_string(r.row) +
                                               " >= " + std::to_string(embedding_count));
        }
        if (seen[r.row]) fail(ErrorCode::DuplicateRow, "row " + std::to_string(r.row) + " repeated");
        seen[r.row] = true;
    }
}

Corpus load_corpus(const fs::path& embedding_path, const fs::path& catalog_path,
                   std::optional<std::size_t> subset) {
    const auto bytes = read_file(embedding_path);
    const EmbeddingMatrix matrix = decode_embeddings(bytes);
    std::vector<DocumentRecord> records = read_catalog(catalog_path);
    if (subset && *subset < records.size()) records.resize(*subset);

    Corpus corpus;
    corpus.content_hash = crc32(bytes);
    corpus.embeddings.reserve(records.size());
    for (const auto& r : records) {
        if (r.row >= matrix.count) {
            fail(ErrorCode::RowOutOfRange, "record '" + r.id + "' row " + std::to_string(r.row) +
                                               " but embedding file has " +
                                               std::to_string(matrix.count) + " rows");
        }
        corpus.embeddings.push_back(matrix.embedding(r.row));
    }
    corpus.records = std::move(records);
    return corpus;
}

// ---------------------------------------------------------------------------
// Embedding cache

EmbeddingCache::EmbeddingCache(fs::path directory) : dir_(std::move(directory)) {
    fs::create_directories(dir_);
}

fs::path EmbeddingCache::path_for(const std::string& key) const {
    const bool ok = !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    });
    if (!ok) fail(ErrorCode::InvalidParam, "invalid cache key '" + key + "'");
    return dir_ / (key + ".vsem");
}

bool EmbeddingCache::contains(const std::string& key) const {
    auto p = path_for(key);
    fs::path sidecar = p;
    sidecar += ".crc32";
    return fs::exists(p) && fs::exists(sidecar);
}

EmbeddingCache::Entry EmbeddingCache::get_or_compute(const std::string& key,
                                                     const std::function<EmbeddingMatrix()>& compute) {
    const fs::path file = path_for(key);
    fs::path sidecar = file;
    sidecar += ".crc32";

    if (contains(key)) {
        const auto bytes = read_file(file);
        const std::uint32_t actual = crc32(bytes);
        std::ifstream in(sidecar);
        std::string recorded;
        in >> recorded;
        if (recorded != hex32(actual)) {
            fail(ErrorCode::ChecksumMismatch, "cached embeddings '" + key + "' changed since written");
        }
        return {decode_embeddings(bytes), actual, true};
    }

    EmbeddingMatrix m = compute();
    const std::uint32_t hash = write_embeddings(file, m);
    const std::string text = hex32(hash) + "\n";
    write_file_atomic(sidecar, std::as_bytes(std::span(text.data(), text.size())));
    return {std::move(m), hash, false};
}

// ---------------------------------------------------------------------------
// Index snapshots

std::string_view to_string(IndexType t) noexcept {
    switch (t) {
        case IndexType::Flat: return "flat";
        case IndexType::Ivf: return "ivf";
        case IndexType::Hnsw: return "hnsw";
    }
    return "unknown";
}

std::vector<std::byte> encode_snapshot(const AnyIndex& index) {
    ByteWriter body;
    std::size_t dim = 0;
    std::visit(
        [&](const auto& idx) {
            if (!idx.frozen()) fail(ErrorCode::NotFrozen, "only frozen indexes can be saved");
            dim = idx.dim();
            idx.serialize(body);
        },
        index);

    ByteWriter out;
    out.put_raw(kSnapshotMagic);
    out.put_u32(kSnapshotFormatVersion);
    out.put_u32(static_cast<std::uint32_t>(type_of(index)));
    out.put_u32(static_cast<std::uint32_t>(dim));
    out.put_u64(body.size());
    out.put_bytes(body.bytes());
    out.put_u32(crc32(body.bytes()));
    return std::move(out).take();
}

AnyIndex decode_snapshot(std::span<const std::byte> bytes) {
    ByteReader in(bytes);
    check_magic(in, kSnapshotMagic);
    const std::uint32_t version = in.get_u32();
    if (version != kSnapshotFormatVersion) {
        fail(ErrorCode::VersionUnsupported, "snapshot format version " + std::to_string(version));
    }
    const std::uint32_t tag = in.get_u32();
    const std::uint32_t dim = in.get_u32();
    const std::uint64_t body_len = in.get_u64();
    if (in.remaining() < body_len + 4) fail(ErrorCode::TruncatedFile, "snapshot body truncated");
    if (in.remaining() > body_len + 4) fail(ErrorCode::CorruptFile, "trailing bytes after snapshot");
    const auto body = in.take(static_cast<std::size_t>(body_len));
    const std::uint32_t stored = in.get_u32();
    if (crc32(body) != stored) fail(ErrorCode::ChecksumMismatch, "snapshot body checksum mismatch");

    ByteReader body_in(body);
    auto finish = [&](auto&& index) -> AnyIndex {
        if (body_in.remaining() != 0) fail(ErrorCode::CorruptFile, "unparsed bytes in snapshot body");
        return AnyIndex(std::forward<decltype(index)>(index));
    };
    switch (static_cast<IndexType>(tag)) {
        case IndexType::Flat: return finish(FlatIndex::deserialize(body_in, dim));
        case IndexType::Ivf: return finish(IvfIndex::deserialize(body_in, dim));
        case IndexType::Hnsw: return finish(HnswIndex::deserialize(body_in, dim));
    }
    fail(ErrorCode::CorruptFile, "unknown index type tag " + std::to_string(tag));
}

void save_index(const fs::path& path, const AnyIndex& index) {
    write_file_atomic(path, encode_snapshot(index));
}

AnyIndex load_index(const fs::path& path) { return decode_snapshot(read_file(path)); }

FlatIndex load_flat_index(const fs::path& path) { return load_typed<FlatIndex>(path, IndexType::Flat); }
IvfIndex load_ivf_index(const fs::path& path) { return load_typed<IvfIndex>(path, IndexType::Ivf); }
HnswIndex load_hnsw_index(const fs::path& path) { return load_typed<HnswIndex>(path, IndexType::Hnsw); }

}  // namespace vsearch
