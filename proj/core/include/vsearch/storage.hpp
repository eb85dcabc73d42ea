#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "vsearch/document.hpp"
#include "vsearch/flat_index.hpp"
#include "vsearch/hnsw_index.hpp"
#include "vsearch/ivf_index.hpp"

namespace vsearch {

// Embedding file ("VSEM"), all integers little-endian:
//   offset 0   char[4]  magic "VSEM"
//   offset 4   u32      format version (1)
//   offset 8   u32      count
//   offset 12  u32      dim
//   offset 16  f32[count * dim], row-major
// File size is exactly 16 + 4 * count * dim.
inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

// Index snapshot ("VSIX"):
//   offset 0   char[4]  magic "VSIX"
//   offset 4   u32      format version (1)
//   offset 8   u32      index type tag (IndexType)
//   offset 12  u32      dim
//   offset 16  u64      body length L
//   offset 24  u8[L]    body: index parameters followed by its structure
//   offset 24+L u32     CRC-32 of the body
inline constexpr std::uint32_t kSnapshotFormatVersion = 1;

/// Row-major matrix of 32-bit floats, the on-disk representation of embeddings.
struct EmbeddingMatrix {
    std::uint32_t count = 0;
    std::uint32_t dim = 0;
    std::vector<float> data;

    [[nodiscard]] std::span<const float> row(std::size_t i) const {
        return std::span<const float>(data).subspan(i * dim, dim);
    }
    /// Row promoted to double precision.
    [[nodiscard]] Embedding embedding(std::size_t i) const;

    static EmbeddingMatrix from_rows(std::span<const std::vector<float>> rows);

    friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;
};

std::uint32_t crc32(std::span<const std::byte> bytes) noexcept;

/// Encodes to the VSEM layout.
std::vector<std::byte> encode_embeddings(const EmbeddingMatrix& m);
/// Throws BadMagic, VersionUnsupported, TruncatedFile or CorruptFile (trailing bytes).
EmbeddingMatrix decode_embeddings(std::span<const std::byte> bytes);

/// Atomic write (temp file + rename). Returns the content hash of the written file.
std::uint32_t write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m);
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);
/// CRC-32 of the encoded file; identical for a matrix and its round-trip.
std::uint32_t content_hash(const EmbeddingMatrix& m);

/// NDJSON catalog, one {"id","title","text"?,"label","row"} object per line.
/// Throws ParseError (with 1-based line number), DuplicateId, DuplicateRow.
std::vector<DocumentRecord> read_catalog(const std::filesystem::path& path);
void write_catalog(const std::filesystem::path& path, std::span<const DocumentRecord> records);
/// Rows must be exactly {0, ..., embedding_count - 1}. Throws RowOutOfRange otherwise.
void validate_catalog_dense(std::span<const DocumentRecord> records, std::uint32_t embedding_count);

/// Joins catalog records with their embedding rows. `subset` keeps the first n
/// records in catalog order. Throws RowOutOfRange, DuplicateId.
Corpus load_corpus(const std::filesystem::path& embedding_path,
                   const std::filesystem::path& catalog_path,
                   std::optional<std::size_t> subset = std::nullopt);

/// Reuses embeddings persisted by an earlier run. The content hash recorded at
/// write time is kept in a sidecar and checked on every hit.
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::filesystem::path directory);

    struct Entry {
        EmbeddingMatrix matrix;
        std::uint32_t content_hash = 0;
        bool hit = false;
    };

    /// Loads `key` if cached, otherwise calls `compute` and persists the result.
    /// Throws ChecksumMismatch if a cached file no longer matches its recorded hash.
    Entry get_or_compute(const std::string& key, const std::function<EmbeddingMatrix()>& compute);

    [[nodiscard]] std::filesystem::path path_for(const std::string& key) const;
    [[nodiscard]] bool contains(const std::string& key) const;

private:
    std::filesystem::path dir_;
};

enum class IndexType : std::uint32_t { Flat = 1, Ivf = 2, Hnsw = 3 };

std::string_view to_string(IndexType t) noexcept;

using AnyIndex = std::variant<FlatIndex, IvfIndex, HnswIndex>;

/// Snapshots require a frozen index (NotFrozen otherwise).
std::vector<std::byte> encode_snapshot(const AnyIndex& index);
/// Throws BadMagic, VersionUnsupported, TruncatedFile, ChecksumMismatch, CorruptFile.
AnyIndex decode_snapshot(std::span<const std::byte> bytes);

void save_index(const std::filesystem::path& path, const AnyIndex& index);
AnyIndex load_index(const std::filesystem::path& path);
/// Typed loaders throw TypeMismatch when the snapshot holds another index type.
FlatIndex load_flat_index(const std::filesystem::path& path);
IvfIndex load_ivf_index(const std::filesystem::path& path);
HnswIndex load_hnsw_index(const std::filesystem::path& path);

/// Whole-file helpers shared with the CLI.
std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes);

}  // namespace vsearch
