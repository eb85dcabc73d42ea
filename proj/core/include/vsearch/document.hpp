#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vsearch/vector.hpp"

namespace vsearch {

/// Catalog entry; `row` is the index of the document's embedding row.
struct DocumentRecord {
    std::string id;
    std::string title;
    std::string text;
    std::string label;
    std::uint32_t row = 0;

    friend bool operator==(const DocumentRecord&, const DocumentRecord&) = default;
};

/// Documents joined 1:1 with their embeddings, in catalog order.
struct Corpus {
    std::vector<DocumentRecord> records;
    std::vector<Embedding> embeddings;
    std::uint32_t content_hash = 0;  // of the embedding file the rows came from

    [[nodiscard]] std::size_t size() const noexcept { return records.size(); }
};

}  // namespace vsearch
