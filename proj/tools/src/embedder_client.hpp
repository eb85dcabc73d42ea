#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vsearch/vector.hpp"

namespace vsearch::cli {

/// Client for the text-embedding service.
///
///   POST {base}/embed  {"texts": [string, ...], "model": string}
///   200 -> {"dim": int, "vectors": [[number, ...], ...]}
///
/// Vectors come back unit-normalized; one per text, in request order.
class EmbedderClient {
public:
    /// `base_url` is "http://host:port", optionally followed by a path prefix.
    explicit EmbedderClient(std::string base_url, double timeout_s = 60.0);

    /// Throws InvalidParam on an empty text list and EmbedderError on transport
    /// failures, non-200 statuses and malformed responses.
    [[nodiscard]] std::vector<NormalizedEmbedding> embed(const std::vector<std::string>& texts,
                                                         const std::string& model) const;

private:
    std::string host_;
    std::string prefix_;
    double timeout_s_;
};

/// Checks a decoded /embed response against the request it answers and
/// returns its vectors. Throws EmbedderError.
std::vector<NormalizedEmbedding> parse_embed_response(const nlohmann::json& body, std::size_t expected_count);

/// Allowed distance from unit norm for vectors that crossed the wire as text.
inline constexpr double kWireNormTolerance = 1e-4;

}  // namespace vsearch::cli
