#include "embedder_client.hpp"

#include <cmath>

#include <httplib.h>

#include "vsearch/error.hpp"

namespace vsearch::cli {

using nlohmann::json;

namespace {

[[noreturn]] void embed_fail(const std::string& msg) { fail(ErrorCode::EmbedderError, msg); }

}  // namespace

EmbedderClient::EmbedderClient(std::string base_url, double timeout_s) : timeout_s_(timeout_s) {
    const auto scheme = base_url.find("://");
    if (scheme == std::string::npos) embed_fail("embedder url must start with http://");
    const auto slash = base_url.find('/', scheme + 3);
    host_ = base_url.substr(0, slash);
    if (slash != std::string::npos) {
        prefix_ = base_url.substr(slash);
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }
}

std::vector<NormalizedEmbedding> EmbedderClient::embed(const std::vector<std::string>& texts,
                                                       const std::string& model) const {
    if (texts.empty()) fail(ErrorCode::InvalidParam, "no texts to embed");

    httplib::Client client(host_);
    if (!client.is_valid()) embed_fail("unsupported embedder url '" + host_ + "'");
    const auto secs = static_cast<time_t>(timeout_s_);
    const auto usecs = static_cast<time_t>((timeout_s_ - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);

    const json request{{"texts", texts}, {"model", model}};
    auto res = client.Post(prefix_ + "/embed", request.dump(), "application/json");
    if (!res) embed_fail("request to " + host_ + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        std::string detail = res->body.substr(0, 200);
        embed_fail("embedder returned HTTP " + std::to_string(res->status) + (detail.empty() ? "" : ": " + detail));
    }

    json body;
    try {
        body = json::parse(res->body);
    } catch (const json::parse_error& e) {
        embed_fail(std::string("response is not JSON: ") + e.what());
    }
    return parse_embed_response(body, texts.size());
}

std::vector<NormalizedEmbedding> parse_embed_response(const json& body, std::size_t expected_count) {
    if (!body.is_object()) embed_fail("response is not an object");
    if (!body.contains("dim") || !body["dim"].is_number_integer() || body["dim"].get<std::int64_t>() < 1) {
        embed_fail("response 'dim' must be a positive integer");
    }
    if (!body.contains("vectors") || !body["vectors"].is_array()) embed_fail("response 'vectors' must be an array");

    const auto dim = body["dim"].get<std::size_t>();
    const auto& rows = body["vectors"];
    if (rows.size() != expected_count) {
        embed_fail("expected " + std::to_string(expected_count) + " vectors, got " + std::to_string(rows.size()));
    }

    std::vector<NormalizedEmbedding> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const std::string where = "vector " + std::to_string(i);
        if (!row.is_array() || row.size() != dim) embed_fail(where + " does not have " + std::to_string(dim) + " entries");
        std::vector<double> values;
        values.reserve(dim);
        for (const auto& x : row) {
            if (!x.is_number()) embed_fail(where + " holds a non-number");
            values.push_back(x.get<double>());
        }
        try {
            Embedding e(std::move(values));
            if (std::abs(e.norm() - 1.0) > kWireNormTolerance) embed_fail(where + " is not unit length");
            out.push_back(normalize(e));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::EmbedderError) throw;
            embed_fail(where + ": " + e.what());
        }
    }
    return out;
}

}  // namespace vsearch::cli
