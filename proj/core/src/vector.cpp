#include "vsearch/vector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vsearch/error.hpp"

namespace vsearch {

namespace {

double l2_norm(std::span<const double> v) noexcept { return std::sqrt(dot(v, v)); }

void require_same_dim(std::size_t a, std::size_t b) {
    if (a != b) {
        fail(ErrorCode::DimMismatch,
             "dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

}  // namespace

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) fail(ErrorCode::InvalidParam, "embedding dimension must be positive");
    if (!std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); })) {
        fail(ErrorCode::NonFinite, "embedding contains NaN or Inf");
    }
}

double Embedding::norm() const noexcept { return l2_norm(values_); }

NormalizedEmbedding NormalizedEmbedding::from_unit(std::vector<double> values) {
    Embedding checked(std::move(values));
    const double n = checked.norm();
    if (n < kZeroNormEpsilon) fail(ErrorCode::ZeroVector, "zero vector is not unit length");
    if (std::abs(n - 1.0) > kUnitNormTolerance) {
        fail(ErrorCode::InvalidParam, "vector norm " + std::to_string(n) + " is not 1");
    }
    auto v = checked.values();
    return NormalizedEmbedding(std::vector<double>(v.begin(), v.end()));
}

NormalizedEmbedding normalize(const Embedding& e) {
    const double n = e.norm();
    if (n < kZeroNormEpsilon) fail(ErrorCode::ZeroVector, "cannot normalize a zero vector");
    std::vector<double> out(e.values().begin(), e.values().end());
    for (double& x : out) x /= n;
    return NormalizedEmbedding(std::move(out));
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    // Four independent partial sums let the compiler vectorize without -ffast-math.
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    const std::size_t n = a.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size());
    return std::clamp(dot(a, b), -1.0, 1.0);
}

double cosine_similarity(const NormalizedEmbedding& a, const NormalizedEmbedding& b) {
    return cosine_similarity(a.values(), b.values());
}

double distance(const NormalizedEmbedding& a, const NormalizedEmbedding& b) {
    return 1.0 - cosine_similarity(a, b);
}

Embedding adapt_dimension(const Embedding& e, std::size_t target_dim) {
    if (target_dim == 0) fail(ErrorCode::InvalidParam, "target dimension must be positive");
    auto src = e.values();
    std::vector<double> out(target_dim, 0.0);
    const std::size_t keep = std::min(target_dim, src.size());
    std::copy_n(src.begin(), keep, out.begin());
    if (target_dim < src.size() && l2_norm(out) < kZeroNormEpsilon) {
        fail(ErrorCode::ZeroVector,
             "prefix of length " + std::to_string(target_dim) + " is a zero vector");
    }
    return Embedding(std::move(out));
}

}  // namespace vsearch
