#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vsearch {

/// Norm below which a vector is treated as degenerate.
inline constexpr double kZeroNormEpsilon = 1e-12;
/// Allowed deviation from unit length for a normalized vector.
inline constexpr double kUnitNormTolerance = 1e-6;

/// Fixed-dimension real vector carrying a document or query representation.
/// Invariants: dim > 0, every value finite.
class Embedding {
public:
    explicit Embedding(std::vector<double> values);

    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::size_t dim() const noexcept { return values_.size(); }
    [[nodiscard]] double norm() const noexcept;

    friend bool operator==(const Embedding&, const Embedding&) = default;

private:
    std::vector<double> values_;
};

/// Unit-length embedding. Only obtainable through normalize() or from_unit(),
/// so holding one is proof that the norm is 1 within kUnitNormTolerance.
class NormalizedEmbedding {
public:
    /// Adopts values that are already unit length; throws ZeroVector/InvalidParam otherwise.
    static NormalizedEmbedding from_unit(std::vector<double> values);

    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::size_t dim() const noexcept { return values_.size(); }

    friend bool operator==(const NormalizedEmbedding&, const NormalizedEmbedding&) = default;

private:
    explicit NormalizedEmbedding(std::vector<double> values) : values_(std::move(values)) {}
    friend NormalizedEmbedding normalize(const Embedding& e);

    std::vector<double> values_;
};

/// e / ||e||. Throws ZeroVector when ||e|| < kZeroNormEpsilon.
NormalizedEmbedding normalize(const Embedding& e);

/// Raw inner product with 64-bit accumulation. Caller guarantees equal lengths.
double dot(std::span<const double> a, std::span<const double> b) noexcept;

/// Inner product of unit vectors clamped to [-1, 1]. Throws DimMismatch.
double cosine_similarity(const NormalizedEmbedding& a, const NormalizedEmbedding& b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// 1 - cosine_similarity, in [0, 2].
double distance(const NormalizedEmbedding& a, const NormalizedEmbedding& b);

/// Prefix truncation (target <= dim) or zero padding (target > dim).
/// Throws ZeroVector if the truncated prefix is degenerate, InvalidParam if target == 0.
Embedding adapt_dimension(const Embedding& e, std::size_t target_dim);

}  // namespace vsearch
