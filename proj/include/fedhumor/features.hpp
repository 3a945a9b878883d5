#pragma once

// Hashed unigram + bigram text features.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedhumor/dataset.hpp"

namespace fedhumor {

inline constexpr std::size_t kDefaultFeatureDim = 4096;
inline constexpr std::uint64_t kDefaultHashSeed = 0x9e3779b97f4a7c15ULL;

/// Lowercased tokens: maximal runs of ASCII letters, digits, apostrophes and
/// non-ASCII bytes.
std::vector<std::string> tokenize(std::string_view text);

/// Seeded 64-bit hash (FNV-1a over the seed and bytes, then a splitmix64 finalizer).
std::uint64_t hash_token(std::string_view token, std::uint64_t seed) noexcept;

/// Dense, L2-normalized bag of hashed unigrams and adjacent-token bigrams.
/// Empty text (no tokens) gives the zero vector.
class FeatureVector {
 public:
  FeatureVector() = default;
  explicit FeatureVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const FeatureVector&) const = default;

 private:
  std::vector<double> values_;
};

FeatureVector featurize(std::string_view text, std::uint64_t hash_seed,
                        std::size_t dim = kDefaultFeatureDim);

/// Row-major feature rows for every record of a split (row i = record i).
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t dim);

  static FeatureMatrix from_split(const DatasetSplit& split, std::size_t dim,
                                  std::uint64_t hash_seed, int threads = 1);
  static FeatureMatrix from_vectors(std::span<const FeatureVector> vectors);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * dim_, dim_}; }

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

}  // namespace fedhumor
