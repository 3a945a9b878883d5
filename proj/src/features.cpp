#include "fedhumor/features.hpp"

#include <cmath>

#include "fedhumor/errors.hpp"
#include "fedhumor/kernels.hpp"
#include "fedhumor/parallel.hpp"

namespace fedhumor {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
constexpr char kBigramJoiner = '\x1f';

bool is_token_byte(unsigned char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '\'' || c >= 0x80;
}

std::uint64_t splitmix_finalize(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void fill_features(std::string_view text, std::uint64_t hash_seed, std::span<double> out) {
  const auto tokens = tokenize(text);
  const std::size_t dim = out.size();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out[hash_token(tokens[i], hash_seed) % dim] += 1.0;
    if (i + 1 < tokens.size()) {
      std::string bigram;
      bigram.reserve(tokens[i].size() + tokens[i + 1].size() + 1);
      bigram.append(tokens[i]).push_back(kBigramJoiner);
      bigram.append(tokens[i + 1]);
      out[hash_token(bigram, hash_seed) % dim] += 1.0;
    }
  }
  const double norm = std::sqrt(simd::dot(out, out));
  if (norm > 0.0) simd::scale(1.0 / norm, out);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_token_byte(c)) {
      current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::uint64_t hash_token(std::string_view token, std::uint64_t seed) noexcept {
  std::uint64_t h = kFnvOffset;
  for (int shift = 0; shift < 64; shift += 8) {
    h ^= (seed >> shift) & 0xffU;
    h *= kFnvPrime;
  }
  for (char c : token) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return splitmix_finalize(h);
}

FeatureVector featurize(std::string_view text, std::uint64_t hash_seed, std::size_t dim) {
  if (dim == 0) throw DomainError("feature dimension must be positive");
  std::vector<double> values(dim, 0.0);
  fill_features(text, hash_seed, values);
  return FeatureVector(std::move(values));
}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t dim)
    : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {}

FeatureMatrix FeatureMatrix::from_split(const DatasetSplit& split, std::size_t dim,
                                        std::uint64_t hash_seed, int threads) {
  if (dim == 0) throw DomainError("feature dimension must be positive");
  FeatureMatrix m(split.size(), dim);
  parallel_for(split.size(), threads, [&](std::size_t i) {
    fill_features(split.records[i].edited_text, hash_seed, m.row(i));
  });
  return m;
}

FeatureMatrix FeatureMatrix::from_vectors(std::span<const FeatureVector> vectors) {
  if (vectors.empty()) return {};
  const std::size_t dim = vectors.front().dim();
  FeatureMatrix m(vectors.size(), dim);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].dim() != dim) throw DomainError("feature vectors differ in dimension");
    std::copy(vectors[i].values().begin(), vectors[i].values().end(), m.row(i).begin());
  }
  return m;
}

}  // namespace fedhumor
