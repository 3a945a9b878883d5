#pragma once

// Deterministic stand-in corpus with the same schema as the public
// edited-headline dataset, for machines without the real files.
//
// Every headline is a sequence of pseudo-words with one word swapped for an
// "edit" word. Each edit word carries a latent funniness; context words shift
// it slightly. Five annotators grade latent + noise, rounded and clamped to
// 0..3, so the mean grade is learnable from text but noisy.

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "fedhumor/dataset.hpp"

namespace fedhumor {

struct SyntheticCorpusConfig {
  std::size_t train = 9652;
  std::size_t validation = 2419;
  std::size_t test = 3024;
  std::uint64_t seed = 2020;
  std::size_t context_vocabulary = 1200;
  std::size_t edit_vocabulary = 300;
  int annotators = 5;
  double funniness_mean = 0.80;
  double funniness_spread = 0.60;
  double context_effect = 0.15;
  double headline_noise = 0.20;
  double annotator_noise = 0.60;
};

struct SyntheticCorpus {
  DatasetSplit train;
  DatasetSplit validation;
  DatasetSplit test;
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusConfig& cfg);

/// Writes id,original,edit,grades,meanGrade with the original field quoted.
void write_csv(std::ostream& out, const DatasetSplit& split);
void write_csv(const std::filesystem::path& path, const DatasetSplit& split);

/// Writes train.csv, dev.csv and test.csv into `dir` (created if missing).
void write_corpus(const std::filesystem::path& dir, const SyntheticCorpus& corpus);

}  // namespace fedhumor
