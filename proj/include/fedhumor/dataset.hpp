#pragma once

// Edited-headline corpus: CSV ingestion, canonical JSON cache, split statistics.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace fedhumor {

enum class SplitKind { train, validation, test };

std::string_view to_string(SplitKind kind) noexcept;
SplitKind split_kind_from_string(std::string_view name);

struct HeadlineRecord {
  std::string id;
  std::string original;     // contains exactly one <word/> edit marker
  std::string edit_word;
  std::string edited_text;  // original with the marker replaced by edit_word
  std::vector<int> grades;  // one digit per annotator, each in {0,1,2,3}
  double mean_grade = 0.0;
  // False for unlabeled competition files (no grades and no meanGrade).
  bool rated = false;

  bool operator==(const HeadlineRecord&) const = default;
};

struct DatasetSplit {
  SplitKind kind = SplitKind::train;
  std::vector<HeadlineRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
  bool operator==(const DatasetSplit&) const = default;
};

struct SplitStats {
  std::size_t count = 0;
  double mean_rating = 0.0;
  double min_rating = 0.0;
  double max_rating = 0.0;
};

/// Replaces the single `<word/>` span of `original` with `edit_word`.
/// Throws DomainError if there is no marker, more than one, or it is malformed.
std::string substitute_edit(std::string_view original, std::string_view edit_word);

/// Parses "01333" into {0,1,3,3,3}. Throws DomainError on any other character.
std::vector<int> parse_grades(std::string_view digits);

/// Splits CSV text into records of fields (RFC 4180 quoting, CRLF or LF).
std::vector<std::vector<std::string>> read_csv_records(std::string_view text);

DatasetSplit parse_csv_text(std::string_view text, SplitKind kind);

/// Throws IoError if the file cannot be read, ParseError on malformed rows.
DatasetSplit parse_csv(const std::filesystem::path& path, SplitKind kind);

/// Throws DomainError for an empty split.
SplitStats split_stats(const DatasetSplit& split);

/// Throws DomainError naming the first record that carries no rating.
void require_rated(const DatasetSplit& split);

/// Keeps round(fraction * n) records (at least one), chosen by a seeded draw,
/// in their original file order. fraction must lie in (0, 1].
DatasetSplit subsample(const DatasetSplit& split, double fraction, std::uint64_t seed);

nlohmann::json to_json(const HeadlineRecord& record);
HeadlineRecord record_from_json(const nlohmann::json& j);

/// Canonical cache: a JSON array of record objects.
nlohmann::json to_json(const DatasetSplit& split);
DatasetSplit split_from_json(const nlohmann::json& j, SplitKind kind);

void save_json_cache(const std::filesystem::path& path, const DatasetSplit& split);
DatasetSplit load_json_cache(const std::filesystem::path& path, SplitKind kind);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace fedhumor
