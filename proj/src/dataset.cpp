#include "fedhumor/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <unordered_set>

#include "fedhumor/errors.hpp"

namespace fedhumor {

namespace {

constexpr std::string_view kMarkerOpen = "<";
constexpr std::string_view kMarkerClose = "/>";

// meanGrade is published rounded; anything further off than that is a corrupt row.
constexpr double kMeanGradeSlack = 0.05 + 1e-9;

std::optional<double> parse_real(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

double mean_of(const std::vector<int>& grades) {
  const int sum = std::accumulate(grades.begin(), grades.end(), 0);
  return static_cast<double>(sum) / static_cast<double>(grades.size());
}

}  // namespace

std::string_view to_string(SplitKind kind) noexcept {
  switch (kind) {
    case SplitKind::train:
      return "train";
    case SplitKind::validation:
      return "validation";
    case SplitKind::test:
      return "test";
  }
  return "train";
}

SplitKind split_kind_from_string(std::string_view name) {
  if (name == "train") return SplitKind::train;
  if (name == "validation" || name == "dev") return SplitKind::validation;
  if (name == "test") return SplitKind::test;
  throw DomainError("unknown split name '" + std::string(name) + "'");
}

std::string substitute_edit(std::string_view original, std::string_view edit_word) {
  const auto open = original.find(kMarkerOpen);
  if (open == std::string_view::npos) throw DomainError("no <word/> edit marker");
  const auto close = original.find(kMarkerClose, open + 1);
  if (close == std::string_view::npos) throw DomainError("unterminated edit marker");
  const auto inner = original.substr(open + 1, close - open - 1);
  if (inner.empty() || inner.find_first_of("</>") != std::string_view::npos) {
    throw DomainError("malformed edit marker");
  }
  const auto rest = original.substr(close + kMarkerClose.size());
  if (rest.find(kMarkerOpen) != std::string_view::npos &&
      rest.find(kMarkerClose) != std::string_view::npos) {
    throw DomainError("more than one edit marker");
  }
  std::string out;
  out.reserve(original.size() + edit_word.size());
  out.append(original.substr(0, open));
  out.append(edit_word);
  out.append(rest);
  return out;
}

std::vector<int> parse_grades(std::string_view digits) {
  std::vector<int> grades;
  grades.reserve(digits.size());
  for (char c : digits) {
    if (c < '0' || c > '3') {
      throw DomainError("grade character '" + std::string(1, c) + "' is not in 0..3");
    }
    grades.push_back(c - '0');
  }
  return grades;
}

std::vector<std::vector<std::string>> read_csv_records(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A bare empty line yields one empty field; skip it.
    if (!(fields.size() == 1 && fields.front().empty())) records.push_back(std::move(fields));
    fields.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError(records.size() + 1, "unterminated quoted field");
  if (field_started || !field.empty() || !fields.empty()) end_record();
  return records;
}

DatasetSplit parse_csv_text(std::string_view text, SplitKind kind) {
  const auto rows = read_csv_records(text);
  if (rows.empty()) throw ParseError(1, "missing header row");

  const auto& header = rows.front();
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  const auto id_col = column("id");
  const auto original_col = column("original");
  const auto edit_col = column("edit");
  const auto grades_col = column("grades");
  const auto mean_col = column("meanGrade");
  if (!id_col || !original_col || !edit_col) {
    throw ParseError(1, "header must contain id, original and edit columns");
  }

  DatasetSplit split;
  split.kind = kind;
  split.records.reserve(rows.size() - 1);
  std::unordered_set<std::string> seen;

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::size_t row_number = r + 1;
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw ParseError(row_number, "expected " + std::to_string(header.size()) + " fields, got " +
                                       std::to_string(row.size()));
    }
    HeadlineRecord rec;
    rec.id = row[*id_col];
    rec.original = row[*original_col];
    rec.edit_word = row[*edit_col];
    if (!seen.insert(rec.id).second) throw ParseError(row_number, "duplicate id '" + rec.id + "'");

    try {
      rec.edited_text = substitute_edit(rec.original, rec.edit_word);
    } catch (const DomainError& e) {
      throw ParseError(row_number, e.what());
    }

    std::optional<double> file_mean;
    if (mean_col && !row[*mean_col].empty()) {
      file_mean = parse_real(row[*mean_col]);
      if (!file_mean) throw ParseError(row_number, "meanGrade is not a number");
      if (!(*file_mean >= 0.0 && *file_mean <= 3.0)) {
        throw ParseError(row_number, "meanGrade outside [0, 3]");
      }
    }
    if (grades_col && !row[*grades_col].empty()) {
      try {
        rec.grades = parse_grades(row[*grades_col]);
      } catch (const DomainError& e) {
        throw ParseError(row_number, e.what());
      }
    }

    if (!rec.grades.empty()) {
      rec.mean_grade = mean_of(rec.grades);
      rec.rated = true;
      if (file_mean && std::abs(*file_mean - rec.mean_grade) > kMeanGradeSlack) {
        throw ParseError(row_number, "meanGrade disagrees with the mean of grades");
      }
    } else if (file_mean) {
      rec.mean_grade = *file_mean;
      rec.rated = true;
    }
    split.records.push_back(std::move(rec));
  }
  return split;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return std::move(buffer).str();
}

DatasetSplit parse_csv(const std::filesystem::path& path, SplitKind kind) {
  const std::string text = read_text_file(path);
  try {
    return parse_csv_text(text, kind);
  } catch (const ParseError& e) {
    throw ParseError(e.row(), e.detail() + " (" + path.string() + ")");
  }
}

SplitStats split_stats(const DatasetSplit& split) {
  if (split.empty()) throw DomainError("split_stats: empty split");
  SplitStats stats;
  stats.count = split.size();
  stats.min_rating = split.records.front().mean_grade;
  stats.max_rating = split.records.front().mean_grade;
  double sum = 0.0;
  for (const auto& rec : split.records) {
    sum += rec.mean_grade;
    stats.min_rating = std::min(stats.min_rating, rec.mean_grade);
    stats.max_rating = std::max(stats.max_rating, rec.mean_grade);
  }
  stats.mean_rating = sum / static_cast<double>(stats.count);
  return stats;
}

void require_rated(const DatasetSplit& split) {
  for (const auto& rec : split.records) {
    if (!rec.rated) {
      throw DomainError(std::string(to_string(split.kind)) + " record '" + rec.id +
                        "' has no funniness rating");
    }
  }
}

DatasetSplit subsample(const DatasetSplit& split, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw DomainError("subsample fraction must lie in (0, 1]");
  }
  if (fraction == 1.0 || split.empty()) return split;
  const auto n = split.size();
  const auto keep = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))), 1, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(split.kind), 0x5ab5u};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(keep);
  std::sort(order.begin(), order.end());

  DatasetSplit out;
  out.kind = split.kind;
  out.records.reserve(keep);
  for (auto i : order) out.records.push_back(split.records[i]);
  return out;
}

nlohmann::json to_json(const HeadlineRecord& record) {
  return nlohmann::json{{"id", record.id},
                        {"original", record.original},
                        {"edit_word", record.edit_word},
                        {"edited_text", record.edited_text},
                        {"grades", record.grades},
                        {"mean_grade", record.mean_grade},
                        {"rated", record.rated}};
}

HeadlineRecord record_from_json(const nlohmann::json& j) {
  HeadlineRecord rec;
  try {
    rec.id = j.at("id").get<std::string>();
    rec.original = j.at("original").get<std::string>();
    rec.edit_word = j.at("edit_word").get<std::string>();
    rec.edited_text = j.at("edited_text").get<std::string>();
    rec.grades = j.at("grades").get<std::vector<int>>();
    rec.mean_grade = j.at("mean_grade").get<double>();
    rec.rated = j.value("rated", !rec.grades.empty());
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed record object: ") + e.what());
  }
  return rec;
}

nlohmann::json to_json(const DatasetSplit& split) {
  auto arr = nlohmann::json::array();
  for (const auto& rec : split.records) arr.push_back(to_json(rec));
  return arr;
}

DatasetSplit split_from_json(const nlohmann::json& j, SplitKind kind) {
  if (!j.is_array()) throw DomainError("dataset cache must be a JSON array");
  DatasetSplit split;
  split.kind = kind;
  split.records.reserve(j.size());
  for (const auto& item : j) split.records.push_back(record_from_json(item));
  return split;
}

void save_json_cache(const std::filesystem::path& path, const DatasetSplit& split) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << to_json(split).dump() << '\n';
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

DatasetSplit load_json_cache(const std::filesystem::path& path, SplitKind kind) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DomainError("'" + path.string() + "': " + e.what());
  }
  return split_from_json(j, kind);
}

}  // namespace fedhumor
