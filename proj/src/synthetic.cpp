#include "fedhumor/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fedhumor/errors.hpp"

namespace fedhumor {

namespace {

std::vector<std::string> make_vocabulary(std::size_t count, std::mt19937_64& rng,
                                         std::set<std::string>& taken) {
  static const char* const onsets[] = {"b",  "c",  "d",  "f",  "g",  "h",  "j",  "k",
                                       "l",  "m",  "n",  "p",  "r",  "s",  "t",  "v",
                                       "w",  "z",  "br", "cl", "st", "tr", "sh", "ch"};
  static const char* const vowels[] = {"a", "e", "i", "o", "u", "ai", "ou", "ee"};
  static const char* const codas[] = {"", "", "n", "r", "s", "t", "l", "m"};
  std::uniform_int_distribution<int> onset(0, std::size(onsets) - 1);
  std::uniform_int_distribution<int> vowel(0, std::size(vowels) - 1);
  std::uniform_int_distribution<int> coda(0, std::size(codas) - 1);
  std::uniform_int_distribution<int> syllables(1, 3);

  std::vector<std::string> words;
  words.reserve(count);
  while (words.size() < count) {
    std::string w;
    const int n = syllables(rng);
    for (int s = 0; s < n; ++s) {
      w += onsets[onset(rng)];
      w += vowels[vowel(rng)];
      w += codas[coda(rng)];
    }
    if (taken.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

struct Generator {
  const SyntheticCorpusConfig& cfg;
  std::mt19937_64 rng;
  std::vector<std::string> context;
  std::vector<double> context_shift;
  std::vector<std::string> edits;
  std::vector<double> edit_funniness;
  std::discrete_distribution<std::size_t> context_pick;
  std::size_t next_id = 1;

  explicit Generator(const SyntheticCorpusConfig& c) : cfg(c), rng(c.seed) {
    std::set<std::string> taken;
    context = make_vocabulary(cfg.context_vocabulary, rng, taken);
    edits = make_vocabulary(cfg.edit_vocabulary, rng, taken);

    std::normal_distribution<double> shift(0.0, cfg.context_effect);
    for (std::size_t i = 0; i < context.size(); ++i) context_shift.push_back(shift(rng));
    std::normal_distribution<double> fun(cfg.funniness_mean, cfg.funniness_spread);
    for (std::size_t i = 0; i < edits.size(); ++i) edit_funniness.push_back(fun(rng));

    std::vector<double> zipf(context.size());
    for (std::size_t r = 0; r < zipf.size(); ++r) zipf[r] = 1.0 / std::pow(double(r + 1), 0.8);
    context_pick = std::discrete_distribution<std::size_t>(zipf.begin(), zipf.end());
  }

  HeadlineRecord headline() {
    std::uniform_int_distribution<int> length(6, 11);
    std::uniform_int_distribution<std::size_t> edit_pick(0, edits.size() - 1);
    std::normal_distribution<double> headline_noise(0.0, cfg.headline_noise);
    std::normal_distribution<double> annotator_noise(0.0, cfg.annotator_noise);

    const int n = length(rng);
    std::vector<std::size_t> words(n);
    for (auto& w : words) w = context_pick(rng);
    std::uniform_int_distribution<int> slot(0, n - 1);
    const int edited = slot(rng);
    const std::size_t edit = edit_pick(rng);

    double latent = edit_funniness[edit] + headline_noise(rng);
    for (int i = 0; i < n; ++i) {
      if (i != edited) latent += context_shift[words[i]] / std::sqrt(double(n));
    }

    HeadlineRecord rec;
    rec.id = std::to_string(next_id++);
    rec.edit_word = edits[edit];
    std::string original;
    for (int i = 0; i < n; ++i) {
      if (i > 0) original += ' ';
      std::string w = context[words[i]];
      if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
      original += i == edited ? "<" + w + "/>" : w;
    }
    rec.original = original;
    rec.edited_text = substitute_edit(rec.original, rec.edit_word);

    int sum = 0;
    for (int a = 0; a < cfg.annotators; ++a) {
      const int g = static_cast<int>(std::clamp(std::lround(latent + annotator_noise(rng)), 0L, 3L));
      rec.grades.push_back(g);
      sum += g;
    }
    rec.mean_grade = static_cast<double>(sum) / static_cast<double>(cfg.annotators);
    rec.rated = true;
    return rec;
  }

  DatasetSplit split(SplitKind kind, std::size_t count) {
    DatasetSplit s;
    s.kind = kind;
    s.records.reserve(count);
    for (std::size_t i = 0; i < count; ++i) s.records.push_back(headline());
    return s;
  }
};

std::string csv_quote(const std::string& field) {
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_mean(double mean) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << mean;
  return s.str();
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusConfig& cfg) {
  if (cfg.edit_vocabulary == 0 || cfg.context_vocabulary == 0 || cfg.annotators < 1) {
    throw DomainError("synthetic corpus needs non-empty vocabularies and annotators");
  }
  Generator gen(cfg);
  SyntheticCorpus corpus;
  corpus.train = gen.split(SplitKind::train, cfg.train);
  corpus.validation = gen.split(SplitKind::validation, cfg.validation);
  corpus.test = gen.split(SplitKind::test, cfg.test);
  return corpus;
}

void write_csv(std::ostream& out, const DatasetSplit& split) {
  out << "id,original,edit,grades,meanGrade\n";
  for (const auto& rec : split.records) {
    std::string grades;
    for (int g : rec.grades) grades += static_cast<char>('0' + g);
    out << rec.id << ',' << csv_quote(rec.original) << ',' << rec.edit_word << ',' << grades << ','
        << format_mean(rec.mean_grade) << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const DatasetSplit& split) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_csv(out, split);
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

void write_corpus(const std::filesystem::path& dir, const SyntheticCorpus& corpus) {
  std::filesystem::create_directories(dir);
  write_csv(dir / "train.csv", corpus.train);
  write_csv(dir / "dev.csv", corpus.validation);
  write_csv(dir / "test.csv", corpus.test);
}

}  // namespace fedhumor
