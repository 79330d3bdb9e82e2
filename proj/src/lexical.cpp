#include "infodens/lexical.hpp"

#include <cmath>
#include <unordered_set>

#include "infodens/error.hpp"

namespace infodens {

namespace {

bool is_vowel(char c) {
  switch (c) {
    case 'a':
    case 'e':
    case 'i':
    case 'o':
    case 'u':
    case 'y':
      return true;
    default:
      return false;
  }
}

bool is_consonant(char c) { return c >= 'a' && c <= 'z' && !is_vowel(c); }

}  // namespace

int count_syllables(std::string_view word) {
  int groups = 0;
  bool in_group = false;
  for (char c : word) {
    const bool v = is_vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }
  const std::size_t n = word.size();
  if (n >= 2 && word[n - 1] == 'e' && is_consonant(word[n - 2])) {
    const bool consonant_le = n >= 3 && word[n - 2] == 'l' && is_consonant(word[n - 3]);
    if (!consonant_le && groups > 1) --groups;
  }
  return groups < 1 ? 1 : groups;
}

double flesch_reading_ease(std::size_t words, std::size_t sentences, std::size_t syllables) {
  if (words == 0 || sentences == 0) throw DomainError("Flesch score needs at least one word and sentence");
  const double w = static_cast<double>(words);
  return 206.835 - 1.015 * (w / static_cast<double>(sentences)) -
         84.6 * (static_cast<double>(syllables) / w);
}

double flesch_reading_ease(const Document& doc) {
  if (doc.tokens.empty()) throw DomainError("Flesch score of an empty document '" + doc.id + "'");
  std::size_t syllables = 0;
  for (const auto& t : doc.tokens) syllables += static_cast<std::size_t>(count_syllables(t.normalized));
  return flesch_reading_ease(doc.tokens.size(), doc.sentences.size(), syllables);
}

double herdan_richness(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw DomainError("Herdan richness of an empty document");
  if (tokens.size() == 1) return 1.0;
  std::unordered_set<std::string_view> types(tokens.begin(), tokens.end());
  return std::log(static_cast<double>(types.size())) / std::log(static_cast<double>(tokens.size()));
}

double herdan_richness(const Document& doc) { return herdan_richness(doc.normalized_tokens()); }

LexicalProfile lexical_profile(const Document& doc) {
  if (doc.tokens.empty()) throw DomainError("lexical profile of an empty document '" + doc.id + "'");
  LexicalProfile p;
  p.doc_id = doc.id;
  p.word_count = doc.tokens.size();
  p.sentence_count = doc.sentences.size();
  std::unordered_set<std::string_view> types;
  for (const auto& t : doc.tokens) {
    p.syllable_count += static_cast<std::size_t>(count_syllables(t.normalized));
    types.insert(t.normalized);
  }
  p.type_count = types.size();
  p.flesch = flesch_reading_ease(p.word_count, p.sentence_count, p.syllable_count);
  p.herdan_c = herdan_richness(doc);
  return p;
}

}  // namespace infodens
