#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "infodens/corpus.hpp"

namespace infodens {

struct LexicalProfile {
  std::string doc_id;
  std::size_t word_count = 0;
  std::size_t sentence_count = 0;
  std::size_t syllable_count = 0;
  double flesch = 0.0;
  std::size_t type_count = 0;
  double herdan_c = 0.0;
};

// Vowel groups (a e i o u y), minus a silent final 'e' (single 'e' after a
// consonant, not the "-le" ending), floored at 1.
int count_syllables(std::string_view word);

double flesch_reading_ease(std::size_t words, std::size_t sentences, std::size_t syllables);
// Throws DomainError for documents without tokens.
double flesch_reading_ease(const Document& doc);

// log V(N) / log N over normalized tokens; 1.0 when N == 1.
double herdan_richness(const std::vector<std::string>& tokens);
double herdan_richness(const Document& doc);

LexicalProfile lexical_profile(const Document& doc);

}  // namespace infodens
