#include <algorithm>
#include <cmath>
#include <cstdio>

#include "infodens/analytics.hpp"
#include "infodens/error.hpp"
#include "infodens/rng.hpp"

namespace infodens {

namespace {

constexpr char kConsonants[] = "bdfgklmnprstvz";
constexpr char kVowels[] = "aeiou";
constexpr std::size_t kConsonantCount = sizeof(kConsonants) - 1;
constexpr std::size_t kVowelCount = sizeof(kVowels) - 1;
constexpr std::size_t kSyllables = kConsonantCount * kVowelCount;

void append_syllable(std::string& word, std::size_t s) {
  word += kConsonants[s / kVowelCount];
  word += kVowels[s % kVowelCount];
}

std::size_t sample_cdf(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.uniform() * cdf.back();
  return static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}

// Label sets: every document has its primary label plus distinct extras.
std::vector<std::vector<std::size_t>> assign_labels(const SynthSpec& spec, Rng& rng) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t k = 0; k < spec.docs_per_label; ++k) {
    for (std::size_t primary = 0; primary < spec.labels; ++primary) {
      std::vector<std::size_t> others;
      for (std::size_t l = 0; l < spec.labels; ++l)
        if (l != primary) others.push_back(l);
      rng.shuffle(others);
      std::vector<std::size_t> set = {primary};
      set.insert(set.end(), others.begin(), others.begin() + static_cast<std::ptrdiff_t>(spec.labels_per_doc - 1));
      std::sort(set.begin(), set.end());
      out.push_back(std::move(set));
    }
  }
  return out;
}

}  // namespace

std::string synth_filler_word(std::size_t index) {
  // Two consonant-vowel syllables: "bada", "keli", ...
  std::string w;
  append_syllable(w, (index / kSyllables) % kSyllables);
  append_syllable(w, index % kSyllables);
  if (index >= kSyllables * kSyllables) w += std::to_string(index / (kSyllables * kSyllables));
  return w;
}

std::string synth_keyword(std::size_t label, std::size_t k) {
  // Three syllables and a closing 'r'; never collides with filler words.
  const std::size_t index = label * 7919 + k * 104729 + 17;
  std::string w;
  append_syllable(w, (index / (kSyllables * kSyllables)) % kSyllables);
  append_syllable(w, (index / kSyllables) % kSyllables);
  append_syllable(w, index % kSyllables);
  w += 'r';
  return w + std::to_string(label) + "x" + std::to_string(k);
}

std::string synth_label(std::size_t label) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "L%03zu", label);
  return buf;
}

void SynthSpec::validate() const {
  if (labels == 0) throw ValidationError("synthetic corpus needs at least one label");
  if (labels_per_doc == 0 || labels_per_doc > labels) throw ValidationError("labels_per_doc must be in [1, labels]");
  if (docs_per_label == 0) throw ValidationError("docs_per_label must be positive");
  if (filler_vocab == 0) throw ValidationError("filler vocabulary must be nonempty");
  if (!(redundancy >= 0.0 && redundancy < 1.0)) throw ValidationError("redundancy must lie in [0, 1)");
  if (!(length_spread >= 0.0 && length_spread < 1.0)) throw ValidationError("length_spread must lie in [0, 1)");
  if (min_span == 0 || min_span > max_span) throw ValidationError("copy span bounds are inconsistent");
  if (min_sentence == 0 || min_sentence > max_sentence) throw ValidationError("sentence length bounds are inconsistent");
  if (valid_fraction < 0.0 || test_fraction < 0.0 || valid_fraction + test_fraction >= 1.0) {
    throw ValidationError("valid/test fractions must be nonnegative and leave a train split");
  }
  const double shortest = std::floor(static_cast<double>(mean_length) * (1.0 - length_spread));
  const double fresh = shortest - std::round(redundancy * shortest);
  const double keyword_tokens = static_cast<double>(labels_per_doc * keywords_per_label * keyword_repeats);
  if (shortest < 1.0 || fresh < keyword_tokens) {
    throw ValidationError("document length too short for " + std::to_string(static_cast<std::size_t>(keyword_tokens)) +
                          " keyword tokens");
  }
}

Corpus synthesize_corpus(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);

  std::vector<double> zipf_cdf(spec.filler_vocab);
  double acc = 0.0;
  for (std::size_t r = 0; r < spec.filler_vocab; ++r) {
    acc += 1.0 / std::pow(static_cast<double>(r + 1), spec.zipf_exponent);
    zipf_cdf[r] = acc;
  }

  const auto label_sets = assign_labels(spec, rng);
  const std::size_t n_docs = label_sets.size();

  std::vector<Split> splits(n_docs, Split::Train);
  {
    std::vector<std::size_t> order(n_docs);
    for (std::size_t i = 0; i < n_docs; ++i) order[i] = i;
    rng.shuffle(order);
    const auto n_test = static_cast<std::size_t>(std::round(spec.test_fraction * static_cast<double>(n_docs)));
    const auto n_valid = static_cast<std::size_t>(std::round(spec.valid_fraction * static_cast<double>(n_docs)));
    for (std::size_t i = 0; i < n_docs; ++i) {
      if (i < n_test) {
        splits[order[i]] = Split::Test;
      } else if (i < n_test + n_valid) {
        splits[order[i]] = Split::Valid;
      }
    }
  }

  const double mean = static_cast<double>(spec.mean_length);
  const auto min_len = static_cast<std::size_t>(std::floor(mean * (1.0 - spec.length_spread)));
  const auto max_len = static_cast<std::size_t>(std::floor(mean * (1.0 + spec.length_spread)));

  std::vector<Document> docs;
  docs.reserve(n_docs);
  for (std::size_t d = 0; d < n_docs; ++d) {
    const std::size_t length = min_len + static_cast<std::size_t>(rng.below(max_len - min_len + 1));
    const auto copied = static_cast<std::size_t>(std::round(spec.redundancy * static_cast<double>(length)));
    const std::size_t fresh = length - copied;

    std::vector<std::string> words;
    words.reserve(length);
    for (std::size_t label : label_sets[d]) {
      for (std::size_t k = 0; k < spec.keywords_per_label; ++k) {
        for (std::size_t r = 0; r < spec.keyword_repeats; ++r) words.push_back(synth_keyword(label, k));
      }
    }
    while (words.size() < fresh) words.push_back(synth_filler_word(sample_cdf(zipf_cdf, rng)));
    rng.shuffle(words);

    // Copy-paste redundancy: repeat contiguous spans of what is already there.
    while (words.size() < length) {
      const std::size_t span_max = std::min(spec.max_span, words.size());
      const std::size_t span_min = std::min(spec.min_span, span_max);
      const std::size_t span = span_min + static_cast<std::size_t>(rng.below(span_max - span_min + 1));
      const std::size_t start = static_cast<std::size_t>(rng.below(words.size() - span + 1));
      for (std::size_t i = 0; i < span && words.size() < length; ++i) words.push_back(words[start + i]);
    }

    std::string text;
    std::size_t pos = 0;
    while (pos < words.size()) {
      const std::size_t sentence =
          spec.min_sentence + static_cast<std::size_t>(rng.below(spec.max_sentence - spec.min_sentence + 1));
      const std::size_t end = std::min(words.size(), pos + sentence);
      for (std::size_t i = pos; i < end; ++i) {
        if (!text.empty()) text += ' ';
        std::string w = words[i];
        if (i == pos && !w.empty()) w[0] = static_cast<char>(w[0] - 'a' + 'A');
        text += w;
      }
      text += '.';
      pos = end;
    }

    std::vector<std::string> labels;
    for (std::size_t l : label_sets[d]) labels.push_back(synth_label(l));
    char id[32];
    std::snprintf(id, sizeof(id), "syn-%06zu", d);
    docs.push_back(make_document(id, std::move(text), std::move(labels), splits[d]));
  }
  return build_corpus(std::move(docs));
}

}  // namespace infodens
