#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace infodens {

enum class Split { Train, Valid, Test };

std::string_view to_string(Split split);
// Throws ValidationError on anything other than train/valid/test.
Split parse_split(std::string_view tag);

struct Token {
  std::string surface;
  std::string normalized;
  // Byte offsets into the owning document's raw text, half open.
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

struct SentenceRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const SentenceRange&) const = default;
};

struct Document {
  std::string id;
  std::string text;
  std::vector<Token> tokens;
  std::vector<SentenceRange> sentences;
  std::vector<std::string> labels;  // sorted, unique
  Split split = Split::Train;

  std::vector<std::string> normalized_tokens() const;
  bool operator==(const Document&) const = default;
};

// Normalized-token vocabulary with frequencies. Index 0 is always the
// unknown-token entry; its frequency counts train tokens pruned by the
// minimum-frequency rule.
class Vocabulary {
 public:
  static constexpr std::string_view kUnknown = "<unk>";
  static constexpr std::size_t kUnknownId = 0;

  Vocabulary();
  // Rebuilds a vocabulary from its serialized columns. types[0] must be <unk>.
  static Vocabulary from_columns(const std::vector<std::string>& types,
                                 const std::vector<std::size_t>& freqs);

  std::size_t size() const { return types_.size(); }
  const std::string& type(std::size_t id) const { return types_.at(id); }
  std::size_t frequency(std::size_t id) const { return freqs_.at(id); }
  const std::vector<std::string>& types() const { return types_; }
  const std::vector<std::size_t>& frequencies() const { return freqs_; }

  // Returns kUnknownId for out-of-vocabulary tokens.
  std::size_t id(std::string_view token) const;
  bool contains(std::string_view token) const;

  // Adds a type (or bumps its frequency). Used by the corpus builder.
  std::size_t add(std::string_view token, std::size_t count = 1);
  void add_unknown(std::size_t count) { freqs_[kUnknownId] += count; }

  std::size_t total() const;

  bool operator==(const Vocabulary& other) const {
    return types_ == other.types_ && freqs_ == other.freqs_;
  }

 private:
  std::vector<std::string> types_;
  std::vector<std::size_t> freqs_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct CorpusOptions {
  // Train tokens rarer than this map to the unknown entry.
  std::size_t min_token_frequency = 1;
};

struct Corpus {
  std::vector<Document> documents;
  std::vector<std::string> label_vocab;  // sorted, unique
  Vocabulary token_vocab;

  std::optional<std::size_t> label_index(std::string_view label) const;
  const Document* find(std::string_view id) const;
  std::vector<const Document*> split(Split s) const;

  bool operator==(const Corpus&) const = default;
};

// Unicode letter/digit/apostrophe runs; every other code point separates.
// Normalized form is the lowercase of the surface. Invalid UTF-8 bytes are
// treated as separators.
std::vector<Token> tokenize(std::string_view text);

// Half-open token-index ranges partitioning [0, tokens.size()).
std::vector<SentenceRange> split_sentences(std::string_view text, const std::vector<Token>& tokens);
std::vector<SentenceRange> split_sentences(const Document& doc);

// Builds a fully tokenized Document. Labels are sorted and deduplicated.
Document make_document(std::string id, std::string text, std::vector<std::string> labels,
                       Split split);

// Assembles a corpus: checks ids for duplicates, builds the label vocabulary
// over all documents and the token vocabulary over the train split.
Corpus build_corpus(std::vector<Document> documents, const CorpusOptions& options = {});

Corpus load_corpus(const std::filesystem::path& path, const CorpusOptions& options = {});
Corpus parse_corpus(std::string_view jsonl, const CorpusOptions& options = {});

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string serialize_corpus(const Corpus& corpus);

}  // namespace infodens
