#include "infodens/corpus.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <locale.h>
#include <sstream>
#include <unordered_set>
#include <wctype.h>

#include <json.hpp>

#include "infodens/error.hpp"

namespace infodens {

namespace {

locale_t utf8_ctype() {
  static const locale_t loc = [] {
    locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(0));
    if (l == static_cast<locale_t>(0)) l = newlocale(LC_CTYPE_MASK, "C", static_cast<locale_t>(0));
    return l;
  }();
  return loc;
}

// Decodes one code point at text[pos]. Returns its byte length, or 0 when the
// bytes at pos are not valid UTF-8.
std::size_t decode_utf8(std::string_view text, std::size_t pos, char32_t& cp) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
  const unsigned char lead = byte(pos);
  std::size_t len;
  if (lead < 0x80) {
    cp = lead;
    return 1;
  } else if ((lead & 0xE0) == 0xC0) {
    len = 2;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4;
    cp = lead & 0x07;
  } else {
    return 0;
  }
  if (pos + len > text.size()) return 0;
  for (std::size_t i = 1; i < len; ++i) {
    if ((byte(pos + i) & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (byte(pos + i) & 0x3F);
  }
  static constexpr std::array<char32_t, 5> kMin = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
  return len;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_word_char(char32_t cp) {
  if (cp == U'\'' || cp == U'’') return true;
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  }
  return iswalnum_l(static_cast<wint_t>(cp), utf8_ctype()) != 0;
}

std::string lowercase(std::string_view surface) {
  std::string out;
  out.reserve(surface.size());
  std::size_t pos = 0;
  while (pos < surface.size()) {
    char32_t cp = 0;
    std::size_t len = decode_utf8(surface, pos, cp);
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp >= 'A' && cp <= 'Z' ? cp + 32 : cp));
    } else {
      encode_utf8(static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), utf8_ctype())), out);
    }
    pos += len;
  }
  return out;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

const std::unordered_set<std::string>& abbreviations() {
  static const std::unordered_set<std::string> set = {"dr", "mr", "mrs", "ms", "vs", "e.g", "i.e", "etc"};
  return set;
}

// True when the terminator at text[pos] belongs to a whitespace-delimited
// chunk that spells an abbreviation ("Dr.", "e.g.,", "(etc.)").
bool is_abbreviation_dot(std::string_view text, std::size_t pos) {
  if (text[pos] != '.') return false;
  std::size_t lo = pos;
  while (lo > 0 && !is_space(text[lo - 1])) --lo;
  std::size_t hi = pos;
  while (hi < text.size() && !is_space(text[hi])) ++hi;
  std::string chunk = lowercase(text.substr(lo, hi - lo));
  const auto keep = [](char c) {
    return c == '.' || c == '\'' || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
           static_cast<unsigned char>(c) >= 0x80;
  };
  std::size_t a = 0;
  while (a < chunk.size() && !keep(chunk[a])) ++a;
  std::size_t b = chunk.size();
  while (b > a && !keep(chunk[b - 1])) --b;
  while (b > a && chunk[b - 1] == '.') --b;
  return abbreviations().count(chunk.substr(a, b - a)) > 0;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train:
      return "train";
    case Split::Valid:
      return "valid";
    case Split::Test:
      return "test";
  }
  return "train";
}

Split parse_split(std::string_view tag) {
  if (tag == "train") return Split::Train;
  if (tag == "valid") return Split::Valid;
  if (tag == "test") return Split::Test;
  throw ValidationError("unknown split tag '" + std::string(tag) + "'");
}

std::vector<std::string> Document::normalized_tokens() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.normalized);
  return out;
}

Vocabulary::Vocabulary() {
  types_.emplace_back(kUnknown);
  freqs_.push_back(0);
  index_.emplace(std::string(kUnknown), kUnknownId);
}

Vocabulary Vocabulary::from_columns(const std::vector<std::string>& types,
                                    const std::vector<std::size_t>& freqs) {
  if (types.empty() || types.size() != freqs.size() || types[0] != kUnknown) {
    throw ValidationError("malformed vocabulary columns");
  }
  Vocabulary v;
  v.freqs_[kUnknownId] = freqs[0];
  for (std::size_t i = 1; i < types.size(); ++i) {
    if (v.contains(types[i])) throw DuplicateError("vocabulary repeats type '" + types[i] + "'");
    v.add(types[i], freqs[i]);
  }
  return v;
}

std::size_t Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnknownId : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

std::size_t Vocabulary::add(std::string_view token, std::size_t count) {
  auto [it, inserted] = index_.emplace(std::string(token), types_.size());
  if (inserted) {
    types_.emplace_back(token);
    freqs_.push_back(0);
  }
  freqs_[it->second] += count;
  return it->second;
}

std::size_t Vocabulary::total() const {
  std::size_t sum = 0;
  for (auto f : freqs_) sum += f;
  return sum;
}

std::optional<std::size_t> Corpus::label_index(std::string_view label) const {
  auto it = std::lower_bound(label_vocab.begin(), label_vocab.end(), label);
  if (it == label_vocab.end() || *it != label) return std::nullopt;
  return static_cast<std::size_t>(it - label_vocab.begin());
}

const Document* Corpus::find(std::string_view id) const {
  for (const auto& d : documents)
    if (d.id == id) return &d;
  return nullptr;
}

std::vector<const Document*> Corpus::split(Split s) const {
  std::vector<const Document*> out;
  for (const auto& d : documents)
    if (d.split == s) out.push_back(&d);
  return out;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t pos = 0;
  std::size_t start = std::string_view::npos;
  auto flush = [&](std::size_t end) {
    if (start == std::string_view::npos) return;
    Token t;
    t.surface = std::string(text.substr(start, end - start));
    t.normalized = lowercase(t.surface);
    t.begin = start;
    t.end = end;
    tokens.push_back(std::move(t));
    start = std::string_view::npos;
  };
  while (pos < text.size()) {
    char32_t cp = 0;
    std::size_t len = decode_utf8(text, pos, cp);
    if (len == 0) {
      flush(pos);
      pos += 1;
      continue;
    }
    if (is_word_char(cp)) {
      if (start == std::string_view::npos) start = pos;
    } else {
      flush(pos);
    }
    pos += len;
  }
  flush(text.size());
  return tokens;
}

std::vector<SentenceRange> split_sentences(std::string_view text, const std::vector<Token>& tokens) {
  std::vector<SentenceRange> out;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::size_t gap_end = i + 1 < tokens.size() ? tokens[i + 1].begin : text.size();
    bool boundary = false;
    for (std::size_t p = tokens[i].end; p < gap_end && !boundary; ++p) {
      if (is_terminator(text[p]) && !is_abbreviation_dot(text, p)) boundary = true;
    }
    if (boundary || i + 1 == tokens.size()) {
      out.push_back({begin, i + 1});
      begin = i + 1;
    }
  }
  return out;
}

std::vector<SentenceRange> split_sentences(const Document& doc) {
  return split_sentences(doc.text, doc.tokens);
}

Document make_document(std::string id, std::string text, std::vector<std::string> labels, Split split) {
  Document doc;
  doc.id = std::move(id);
  doc.text = std::move(text);
  doc.tokens = tokenize(doc.text);
  doc.sentences = split_sentences(doc.text, doc.tokens);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  doc.labels = std::move(labels);
  doc.split = split;
  return doc;
}

Corpus build_corpus(std::vector<Document> documents, const CorpusOptions& options) {
  Corpus corpus;
  std::unordered_set<std::string> ids;
  std::vector<std::string> labels;
  for (const auto& d : documents) {
    if (!ids.insert(d.id).second) throw DuplicateError("duplicate document id '" + d.id + "'");
    labels.insert(labels.end(), d.labels.begin(), d.labels.end());
  }
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  corpus.label_vocab = std::move(labels);

  // First-appearance order over the train split; types below the frequency
  // floor fold into the unknown entry.
  std::vector<std::string> order;
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& d : documents) {
    if (d.split != Split::Train) continue;
    for (const auto& t : d.tokens) {
      if (counts[t.normalized]++ == 0) order.push_back(t.normalized);
    }
  }
  for (const auto& type : order) {
    const std::size_t c = counts[type];
    if (c >= options.min_token_frequency && type != Vocabulary::kUnknown) {
      corpus.token_vocab.add(type, c);
    } else {
      corpus.token_vocab.add_unknown(c);
    }
  }
  corpus.documents = std::move(documents);
  return corpus;
}

Corpus parse_corpus(std::string_view jsonl, const CorpusOptions& options) {
  std::vector<Document> docs;
  std::unordered_set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    std::string_view line = jsonl.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!rec.is_object()) throw ParseError("record is not an object", line_no);
    auto require_string = [&](const char* key) -> std::string {
      auto it = rec.find(key);
      if (it == rec.end()) throw ParseError(std::string("missing field \"") + key + "\"", line_no);
      if (!it->is_string()) throw ParseError(std::string("field \"") + key + "\" is not a string", line_no);
      return it->get<std::string>();
    };
    std::string id = require_string("id");
    std::string text = require_string("text");
    std::vector<std::string> labels;
    if (auto it = rec.find("labels"); it != rec.end()) {
      if (!it->is_array()) throw ParseError("field \"labels\" is not an array", line_no);
      for (const auto& l : *it) {
        if (!l.is_string()) throw ParseError("label is not a string", line_no);
        labels.push_back(l.get<std::string>());
      }
    }
    Split split = Split::Train;
    if (auto it = rec.find("split"); it != rec.end()) {
      if (!it->is_string()) throw ParseError("field \"split\" is not a string", line_no);
      try {
        split = parse_split(it->get<std::string>());
      } catch (const ValidationError& e) {
        throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (!ids.insert(id).second) {
      throw DuplicateError("line " + std::to_string(line_no) + ": duplicate document id '" + id + "'");
    }
    Document doc = make_document(std::move(id), std::move(text), std::move(labels), split);
    if (doc.tokens.empty()) {
      throw ValidationError("line " + std::to_string(line_no) + ": document '" + doc.id +
                            "' has empty text");
    }
    docs.push_back(std::move(doc));
  }
  return build_corpus(std::move(docs), options);
}

Corpus load_corpus(const std::filesystem::path& path, const CorpusOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), options);
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& d : corpus.documents) {
    nlohmann::ordered_json rec;
    rec["id"] = d.id;
    rec["text"] = d.text;
    rec["labels"] = d.labels;
    rec["split"] = std::string(to_string(d.split));
    out += rec.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write corpus '" + path.string() + "'");
  out << serialize_corpus(corpus);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace infodens
