#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include "lexd/corpus.hpp"
#include "lexd/error.hpp"

namespace lexd {
namespace {

constexpr std::array<std::string_view, 9> kAbbreviations = {
    "mr", "mrs", "ms", "dr", "st", "etc", "e.g", "i.e", "vs"};

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_terminator(char c) noexcept { return c == '.' || c == '!' || c == '?'; }

char ascii_lower(char c) noexcept {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

enum class UnitKind { Word, Joiner, Separator };

struct Unit {
  UnitKind kind;
  std::string_view bytes;
  char joiner = 0;
};

// Classifies the code unit at `i` and returns its byte length.
Unit classify(std::string_view text, std::size_t i) {
  const auto c = static_cast<unsigned char>(text[i]);
  if (c < 0x80) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
        (c >= '0' && c <= '9')) {
      return {UnitKind::Word, text.substr(i, 1)};
    }
    if (c == '\'' || c == '-') {
      return {UnitKind::Joiner, text.substr(i, 1), static_cast<char>(c)};
    }
    return {UnitKind::Separator, text.substr(i, 1)};
  }
  // U+2000..U+206F are encoded E2 80 xx / E2 81 xx.
  if (c == 0xE2 && i + 2 < text.size()) {
    const auto c1 = static_cast<unsigned char>(text[i + 1]);
    const auto c2 = static_cast<unsigned char>(text[i + 2]);
    if (c1 == 0x80 && c2 == 0x99) {
      return {UnitKind::Joiner, text.substr(i, 3), '\''};
    }
    if (c1 == 0x80 || c1 == 0x81) {
      return {UnitKind::Separator, text.substr(i, 3)};
    }
  }
  return {UnitKind::Word, text.substr(i, 1)};
}

}  // namespace

std::span<const std::string_view> sentence_abbreviations() noexcept {
  return kAbbreviations;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<Unit> units;
  for (std::size_t i = 0; i < text.size();) {
    auto u = classify(text, i);
    i += u.bytes.size();
    units.push_back(u);
  }

  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& u = units[i];
    switch (u.kind) {
      case UnitKind::Word:
        for (char c : u.bytes) current.push_back(ascii_lower(c));
        break;
      case UnitKind::Joiner:
        if (!current.empty() && i + 1 < units.size() &&
            units[i + 1].kind == UnitKind::Word) {
          current.push_back(u.joiner);
        } else {
          flush();
        }
        break;
      case UnitKind::Separator:
        flush();
        break;
    }
  }
  flush();
  return tokens;
}

namespace {

// Lowercased chunk between the previous whitespace and `end`, with leading
// non-alphanumeric bytes removed (opening quotes, brackets).
std::string preceding_word(std::string_view text, std::size_t end) {
  std::size_t begin = end;
  while (begin > 0 && !is_space(text[begin - 1])) --begin;
  while (begin < end) {
    const char c = text[begin];
    const bool alnum = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                       (c >= '0' && c <= '9');
    if (alnum) break;
    ++begin;
  }
  std::string word(text.substr(begin, end - begin));
  std::transform(word.begin(), word.end(), word.begin(), ascii_lower);
  return word;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::vector<Sentence> segment_sentences(std::string_view text) {
  if (trim(text).empty()) {
    throw DataError("cannot segment empty text");
  }

  std::vector<Sentence> sentences;
  auto emit = [&](std::size_t begin, std::size_t end) {
    const auto raw = trim(text.substr(begin, end - begin));
    if (raw.empty()) return;
    auto tokens = tokenize_words(raw);
    if (tokens.empty()) return;
    sentences.push_back({std::move(tokens), std::string(raw)});
  };

  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_terminator(text[i])) {
      ++i;
      continue;
    }
    const std::size_t run_begin = i;
    while (i < text.size() && is_terminator(text[i])) ++i;
    const std::size_t run_end = i;
    if (run_end < text.size() && !is_space(text[run_end])) continue;

    if (run_end - run_begin == 1 && text[run_begin] == '.') {
      const auto word = preceding_word(text, run_begin);
      if (std::find(kAbbreviations.begin(), kAbbreviations.end(), word) !=
          kAbbreviations.end()) {
        continue;
      }
    }
    emit(start, run_end);
    start = run_end;
  }
  emit(start, text.size());

  if (sentences.empty()) {
    throw DataError("text contains no word tokens");
  }
  return sentences;
}

}  // namespace lexd
