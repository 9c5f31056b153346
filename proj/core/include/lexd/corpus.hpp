#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lexd {

enum class Diagnosis { HC, SZ, MDD };
enum class Speaker { Subject, Interviewer };

std::string_view to_string(Diagnosis d) noexcept;
std::string_view to_string(Speaker s) noexcept;
/// Throws DataError for anything other than "HC", "SZ" or "MDD".
Diagnosis parse_diagnosis(std::string_view s);

inline constexpr int kBprsScaleMin = 18;
inline constexpr int kBprsScaleMax = 126;

/// One line of a corpus file.
struct TranscriptRecord {
  std::string session_id;
  std::string subject_id;
  Diagnosis diagnosis = Diagnosis::HC;
  std::optional<int> bprs_total;
  std::int64_t utterance_index = 0;
  Speaker speaker = Speaker::Subject;
  std::string text;

  bool operator==(const TranscriptRecord&) const = default;
};

struct Sentence {
  std::vector<std::string> tokens;
  std::string raw;

  bool operator==(const Sentence&) const = default;
};

/// One subject answer.
struct Utterance {
  std::string session_id;
  std::int64_t utterance_index = 0;
  std::vector<Sentence> sentences;
  /// Tokens of the interviewer record sharing this utterance_index, if any.
  /// Not scored; available as optional left context.
  std::vector<std::string> prompt;

  std::size_t word_count() const noexcept;
  /// All sentence tokens in order.
  std::vector<std::string> words() const;

  bool operator==(const Utterance&) const = default;
};

struct Session {
  std::string session_id;
  std::string subject_id;
  Diagnosis diagnosis = Diagnosis::HC;
  std::optional<int> bprs_total;
  std::vector<Utterance> utterances;

  bool operator==(const Session&) const = default;
};

struct CorpusFilter {
  std::set<Diagnosis> diagnoses{Diagnosis::HC, Diagnosis::SZ};
  int bprs_min = 18;
  int bprs_max = 67;

  /// Sessions without a BPRS total are kept; the range only rejects values
  /// that are present and outside it.
  bool admits(Diagnosis d, const std::optional<int>& bprs) const noexcept;
};

/// Parses "HC,SZ" style lists.
std::set<Diagnosis> parse_diagnosis_list(std::string_view csv);
/// Parses "lo:hi" into an inclusive range.
std::pair<int, int> parse_bprs_range(std::string_view text);

// ---- text segmentation -------------------------------------------------

/// Abbreviations that never end a sentence (compared lowercased, without the
/// trailing period).
std::span<const std::string_view> sentence_abbreviations() noexcept;

/// Lowercases and splits on whitespace and punctuation. Apostrophes and
/// hyphens survive only between two word characters. Digits are word
/// characters. Bytes >= 0x80 are word characters, except the Unicode general
/// punctuation block (U+2000..U+206F), where U+2019 is read as an apostrophe.
std::vector<std::string> tokenize_words(std::string_view text);

/// Splits at '.', '!' or '?' runs that are followed by whitespace or the end
/// of text, unless the word before the terminator is an abbreviation.
/// Sentences that contain no word tokens are dropped. Throws DataError on
/// empty or whitespace-only text, or text without any word token.
std::vector<Sentence> segment_sentences(std::string_view text);

// ---- corpus files ------------------------------------------------------

/// Parses one JSON line. `line_no` is 1-based and used for error messages.
TranscriptRecord parse_record(std::string_view line, std::size_t line_no);
std::string format_record(const TranscriptRecord& r);

/// Reads every non-blank line of a corpus file, validating each record and
/// the cross-record invariants (unique subject utterance indices, consistent
/// session metadata). Throws RecordError naming the offending line.
std::vector<TranscriptRecord> read_records(std::istream& in);

/// Builds sessions from records: subject speech only, filter applied,
/// utterances ordered by utterance_index, sessions in order of first
/// appearance.
std::vector<Session> build_sessions(std::span<const TranscriptRecord> records,
                                    const CorpusFilter& filter);

std::vector<Session> load_corpus(std::istream& in, const CorpusFilter& filter);
std::vector<Session> load_corpus(const std::filesystem::path& path,
                                 const CorpusFilter& filter);

void write_records(std::ostream& out, std::span<const TranscriptRecord> records);

/// Subject utterances flattened to token sequences (one per utterance).
std::vector<std::vector<std::string>> utterance_token_lists(
    std::span<const Session> sessions);

}  // namespace lexd
