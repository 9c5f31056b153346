#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lexd/corpus.hpp"

namespace lexd {

/// Content words of one topic. Pools must be pairwise disjoint and must not
/// reuse the shared function words of the sentence templates.
struct TopicPool {
  std::string name;
  std::vector<std::string> words;
};

/// Five built-in pools (food, travel, work, family, sports), 24 words each.
std::vector<TopicPool> default_topic_pools();

/// The fixed sentence templates; each "{}" is filled with a content word of
/// the utterance's topic. Everything else is a shared function word.
std::span<const std::string_view> sentence_templates() noexcept;

/// Shared function words appearing in the templates.
std::vector<std::string> function_words();

struct SynthUtterance {
  std::size_t topic = 0;
  std::vector<std::vector<std::string>> sentences;

  bool operator==(const SynthUtterance&) const = default;
};

struct SynthSession {
  std::string session_id;
  std::string subject_id;
  Diagnosis diagnosis = Diagnosis::HC;
  int bprs_total = 18;
  std::vector<SynthUtterance> utterances;

  bool operator==(const SynthSession&) const = default;
};

struct SyntheticCorpus {
  std::vector<TopicPool> pools;
  std::vector<SynthSession> sessions;

  std::size_t token_count() const noexcept;
  std::size_t utterance_count() const noexcept;

  /// Corpus-file records: one interviewer question and one subject answer
  /// per utterance, sharing the utterance_index.
  std::vector<TranscriptRecord> to_records() const;
  /// Same corpus through the regular ingestion path (no filtering).
  std::vector<Session> to_sessions() const;

  bool operator==(const SyntheticCorpus& o) const { return sessions == o.sessions; }
};

inline constexpr int kSessionsPerSubject = 4;

/// Builds n_sessions sessions of utterances_per_session utterances. Each
/// utterance draws one topic and 3..9 template sentences from it. BPRS totals
/// are spread evenly over [18, 67] in session order; subjects hold up to four
/// consecutive sessions and are SZ when their first session's BPRS is at
/// least 36, HC otherwise. Deterministic given seed. Throws DataError when
/// there are fewer than two pools, a pool has fewer than 20 words, pools
/// overlap, or a pool reuses a function word.
SyntheticCorpus generate_base(std::size_t n_sessions, std::size_t utterances_per_session,
                              std::vector<TopicPool> pools, std::uint64_t seed);

struct DisruptionConfig {
  double severity = 0.0;
  double p_repeat = 0.2;
  double p_insert = 0.2;
  double p_intrude = 0.3;
  std::uint64_t seed = 7;
  /// Multiplies each session's severity by (bprs - 18) / 49, so disruption
  /// grows with BPRS.
  bool scale_by_bprs = false;

  /// Throws std::invalid_argument unless every value lies in [0, 1].
  void validate() const;
};

/// Per sentence, with probability s * p_intrude, replaces the sentence by
/// one generated from a different pool. Then per token, with probability
/// s * p_repeat, repeats the token, and with probability s * p_insert,
/// inserts a random word of a different pool after it.
///
/// Every draw is a hash of (seed, channel, session, utterance, sentence,
/// token), so the events at a lower severity are a subset of the events at
/// a higher one, and s = 0 returns the input unchanged.
SyntheticCorpus apply_disruption(const SyntheticCorpus& corpus, const DisruptionConfig& config);

}  // namespace lexd
