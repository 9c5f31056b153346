#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexd/coherence.hpp"
#include "lexd/surprisal.hpp"

namespace lexd {

enum class Metric { Surprisal, LdaCoherence, EmbedCoherence };

/// "surprisal", "lda-coherence", "embed-coherence"; also the score file stem.
std::string_view to_string(Metric m) noexcept;
Metric parse_metric(std::string_view s);

/// One line of a score CSV:
///   session_id,utterance_index,sentence_index,score,provider
/// sentence_index is "AGG" for utterance-level rows.
struct ScoreRow {
  std::string session_id;
  std::int64_t utterance_index = 0;
  std::optional<std::size_t> sentence_index;
  double score = 0.0;
  std::string provider;

  bool operator==(const ScoreRow&) const = default;
};

/// One row per sentence followed by the utterance AGG row.
std::vector<ScoreRow> surprisal_rows(std::span<const SurprisalScore> scores);
/// One AGG row per scored utterance; skips are left out.
std::vector<ScoreRow> coherence_rows(std::span<const CoherenceResult> results);

void write_scores(std::ostream& out, std::span<const ScoreRow> rows);
/// Throws DataError on a bad header or row.
std::vector<ScoreRow> read_scores(std::istream& in);

void write_skips(std::ostream& out, const SkipReport& report);

/// A value attached to an utterance, the unit the statistics work on.
struct Observation {
  std::string session_id;
  std::int64_t utterance_index = 0;
  double value = 0.0;
};

/// Surprisal observations are the sentence rows (the session statistic is a
/// mean over sentences); coherence observations are the AGG rows.
std::vector<Observation> observations(std::span<const ScoreRow> rows, Metric metric);

}  // namespace lexd
