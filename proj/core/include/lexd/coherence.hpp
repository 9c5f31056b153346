#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lexd {

enum class CoherenceMethod { Lda, Embedding };

std::string_view to_string(CoherenceMethod m) noexcept;

/// Mean cosine similarity over adjacent sentence pairs of one utterance.
struct CoherenceScore {
  double value = 0.0;
  std::vector<double> pair_similarities;
  CoherenceMethod method = CoherenceMethod::Embedding;
  std::string provider;
  std::string session_id;
  std::int64_t utterance_index = 0;
};

enum class SkipReason { TooFewSentences, UnscorableSentence };

std::string_view to_string(SkipReason r) noexcept;

/// An utterance left out of coherence aggregates.
struct Skip {
  SkipReason reason = SkipReason::TooFewSentences;
  std::string session_id;
  std::int64_t utterance_index = 0;
  std::string detail;
};

using CoherenceResult = std::variant<CoherenceScore, Skip>;

/// Scored/skipped tallies. scored + skipped() == total by construction.
struct SkipReport {
  std::size_t scored = 0;
  std::map<SkipReason, std::size_t> skipped_by_reason;
  std::vector<Skip> skips;

  void add(const CoherenceResult& r);
  std::size_t skipped() const noexcept;
  std::size_t total() const noexcept { return scored + skipped(); }
};

/// Mean of `pairs` as a CoherenceScore value; pairs must be non-empty.
double mean_of(const std::vector<double>& pairs);

}  // namespace lexd
