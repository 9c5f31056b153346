#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexd/corpus.hpp"
#include "lexd/ngram.hpp"

namespace lexd {

/// Position of a scored token inside the corpus. Replay providers key on it;
/// model-based providers ignore it.
struct TokenLocation {
  std::string_view session_id;
  std::int64_t utterance_index = 0;
  std::size_t sentence_index = 0;
  std::size_t word_index = 0;  // within the sentence
};

struct TokenQuery {
  std::span<const std::string> context;
  std::string_view target;
  TokenLocation location;
};

struct ProviderInfo {
  std::string name;
  /// Always "natural"; kept so a mismatched provider is rejected up front.
  std::string log_base = "natural";
  std::size_t max_context = std::numeric_limits<std::size_t>::max();
  /// False means the engine serializes calls to this provider.
  bool concurrent = true;
};

/// Contract: log P(target | context) in nats, finite and <= 0.
class TokenProbabilityProvider {
 public:
  virtual ~TokenProbabilityProvider() = default;
  virtual const ProviderInfo& info() const = 0;
  virtual double log_prob(const TokenQuery& query) const = 0;
  /// Providers with a round-trip cost (the bridge) override this to
  /// pipeline requests. Results are in query order.
  virtual std::vector<double> log_prob_batch(std::span<const TokenQuery> queries) const;
};

/// The reference provider backed by an n-gram model.
class NgramProvider final : public TokenProbabilityProvider {
 public:
  explicit NgramProvider(std::shared_ptr<const NgramModel> model, std::string name = "builtin");
  const ProviderInfo& info() const override { return info_; }
  double log_prob(const TokenQuery& query) const override;

 private:
  std::shared_ptr<const NgramModel> model_;
  ProviderInfo info_;
};

/// Replays precomputed log-probabilities from a line-delimited file with
/// records {session_id, utterance_index, sentence_index, word_index, token,
/// logprob}. The token must match the queried target.
class ReplayLogProbProvider final : public TokenProbabilityProvider {
 public:
  static std::unique_ptr<ReplayLogProbProvider> load(const std::string& path);
  static std::unique_ptr<ReplayLogProbProvider> parse(std::istream& in, std::string name = "replay");

  const ProviderInfo& info() const override { return info_; }
  double log_prob(const TokenQuery& query) const override;

 private:
  struct Entry {
    std::string token;
    double logprob;
  };
  ReplayLogProbProvider() = default;
  static std::string key(std::string_view session, std::int64_t utt, std::size_t sent, std::size_t word);

  ProviderInfo info_;
  std::unordered_map<std::string, Entry> entries_;
};

/// Word scores are snapped to a grid of 2^-32 nats. Every partial sum below
/// 2^21 nats is then exact in double precision, so sentence and utterance
/// totals are identical whichever order the words are summed in.
inline constexpr double kSurprisalQuantum = 0x1.0p-32;

double quantize_surprisal(double nats) noexcept;

struct SurprisalScore {
  std::string session_id;
  std::int64_t utterance_index = 0;
  std::string provider;
  /// word_scores[s][w] is the surprisal of word w of sentence s.
  std::vector<std::vector<double>> word_scores;
  std::vector<double> sentence_scores;
  double utterance_score = 0.0;
};

struct SurprisalOptions {
  /// Prepend the interviewer prompt (when the corpus has one) as left
  /// context. Off by default: each answer is scored context-free.
  bool prompt_context = false;
};

/// -log P(target | context). The context is cut to the provider's maximum,
/// keeping the most recent tokens. Provider failures and contract violations
/// are rethrown as ProviderError naming the provider.
double word_surprisal(const TokenProbabilityProvider& provider, const TokenQuery& query);

/// Scores every word left to right; word i sees all earlier words of the
/// utterance across sentence boundaries, and nothing from other utterances.
/// Sentence score = sum of its word scores; utterance score = sum of the
/// sentence scores.
SurprisalScore score_utterance(const TokenProbabilityProvider& provider,
                               const Utterance& utterance,
                               const SurprisalOptions& options = {});

/// Scores all utterances of all sessions on up to `jobs` threads. Output
/// order is session order, then utterance order, regardless of `jobs`.
std::vector<SurprisalScore> score_corpus(const TokenProbabilityProvider& provider,
                                         std::span<const Session> sessions,
                                         const SurprisalOptions& options = {},
                                         unsigned jobs = 1);

/// Mean over every sentence score of one session.
double session_mean_sentence_surprisal(std::span<const SurprisalScore> scores);

}  // namespace lexd
