#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lexd {

enum class Smoothing : std::uint8_t { Mle = 0, KneserNey = 1 };

std::string_view to_string(Smoothing s) noexcept;
Smoothing parse_smoothing(std::string_view s);

inline constexpr std::string_view kUnk = "<unk>";
inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";

struct NgramOptions {
  int order = 3;
  double discount = 0.75;
  int min_count = 2;
  Smoothing smoothing = Smoothing::KneserNey;
};

using TokenId = std::uint32_t;
using Ngram = std::vector<TokenId>;

/// Interpolated Kneser-Ney (or MLE) n-gram model over natural logs.
///
/// Training pads each sequence with (order - 1) `<s>` and one `</s>`, maps
/// tokens seen fewer than `min_count` times to `<unk>`, and records every
/// k-gram count for k <= order. `<s>` is never a prediction target; the
/// predictable vocabulary is everything else, including `<unk>` and `</s>`.
///
/// Kneser-Ney recursion, with D the discount and T the predictable vocabulary:
///
///   P_k(w | h) = max(a_k(h w) - D, 0) / A_k(h)
///              + D * N_k(h) / A_k(h) * P_{k-1}(w | h')        if A_k(h) > 0
///   P_k(w | h) = P_{k-1}(w | h')                               otherwise
///   P_0(w)     = 1 / |T|
///
/// where a_k is the raw count at the highest order and the continuation
/// count |{v : c(v h w) > 0}| below it, A_k(h) = sum over T of a_k(h .), and
/// N_k(h) = |{w in T : a_k(h w) > 0}|.
///
/// A trained model is immutable; concurrent log_prob calls are safe.
class NgramModel {
 public:
  static NgramModel train(std::span<const std::vector<std::string>> sentences,
                          const NgramOptions& options);

  /// Natural-log probability of `target` after `context`. Out-of-vocabulary
  /// tokens map to `<unk>`; the context is cut to the last (order - 1) tokens
  /// and left-padded with `<s>` when shorter.
  ///
  /// MLE mode throws ZeroProbability when the count is zero. Throws
  /// std::invalid_argument when `target` is `<s>`.
  double log_prob(std::span<const std::string> context, std::string_view target) const;

  /// Same query on already-mapped ids.
  double log_prob_ids(std::span<const TokenId> context, TokenId target) const;

  std::vector<std::uint8_t> serialize() const;
  /// Throws FormatError carrying the byte offset of the first problem.
  static NgramModel deserialize(std::span<const std::uint8_t> bytes);

  int order() const noexcept { return options_.order; }
  double discount() const noexcept { return options_.discount; }
  int min_count() const noexcept { return options_.min_count; }
  Smoothing smoothing() const noexcept { return options_.smoothing; }
  const NgramOptions& options() const noexcept { return options_; }

  /// Index 0 is `<unk>`, 1 is `<s>`, 2 is `</s>`, the rest sorted.
  const std::vector<std::string>& vocabulary() const noexcept { return vocab_; }
  TokenId id(std::string_view token) const noexcept;
  /// Raw count of a k-gram given as tokens (0 when unseen).
  std::uint64_t count(std::span<const std::string> ngram) const;
  std::uint64_t count_ids(std::span<const TokenId> ngram) const;
  /// All raw counts for one order k (1..order), sorted.
  std::map<Ngram, std::uint64_t> counts(int k) const;

  /// Ids that can be predicted (all but `<s>`).
  std::vector<TokenId> targets() const;

  /// Every context of length (order - 1) seen in training.
  std::vector<Ngram> observed_contexts() const;

  bool operator==(const NgramModel& other) const;

  static constexpr TokenId kUnkId = 0;
  static constexpr TokenId kBosId = 1;
  static constexpr TokenId kEosId = 2;

 private:
  struct NgramHash {
    std::size_t operator()(const Ngram& g) const noexcept;
  };
  struct ContextStats {
    double total = 0;      // A(h)
    double distinct = 0;   // N(h)
  };
  struct Level {
    std::unordered_map<Ngram, double, NgramHash> numer;
    std::unordered_map<Ngram, ContextStats, NgramHash> context;
  };

  NgramModel() = default;
  void build_index();
  double prob_at(int k, std::span<const TokenId> context, TokenId target) const;

  NgramOptions options_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, TokenId> ids_;
  // raw_[k-1] holds counts of k-grams.
  std::vector<std::unordered_map<Ngram, std::uint64_t, NgramHash>> raw_;
  // levels_[k-1] holds smoothing numerators for k-grams.
  std::vector<Level> levels_;
  double predictable_ = 0;
};

}  // namespace lexd
