#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lexd/coherence.hpp"
#include "lexd/corpus.hpp"

namespace lexd {

/// Sentence vector stored as (index, value) pairs with strictly ascending
/// indices. Dense vectors are the special case where every index appears.
struct SparseVector {
  std::uint32_t dim = 0;
  std::vector<std::pair<std::uint32_t, double>> entries;

  static SparseVector from_dense(std::span<const double> values);
  std::vector<double> to_dense() const;
  double norm() const noexcept;
  bool operator==(const SparseVector&) const = default;
};

/// Cosine similarity clamped to [-1, 1]. Throws std::invalid_argument on a
/// dimension mismatch or a zero-norm input.
double cosine(const SparseVector& a, const SparseVector& b);

/// Seeds of the built-in hashed embedding. Index = h(token, kIndexSeed) mod d,
/// sign = bit 0 of h(token, kSignSeed), h = stable_hash (FNV-1a + splitmix64).
inline constexpr std::uint64_t kEmbedIndexSeed = 0x6c657864'696e6478ULL;  // "lexdindx"
inline constexpr std::uint64_t kEmbedSignSeed = 0x6c657864'7369676eULL;   // "lexdsign"
inline constexpr std::uint32_t kDefaultEmbedDim = 1u << 20;

/// Hashed signed term-frequency vector, L2-normalized. If every coordinate
/// cancels to zero, the coordinate h(joined sentence) mod d is set to 1.
/// Throws std::invalid_argument on an empty sentence or dim == 0.
SparseVector builtin_embed(std::span<const std::string> sentence, std::uint32_t dim);

struct SentenceQuery {
  std::span<const std::string> tokens;
  std::string_view raw;
  std::string_view session_id;
  std::int64_t utterance_index = 0;
  std::size_t sentence_index = 0;
};

struct EmbeddingInfo {
  std::string name;
  std::uint32_t dim = 0;
  bool concurrent = true;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual const EmbeddingInfo& info() const = 0;
  virtual SparseVector embed(const SentenceQuery& query) const = 0;
  /// Overridden by providers that pipeline requests.
  virtual std::vector<SparseVector> embed_batch(std::span<const SentenceQuery> queries) const;
};

class BuiltinEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit BuiltinEmbeddingProvider(std::uint32_t dim = kDefaultEmbedDim);
  const EmbeddingInfo& info() const override { return info_; }
  SparseVector embed(const SentenceQuery& query) const override;

 private:
  EmbeddingInfo info_;
};

/// Serves vectors from a line-delimited file of records
/// {session_id, utterance_index, sentence_index, vector: [reals]}.
/// All vectors must share one dimension.
class ReplayEmbeddingProvider final : public EmbeddingProvider {
 public:
  static std::unique_ptr<ReplayEmbeddingProvider> load(const std::string& path);
  static std::unique_ptr<ReplayEmbeddingProvider> parse(std::istream& in, std::string name = "replay");

  const EmbeddingInfo& info() const override { return info_; }
  SparseVector embed(const SentenceQuery& query) const override;

 private:
  ReplayEmbeddingProvider() = default;
  EmbeddingInfo info_;
  std::unordered_map<std::string, SparseVector> vectors_;
};

/// Coherence of precomputed sentence vectors: cosine of each adjacent pair,
/// value = their mean. Requires at least two vectors.
CoherenceScore coherence_from_vectors(std::span<const SparseVector> vectors);

/// Embeds every sentence and scores adjacent-pair cosine similarity. Returns
/// a Skip when the utterance has fewer than `min_sentences` sentences.
/// Provider failures are rethrown as ProviderError naming the sentence index;
/// a zero-norm vector is a contract violation and also throws.
CoherenceResult embed_coherence(const EmbeddingProvider& provider, const Utterance& utterance,
                                std::size_t min_sentences = 3);

std::vector<CoherenceResult> embed_coherence_corpus(const EmbeddingProvider& provider,
                                                    std::span<const Session> sessions,
                                                    std::size_t min_sentences = 3, unsigned jobs = 1);

}  // namespace lexd
