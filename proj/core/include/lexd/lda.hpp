#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexd/coherence.hpp"
#include "lexd/corpus.hpp"

namespace lexd {

struct LdaOptions {
  int topics = 20;
  /// Symmetric document-topic prior; 50 / topics when unset.
  std::optional<double> alpha;
  double beta = 0.01;
  int iterations = 1000;
  std::uint64_t seed = 7;

  double resolved_alpha() const { return alpha.value_or(50.0 / topics); }
};

struct TopicDistribution {
  std::vector<double> theta;
};

/// Trained LDA state. phi is K x V, each row a probability vector.
///
/// Topics also carry a canonical order (rows sorted lexicographically).
/// Fold-in sampling and cosine reductions walk topics in that order, so a
/// model whose topic rows are permuted yields permuted thetas and identical
/// coherence values.
class TopicModel {
 public:
  /// Builds a model from explicit rows; rows are validated (non-negative,
  /// summing to 1 within 1e-9).
  static TopicModel from_parts(std::vector<std::string> vocabulary, std::vector<std::vector<double>> phi,
                               double alpha, double beta, int iterations = 0, std::uint64_t seed = 0);

  int topics() const noexcept { return static_cast<int>(phi_.size()); }
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  int iterations() const noexcept { return iterations_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<std::string>& vocabulary() const noexcept { return vocab_; }
  const std::vector<std::vector<double>>& phi() const noexcept { return phi_; }
  /// Word id, or -1 when out of vocabulary.
  int word_id(const std::string& w) const noexcept;
  const std::vector<int>& canonical_order() const noexcept { return canonical_; }

  /// Row k of the result is row perm[k] of this model.
  TopicModel permuted(std::span<const int> perm) const;

  /// Cosine of two thetas, summed in canonical topic order.
  double cosine(const TopicDistribution& a, const TopicDistribution& b) const;

  std::string to_json() const;
  /// Throws DataError on malformed or invalid content.
  static TopicModel from_json(const std::string& text);

  bool operator==(const TopicModel&) const = default;

 private:
  TopicModel() = default;
  void index();

  std::vector<std::string> vocab_;
  std::vector<std::vector<double>> phi_;
  double alpha_ = 0.0;
  double beta_ = 0.0;
  int iterations_ = 0;
  std::uint64_t seed_ = 0;
  std::unordered_map<std::string, int> ids_;
  std::vector<int> canonical_;
};

/// Collapsed Gibbs sampling with the conditional
///   p(z = k) ~ (n_dk + alpha) (n_kw + beta) / (n_k + V beta)
/// and phi_kw = (n_kw + beta) / (n_k + V beta) from the final sweep.
/// Deterministic given options.seed. Throws DataError when the vocabulary
/// is empty or topics exceed the token count; std::invalid_argument on bad
/// hyperparameters.
TopicModel train_lda(std::span<const std::vector<std::string>> documents, const LdaOptions& options);

/// Fold-in Gibbs with phi frozen; theta_k = (n_k + alpha) / (N + K alpha).
/// Tokens outside the vocabulary are dropped and the rest are visited in
/// sorted order, so equal token multisets give equal thetas for one seed.
/// Throws UnscorableSegment when nothing is left.
TopicDistribution infer_topics(const TopicModel& model, std::span<const std::string> segment,
                               int fold_in_iterations, std::uint64_t seed);

struct LdaCoherenceOptions {
  std::size_t min_sentences = 3;
  int fold_in_iterations = 100;
  std::uint64_t seed = 7;
};

/// Theta per sentence, cosine of adjacent pairs, mean. Skips utterances
/// shorter than min_sentences and utterances with an unscorable sentence.
CoherenceResult lda_coherence(const TopicModel& model, const Utterance& utterance,
                              const LdaCoherenceOptions& options = {});

std::vector<CoherenceResult> lda_coherence_corpus(const TopicModel& model, std::span<const Session> sessions,
                                                  const LdaCoherenceOptions& options = {}, unsigned jobs = 1);

}  // namespace lexd
