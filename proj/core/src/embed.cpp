#include "lexd/embed.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>

#include "lexd/error.hpp"
#include "lexd/rng.hpp"
#include "parallel.hpp"

namespace lexd {

std::string_view to_string(CoherenceMethod m) noexcept {
  return m == CoherenceMethod::Lda ? "lda" : "embedding";
}

std::string_view to_string(SkipReason r) noexcept {
  return r == SkipReason::TooFewSentences ? "too_few_sentences" : "unscorable_sentence";
}

void SkipReport::add(const CoherenceResult& r) {
  if (const auto* skip = std::get_if<Skip>(&r)) {
    ++skipped_by_reason[skip->reason];
    skips.push_back(*skip);
  } else {
    ++scored;
  }
}

std::size_t SkipReport::skipped() const noexcept {
  std::size_t n = 0;
  for (const auto& [reason, count] : skipped_by_reason) n += count;
  return n;
}

double mean_of(const std::vector<double>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("mean of no pair similarities");
  double sum = 0.0;
  for (double v : pairs) sum += v;
  return sum / static_cast<double>(pairs.size());
}

SparseVector SparseVector::from_dense(std::span<const double> values) {
  SparseVector v;
  v.dim = static_cast<std::uint32_t>(values.size());
  for (std::uint32_t i = 0; i < values.size(); ++i) {
    if (values[i] != 0.0) v.entries.emplace_back(i, values[i]);
  }
  return v;
}

std::vector<double> SparseVector::to_dense() const {
  std::vector<double> out(dim, 0.0);
  for (const auto& [i, x] : entries) out[i] = x;
  return out;
}

double SparseVector::norm() const noexcept {
  double ss = 0.0;
  for (const auto& [i, x] : entries) ss += x * x;
  return std::sqrt(ss);
}

double cosine(const SparseVector& a, const SparseVector& b) {
  if (a.dim != b.dim) {
    throw std::invalid_argument("cosine of vectors with dimensions " + std::to_string(a.dim) + " and " +
                                std::to_string(b.dim));
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine of a zero-norm vector");
  double dot = 0.0;
  auto ia = a.entries.begin();
  auto ib = b.entries.begin();
  while (ia != a.entries.end() && ib != b.entries.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      dot += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

SparseVector builtin_embed(std::span<const std::string> sentence, std::uint32_t dim) {
  if (sentence.empty()) throw std::invalid_argument("cannot embed an empty sentence");
  if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");

  std::map<std::uint32_t, double> acc;
  for (const auto& tok : sentence) {
    const auto index = static_cast<std::uint32_t>(stable_hash(tok, kEmbedIndexSeed) % dim);
    const double sign = (stable_hash(tok, kEmbedSignSeed) & 1U) ? 1.0 : -1.0;
    acc[index] += sign;
  }
  SparseVector v;
  v.dim = dim;
  for (const auto& [i, x] : acc) {
    if (x != 0.0) v.entries.emplace_back(i, x);
  }
  if (v.entries.empty()) {
    std::string joined;
    for (const auto& tok : sentence) {
      if (!joined.empty()) joined.push_back(' ');
      joined += tok;
    }
    v.entries.emplace_back(static_cast<std::uint32_t>(stable_hash(joined, kEmbedIndexSeed) % dim), 1.0);
    return v;
  }
  const double n = v.norm();
  for (auto& [i, x] : v.entries) x /= n;
  return v;
}

std::vector<SparseVector> EmbeddingProvider::embed_batch(std::span<const SentenceQuery> queries) const {
  std::vector<SparseVector> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    try {
      out.push_back(embed(q));
    } catch (const std::exception& e) {
      throw ProviderError(info().name, "sentence " + std::to_string(q.sentence_index) + ": " + e.what());
    }
  }
  return out;
}

BuiltinEmbeddingProvider::BuiltinEmbeddingProvider(std::uint32_t dim) {
  if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
  info_.name = "builtin";
  info_.dim = dim;
}

SparseVector BuiltinEmbeddingProvider::embed(const SentenceQuery& query) const {
  return builtin_embed(query.tokens, info_.dim);
}

CoherenceScore coherence_from_vectors(std::span<const SparseVector> vectors) {
  if (vectors.size() < 2) throw std::invalid_argument("coherence needs at least two sentence vectors");
  CoherenceScore score;
  for (std::size_t i = 0; i + 1 < vectors.size(); ++i) {
    score.pair_similarities.push_back(cosine(vectors[i], vectors[i + 1]));
  }
  score.value = mean_of(score.pair_similarities);
  return score;
}

CoherenceResult embed_coherence(const EmbeddingProvider& provider, const Utterance& utterance,
                                std::size_t min_sentences) {
  const auto& sentences = utterance.sentences;
  if (sentences.size() < std::max<std::size_t>(min_sentences, 2)) {
    return Skip{SkipReason::TooFewSentences, utterance.session_id, utterance.utterance_index,
                std::to_string(sentences.size()) + " sentence(s)"};
  }
  const auto& info = provider.info();

  std::vector<SentenceQuery> queries;
  queries.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    queries.push_back({sentences[i].tokens, sentences[i].raw, utterance.session_id, utterance.utterance_index, i});
  }
  std::vector<SparseVector> vectors;
  try {
    vectors = provider.embed_batch(queries);
  } catch (const ProviderError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProviderError(info.name, e.what());
  }
  if (vectors.size() != queries.size()) {
    throw ProviderError(info.name, "returned " + std::to_string(vectors.size()) + " vectors for " +
                                       std::to_string(queries.size()) + " sentences");
  }
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].dim != info.dim) {
      throw ProviderError(info.name, "sentence " + std::to_string(i) + ": vector dimension " +
                                         std::to_string(vectors[i].dim) + ", expected " + std::to_string(info.dim));
    }
    if (vectors[i].norm() == 0.0) {
      throw ProviderError(info.name, "sentence " + std::to_string(i) + ": zero-norm vector");
    }
  }

  auto score = coherence_from_vectors(vectors);
  score.method = CoherenceMethod::Embedding;
  score.provider = info.name;
  score.session_id = utterance.session_id;
  score.utterance_index = utterance.utterance_index;
  return score;
}

namespace {

class SerialEmbedder final : public EmbeddingProvider {
 public:
  explicit SerialEmbedder(const EmbeddingProvider& inner) : inner_(inner) {}
  const EmbeddingInfo& info() const override { return inner_.info(); }
  SparseVector embed(const SentenceQuery& q) const override {
    std::lock_guard lock(mutex_);
    return inner_.embed(q);
  }
  std::vector<SparseVector> embed_batch(std::span<const SentenceQuery> qs) const override {
    std::lock_guard lock(mutex_);
    return inner_.embed_batch(qs);
  }

 private:
  const EmbeddingProvider& inner_;
  mutable std::mutex mutex_;
};

}  // namespace

std::vector<CoherenceResult> embed_coherence_corpus(const EmbeddingProvider& provider,
                                                    std::span<const Session> sessions,
                                                    std::size_t min_sentences, unsigned jobs) {
  std::vector<const Utterance*> work;
  for (const auto& s : sessions) {
    for (const auto& u : s.utterances) work.push_back(&u);
  }
  std::vector<CoherenceResult> out(work.size());
  std::optional<SerialEmbedder> serial;
  const EmbeddingProvider* p = &provider;
  if (!provider.info().concurrent && jobs > 1) p = &serial.emplace(provider);
  detail::parallel_for(work.size(), jobs,
                       [&](std::size_t i) { out[i] = embed_coherence(*p, *work[i], min_sentences); });
  return out;
}

}  // namespace lexd
