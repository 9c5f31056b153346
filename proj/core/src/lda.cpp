#include "lexd/lda.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "lexd/error.hpp"
#include "lexd/rng.hpp"
#include "parallel.hpp"

namespace lexd {

namespace {

constexpr double kRowTolerance = 1e-9;

void check_row(const std::vector<double>& row, std::size_t k) {
  double sum = 0.0;
  for (double x : row) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw DataError("phi row " + std::to_string(k) + " has an invalid entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kRowTolerance) {
    throw DataError("phi row " + std::to_string(k) + " sums to " + std::to_string(sum));
  }
}

// Draws an index from unnormalized weights visited in `order`.
int draw(Rng& rng, std::span<const double> cumulative, std::span<const int> order) {
  const double u = rng.uniform() * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  const auto j = std::min<std::ptrdiff_t>(it - cumulative.begin(), static_cast<std::ptrdiff_t>(cumulative.size()) - 1);
  return order[static_cast<std::size_t>(j)];
}

}  // namespace

void TopicModel::index() {
  ids_.clear();
  for (std::size_t i = 0; i < vocab_.size(); ++i) ids_.emplace(vocab_[i], static_cast<int>(i));
  canonical_.resize(phi_.size());
  std::iota(canonical_.begin(), canonical_.end(), 0);
  std::stable_sort(canonical_.begin(), canonical_.end(), [&](int a, int b) {
    return phi_[static_cast<std::size_t>(a)] < phi_[static_cast<std::size_t>(b)];
  });
}

TopicModel TopicModel::from_parts(std::vector<std::string> vocabulary, std::vector<std::vector<double>> phi,
                                  double alpha, double beta, int iterations, std::uint64_t seed) {
  if (vocabulary.empty()) throw DataError("topic model has an empty vocabulary");
  if (phi.empty()) throw DataError("topic model has no topics");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw DataError("alpha and beta must be positive");
  std::set<std::string> unique(vocabulary.begin(), vocabulary.end());
  if (unique.size() != vocabulary.size()) throw DataError("duplicate vocabulary entry");
  for (std::size_t k = 0; k < phi.size(); ++k) {
    if (phi[k].size() != vocabulary.size()) throw DataError("phi row " + std::to_string(k) + " has the wrong length");
    check_row(phi[k], k);
  }
  TopicModel m;
  m.vocab_ = std::move(vocabulary);
  m.phi_ = std::move(phi);
  m.alpha_ = alpha;
  m.beta_ = beta;
  m.iterations_ = iterations;
  m.seed_ = seed;
  m.index();
  return m;
}

int TopicModel::word_id(const std::string& w) const noexcept {
  auto it = ids_.find(w);
  return it == ids_.end() ? -1 : it->second;
}

TopicModel TopicModel::permuted(std::span<const int> perm) const {
  if (perm.size() != phi_.size()) throw std::invalid_argument("permutation size mismatch");
  std::vector<std::vector<double>> rows;
  for (int k : perm) rows.push_back(phi_.at(static_cast<std::size_t>(k)));
  return from_parts(vocab_, std::move(rows), alpha_, beta_, iterations_, seed_);
}

double TopicModel::cosine(const TopicDistribution& a, const TopicDistribution& b) const {
  if (a.theta.size() != phi_.size() || b.theta.size() != phi_.size()) {
    throw std::invalid_argument("theta length does not match topic count");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int k : canonical_) {
    const double x = a.theta[static_cast<std::size_t>(k)];
    const double y = b.theta[static_cast<std::size_t>(k)];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

std::string TopicModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "lexd-lda";
  j["version"] = 1;
  j["topics"] = phi_.size();
  j["alpha"] = alpha_;
  j["beta"] = beta_;
  j["iterations"] = iterations_;
  j["seed"] = seed_;
  j["vocabulary"] = vocab_;
  j["phi"] = phi_;
  return j.dump() + "\n";
}

TopicModel TopicModel::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("malformed topic model: ") + e.what());
  }
  try {
    if (j.at("format") != "lexd-lda") throw DataError("not a lexd topic model");
    if (j.at("version") != 1) throw DataError("unsupported topic model version");
    auto phi = j.at("phi").get<std::vector<std::vector<double>>>();
    if (j.at("topics").get<std::size_t>() != phi.size()) throw DataError("topic count does not match phi");
    return from_parts(j.at("vocabulary").get<std::vector<std::string>>(), std::move(phi), j.at("alpha").get<double>(),
                      j.at("beta").get<double>(), j.at("iterations").get<int>(), j.at("seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid topic model: ") + e.what());
  }
}

TopicModel train_lda(std::span<const std::vector<std::string>> documents, const LdaOptions& options) {
  const int K = options.topics;
  const double alpha = options.resolved_alpha();
  const double beta = options.beta;
  if (K < 1) throw std::invalid_argument("topic count must be >= 1");
  if (options.iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("alpha and beta must be positive");
  if (documents.empty()) throw DataError("cannot train a topic model on no documents");

  std::set<std::string> words;
  std::size_t total = 0;
  for (const auto& d : documents) {
    words.insert(d.begin(), d.end());
    total += d.size();
  }
  if (words.empty()) throw DataError("topic model vocabulary is empty");
  if (static_cast<std::size_t>(K) > total) {
    throw DataError("topic count " + std::to_string(K) + " exceeds token count " + std::to_string(total));
  }
  std::vector<std::string> vocab(words.begin(), words.end());
  std::unordered_map<std::string, int> ids;
  for (std::size_t i = 0; i < vocab.size(); ++i) ids.emplace(vocab[i], static_cast<int>(i));
  const auto V = vocab.size();
  const auto Ku = static_cast<std::size_t>(K);

  std::vector<std::vector<int>> docs;
  docs.reserve(documents.size());
  for (const auto& d : documents) {
    auto& ws = docs.emplace_back();
    for (const auto& t : d) ws.push_back(ids.at(t));
  }

  Rng rng(options.seed);
  std::vector<std::vector<int>> z(docs.size());
  std::vector<std::vector<double>> n_dk(docs.size(), std::vector<double>(Ku, 0.0));
  std::vector<double> n_kw(Ku * V, 0.0);
  std::vector<double> n_k(Ku, 0.0);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    z[d].resize(docs[d].size());
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      const auto k = static_cast<std::size_t>(rng.index(Ku));
      z[d][i] = static_cast<int>(k);
      n_dk[d][k] += 1;
      n_kw[k * V + static_cast<std::size_t>(docs[d][i])] += 1;
      n_k[k] += 1;
    }
  }

  std::vector<int> identity(Ku);
  std::iota(identity.begin(), identity.end(), 0);
  std::vector<double> cumulative(Ku);
  const double vbeta = static_cast<double>(V) * beta;
  for (int it = 0; it < options.iterations; ++it) {
    for (std::size_t d = 0; d < docs.size(); ++d) {
      for (std::size_t i = 0; i < docs[d].size(); ++i) {
        const auto w = static_cast<std::size_t>(docs[d][i]);
        auto k = static_cast<std::size_t>(z[d][i]);
        n_dk[d][k] -= 1;
        n_kw[k * V + w] -= 1;
        n_k[k] -= 1;
        double acc = 0.0;
        for (std::size_t j = 0; j < Ku; ++j) {
          acc += (n_dk[d][j] + alpha) * (n_kw[j * V + w] + beta) / (n_k[j] + vbeta);
          cumulative[j] = acc;
        }
        k = static_cast<std::size_t>(draw(rng, cumulative, identity));
        z[d][i] = static_cast<int>(k);
        n_dk[d][k] += 1;
        n_kw[k * V + w] += 1;
        n_k[k] += 1;
      }
    }
  }

  std::vector<std::vector<double>> phi(Ku, std::vector<double>(V));
  for (std::size_t k = 0; k < Ku; ++k) {
    const double denom = n_k[k] + vbeta;
    for (std::size_t w = 0; w < V; ++w) phi[k][w] = (n_kw[k * V + w] + beta) / denom;
  }
  return TopicModel::from_parts(std::move(vocab), std::move(phi), alpha, beta, options.iterations, options.seed);
}

TopicDistribution infer_topics(const TopicModel& model, std::span<const std::string> segment, int fold_in_iterations,
                               std::uint64_t seed) {
  if (fold_in_iterations < 1) throw std::invalid_argument("fold-in iterations must be >= 1");
  std::vector<int> words;
  for (const auto& t : segment) {
    if (const int id = model.word_id(t); id >= 0) words.push_back(id);
  }
  if (words.empty()) throw UnscorableSegment("segment has no in-vocabulary tokens");
  std::sort(words.begin(), words.end());

  const auto& order = model.canonical_order();
  const auto& phi = model.phi();
  const auto K = order.size();
  const double alpha = model.alpha();

  std::uint64_t stream = seed;
  for (int w : words) stream = mix64(stream ^ static_cast<std::uint64_t>(w));
  Rng rng(stream);

  std::vector<int> z(words.size());
  std::vector<double> n(K, 0.0);
  for (auto& zi : z) {
    zi = order[static_cast<std::size_t>(rng.index(K))];
    n[static_cast<std::size_t>(zi)] += 1;
  }
  std::vector<double> cumulative(K);
  for (int it = 0; it < fold_in_iterations; ++it) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      n[static_cast<std::size_t>(z[i])] -= 1;
      double acc = 0.0;
      for (std::size_t j = 0; j < K; ++j) {
        const auto k = static_cast<std::size_t>(order[j]);
        acc += (n[k] + alpha) * phi[k][static_cast<std::size_t>(words[i])];
        cumulative[j] = acc;
      }
      if (!(acc > 0.0)) {
        // Every topic gives this word zero mass; fall back to the prior.
        for (std::size_t j = 0; j < K; ++j) cumulative[j] = static_cast<double>(j + 1);
      }
      z[i] = draw(rng, cumulative, order);
      n[static_cast<std::size_t>(z[i])] += 1;
    }
  }

  TopicDistribution out;
  out.theta.resize(K);
  const double denom = static_cast<double>(words.size()) + static_cast<double>(K) * alpha;
  for (std::size_t k = 0; k < K; ++k) out.theta[k] = (n[k] + alpha) / denom;
  return out;
}

CoherenceResult lda_coherence(const TopicModel& model, const Utterance& utterance,
                              const LdaCoherenceOptions& options) {
  const auto& sentences = utterance.sentences;
  if (sentences.size() < std::max<std::size_t>(options.min_sentences, 2)) {
    return Skip{SkipReason::TooFewSentences, utterance.session_id, utterance.utterance_index,
                std::to_string(sentences.size()) + " sentence(s)"};
  }
  std::vector<TopicDistribution> thetas;
  thetas.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    try {
      thetas.push_back(infer_topics(model, sentences[i].tokens, options.fold_in_iterations, options.seed));
    } catch (const UnscorableSegment& e) {
      return Skip{SkipReason::UnscorableSentence, utterance.session_id, utterance.utterance_index,
                  "sentence " + std::to_string(i) + ": " + e.what()};
    }
  }
  CoherenceScore score;
  score.method = CoherenceMethod::Lda;
  score.provider = "lda";
  score.session_id = utterance.session_id;
  score.utterance_index = utterance.utterance_index;
  for (std::size_t i = 0; i + 1 < thetas.size(); ++i) {
    score.pair_similarities.push_back(model.cosine(thetas[i], thetas[i + 1]));
  }
  score.value = mean_of(score.pair_similarities);
  return score;
}

std::vector<CoherenceResult> lda_coherence_corpus(const TopicModel& model, std::span<const Session> sessions,
                                                  const LdaCoherenceOptions& options, unsigned jobs) {
  std::vector<const Utterance*> work;
  for (const auto& s : sessions) {
    for (const auto& u : s.utterances) work.push_back(&u);
  }
  std::vector<CoherenceResult> out(work.size());
  detail::parallel_for(work.size(), jobs, [&](std::size_t i) { out[i] = lda_coherence(model, *work[i], options); });
  return out;
}

}  // namespace lexd
