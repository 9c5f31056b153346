#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "lexd/error.hpp"
#include "lexd/lda.hpp"
#include "support.hpp"

namespace lexd {
namespace {

using testing::utterance;
using testing::words;
using Tokens = std::vector<std::string>;

// Documents drawn from `n_topics` disjoint vocabularies of `per_topic` words,
// each document from a single topic.
std::vector<Tokens> disjoint_corpus(int n_docs, int n_topics, int per_topic, int doc_len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> topic(0, n_topics - 1), word(0, per_topic - 1);
  std::vector<Tokens> docs;
  for (int d = 0; d < n_docs; ++d) {
    const int t = topic(rng);
    Tokens doc;
    for (int i = 0; i < doc_len; ++i) doc.push_back("t" + std::to_string(t) + "w" + std::to_string(word(rng)));
    docs.push_back(doc);
  }
  return docs;
}

double row_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

LdaOptions options(int k, int iters, std::uint64_t seed, std::optional<double> alpha = std::nullopt) {
  LdaOptions o;
  o.topics = k;
  o.iterations = iters;
  o.seed = seed;
  o.alpha = alpha;
  return o;
}

TopicModel disjoint_model() {
  // Topic k puts all its mass on words 2k and 2k+1.
  const Tokens vocab{"a", "b", "c", "d", "e", "f"};
  std::vector<std::vector<double>> phi(3, std::vector<double>(6, 0.0));
  for (int k = 0; k < 3; ++k) {
    phi[static_cast<std::size_t>(k)][static_cast<std::size_t>(2 * k)] = 0.5;
    phi[static_cast<std::size_t>(k)][static_cast<std::size_t>(2 * k + 1)] = 0.5;
  }
  return TopicModel::from_parts(vocab, phi, 0.1, 0.01);
}

TEST(LdaTrain, SingleTopicIsSmoothedUnigram) {
  const auto docs = testing::sentences({"a b b c", "c c a d"});
  const auto m = train_lda(docs, options(1, 5, 1));
  ASSERT_EQ(m.topics(), 1);
  std::map<std::string, double> counts;
  for (const auto& d : docs) {
    for (const auto& w : d) counts[w] += 1.0;
  }
  const double V = static_cast<double>(m.vocabulary().size());
  for (std::size_t v = 0; v < m.vocabulary().size(); ++v) {
    EXPECT_NEAR(m.phi()[0][v], (counts[m.vocabulary()[v]] + 0.01) / (8.0 + V * 0.01), 1e-12);
  }
  const auto theta = infer_topics(m, words("a d"), 10, 3);
  ASSERT_EQ(theta.theta.size(), 1u);
  EXPECT_EQ(theta.theta[0], 1.0);
}

TEST(LdaTrain, RecoversDisjointTopics) {
  const auto docs = disjoint_corpus(200, 3, 10, 30, 42);
  const auto m = train_lda(docs, options(3, 200, 7, 0.5));
  // True topics: uniform over their ten words.
  std::vector<std::vector<double>> truth(3, std::vector<double>(m.vocabulary().size(), 0.0));
  for (std::size_t v = 0; v < m.vocabulary().size(); ++v) {
    truth[static_cast<std::size_t>(m.vocabulary()[v][1] - '0')][v] = 0.1;
  }
  std::vector<bool> used(3, false);
  double total = 0.0;
  for (const auto& t : truth) {
    int best = -1;
    double best_cos = -1;
    for (int k = 0; k < 3; ++k) {
      if (used[static_cast<std::size_t>(k)]) continue;
      const double c = row_cosine(t, m.phi()[static_cast<std::size_t>(k)]);
      if (c > best_cos) {
        best_cos = c;
        best = k;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    total += best_cos;
  }
  EXPECT_GE(total / 3.0, 0.8);
}

TEST(LdaTrain, RowsAreDistributionsAndSeededRunsIdentical) {
  const auto docs = disjoint_corpus(60, 3, 8, 20, 9);
  const auto a = train_lda(docs, options(4, 50, 11));
  const auto b = train_lda(docs, options(4, 50, 11));
  EXPECT_EQ(a.to_json(), b.to_json());
  for (const auto& row : a.phi()) {
    EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-9);
    for (double x : row) EXPECT_GE(x, 0.0);
  }
  const auto c = train_lda(docs, options(4, 50, 12));
  EXPECT_NE(a.to_json(), c.to_json());
}

TEST(LdaTrain, Errors) {
  EXPECT_THROW(train_lda(testing::sentences({"a b"}), options(3, 5, 1)), DataError);
  EXPECT_THROW(train_lda(std::vector<Tokens>{{}, {}}, options(1, 5, 1)), DataError);
  EXPECT_THROW(train_lda(testing::sentences({"a b"}), options(1, 0, 1)), std::invalid_argument);
  EXPECT_THROW(train_lda(testing::sentences({"a b"}), options(0, 5, 1)), std::invalid_argument);
  LdaOptions bad = options(1, 5, 1);
  bad.beta = 0.0;
  EXPECT_THROW(train_lda(testing::sentences({"a b"}), bad), std::invalid_argument);
}

TEST(InferTopics, ExclusiveWordsConcentrateOnTheirTopic) {
  const auto m = disjoint_model();
  const auto t = infer_topics(m, words("e f e f"), 50, 1);
  const auto argmax = std::max_element(t.theta.begin(), t.theta.end()) - t.theta.begin();
  EXPECT_EQ(argmax, 2);
  EXPECT_NEAR(std::accumulate(t.theta.begin(), t.theta.end(), 0.0), 1.0, 1e-12);
}

TEST(InferTopics, UnknownWordsOnlyIsUnscorable) {
  const auto m = disjoint_model();
  EXPECT_THROW(infer_topics(m, words("x y z"), 10, 1), UnscorableSegment);
  EXPECT_THROW(infer_topics(m, Tokens{}, 10, 1), UnscorableSegment);
  EXPECT_NO_THROW(infer_topics(m, words("x a"), 10, 1));
}

TEST(InferTopics, EqualMultisetsGiveEqualThetas) {
  const auto m = disjoint_model();
  EXPECT_EQ(infer_topics(m, words("a c e a"), 30, 5).theta, infer_topics(m, words("e a a c"), 30, 5).theta);
}

TEST(LdaCoherence, IdenticalSentencesScoreOne) {
  const auto m = disjoint_model();
  const auto r = lda_coherence(m, utterance({"a c e", "e c a", "c a e"}));
  ASSERT_TRUE(std::holds_alternative<CoherenceScore>(r));
  const auto& s = std::get<CoherenceScore>(r);
  EXPECT_NEAR(s.value, 1.0, 1e-12);
  EXPECT_EQ(s.pair_similarities.size(), 2u);
  EXPECT_EQ(s.method, CoherenceMethod::Lda);
}

TEST(LdaCoherence, OrthogonalThetasScoreZero) {
  const auto m = disjoint_model();
  const TopicDistribution x{{1.0, 0.0, 0.0}}, y{{0.0, 1.0, 0.0}};
  EXPECT_EQ(m.cosine(x, y), 0.0);
  EXPECT_EQ(m.cosine(y, x), 0.0);
  EXPECT_EQ(mean_of({m.cosine(x, y), m.cosine(y, x)}), 0.0);
}

TEST(LdaCoherence, SkipsShortAndUnscorableUtterances) {
  const auto m = disjoint_model();
  const auto short_r = lda_coherence(m, utterance({"a b", "c d"}));
  ASSERT_TRUE(std::holds_alternative<Skip>(short_r));
  EXPECT_EQ(std::get<Skip>(short_r).reason, SkipReason::TooFewSentences);
  const auto unk = lda_coherence(m, utterance({"a b", "zz", "c d"}));
  ASSERT_TRUE(std::holds_alternative<Skip>(unk));
  EXPECT_EQ(std::get<Skip>(unk).reason, SkipReason::UnscorableSentence);
  LdaCoherenceOptions two;
  two.min_sentences = 2;
  EXPECT_TRUE(std::holds_alternative<CoherenceScore>(lda_coherence(m, utterance({"a b", "c d"}), two)));
}

TEST(LdaCoherence, TopicPermutationInvariance) {
  const auto docs = disjoint_corpus(80, 3, 8, 20, 21);
  const auto m = train_lda(docs, options(4, 60, 3));
  const std::vector<int> perm{2, 0, 3, 1};
  const auto p = m.permuted(perm);
  for (int i = 0; i + 3 <= 60; i += 3) {
    Utterance u;
    for (int k = 0; k < 3; ++k) {
      const auto& d = docs[static_cast<std::size_t>(i + k)];
      u.sentences.push_back({Tokens(d.begin(), d.begin() + 7), ""});
    }
    const auto a = std::get<CoherenceScore>(lda_coherence(m, u));
    const auto b = std::get<CoherenceScore>(lda_coherence(p, u));
    EXPECT_EQ(a.value, b.value);
    EXPECT_GE(a.value, 0.0);
    EXPECT_LE(a.value, 1.0);
  }
}

TEST(TopicModelFile, JsonRoundTrip) {
  const auto m = train_lda(disjoint_corpus(30, 2, 6, 10, 1), options(2, 20, 5));
  const auto back = TopicModel::from_json(m.to_json());
  EXPECT_EQ(back, m);
  EXPECT_EQ(back.to_json(), m.to_json());
  EXPECT_THROW(TopicModel::from_json("{}"), DataError);
  EXPECT_THROW(TopicModel::from_json("not json"), DataError);
  auto text = m.to_json();
  text.replace(text.find("lexd-lda"), 8, "other-xx");
  EXPECT_THROW(TopicModel::from_json(text), DataError);
}

TEST(TopicModelFile, FromPartsValidatesRows) {
  EXPECT_THROW(TopicModel::from_parts({"a", "b"}, {{0.5, 0.6}}, 0.1, 0.1), DataError);
  EXPECT_THROW(TopicModel::from_parts({"a", "b"}, {{1.5, -0.5}}, 0.1, 0.1), DataError);
  EXPECT_THROW(TopicModel::from_parts({"a", "a"}, {{0.5, 0.5}}, 0.1, 0.1), DataError);
  EXPECT_THROW(TopicModel::from_parts({"a", "b"}, {{0.5}}, 0.1, 0.1), DataError);
}

}  // namespace
}  // namespace lexd
