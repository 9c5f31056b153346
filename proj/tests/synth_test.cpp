#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "lexd/error.hpp"
#include "lexd/synth.hpp"

namespace lexd {
namespace {

SyntheticCorpus base(std::uint64_t seed = 7, std::size_t sessions = 20, std::size_t utterances = 10) {
  return generate_base(sessions, utterances, default_topic_pools(), seed);
}

DisruptionConfig at(double s, std::uint64_t seed = 7) {
  DisruptionConfig c;
  c.severity = s;
  c.seed = seed;
  return c;
}

std::set<std::string> content_of(const SynthUtterance& u) {
  const auto fw = function_words();
  const std::set<std::string> function(fw.begin(), fw.end());
  std::set<std::string> out;
  for (const auto& s : u.sentences) {
    for (const auto& w : s) {
      if (!function.count(w)) out.insert(w);
    }
  }
  return out;
}

TEST(SynthBase, SeededAndShaped) {
  const auto a = base();
  EXPECT_EQ(a, base());
  EXPECT_FALSE(a == base(8));
  ASSERT_EQ(a.sessions.size(), 20u);
  for (const auto& s : a.sessions) {
    ASSERT_EQ(s.utterances.size(), 10u);
    EXPECT_GE(s.bprs_total, 18);
    EXPECT_LE(s.bprs_total, 67);
    for (const auto& u : s.utterances) {
      EXPECT_GE(u.sentences.size(), 3u);
      EXPECT_LE(u.sentences.size(), 9u);
    }
  }
  EXPECT_EQ(a.sessions.front().bprs_total, 18);
  EXPECT_EQ(a.sessions.back().bprs_total, 67);
  EXPECT_EQ(a.utterance_count(), 200u);
}

TEST(SynthBase, ContentWordsComeFromOnePool) {
  const auto c = base();
  for (const auto& s : c.sessions) {
    for (const auto& u : s.utterances) {
      const auto& pool = c.pools[u.topic].words;
      for (const auto& w : content_of(u)) EXPECT_TRUE(std::count(pool.begin(), pool.end(), w)) << w;
    }
  }
}

TEST(SynthBase, DifferentPoolsShareOnlyFunctionWords) {
  const auto c = base();
  const SynthUtterance* first = nullptr;
  for (const auto& s : c.sessions) {
    for (const auto& u : s.utterances) {
      if (!first) first = &u;
      if (u.topic == first->topic) continue;
      const auto a = content_of(*first), b = content_of(u);
      std::vector<std::string> shared;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(shared));
      EXPECT_TRUE(shared.empty());
    }
  }
}

TEST(SynthBase, DiagnosisFollowsSubjectSeverity) {
  const auto c = base(1, 40, 2);
  for (std::size_t i = 0; i < c.sessions.size(); ++i) {
    const auto& first = c.sessions[i - i % kSessionsPerSubject];
    EXPECT_EQ(c.sessions[i].subject_id, first.subject_id);
    EXPECT_EQ(c.sessions[i].diagnosis, first.bprs_total >= 36 ? Diagnosis::SZ : Diagnosis::HC);
  }
}

TEST(SynthBase, PoolValidation) {
  auto pools = default_topic_pools();
  EXPECT_THROW(generate_base(2, 2, {pools[0]}, 1), DataError);
  auto small = pools;
  small[1].words.resize(19);
  EXPECT_THROW(generate_base(2, 2, small, 1), DataError);
  auto overlap = pools;
  overlap[1].words[0] = overlap[0].words[0];
  EXPECT_THROW(generate_base(2, 2, overlap, 1), DataError);
  auto function = pools;
  function[2].words[0] = function_words().front();
  EXPECT_THROW(generate_base(2, 2, function, 1), DataError);
}

TEST(SynthBase, RecordsRoundTripThroughIngestion) {
  const auto c = base(3, 4, 3);
  const auto sessions = c.to_sessions();
  ASSERT_EQ(sessions.size(), 4u);
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    ASSERT_EQ(sessions[i].utterances.size(), 3u);
    for (std::size_t u = 0; u < 3; ++u) {
      const auto& want = c.sessions[i].utterances[u].sentences;
      const auto& got = sessions[i].utterances[u].sentences;
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t k = 0; k < want.size(); ++k) EXPECT_EQ(got[k].tokens, want[k]);
    }
  }
  EXPECT_EQ(c.to_records().size(), 2u * 4u * 3u);
}

TEST(SynthDisrupt, ZeroSeverityIsIdentity) {
  const auto c = base();
  auto cfg = at(0.0);
  cfg.p_repeat = cfg.p_insert = cfg.p_intrude = 1.0;
  EXPECT_EQ(apply_disruption(c, cfg), c);
}

TEST(SynthDisrupt, FullRepeatDoublesTokens) {
  const auto c = base();
  auto cfg = at(1.0);
  cfg.p_repeat = 1.0;
  cfg.p_insert = 0.0;
  cfg.p_intrude = 0.0;
  const auto d = apply_disruption(c, cfg);
  EXPECT_EQ(d.token_count(), 2 * c.token_count());
  const auto& s = d.sessions[0].utterances[0].sentences[0];
  for (std::size_t i = 0; i + 1 < s.size(); i += 2) EXPECT_EQ(s[i], s[i + 1]);
}

TEST(SynthDisrupt, ChangesGrowWithSeverity) {
  const auto c = base(11, 30, 10);
  std::size_t last_tokens = c.token_count();
  std::size_t last_foreign = 0;
  for (double s : {0.25, 0.5, 0.75, 1.0}) {
    const auto d = apply_disruption(c, at(s));
    EXPECT_GT(d.token_count(), last_tokens) << s;
    std::size_t foreign = 0;
    for (std::size_t si = 0; si < d.sessions.size(); ++si) {
      for (const auto& u : d.sessions[si].utterances) {
        const auto& pool = d.pools[u.topic].words;
        for (const auto& w : content_of(u)) foreign += std::count(pool.begin(), pool.end(), w) == 0;
      }
    }
    EXPECT_GT(foreign, last_foreign) << s;
    last_tokens = d.token_count();
    last_foreign = foreign;
  }
}

TEST(SynthDisrupt, DeterministicAndValidated) {
  const auto c = base();
  EXPECT_EQ(apply_disruption(c, at(0.5)), apply_disruption(c, at(0.5)));
  EXPECT_FALSE(apply_disruption(c, at(0.5, 1)) == apply_disruption(c, at(0.5, 2)));
  EXPECT_THROW(apply_disruption(c, at(1.5)), std::invalid_argument);
  auto neg = at(0.5);
  neg.p_insert = -0.1;
  EXPECT_THROW(apply_disruption(c, neg), std::invalid_argument);
}

TEST(SynthDisrupt, BprsScalingLeavesMildestSessionIntact) {
  const auto c = base();
  auto cfg = at(1.0);
  cfg.scale_by_bprs = true;
  const auto d = apply_disruption(c, cfg);
  EXPECT_EQ(d.sessions.front(), c.sessions.front());
  EXPECT_FALSE(d.sessions.back() == c.sessions.back());
}

}  // namespace
}  // namespace lexd
