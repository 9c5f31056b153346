#include "lexd/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "lexd/error.hpp"
#include "lexd/rng.hpp"

namespace lexd {

namespace {

constexpr std::array<std::string_view, 10> kTemplates = {
    "i really like the {} and the {}",
    "we talked about the {} for a while",
    "the {} was next to the {}",
    "my {} is always near the {}",
    "there is a {} and a {} over there",
    "i think the {} is better than the {}",
    "yesterday we saw a {} with the {}",
    "it reminds me of the {}",
    "you know the {} was really nice",
    "we used to have a {} and a {}",
};

constexpr std::array<std::string_view, 4> kQuestions = {
    "Can you tell me more about that?",
    "How did that make you feel?",
    "What happened next?",
    "What do you usually do during the week?",
};

// Channels of the counter-based draws in apply_disruption.
enum Channel : std::uint64_t {
  kIntrude = 1,
  kIntrudePool = 2,
  kIntrudeContent = 3,
  kRepeat = 4,
  kInsert = 5,
  kInsertWord = 6,
};

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto sp = s.find(' ', pos);
    if (sp == std::string_view::npos) sp = s.size();
    if (sp > pos) out.emplace_back(s.substr(pos, sp - pos));
    pos = sp + 1;
  }
  return out;
}

std::vector<std::string> make_sentence(Rng& rng, const TopicPool& pool) {
  const auto tmpl = split_words(kTemplates[rng.index(kTemplates.size())]);
  std::vector<std::string> out;
  out.reserve(tmpl.size());
  for (const auto& w : tmpl) {
    out.push_back(w == "{}" ? pool.words[rng.index(pool.words.size())] : w);
  }
  return out;
}

// A pool index different from `topic`, chosen with `bits`.
std::size_t other_pool(std::size_t topic, std::size_t n_pools, std::uint64_t bits) {
  const auto k = static_cast<std::size_t>(bits % (n_pools - 1));
  return k >= topic ? k + 1 : k;
}

void validate_pools(const std::vector<TopicPool>& pools) {
  if (pools.size() < 2) throw DataError("need at least two topic pools");
  const auto fw = function_words();
  const std::set<std::string> function_set(fw.begin(), fw.end());
  std::set<std::string> seen;
  for (const auto& p : pools) {
    const std::set<std::string> unique(p.words.begin(), p.words.end());
    if (unique.size() < 20) throw DataError("topic pool '" + p.name + "' has fewer than 20 distinct words");
    for (const auto& w : unique) {
      if (w.empty() || w.find(' ') != std::string::npos) throw DataError("invalid word in pool '" + p.name + "'");
      if (function_set.contains(w)) throw DataError("pool '" + p.name + "' reuses function word '" + w + "'");
      if (!seen.insert(w).second) throw DataError("word '" + w + "' appears in more than one pool");
    }
  }
}

std::string render(const std::vector<std::vector<std::string>>& sentences) {
  std::string text;
  for (const auto& s : sentences) {
    if (!text.empty()) text.push_back(' ');
    std::string sentence;
    for (const auto& w : s) {
      if (!sentence.empty()) sentence.push_back(' ');
      sentence += w;
    }
    if (!sentence.empty() && sentence[0] >= 'a' && sentence[0] <= 'z') sentence[0] = static_cast<char>(sentence[0] - 32);
    text += sentence;
    text.push_back('.');
  }
  return text;
}

}  // namespace

std::vector<TopicPool> default_topic_pools() {
  return {
      {"food", {"bread", "cheese", "soup", "pasta", "salad", "apple", "butter", "garlic", "onion", "pepper", "rice",
                "noodles", "chicken", "tomato", "carrot", "potato", "lemon", "honey", "cookie", "pancake", "kitchen",
                "recipe", "dinner", "breakfast"}},
      {"travel", {"train", "airport", "beach", "mountain", "hotel", "ticket", "suitcase", "passport", "island",
                  "river", "bridge", "highway", "village", "museum", "harbor", "ferry", "tunnel", "map", "luggage",
                  "station", "cabin", "desert", "canyon", "lake"}},
      {"work", {"office", "manager", "meeting", "project", "deadline", "report", "computer", "email", "salary",
                "contract", "client", "schedule", "printer", "desk", "budget", "coworker", "invoice", "promotion",
                "spreadsheet", "interview", "shift", "factory", "warehouse", "career"}},
      {"family", {"mother", "father", "sister", "brother", "cousin", "uncle", "aunt", "grandmother", "nephew", "niece",
                  "daughter", "son", "wedding", "birthday", "holiday", "garden", "house", "dog", "cat", "porch",
                  "christmas", "baby", "neighbor", "church"}},
      {"sports", {"football", "basketball", "soccer", "tennis", "coach", "team", "referee", "stadium", "goal",
                  "season", "league", "player", "jersey", "helmet", "racket", "trophy", "tournament", "gym",
                  "swimming", "baseball", "bicycle", "marathon", "hockey", "volleyball"}},
  };
}

std::span<const std::string_view> sentence_templates() noexcept { return kTemplates; }

std::vector<std::string> function_words() {
  std::set<std::string> words;
  for (auto t : kTemplates) {
    for (auto& w : split_words(t)) {
      if (w != "{}") words.insert(w);
    }
  }
  return {words.begin(), words.end()};
}

std::size_t SyntheticCorpus::token_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sessions) {
    for (const auto& u : s.utterances) {
      for (const auto& sent : u.sentences) n += sent.size();
    }
  }
  return n;
}

std::size_t SyntheticCorpus::utterance_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sessions) n += s.utterances.size();
  return n;
}

std::vector<TranscriptRecord> SyntheticCorpus::to_records() const {
  std::vector<TranscriptRecord> out;
  for (const auto& s : sessions) {
    for (std::size_t i = 0; i < s.utterances.size(); ++i) {
      TranscriptRecord q;
      q.session_id = s.session_id;
      q.subject_id = s.subject_id;
      q.diagnosis = s.diagnosis;
      q.bprs_total = s.bprs_total;
      q.utterance_index = static_cast<std::int64_t>(i);
      q.speaker = Speaker::Interviewer;
      q.text = std::string(kQuestions[hash_coords({i, s.utterances[i].topic}) % kQuestions.size()]);
      TranscriptRecord a = q;
      a.speaker = Speaker::Subject;
      a.text = render(s.utterances[i].sentences);
      out.push_back(std::move(q));
      out.push_back(std::move(a));
    }
  }
  return out;
}

std::vector<Session> SyntheticCorpus::to_sessions() const {
  const auto records = to_records();
  CorpusFilter all;
  all.diagnoses = {Diagnosis::HC, Diagnosis::SZ, Diagnosis::MDD};
  all.bprs_min = kBprsScaleMin;
  all.bprs_max = kBprsScaleMax;
  return build_sessions(records, all);
}

SyntheticCorpus generate_base(std::size_t n_sessions, std::size_t utterances_per_session,
                              std::vector<TopicPool> pools, std::uint64_t seed) {
  validate_pools(pools);
  SyntheticCorpus corpus;
  corpus.pools = std::move(pools);

  std::vector<int> bprs(n_sessions, 18);
  for (std::size_t i = 0; i < n_sessions && n_sessions > 1; ++i) {
    bprs[i] = 18 + static_cast<int>((49 * i + (n_sessions - 1) / 2) / (n_sessions - 1));
  }

  for (std::size_t i = 0; i < n_sessions; ++i) {
    Rng rng(hash_coords({seed, i}));
    SynthSession s;
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%03zu", i);
    s.session_id = buf;
    const std::size_t subject = i / kSessionsPerSubject;
    std::snprintf(buf, sizeof buf, "p%03zu", subject);
    s.subject_id = buf;
    s.diagnosis = bprs[subject * kSessionsPerSubject] >= 36 ? Diagnosis::SZ : Diagnosis::HC;
    s.bprs_total = bprs[i];
    for (std::size_t u = 0; u < utterances_per_session; ++u) {
      SynthUtterance utt;
      utt.topic = static_cast<std::size_t>(rng.index(corpus.pools.size()));
      const auto n_sent = rng.between(3, 9);
      for (std::int64_t k = 0; k < n_sent; ++k) utt.sentences.push_back(make_sentence(rng, corpus.pools[utt.topic]));
      s.utterances.push_back(std::move(utt));
    }
    corpus.sessions.push_back(std::move(s));
  }
  return corpus;
}

void DisruptionConfig::validate() const {
  for (double v : {severity, p_repeat, p_insert, p_intrude}) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("disruption parameters must lie in [0,1]");
  }
}

SyntheticCorpus apply_disruption(const SyntheticCorpus& corpus, const DisruptionConfig& config) {
  config.validate();
  SyntheticCorpus out;
  out.pools = corpus.pools;
  const auto n_pools = corpus.pools.size();
  const auto seed = config.seed;

  for (std::size_t si = 0; si < corpus.sessions.size(); ++si) {
    const auto& session = corpus.sessions[si];
    double s = config.severity;
    if (config.scale_by_bprs) s *= std::clamp((session.bprs_total - 18) / 49.0, 0.0, 1.0);
    const double p_intrude = s * config.p_intrude;
    const double p_repeat = s * config.p_repeat;
    const double p_insert = s * config.p_insert;

    SynthSession copy = session;
    copy.utterances.clear();
    for (std::size_t ui = 0; ui < session.utterances.size(); ++ui) {
      const auto& utt = session.utterances[ui];
      SynthUtterance next;
      next.topic = utt.topic;
      for (std::size_t ki = 0; ki < utt.sentences.size(); ++ki) {
        const std::vector<std::string>* sentence = &utt.sentences[ki];
        std::vector<std::string> intruded;
        if (n_pools > 1 && unit_interval(hash_coords({seed, kIntrude, si, ui, ki})) < p_intrude) {
          const auto pool = other_pool(utt.topic, n_pools, hash_coords({seed, kIntrudePool, si, ui, ki}));
          Rng content(hash_coords({seed, kIntrudeContent, si, ui, ki}));
          intruded = make_sentence(content, corpus.pools[pool]);
          sentence = &intruded;
        }
        std::vector<std::string> words;
        for (std::size_t ti = 0; ti < sentence->size(); ++ti) {
          const auto& w = (*sentence)[ti];
          words.push_back(w);
          if (unit_interval(hash_coords({seed, kRepeat, si, ui, ki, ti})) < p_repeat) words.push_back(w);
          if (n_pools > 1 && unit_interval(hash_coords({seed, kInsert, si, ui, ki, ti})) < p_insert) {
            const auto bits = hash_coords({seed, kInsertWord, si, ui, ki, ti});
            const auto& pool = corpus.pools[other_pool(utt.topic, n_pools, bits)];
            words.push_back(pool.words[mix64(bits) % pool.words.size()]);
          }
        }
        next.sentences.push_back(std::move(words));
      }
      copy.utterances.push_back(std::move(next));
    }
    out.sessions.push_back(std::move(copy));
  }
  return out;
}

}  // namespace lexd
