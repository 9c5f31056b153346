// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Every tolerance and trial count is fixed here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "kn_oracle.hpp"
#include "lexd/embed.hpp"
#include "lexd/error.hpp"
#include "lexd/lda.hpp"
#include "lexd/ngram.hpp"
#include "lexd/score_table.hpp"
#include "lexd/stats.hpp"
#include "lexd/surprisal.hpp"
#include "lexd/synth.hpp"
#include "lexd_cli.hpp"
#include "support.hpp"

namespace {

using namespace lexd;
namespace fs = std::filesystem;
using Tokens = std::vector<std::string>;
using Clock = std::chrono::steady_clock;

constexpr double kNormTol = 1e-9;
constexpr double kOracleTol = 1e-12;
constexpr double kLdaMinCosine = 0.8;
constexpr double kRowTol = 1e-9;
constexpr double kCoherenceTol = 1e-12;
constexpr int kTrials = 100;
constexpr int kTrialsNeeded = 95;
constexpr std::size_t kTrialSessions = 10;
constexpr std::size_t kTrialUtterances = 10;  // 100 utterances per trial
constexpr double kTrialSeverity = 0.5;
constexpr double kMinSpearman = 0.3;
constexpr double kLmSeconds = 10, kLdaSeconds = 60, kDirectionalSeconds = 300;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::vector<Tokens> random_corpus(std::mt19937_64& rng, int v, int n_sent, int max_len) {
  std::vector<Tokens> out;
  std::uniform_int_distribution<int> word(0, v - 1), len(1, max_len);
  for (int i = 0; i < n_sent; ++i) {
    Tokens s;
    for (int j = len(rng); j > 0; --j) s.push_back("w" + std::to_string(word(rng)));
    out.push_back(s);
  }
  return out;
}

std::shared_ptr<NgramModel> reference_lm(std::uint64_t seed) {
  const auto clean = generate_base(40, 10, default_topic_pools(), seed).to_sessions();
  return std::make_shared<NgramModel>(NgramModel::train(utterance_token_lists(clean), NgramOptions{}));
}

// ---------------------------------------------------------------------------

Outcome additivity() {
  auto corpus = generate_base(20, 10, default_topic_pools(), 5);
  DisruptionConfig cfg;
  cfg.severity = 0.7;
  const auto sessions = apply_disruption(corpus, cfg).to_sessions();
  NgramProvider provider(reference_lm(6));
  const auto scores = score_corpus(provider, sessions, {}, 2);
  std::size_t words = 0;
  for (const auto& s : scores) {
    double by_sentence = 0.0, by_word = 0.0;
    for (std::size_t k = 0; k < s.sentence_scores.size(); ++k) {
      double sentence = 0.0;
      for (double w : s.word_scores[k]) {
        if (!(w >= 0.0)) return {false, "negative word surprisal"};
        sentence += w;
        by_word += w;
        ++words;
      }
      if (sentence != s.sentence_scores[k]) return {false, "sentence sum mismatch in " + s.session_id};
      by_sentence += s.sentence_scores[k];
    }
    if (by_sentence != s.utterance_score || by_word != s.utterance_score) {
      return {false, "utterance sum mismatch in " + s.session_id};
    }
  }
  // The CSV path must carry the same exact sums.
  std::stringstream csv;
  write_scores(csv, surprisal_rows(scores));
  const auto rows = read_scores(csv);
  double acc = 0.0;
  for (const auto& r : rows) {
    if (r.sentence_index) {
      acc += r.score;
    } else {
      if (acc != r.score) return {false, "CSV sums differ"};
      acc = 0.0;
    }
  }
  return {true, std::to_string(scores.size()) + " utterances, " + std::to_string(words) + " words, exact"};
}

Outcome lm_normalization() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20);
  double worst_norm = 0.0;
  std::size_t contexts = 0;
  const auto corpus = random_corpus(rng, 18, 80, 9);
  for (int order = 1; order <= 3; ++order) {
    for (auto sm : {Smoothing::KneserNey, Smoothing::Mle}) {
      NgramOptions o;
      o.order = order;
      o.smoothing = sm;
      const auto m = NgramModel::train(corpus, o);
      if (m.targets().size() > 20) return {false, "vocabulary larger than 20"};
      for (const auto& ctx : m.observed_contexts()) {
        double sum = 0.0;
        for (TokenId t : m.targets()) {
          try {
            sum += std::exp(m.log_prob_ids(ctx, t));
          } catch (const ZeroProbability&) {
          }
        }
        worst_norm = std::max(worst_norm, std::abs(sum - 1.0));
        ++contexts;
      }
    }
  }
  double worst_oracle = 0.0;
  struct Case {
    int vocab, order, min_count;
    double discount;
  };
  for (const auto& c : {Case{6, 2, 1, 0.75}, Case{10, 3, 1, 0.75}, Case{15, 3, 2, 0.5}, Case{19, 3, 1, 0.9},
                        Case{20, 2, 1, 0.1}}) {
    const auto data = random_corpus(rng, c.vocab, 40, 8);
    NgramOptions o;
    o.order = c.order;
    o.min_count = c.min_count;
    o.discount = c.discount;
    const auto m = NgramModel::train(data, o);
    const testing::KneserNeyOracle oracle(data, c.order, c.discount, c.min_count);
    for (const auto& ctx : m.observed_contexts()) {
      Tokens h;
      for (auto id : ctx) h.push_back(m.vocabulary()[id]);
      for (const auto& w : oracle.targets()) {
        worst_oracle = std::max(worst_oracle, std::abs(std::exp(m.log_prob(h, w)) - oracle.prob(h, w)));
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst_norm <= kNormTol && worst_oracle <= kOracleTol && secs < kLmSeconds,
          fmt("max |sum-1| = %.3g over ", worst_norm) + std::to_string(contexts) +
              fmt(" contexts; max |KN-oracle| = %.3g; %.2f s", worst_oracle, secs)};
}

Outcome lda_recovery() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> topic(0, 2), word(0, 9);
  std::vector<Tokens> docs;
  for (int d = 0; d < 200; ++d) {
    const int t = topic(rng);
    Tokens doc;
    for (int i = 0; i < 30; ++i) doc.push_back("t" + std::to_string(t) + "w" + std::to_string(word(rng)));
    docs.push_back(doc);
  }
  LdaOptions o;
  o.topics = 3;
  o.iterations = 200;
  o.alpha = 0.5;
  o.seed = 7;
  const auto m = train_lda(docs, o);
  const auto again = train_lda(docs, o);
  const bool identical = m.to_json() == again.to_json();

  // Best one-to-one alignment of the three topics against the truth.
  std::vector<int> perm{0, 1, 2};
  double best = -1.0;
  do {
    double total = 0.0;
    for (int k = 0; k < 3; ++k) {
      const auto& row = m.phi()[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])];
      double dot = 0, na = 0, nb = 0;
      for (std::size_t v = 0; v < row.size(); ++v) {
        const double truth = m.vocabulary()[v][1] - '0' == k ? 0.1 : 0.0;
        dot += truth * row[v];
        na += truth * truth;
        nb += row[v] * row[v];
      }
      total += dot / std::sqrt(na * nb);
    }
    best = std::max(best, total / 3.0);
  } while (std::next_permutation(perm.begin(), perm.end()));

  double worst_row = 0.0;
  for (const auto& row : m.phi()) worst_row = std::max(worst_row, std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0));
  for (int d = 0; d < 200; d += 10) {
    const auto theta = infer_topics(m, docs[static_cast<std::size_t>(d)], 50, 1).theta;
    worst_row = std::max(worst_row, std::abs(std::accumulate(theta.begin(), theta.end(), 0.0) - 1.0));
  }
  const double secs = seconds_since(t0);
  return {best >= kLdaMinCosine && worst_row <= kRowTol && identical && secs < kLdaSeconds,
          fmt("mean aligned cosine %.4f; max |row-1| = %.3g; %.2f s", best, worst_row, secs) +
              (identical ? "; seeded runs identical" : "; seeded runs DIFFER")};
}

std::unique_ptr<ReplayEmbeddingProvider> replay(const std::vector<std::vector<double>>& vectors) {
  std::ostringstream text;
  text.precision(17);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    text << R"({"session_id":"s1","utterance_index":0,"sentence_index":)" << i << R"(,"vector":[)";
    for (std::size_t j = 0; j < vectors[i].size(); ++j) text << (j ? "," : "") << vectors[i][j];
    text << "]}\n";
  }
  std::istringstream in(text.str());
  return ReplayEmbeddingProvider::parse(in);
}

Outcome coherence_correctness() {
  Utterance u;
  u.session_id = "s1";
  for (int i = 0; i < 3; ++i) u.sentences.push_back({{"w" + std::to_string(i)}, ""});
  const double h = 1.0 / std::sqrt(2.0);
  struct Case {
    std::vector<std::vector<double>> vectors;
    double expected;
  };
  double worst = 0.0;
  for (const auto& c : {Case{{{1, 0}, {h, h}, {0, 1}}, 0.7071067811865476}, Case{{{1, 0}, {0, 1}, {1, 0}}, 0.0},
                        Case{{{2, 1}, {4, 2}, {0.2, 0.1}}, 1.0}, Case{{{1, 0}, {-1, 0}, {1, 0}}, -1.0}}) {
    const auto r = embed_coherence(*replay(c.vectors), u);
    worst = std::max(worst, std::abs(std::get<CoherenceScore>(r).value - c.expected));
  }

  // Skip accounting on a corpus with short utterances mixed in.
  auto corpus = generate_base(6, 10, default_topic_pools(), 9);
  std::size_t trimmed = 0;
  for (auto& s : corpus.sessions) {
    for (std::size_t i = 0; i < s.utterances.size(); i += 3) {
      s.utterances[i].sentences.resize(1 + i % 2);
      ++trimmed;
    }
  }
  const auto sessions = corpus.to_sessions();
  BuiltinEmbeddingProvider p;
  SkipReport report;
  bool consistent = true;
  std::size_t total = 0;
  for (const auto& r : embed_coherence_corpus(p, sessions)) {
    report.add(r);
    ++total;
  }
  for (const auto& s : sessions) {
    for (const auto& utt : s.utterances) {
      const bool skipped = std::holds_alternative<Skip>(embed_coherence(p, utt));
      consistent = consistent && skipped == (utt.sentences.size() < 3);
    }
  }
  const bool ok = worst <= kCoherenceTol && consistent && report.total() == total &&
                  report.skipped_by_reason[SkipReason::TooFewSentences] == trimmed;
  return {ok, fmt("max |err| = %.3g on replay cases; ", worst) + std::to_string(report.skipped()) + " of " +
                  std::to_string(total) + " utterances skipped (" + std::to_string(trimmed) + " had <3 sentences)"};
}

Outcome directional() {
  const auto t0 = Clock::now();
  int surprisal_up = 0, coherence_down = 0;
  BuiltinEmbeddingProvider embedder;
  for (int t = 0; t < kTrials; ++t) {
    const auto base = generate_base(kTrialSessions, kTrialUtterances, default_topic_pools(), 1000 + t);
    DisruptionConfig cfg;
    cfg.severity = kTrialSeverity;
    cfg.seed = static_cast<std::uint64_t>(t);
    const auto clean = base.to_sessions();
    const auto disrupted = apply_disruption(base, cfg).to_sessions();
    NgramProvider lm(reference_lm(500000 + static_cast<std::uint64_t>(t)));

    auto mean_surprisal = [&](const std::vector<Session>& s) {
      const auto scores = score_corpus(lm, s);
      return session_mean_sentence_surprisal(scores);
    };
    auto mean_coherence = [&](const std::vector<Session>& s) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& r : embed_coherence_corpus(embedder, s)) {
        if (const auto* c = std::get_if<CoherenceScore>(&r)) {
          sum += c->value;
          ++n;
        }
      }
      return sum / static_cast<double>(n);
    };
    surprisal_up += mean_surprisal(disrupted) > mean_surprisal(clean);
    coherence_down += mean_coherence(disrupted) < mean_coherence(clean);
  }

  // Severity rising with BPRS: the surprisal trend must slope upward.
  const auto base = generate_base(60, 10, default_topic_pools(), 77);
  DisruptionConfig cfg;
  cfg.severity = 1.0;
  cfg.scale_by_bprs = true;
  const auto sessions = apply_disruption(base, cfg).to_sessions();
  NgramProvider lm(reference_lm(78));
  std::vector<SessionValue> values;
  for (const auto& s : sessions) {
    const auto scores = score_corpus(lm, std::span<const Session>(&s, 1));
    values.push_back({s.session_id, s.diagnosis, s.bprs_total, session_mean_sentence_surprisal(scores), scores.size()});
  }
  const auto fit = trend_fit(severity_trend(values));
  const double secs = seconds_since(t0);
  const bool ok = surprisal_up >= kTrialsNeeded && coherence_down >= kTrialsNeeded && fit.slope > 0.0 &&
                  secs < kDirectionalSeconds;
  return {ok, "surprisal higher in " + std::to_string(surprisal_up) + "/100, embed-coherence lower in " +
                  std::to_string(coherence_down) + "/100" +
                  fmt("; trend slope %.4f nats/BPRS point (r = %.3f); %.1f s", fit.slope, fit.r, secs)};
}

// Runs the whole command-line pipeline into `dir`.
bool pipeline(const fs::path& dir, std::string& log) {
  const auto s = [&](const fs::path& p) { return p.string(); };
  const auto corpus = s(dir / "corpus.jsonl");
  const std::vector<std::vector<std::string>> steps{
      {"simulate", "--sessions", "40", "--utterances", "10", "--severity", "0.6", "--scale-by-bprs", "--seed", "7",
       "--out", corpus},
      {"train-lm", "--corpus", corpus, "--out", s(dir / "models/model.lm")},
      {"train-lda", "--corpus", corpus, "--topics", "5", "--iters", "200", "--out", s(dir / "models/model.lda")},
      {"score", "--corpus", corpus, "--metric", "surprisal", "--lm", s(dir / "models/model.lm"), "--out",
       s(dir / "scores/surprisal.csv")},
      {"score", "--corpus", corpus, "--metric", "lda-coherence", "--lda", s(dir / "models/model.lda"), "--out",
       s(dir / "scores/lda-coherence.csv")},
      {"score", "--corpus", corpus, "--metric", "embed-coherence", "--out", s(dir / "scores/embed-coherence.csv")},
      {"analyze", "--corpus", corpus, "--scores", s(dir / "scores"), "--out", s(dir / "analysis")},
  };
  for (const auto& step : steps) {
    std::vector<std::string> args{"lexd"};
    args.insert(args.end(), step.begin(), step.end());
    std::ostringstream out, err;
    if (cli::run(args, out, err) != 0) {
      log = step[0] + ": " + err.str();
      return false;
    }
  }
  return true;
}

std::vector<fs::path> csv_files(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.path().extension() == ".csv") out.push_back(fs::relative(e.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct EndToEnd {
  Outcome spearman;
  Outcome determinism;
};

EndToEnd end_to_end() {
  testing::TempDir a("accept-a"), b("accept-b");
  std::string log;
  if (!pipeline(a.path(), log) || !pipeline(b.path(), log)) {
    return {{false, "pipeline failed: " + log}, {false, "pipeline failed: " + log}};
  }

  std::ifstream in(a / "analysis/method_agreement.csv");
  std::string line;
  std::getline(in, line);
  std::vector<double> lda, embed;
  while (std::getline(in, line)) {
    const auto f = testing::words([&] {
      std::replace(line.begin(), line.end(), ',', ' ');
      return line;
    }());
    lda.push_back(std::stod(f.at(2)));
    embed.push_back(std::stod(f.at(3)));
  }
  Outcome rho{false, "fewer than three paired utterances"};
  if (lda.size() >= 3) {
    const double r = spearman(lda, embed);
    rho = {r > kMinSpearman, fmt("Spearman rho = %.4f over ", r) + std::to_string(lda.size()) + " utterances"};
  }

  const auto fa = csv_files(a.path()), fb = csv_files(b.path());
  bool same = fa == fb && fa.size() >= 7;
  for (std::size_t i = 0; same && i < fa.size(); ++i) {
    same = testing::read_text(a / fa[i].string()) == testing::read_text(b / fb[i].string());
  }
  return {rho, {same, std::to_string(fa.size()) + " CSV files compared, " + (same ? "all identical" : "MISMATCH")}};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  };
  report("surprisal-additivity", additivity);
  report("lm-normalization", lm_normalization);
  report("lda-recovery", lda_recovery);
  report("coherence-correctness", coherence_correctness);
  report("directional-severity", directional);
  std::optional<EndToEnd> e2e;
  try {
    e2e = end_to_end();
  } catch (const std::exception& e) {
    e2e = EndToEnd{{false, e.what()}, {false, e.what()}};
  }
  report("lda-embed-agreement", [&] { return e2e->spearman; });
  report("end-to-end-determinism", [&] { return e2e->determinism; });
  std::cout << (failures ? "FAILED " + std::to_string(failures) + " criteria" : std::string("ALL PASS")) << std::endl;
  return failures ? 1 : 0;
}
