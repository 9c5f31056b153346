#include "lexd/score_table.hpp"

#include <istream>
#include <ostream>

#include "lexd/csv.hpp"
#include "lexd/error.hpp"

namespace lexd {

namespace {
const std::vector<std::string> kHeader = {"session_id", "utterance_index", "sentence_index", "score", "provider"};
}

std::string_view to_string(Metric m) noexcept {
  switch (m) {
    case Metric::Surprisal: return "surprisal";
    case Metric::LdaCoherence: return "lda-coherence";
    case Metric::EmbedCoherence: return "embed-coherence";
  }
  return "?";
}

Metric parse_metric(std::string_view s) {
  if (s == "surprisal") return Metric::Surprisal;
  if (s == "lda-coherence") return Metric::LdaCoherence;
  if (s == "embed-coherence") return Metric::EmbedCoherence;
  throw std::invalid_argument("unknown metric '" + std::string(s) + "'");
}

std::vector<ScoreRow> surprisal_rows(std::span<const SurprisalScore> scores) {
  std::vector<ScoreRow> rows;
  for (const auto& s : scores) {
    for (std::size_t i = 0; i < s.sentence_scores.size(); ++i) {
      rows.push_back({s.session_id, s.utterance_index, i, s.sentence_scores[i], s.provider});
    }
    rows.push_back({s.session_id, s.utterance_index, std::nullopt, s.utterance_score, s.provider});
  }
  return rows;
}

std::vector<ScoreRow> coherence_rows(std::span<const CoherenceResult> results) {
  std::vector<ScoreRow> rows;
  for (const auto& r : results) {
    if (const auto* c = std::get_if<CoherenceScore>(&r)) {
      rows.push_back({c->session_id, c->utterance_index, std::nullopt, c->value, c->provider});
    }
  }
  return rows;
}

void write_scores(std::ostream& out, std::span<const ScoreRow> rows) {
  csv::write_row(out, kHeader);
  for (const auto& r : rows) {
    csv::write_row(out, {r.session_id, std::to_string(r.utterance_index),
                         r.sentence_index ? std::to_string(*r.sentence_index) : "AGG", csv::format_double(r.score),
                         r.provider});
  }
}

std::vector<ScoreRow> read_scores(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("score file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (csv::split_line(line) != kHeader) throw DataError("score file has an unexpected header");

  std::vector<ScoreRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = csv::split_line(line);
    if (f.size() != kHeader.size()) throw RecordError(line_no, "expected 5 columns");
    try {
      ScoreRow r;
      r.session_id = f[0];
      r.utterance_index = std::stoll(f[1]);
      if (f[2] != "AGG") r.sentence_index = static_cast<std::size_t>(std::stoull(f[2]));
      r.score = csv::parse_double(f[3]);
      r.provider = f[4];
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw RecordError(line_no, e.what());
    }
  }
  return rows;
}

void write_skips(std::ostream& out, const SkipReport& report) {
  csv::write_row(out, {"session_id", "utterance_index", "reason", "detail"});
  for (const auto& s : report.skips) {
    csv::write_row(out, {s.session_id, std::to_string(s.utterance_index), std::string(to_string(s.reason)), s.detail});
  }
}

std::vector<Observation> observations(std::span<const ScoreRow> rows, Metric metric) {
  const bool want_sentences = metric == Metric::Surprisal;
  std::vector<Observation> out;
  for (const auto& r : rows) {
    if (r.sentence_index.has_value() == want_sentences) out.push_back({r.session_id, r.utterance_index, r.score});
  }
  return out;
}

}  // namespace lexd
