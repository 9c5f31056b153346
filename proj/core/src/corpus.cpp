#include "lexd/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_map>

#include "json.hpp"
#include "lexd/error.hpp"

namespace lexd {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Diagnosis d) noexcept {
  switch (d) {
    case Diagnosis::HC: return "HC";
    case Diagnosis::SZ: return "SZ";
    case Diagnosis::MDD: return "MDD";
  }
  return "?";
}

std::string_view to_string(Speaker s) noexcept {
  return s == Speaker::Subject ? "subject" : "interviewer";
}

Diagnosis parse_diagnosis(std::string_view s) {
  if (s == "HC") return Diagnosis::HC;
  if (s == "SZ") return Diagnosis::SZ;
  if (s == "MDD") return Diagnosis::MDD;
  throw DataError("unknown diagnosis '" + std::string(s) + "'");
}

bool CorpusFilter::admits(Diagnosis d, const std::optional<int>& bprs) const noexcept {
  if (!diagnoses.contains(d)) return false;
  if (bprs && (*bprs < bprs_min || *bprs > bprs_max)) return false;
  return true;
}

std::set<Diagnosis> parse_diagnosis_list(std::string_view csv) {
  std::set<Diagnosis> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    auto comma = csv.find(',', pos);
    if (comma == std::string_view::npos) comma = csv.size();
    auto item = csv.substr(pos, comma - pos);
    if (!item.empty()) out.insert(parse_diagnosis(item));
    pos = comma + 1;
  }
  if (out.empty()) throw DataError("empty diagnosis list");
  return out;
}

std::pair<int, int> parse_bprs_range(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw DataError("BPRS range must look like lo:hi, got '" + std::string(text) + "'");
  }
  try {
    std::size_t used = 0;
    const std::string lo_s(text.substr(0, colon));
    const std::string hi_s(text.substr(colon + 1));
    const int lo = std::stoi(lo_s, &used);
    if (used != lo_s.size()) throw std::invalid_argument(lo_s);
    const int hi = std::stoi(hi_s, &used);
    if (used != hi_s.size()) throw std::invalid_argument(hi_s);
    if (lo > hi) throw DataError("BPRS range has lo > hi");
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw DataError("BPRS range must look like lo:hi, got '" + std::string(text) + "'");
  }
}

std::size_t Utterance::word_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.tokens.size();
  return n;
}

std::vector<std::string> Utterance::words() const {
  std::vector<std::string> out;
  out.reserve(word_count());
  for (const auto& s : sentences) out.insert(out.end(), s.tokens.begin(), s.tokens.end());
  return out;
}

namespace {

const json& require(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw RecordError(line, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, std::size_t line) {
  const auto& v = require(obj, key, line);
  if (!v.is_string()) throw RecordError(line, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  });
}

}  // namespace

TranscriptRecord parse_record(std::string_view line, std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw RecordError(line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) throw RecordError(line_no, "record must be a JSON object");

  TranscriptRecord r;
  r.session_id = require_string(obj, "session_id", line_no);
  if (r.session_id.empty()) throw RecordError(line_no, "empty session_id");
  r.subject_id = require_string(obj, "subject_id", line_no);
  try {
    r.diagnosis = parse_diagnosis(require_string(obj, "diagnosis", line_no));
  } catch (const RecordError&) {
    throw;
  } catch (const DataError& e) {
    throw RecordError(line_no, e.what());
  }

  if (auto it = obj.find("bprs_total"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw RecordError(line_no, "bprs_total must be an integer or null");
    const auto v = it->get<std::int64_t>();
    if (v < kBprsScaleMin || v > kBprsScaleMax) {
      throw RecordError(line_no, "bprs_total " + std::to_string(v) + " outside scale bounds [18,126]");
    }
    r.bprs_total = static_cast<int>(v);
  }

  const auto& idx = require(obj, "utterance_index", line_no);
  if (!idx.is_number_integer() || idx.get<std::int64_t>() < 0) {
    throw RecordError(line_no, "utterance_index must be a non-negative integer");
  }
  r.utterance_index = idx.get<std::int64_t>();

  const auto speaker = require_string(obj, "speaker", line_no);
  if (speaker == "subject") {
    r.speaker = Speaker::Subject;
  } else if (speaker == "interviewer") {
    r.speaker = Speaker::Interviewer;
  } else {
    throw RecordError(line_no, "unknown speaker '" + speaker + "'");
  }

  r.text = require_string(obj, "text", line_no);
  if (blank(r.text)) throw RecordError(line_no, "text is empty");
  if (r.speaker == Speaker::Subject) {
    try {
      (void)segment_sentences(r.text);
    } catch (const DataError& e) {
      throw RecordError(line_no, e.what());
    }
  }
  return r;
}

std::string format_record(const TranscriptRecord& r) {
  ordered_json obj;
  obj["session_id"] = r.session_id;
  obj["subject_id"] = r.subject_id;
  obj["diagnosis"] = std::string(to_string(r.diagnosis));
  obj["bprs_total"] = r.bprs_total ? ordered_json(*r.bprs_total) : ordered_json(nullptr);
  obj["utterance_index"] = r.utterance_index;
  obj["speaker"] = std::string(to_string(r.speaker));
  obj["text"] = r.text;
  return obj.dump();
}

std::vector<TranscriptRecord> read_records(std::istream& in) {
  struct SessionMeta {
    std::string subject_id;
    Diagnosis diagnosis;
    std::optional<int> bprs;
  };
  std::vector<TranscriptRecord> records;
  std::map<std::pair<std::string, std::int64_t>, std::size_t> seen;
  std::unordered_map<std::string, SessionMeta> meta;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    auto r = parse_record(line, line_no);

    auto [it, inserted] = meta.try_emplace(r.session_id, SessionMeta{r.subject_id, r.diagnosis, r.bprs_total});
    if (!inserted) {
      const auto& m = it->second;
      if (m.subject_id != r.subject_id || m.diagnosis != r.diagnosis || m.bprs != r.bprs_total) {
        throw RecordError(line_no, "session '" + r.session_id +
                                       "' has inconsistent subject_id/diagnosis/bprs_total");
      }
    }
    if (r.speaker == Speaker::Subject) {
      auto [pos, fresh] = seen.try_emplace({r.session_id, r.utterance_index}, line_no);
      if (!fresh) {
        throw RecordError(line_no, "duplicate utterance_index " + std::to_string(r.utterance_index) +
                                       " in session '" + r.session_id + "' (first on line " +
                                       std::to_string(pos->second) + ")");
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<Session> build_sessions(std::span<const TranscriptRecord> records,
                                    const CorpusFilter& filter) {
  std::map<std::pair<std::string, std::int64_t>, const TranscriptRecord*> prompts;
  for (const auto& r : records) {
    if (r.speaker == Speaker::Interviewer) {
      prompts.try_emplace({r.session_id, r.utterance_index}, &r);
    }
  }

  std::vector<Session> sessions;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& r : records) {
    if (r.speaker != Speaker::Subject) continue;
    if (!filter.admits(r.diagnosis, r.bprs_total)) continue;
    auto [it, fresh] = slot.try_emplace(r.session_id, sessions.size());
    if (fresh) {
      sessions.push_back({r.session_id, r.subject_id, r.diagnosis, r.bprs_total, {}});
    }
    Utterance u;
    u.session_id = r.session_id;
    u.utterance_index = r.utterance_index;
    u.sentences = segment_sentences(r.text);
    if (auto p = prompts.find({r.session_id, r.utterance_index}); p != prompts.end()) {
      u.prompt = tokenize_words(p->second->text);
    }
    sessions[it->second].utterances.push_back(std::move(u));
  }
  for (auto& s : sessions) {
    std::sort(s.utterances.begin(), s.utterances.end(),
              [](const Utterance& a, const Utterance& b) { return a.utterance_index < b.utterance_index; });
  }
  return sessions;
}

std::vector<Session> load_corpus(std::istream& in, const CorpusFilter& filter) {
  const auto records = read_records(in);
  return build_sessions(records, filter);
}

std::vector<Session> load_corpus(const std::filesystem::path& path, const CorpusFilter& filter) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  return load_corpus(in, filter);
}

void write_records(std::ostream& out, std::span<const TranscriptRecord> records) {
  for (const auto& r : records) out << format_record(r) << '\n';
}

std::vector<std::vector<std::string>> utterance_token_lists(std::span<const Session> sessions) {
  std::vector<std::vector<std::string>> out;
  for (const auto& s : sessions) {
    for (const auto& u : s.utterances) out.push_back(u.words());
  }
  return out;
}

}  // namespace lexd
