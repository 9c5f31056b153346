#include <cmath>
#include <fstream>
#include <istream>

#include "json.hpp"
#include "lexd/embed.hpp"
#include "lexd/error.hpp"
#include "lexd/surprisal.hpp"

namespace lexd {

using nlohmann::json;

namespace {

json parse_line(const std::string& line, std::size_t line_no) {
  try {
    auto obj = json::parse(line);
    if (!obj.is_object()) throw RecordError(line_no, "replay record must be a JSON object");
    return obj;
  } catch (const json::parse_error& e) {
    throw RecordError(line_no, std::string("malformed JSON: ") + e.what());
  }
}

template <typename T>
T field(const json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) throw RecordError(line_no, std::string("missing field '") + key + "'");
  try {
    if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer() || it->get<std::int64_t>() < 0) throw std::invalid_argument("int");
    }
    return it->get<T>();
  } catch (const std::exception&) {
    throw RecordError(line_no, std::string("field '") + key + "' has the wrong type");
  }
}

std::string replay_key(std::string_view session, std::int64_t utt, std::size_t sent,
                       std::optional<std::size_t> word) {
  std::string k(session);
  k += '\x1f';
  k += std::to_string(utt);
  k += '\x1f';
  k += std::to_string(sent);
  if (word) {
    k += '\x1f';
    k += std::to_string(*word);
  }
  return k;
}

template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    fn(parse_line(line, line_no), line_no);
  }
}

}  // namespace

// ---- log-probabilities --------------------------------------------------

std::string ReplayLogProbProvider::key(std::string_view session, std::int64_t utt, std::size_t sent,
                                       std::size_t word) {
  return replay_key(session, utt, sent, word);
}

std::unique_ptr<ReplayLogProbProvider> ReplayLogProbProvider::parse(std::istream& in, std::string name) {
  std::unique_ptr<ReplayLogProbProvider> p(new ReplayLogProbProvider());
  p->info_.name = std::move(name);
  for_each_record(in, [&](const json& obj, std::size_t line_no) {
    const auto session = field<std::string>(obj, "session_id", line_no);
    const auto utt = field<std::int64_t>(obj, "utterance_index", line_no);
    const auto sent = field<std::size_t>(obj, "sentence_index", line_no);
    const auto word = field<std::size_t>(obj, "word_index", line_no);
    const auto token = field<std::string>(obj, "token", line_no);
    const auto lp = field<double>(obj, "logprob", line_no);
    if (!std::isfinite(lp) || lp > 0.0) throw RecordError(line_no, "logprob must be finite and <= 0");
    if (!p->entries_.emplace(key(session, utt, sent, word), Entry{token, lp}).second) {
      throw RecordError(line_no, "duplicate replay key");
    }
  });
  return p;
}

std::unique_ptr<ReplayLogProbProvider> ReplayLogProbProvider::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open replay file " + path);
  return parse(in);
}

double ReplayLogProbProvider::log_prob(const TokenQuery& query) const {
  const auto& loc = query.location;
  auto it = entries_.find(key(loc.session_id, loc.utterance_index, loc.sentence_index, loc.word_index));
  if (it == entries_.end()) {
    throw ProviderError(info_.name, "no replay value for session '" + std::string(loc.session_id) +
                                        "' utterance " + std::to_string(loc.utterance_index) + " sentence " +
                                        std::to_string(loc.sentence_index) + " word " +
                                        std::to_string(loc.word_index));
  }
  if (it->second.token != query.target) {
    throw ProviderError(info_.name, "replay token '" + it->second.token + "' does not match '" +
                                        std::string(query.target) + "'");
  }
  return it->second.logprob;
}

// ---- sentence vectors ---------------------------------------------------

std::unique_ptr<ReplayEmbeddingProvider> ReplayEmbeddingProvider::parse(std::istream& in, std::string name) {
  std::unique_ptr<ReplayEmbeddingProvider> p(new ReplayEmbeddingProvider());
  p->info_.name = std::move(name);
  for_each_record(in, [&](const json& obj, std::size_t line_no) {
    const auto session = field<std::string>(obj, "session_id", line_no);
    const auto utt = field<std::int64_t>(obj, "utterance_index", line_no);
    const auto sent = field<std::size_t>(obj, "sentence_index", line_no);
    const auto values = field<std::vector<double>>(obj, "vector", line_no);
    if (values.empty()) throw RecordError(line_no, "empty vector");
    for (double x : values) {
      if (!std::isfinite(x)) throw RecordError(line_no, "non-finite vector component");
    }
    if (p->info_.dim == 0) {
      p->info_.dim = static_cast<std::uint32_t>(values.size());
    } else if (values.size() != p->info_.dim) {
      throw RecordError(line_no, "vector dimension " + std::to_string(values.size()) + " differs from " +
                                     std::to_string(p->info_.dim));
    }
    if (!p->vectors_.emplace(replay_key(session, utt, sent, std::nullopt), SparseVector::from_dense(values)).second) {
      throw RecordError(line_no, "duplicate replay key");
    }
  });
  if (p->info_.dim == 0) throw DataError("replay vector file is empty");
  return p;
}

std::unique_ptr<ReplayEmbeddingProvider> ReplayEmbeddingProvider::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open replay file " + path);
  return parse(in);
}

SparseVector ReplayEmbeddingProvider::embed(const SentenceQuery& query) const {
  auto it = vectors_.find(replay_key(query.session_id, query.utterance_index, query.sentence_index, std::nullopt));
  if (it == vectors_.end()) {
    throw ProviderError(info_.name, "no replay vector for session '" + std::string(query.session_id) +
                                        "' utterance " + std::to_string(query.utterance_index) + " sentence " +
                                        std::to_string(query.sentence_index));
  }
  return it->second;
}

}  // namespace lexd
