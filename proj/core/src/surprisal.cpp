#include "lexd/surprisal.hpp"

#include <cmath>
#include <mutex>
#include <optional>

#include "lexd/error.hpp"
#include "parallel.hpp"

namespace lexd {

std::vector<double> TokenProbabilityProvider::log_prob_batch(std::span<const TokenQuery> queries) const {
  std::vector<double> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(log_prob(q));
  return out;
}

NgramProvider::NgramProvider(std::shared_ptr<const NgramModel> model, std::string name)
    : model_(std::move(model)) {
  info_.name = std::move(name);
  info_.max_context = static_cast<std::size_t>(model_->order() - 1);
  info_.concurrent = true;
}

double NgramProvider::log_prob(const TokenQuery& query) const {
  return model_->log_prob(query.context, query.target);
}

double quantize_surprisal(double nats) noexcept {
  return std::round(nats / kSurprisalQuantum) * kSurprisalQuantum;
}

namespace {

std::span<const std::string> truncate(std::span<const std::string> context, std::size_t max) {
  return context.size() > max ? context.last(max) : context;
}

double checked_surprisal(const ProviderInfo& info, double lp) {
  if (!std::isfinite(lp) || lp > 0.0) {
    throw ProviderError(info.name, "returned invalid log-probability " + std::to_string(lp));
  }
  return 0.0 - lp;
}

template <typename Fn>
auto with_provider_name(const ProviderInfo& info, Fn&& fn) {
  try {
    return fn();
  } catch (const ProviderError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProviderError(info.name, e.what());
  }
}

// Serializes calls into a provider that declared itself non-concurrent.
class SerialProvider final : public TokenProbabilityProvider {
 public:
  explicit SerialProvider(const TokenProbabilityProvider& inner) : inner_(inner) {}
  const ProviderInfo& info() const override { return inner_.info(); }
  double log_prob(const TokenQuery& q) const override {
    std::lock_guard lock(mutex_);
    return inner_.log_prob(q);
  }
  std::vector<double> log_prob_batch(std::span<const TokenQuery> qs) const override {
    std::lock_guard lock(mutex_);
    return inner_.log_prob_batch(qs);
  }

 private:
  const TokenProbabilityProvider& inner_;
  mutable std::mutex mutex_;
};

}  // namespace

double word_surprisal(const TokenProbabilityProvider& provider, const TokenQuery& query) {
  const auto& info = provider.info();
  TokenQuery q = query;
  q.context = truncate(query.context, info.max_context);
  const double lp = with_provider_name(info, [&] { return provider.log_prob(q); });
  return checked_surprisal(info, lp);
}

SurprisalScore score_utterance(const TokenProbabilityProvider& provider, const Utterance& utterance,
                               const SurprisalOptions& options) {
  if (utterance.sentences.empty() || utterance.word_count() == 0) {
    throw DataError("cannot score an empty utterance (session '" + utterance.session_id + "', index " +
                    std::to_string(utterance.utterance_index) + ")");
  }
  const auto& info = provider.info();

  std::vector<std::string> stream;
  if (options.prompt_context) stream = utterance.prompt;
  const std::size_t offset = stream.size();
  for (const auto& s : utterance.sentences) stream.insert(stream.end(), s.tokens.begin(), s.tokens.end());

  std::vector<TokenQuery> queries;
  queries.reserve(stream.size() - offset);
  std::size_t pos = offset;
  for (std::size_t si = 0; si < utterance.sentences.size(); ++si) {
    const auto& tokens = utterance.sentences[si].tokens;
    for (std::size_t wi = 0; wi < tokens.size(); ++wi, ++pos) {
      TokenQuery q;
      q.context = truncate(std::span<const std::string>(stream).first(pos), info.max_context);
      q.target = stream[pos];
      q.location = {utterance.session_id, utterance.utterance_index, si, wi};
      queries.push_back(q);
    }
  }

  const auto lps = with_provider_name(info, [&] { return provider.log_prob_batch(queries); });
  if (lps.size() != queries.size()) {
    throw ProviderError(info.name, "batch returned " + std::to_string(lps.size()) + " values for " +
                                       std::to_string(queries.size()) + " queries");
  }

  SurprisalScore out;
  out.session_id = utterance.session_id;
  out.utterance_index = utterance.utterance_index;
  out.provider = info.name;
  std::size_t k = 0;
  for (const auto& s : utterance.sentences) {
    auto& words = out.word_scores.emplace_back();
    double sentence = 0.0;
    for (std::size_t w = 0; w < s.tokens.size(); ++w, ++k) {
      const double value = quantize_surprisal(checked_surprisal(info, lps[k]));
      words.push_back(value);
      sentence += value;
    }
    out.sentence_scores.push_back(sentence);
    out.utterance_score += sentence;
  }
  return out;
}

std::vector<SurprisalScore> score_corpus(const TokenProbabilityProvider& provider,
                                         std::span<const Session> sessions,
                                         const SurprisalOptions& options, unsigned jobs) {
  std::vector<const Utterance*> work;
  for (const auto& s : sessions) {
    for (const auto& u : s.utterances) work.push_back(&u);
  }
  std::vector<SurprisalScore> out(work.size());
  std::optional<SerialProvider> serial;
  const TokenProbabilityProvider* p = &provider;
  if (!provider.info().concurrent && jobs > 1) p = &serial.emplace(provider);
  detail::parallel_for(work.size(), jobs, [&](std::size_t i) { out[i] = score_utterance(*p, *work[i], options); });
  return out;
}

double session_mean_sentence_surprisal(std::span<const SurprisalScore> scores) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : scores) {
    for (double v : s.sentence_scores) {
      sum += v;
      ++n;
    }
  }
  if (n == 0) throw DataError("session has no scored sentences");
  return sum / static_cast<double>(n);
}

}  // namespace lexd
