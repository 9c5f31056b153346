#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lexd/embed.hpp"
#include "lexd/surprisal.hpp"

namespace lexd {

/// Capabilities announced by a bridge server at handshake.
struct BridgeCapabilities {
  std::string provider;
  std::string log_base;
  std::uint32_t embedding_dim = 0;
  std::size_t max_context = 0;
};

/// Client side of the neural sidecar protocol: one JSON message per line on
/// the child's stdin/stdout.
///
///   -> {"id":N,"kind":"handshake","payload":{}}
///   <- {"id":N,"ok":true,"value":{"provider":..,"log_base":"natural",
///                                 "embedding_dim":D,"max_context":C},"detail":""}
///   -> {"id":N,"kind":"logprob","payload":{"context":[..],"target":"w"}}
///   <- {"id":N,"ok":true,"value":-3.1,"detail":""}
///   -> {"id":N,"kind":"embed","payload":{"sentence":"tokens joined by spaces"}}
///   <- {"id":N,"ok":true,"value":[..D reals..],"detail":""}
///
/// Requests are pipelined up to a fixed window; responses are matched by id.
/// The server is serial, so one client must not be used from two threads at
/// once (the providers below declare themselves non-concurrent).
class BridgeClient {
 public:
  /// Runs `command` through /bin/sh and performs the handshake. Throws
  /// ProviderError when the process cannot start or the handshake fails or
  /// announces a log base other than natural.
  static std::shared_ptr<BridgeClient> launch(const std::string& command, std::size_t window = 32);

  ~BridgeClient();
  BridgeClient(const BridgeClient&) = delete;
  BridgeClient& operator=(const BridgeClient&) = delete;

  const BridgeCapabilities& capabilities() const noexcept { return caps_; }

  std::vector<double> logprobs(std::span<const TokenQuery> queries);
  std::vector<std::vector<double>> embeddings(std::span<const std::string> sentences);

  /// Sends one raw line and returns the raw response line (protocol tests).
  std::string exchange_raw(const std::string& line);

 private:
  struct Process;
  BridgeClient() = default;
  std::vector<std::string> pipeline(std::vector<std::string> requests, std::vector<std::uint64_t> ids);

  std::unique_ptr<Process> proc_;
  BridgeCapabilities caps_;
  std::uint64_t next_id_ = 1;
  std::size_t window_ = 32;
};

class BridgeTokenProvider final : public TokenProbabilityProvider {
 public:
  explicit BridgeTokenProvider(std::shared_ptr<BridgeClient> client);
  const ProviderInfo& info() const override { return info_; }
  double log_prob(const TokenQuery& query) const override;
  std::vector<double> log_prob_batch(std::span<const TokenQuery> queries) const override;

 private:
  std::shared_ptr<BridgeClient> client_;
  ProviderInfo info_;
};

class BridgeEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit BridgeEmbeddingProvider(std::shared_ptr<BridgeClient> client);
  const EmbeddingInfo& info() const override { return info_; }
  SparseVector embed(const SentenceQuery& query) const override;
  std::vector<SparseVector> embed_batch(std::span<const SentenceQuery> queries) const override;

 private:
  std::shared_ptr<BridgeClient> client_;
  EmbeddingInfo info_;
};

}  // namespace lexd
