#include "lexd/bridge.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <thread>
#include <unordered_map>

#include "json.hpp"

#include "lexd/error.hpp"

namespace lexd {

using json = nlohmann::json;

namespace {

constexpr const char* kName = "bridge";

[[noreturn]] void fail(const std::string& what) { throw ProviderError(kName, what); }

}  // namespace

struct BridgeClient::Process {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  std::string buffer;

  ~Process() {
    if (to_child >= 0) ::close(to_child);
    if (from_child >= 0) ::close(from_child);
    if (pid <= 0) return;
    // Closing stdin asks the server to exit; give it a moment before killing.
    for (int i = 0; i < 100; ++i) {
      if (::waitpid(pid, nullptr, WNOHANG) == pid) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid, SIGKILL);
    ::waitpid(pid, nullptr, 0);
  }

  void write_line(const std::string& line) {
    std::string data = line;
    data.push_back('\n');
    std::size_t off = 0;
    while (off < data.size()) {
      const auto n = ::write(to_child, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(std::string("write to bridge process failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    for (;;) {
      const auto nl = buffer.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      char chunk[65536];
      const auto n = ::read(from_child, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(std::string("read from bridge process failed: ") + std::strerror(errno));
      }
      if (n == 0) fail("bridge process closed its output");
      buffer.append(chunk, static_cast<std::size_t>(n));
    }
  }
};

std::shared_ptr<BridgeClient> BridgeClient::launch(const std::string& command, std::size_t window) {
  if (command.empty()) fail("empty bridge command");
  ::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0) fail("pipe() failed");
  if (::pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    fail("pipe() failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) fail("fork() failed");
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
  ::fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);

  std::shared_ptr<BridgeClient> client(new BridgeClient());
  client->proc_ = std::make_unique<Process>();
  client->proc_->pid = pid;
  client->proc_->to_child = in_pipe[1];
  client->proc_->from_child = out_pipe[0];
  client->window_ = window == 0 ? 1 : window;

  json req = {{"id", 0}, {"kind", "handshake"}, {"payload", json::object()}};
  const auto responses = client->pipeline({req.dump()}, {0});
  json value;
  try {
    value = json::parse(responses[0]);
    auto& c = client->caps_;
    c.provider = value.at("provider").get<std::string>();
    c.log_base = value.at("log_base").get<std::string>();
    c.embedding_dim = value.value("embedding_dim", 0u);
    if (value.contains("max_context") && !value["max_context"].is_null()) {
      c.max_context = value["max_context"].get<std::size_t>();
    } else {
      c.max_context = std::numeric_limits<std::size_t>::max();
    }
  } catch (const json::exception& e) {
    fail(std::string("malformed handshake: ") + e.what());
  }
  if (client->caps_.log_base != "natural") {
    fail("bridge reports log base '" + client->caps_.log_base + "', expected 'natural'");
  }
  return client;
}

BridgeClient::~BridgeClient() = default;

// Sends `requests` keeping at most window_ in flight and returns the `value`
// of each response, serialized, in request order.
std::vector<std::string> BridgeClient::pipeline(std::vector<std::string> requests, std::vector<std::uint64_t> ids) {
  std::unordered_map<std::uint64_t, std::size_t> pending;
  std::vector<std::string> values(requests.size());
  std::size_t sent = 0;
  std::size_t received = 0;

  auto receive_one = [&] {
    const auto line = proc_->read_line();
    json msg;
    try {
      msg = json::parse(line);
    } catch (const json::exception&) {
      fail("unparseable response line: " + line.substr(0, 200));
    }
    if (!msg.is_object() || !msg.contains("id") || !msg["id"].is_number_unsigned()) {
      fail("response without a valid id: " + line.substr(0, 200));
    }
    const auto id = msg["id"].get<std::uint64_t>();
    auto it = pending.find(id);
    if (it == pending.end()) fail("response for unknown request id " + std::to_string(id));
    const auto slot = it->second;
    pending.erase(it);
    if (!msg.value("ok", false)) {
      std::string detail = msg.contains("detail") && msg["detail"].is_string() ? msg["detail"].get<std::string>() : "";
      fail("request " + std::to_string(id) + " failed: " + detail);
    }
    if (!msg.contains("value")) fail("response " + std::to_string(id) + " has no value");
    values[slot] = msg["value"].dump();
    ++received;
  };

  while (sent < requests.size()) {
    pending.emplace(ids[sent], sent);
    proc_->write_line(requests[sent]);
    ++sent;
    if (pending.size() >= window_) receive_one();
  }
  while (received < requests.size()) receive_one();
  return values;
}

std::vector<double> BridgeClient::logprobs(std::span<const TokenQuery> queries) {
  std::vector<std::string> requests;
  std::vector<std::uint64_t> ids;
  requests.reserve(queries.size());
  for (const auto& q : queries) {
    json context = json::array();
    for (const auto& w : q.context) context.push_back(w);
    const auto id = next_id_++;
    json req = {{"id", id},
                {"kind", "logprob"},
                {"payload", {{"context", std::move(context)}, {"target", std::string(q.target)}}}};
    requests.push_back(req.dump());
    ids.push_back(id);
  }
  const auto values = pipeline(std::move(requests), std::move(ids));
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto v = json::parse(values[i]);
    if (!v.is_number()) fail("logprob value is not a number for target '" + std::string(queries[i].target) + "'");
    const double lp = v.get<double>();
    if (!std::isfinite(lp) || lp > 0.0) {
      fail("logprob " + values[i] + " for target '" + std::string(queries[i].target) + "' is not finite and <= 0");
    }
    out.push_back(lp);
  }
  return out;
}

std::vector<std::vector<double>> BridgeClient::embeddings(std::span<const std::string> sentences) {
  std::vector<std::string> requests;
  std::vector<std::uint64_t> ids;
  for (const auto& s : sentences) {
    const auto id = next_id_++;
    json req = {{"id", id}, {"kind", "embed"}, {"payload", {{"sentence", s}}}};
    requests.push_back(req.dump());
    ids.push_back(id);
  }
  const auto values = pipeline(std::move(requests), std::move(ids));
  std::vector<std::vector<double>> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto v = json::parse(values[i]);
    if (!v.is_array()) fail("embedding value is not an array for sentence " + std::to_string(i));
    std::vector<double> vec;
    vec.reserve(v.size());
    for (const auto& x : v) {
      if (!x.is_number() || !std::isfinite(x.get<double>())) fail("embedding contains a non-finite component");
      vec.push_back(x.get<double>());
    }
    if (caps_.embedding_dim != 0 && vec.size() != caps_.embedding_dim) {
      fail("embedding has dimension " + std::to_string(vec.size()) + ", handshake announced " +
           std::to_string(caps_.embedding_dim));
    }
    out.push_back(std::move(vec));
  }
  return out;
}

std::string BridgeClient::exchange_raw(const std::string& line) {
  proc_->write_line(line);
  return proc_->read_line();
}

BridgeTokenProvider::BridgeTokenProvider(std::shared_ptr<BridgeClient> client) : client_(std::move(client)) {
  const auto& c = client_->capabilities();
  info_.name = c.provider.empty() ? std::string(kName) : c.provider;
  info_.log_base = c.log_base;
  info_.max_context = c.max_context;
  info_.concurrent = false;
}

double BridgeTokenProvider::log_prob(const TokenQuery& query) const {
  return client_->logprobs(std::span<const TokenQuery>(&query, 1)).front();
}

std::vector<double> BridgeTokenProvider::log_prob_batch(std::span<const TokenQuery> queries) const {
  return client_->logprobs(queries);
}

BridgeEmbeddingProvider::BridgeEmbeddingProvider(std::shared_ptr<BridgeClient> client) : client_(std::move(client)) {
  const auto& c = client_->capabilities();
  if (c.embedding_dim == 0) fail("bridge does not announce an embedding dimension");
  info_.name = c.provider.empty() ? std::string(kName) : c.provider;
  info_.dim = c.embedding_dim;
  info_.concurrent = false;
}

namespace {

std::string join(std::span<const std::string> tokens) {
  std::string s;
  for (const auto& t : tokens) {
    if (!s.empty()) s.push_back(' ');
    s += t;
  }
  return s;
}

}  // namespace

SparseVector BridgeEmbeddingProvider::embed(const SentenceQuery& query) const {
  return embed_batch(std::span<const SentenceQuery>(&query, 1)).front();
}

std::vector<SparseVector> BridgeEmbeddingProvider::embed_batch(std::span<const SentenceQuery> queries) const {
  std::vector<std::string> sentences;
  sentences.reserve(queries.size());
  for (const auto& q : queries) sentences.push_back(join(q.tokens));
  const auto dense = client_->embeddings(sentences);
  std::vector<SparseVector> out;
  out.reserve(dense.size());
  for (const auto& d : dense) out.push_back(SparseVector::from_dense(d));
  return out;
}

}  // namespace lexd
