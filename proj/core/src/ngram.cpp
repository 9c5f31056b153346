#include "lexd/ngram.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>
#include <stdexcept>

#include "lexd/error.hpp"
#include "lexd/rng.hpp"

namespace lexd {

std::string_view to_string(Smoothing s) noexcept {
  return s == Smoothing::Mle ? "mle" : "kneser_ney";
}

Smoothing parse_smoothing(std::string_view s) {
  if (s == "mle") return Smoothing::Mle;
  if (s == "kneser_ney" || s == "kneser-ney" || s == "kn") return Smoothing::KneserNey;
  throw std::invalid_argument("unknown smoothing '" + std::string(s) + "'");
}

std::size_t NgramModel::NgramHash::operator()(const Ngram& g) const noexcept {
  std::uint64_t h = 0x84222325cbf29ce4ULL ^ g.size();
  for (auto id : g) h = mix64(h ^ id);
  return static_cast<std::size_t>(h);
}

namespace {

void check_options(const NgramOptions& o) {
  if (o.order < 1) throw std::invalid_argument("n-gram order must be >= 1");
  if (!(o.discount > 0.0 && o.discount < 1.0)) {
    throw std::invalid_argument("discount must lie in (0,1)");
  }
  if (o.min_count < 1) throw std::invalid_argument("min_count must be >= 1");
}

}  // namespace

NgramModel NgramModel::train(std::span<const std::vector<std::string>> sentences,
                             const NgramOptions& options) {
  check_options(options);
  if (sentences.empty()) throw DataError("cannot train a language model on an empty corpus");

  std::unordered_map<std::string, std::uint64_t> freq;
  for (const auto& s : sentences) {
    for (const auto& t : s) ++freq[t];
  }

  NgramModel m;
  m.options_ = options;
  m.vocab_ = {std::string(kUnk), std::string(kBos), std::string(kEos)};
  std::vector<std::string> kept;
  for (const auto& [tok, n] : freq) {
    if (n >= static_cast<std::uint64_t>(options.min_count) && tok != kUnk && tok != kBos &&
        tok != kEos) {
      kept.push_back(tok);
    }
  }
  std::sort(kept.begin(), kept.end());
  m.vocab_.insert(m.vocab_.end(), kept.begin(), kept.end());
  for (TokenId i = 0; i < m.vocab_.size(); ++i) m.ids_.emplace(m.vocab_[i], i);

  const int n = options.order;
  m.raw_.assign(static_cast<std::size_t>(n), {});
  std::vector<TokenId> padded;
  for (const auto& s : sentences) {
    padded.assign(static_cast<std::size_t>(n - 1), kBosId);
    for (const auto& t : s) padded.push_back(m.id(t));
    padded.push_back(kEosId);
    for (int k = 1; k <= n; ++k) {
      auto& table = m.raw_[static_cast<std::size_t>(k - 1)];
      for (std::size_t i = 0; i + static_cast<std::size_t>(k) <= padded.size(); ++i) {
        ++table[Ngram(padded.begin() + static_cast<std::ptrdiff_t>(i),
                      padded.begin() + static_cast<std::ptrdiff_t>(i) + k)];
      }
    }
  }
  m.build_index();
  return m;
}

void NgramModel::build_index() {
  const int n = options_.order;
  predictable_ = static_cast<double>(vocab_.size() - 1);
  levels_.assign(static_cast<std::size_t>(n), {});

  auto& top = levels_[static_cast<std::size_t>(n - 1)];
  for (const auto& [g, c] : raw_[static_cast<std::size_t>(n - 1)]) {
    if (g.back() == kBosId) continue;
    top.numer.emplace(g, static_cast<double>(c));
  }
  for (int k = n - 1; k >= 1; --k) {
    auto& level = levels_[static_cast<std::size_t>(k - 1)];
    for (const auto& [g, c] : raw_[static_cast<std::size_t>(k)]) {
      if (g.back() == kBosId) continue;
      level.numer[Ngram(g.begin() + 1, g.end())] += 1.0;
    }
  }
  for (auto& level : levels_) {
    for (const auto& [g, a] : level.numer) {
      auto& st = level.context[Ngram(g.begin(), g.end() - 1)];
      st.total += a;
      st.distinct += 1.0;
    }
  }
}

TokenId NgramModel::id(std::string_view token) const noexcept {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

double NgramModel::prob_at(int k, std::span<const TokenId> context, TokenId target) const {
  // Iterative form of the recursion: walk up from P_0.
  double p = 1.0 / predictable_;
  const double d = options_.discount;
  Ngram key;
  for (int level = 1; level <= k; ++level) {
    const auto& lv = levels_[static_cast<std::size_t>(level - 1)];
    key.assign(context.end() - (level - 1), context.end());
    auto st = lv.context.find(key);
    if (st == lv.context.end()) continue;
    key.push_back(target);
    auto num = lv.numer.find(key);
    const double a = num == lv.numer.end() ? 0.0 : num->second;
    p = std::max(a - d, 0.0) / st->second.total + d * st->second.distinct / st->second.total * p;
  }
  return p;
}

double NgramModel::log_prob_ids(std::span<const TokenId> context, TokenId target) const {
  if (target == kBosId) throw std::invalid_argument("<s> is not a prediction target");
  if (target >= vocab_.size()) target = kUnkId;
  const auto width = static_cast<std::size_t>(options_.order - 1);
  std::vector<TokenId> ctx(width, kBosId);
  const std::size_t take = std::min(width, context.size());
  std::copy(context.end() - static_cast<std::ptrdiff_t>(take), context.end(),
            ctx.end() - static_cast<std::ptrdiff_t>(take));

  if (options_.smoothing == Smoothing::Mle) {
    const auto& top = levels_.back();
    auto st = top.context.find(ctx);
    Ngram key = ctx;
    key.push_back(target);
    auto num = top.numer.find(key);
    if (st == top.context.end() || num == top.numer.end()) {
      throw ZeroProbability("MLE probability of '" + vocab_[target] +
                            "' in this context is zero; use kneser_ney for open text");
    }
    return std::log(num->second / st->second.total);
  }
  return std::log(prob_at(options_.order, ctx, target));
}

double NgramModel::log_prob(std::span<const std::string> context, std::string_view target) const {
  std::vector<TokenId> ids;
  ids.reserve(context.size());
  for (const auto& t : context) ids.push_back(id(t));
  if (target == kBos) throw std::invalid_argument("<s> is not a prediction target");
  return log_prob_ids(ids, id(target));
}

std::uint64_t NgramModel::count_ids(std::span<const TokenId> ngram) const {
  if (ngram.empty() || ngram.size() > raw_.size()) return 0;
  const auto& table = raw_[ngram.size() - 1];
  auto it = table.find(Ngram(ngram.begin(), ngram.end()));
  return it == table.end() ? 0 : it->second;
}

std::uint64_t NgramModel::count(std::span<const std::string> ngram) const {
  Ngram ids;
  for (const auto& t : ngram) ids.push_back(id(t));
  return count_ids(ids);
}

std::map<Ngram, std::uint64_t> NgramModel::counts(int k) const {
  if (k < 1 || k > options_.order) throw std::out_of_range("n-gram order out of range");
  const auto& table = raw_[static_cast<std::size_t>(k - 1)];
  return {table.begin(), table.end()};
}

std::vector<TokenId> NgramModel::targets() const {
  std::vector<TokenId> out;
  for (TokenId i = 0; i < vocab_.size(); ++i) {
    if (i != kBosId) out.push_back(i);
  }
  return out;
}

std::vector<Ngram> NgramModel::observed_contexts() const {
  std::set<Ngram> sorted;
  for (const auto& [h, st] : levels_.back().context) sorted.insert(h);
  return {sorted.begin(), sorted.end()};
}

bool NgramModel::operator==(const NgramModel& other) const {
  return options_.order == other.options_.order && options_.discount == other.options_.discount &&
         options_.min_count == other.options_.min_count &&
         options_.smoothing == other.options_.smoothing && vocab_ == other.vocab_ &&
         raw_ == other.raw_;
}

// ---- serialization -----------------------------------------------------
//
// Little-endian layout, version 1:
//   "LXNG" u32 version u8 smoothing u32 order f64 discount u32 min_count
//   u32 |V| { u32 len, bytes }*|V|
//   for k = 1..order: u64 entries { u32 id * k, u64 count }* (ascending)

namespace {

constexpr char kMagic[4] = {'L', 'X', 'N', 'G'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxOrder = 16;

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void le(T v) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t offset() const noexcept { return pos_; }
  bool done() const noexcept { return pos_ == in_.size(); }

  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n) throw FormatError(pos_, std::string("truncated payload reading ") + what);
  }
  template <typename T>
  T le(const char* what) {
    need(sizeof(T), what);
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(in_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  double f64(const char* what) { return std::bit_cast<double>(le<std::uint64_t>(what)); }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> NgramModel::serialize() const {
  ByteWriter w;
  w.raw(kMagic, sizeof kMagic);
  w.le(kVersion);
  w.le(static_cast<std::uint8_t>(options_.smoothing));
  w.le(static_cast<std::uint32_t>(options_.order));
  w.f64(options_.discount);
  w.le(static_cast<std::uint32_t>(options_.min_count));
  w.le(static_cast<std::uint32_t>(vocab_.size()));
  for (const auto& t : vocab_) {
    w.le(static_cast<std::uint32_t>(t.size()));
    w.raw(t.data(), t.size());
  }
  for (int k = 1; k <= options_.order; ++k) {
    const auto sorted = counts(k);
    w.le(static_cast<std::uint64_t>(sorted.size()));
    for (const auto& [g, c] : sorted) {
      for (auto id : g) w.le(id);
      w.le(c);
    }
  }
  return w.take();
}

NgramModel NgramModel::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.need(sizeof kMagic, "magic");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw FormatError(0, "bad magic; not an n-gram model");
  (void)r.str(sizeof kMagic, "magic");

  auto at = r.offset();
  if (auto v = r.le<std::uint32_t>("version"); v != kVersion) {
    throw FormatError(at, "unsupported model version " + std::to_string(v));
  }
  NgramModel m;
  at = r.offset();
  const auto sm = r.le<std::uint8_t>("smoothing");
  if (sm > 1) throw FormatError(at, "unknown smoothing code");
  m.options_.smoothing = static_cast<Smoothing>(sm);
  at = r.offset();
  const auto order = r.le<std::uint32_t>("order");
  if (order < 1 || order > kMaxOrder) throw FormatError(at, "order out of range");
  m.options_.order = static_cast<int>(order);
  at = r.offset();
  m.options_.discount = r.f64("discount");
  if (!(m.options_.discount > 0.0 && m.options_.discount < 1.0)) throw FormatError(at, "discount outside (0,1)");
  at = r.offset();
  const auto min_count = r.le<std::uint32_t>("min_count");
  if (min_count < 1 || min_count > static_cast<std::uint32_t>(INT32_MAX)) throw FormatError(at, "min_count out of range");
  m.options_.min_count = static_cast<int>(min_count);

  at = r.offset();
  const auto vsize = r.le<std::uint32_t>("vocabulary size");
  if (vsize < 3) throw FormatError(at, "vocabulary lacks reserved tokens");
  for (std::uint32_t i = 0; i < vsize; ++i) {
    at = r.offset();
    const auto len = r.le<std::uint32_t>("token length");
    auto tok = r.str(len, "token");
    if (i == kUnkId && tok != kUnk) throw FormatError(at, "token 0 must be <unk>");
    if (i == kBosId && tok != kBos) throw FormatError(at, "token 1 must be <s>");
    if (i == kEosId && tok != kEos) throw FormatError(at, "token 2 must be </s>");
    if (i > kEosId) {
      if (tok.empty()) throw FormatError(at, "empty vocabulary token");
      if (i > 3 && !(m.vocab_.back() < tok)) throw FormatError(at, "vocabulary not sorted");
    }
    m.vocab_.push_back(std::move(tok));
  }
  for (TokenId i = 0; i < m.vocab_.size(); ++i) {
    if (!m.ids_.emplace(m.vocab_[i], i).second) throw FormatError(r.offset(), "duplicate vocabulary token");
  }

  m.raw_.assign(order, {});
  for (std::uint32_t k = 1; k <= order; ++k) {
    at = r.offset();
    const auto entries = r.le<std::uint64_t>("entry count");
    if (entries > bytes.size()) throw FormatError(at, "entry count exceeds payload");
    Ngram prev;
    for (std::uint64_t e = 0; e < entries; ++e) {
      at = r.offset();
      Ngram g(k);
      for (auto& id : g) {
        id = r.le<std::uint32_t>("token id");
        if (id >= vsize) throw FormatError(at, "token id out of range");
      }
      const auto c = r.le<std::uint64_t>("count");
      if (c == 0) throw FormatError(at, "zero count");
      if (e > 0 && !(prev < g)) throw FormatError(at, "n-gram entries not strictly ascending");
      m.raw_[k - 1].emplace(g, c);
      prev = std::move(g);
    }
  }
  if (!r.done()) throw FormatError(r.offset(), "trailing bytes after model");
  m.build_index();
  return m;
}

}  // namespace lexd
