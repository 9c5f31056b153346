#include "lexd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include "lexd/csv.hpp"
#include "lexd/error.hpp"

namespace lexd {

using csv::format_double;

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of an empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

namespace {

struct Moments {
  double mx, my, sxx, syy, sxy;
};

Moments moments(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("samples differ in length");
  if (x.size() < 2) throw std::invalid_argument("need at least two points");
  Moments m{mean(x), mean(y), 0, 0, 0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - m.mx;
    const double dy = y[i] - m.my;
    m.sxx += dx * dx;
    m.syy += dy * dy;
    m.sxy += dx * dy;
  }
  if (m.sxx == 0.0 || m.syy == 0.0) throw DegenerateVariance("zero variance in correlation input");
  return m;
}

double sample_sd(std::span<const double> xs, double mu) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

int group_rank(Diagnosis d) { return static_cast<int>(d); }

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  const auto m = moments(x, y);
  return std::clamp(m.sxy / std::sqrt(m.sxx * m.syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

OlsFit ols(std::span<const double> x, std::span<const double> y) {
  const auto m = moments(x, y);
  OlsFit fit;
  fit.slope = m.sxy / m.sxx;
  fit.intercept = m.my - fit.slope * m.mx;
  fit.r = std::clamp(m.sxy / std::sqrt(m.sxx * m.syy), -1.0, 1.0);
  fit.n = x.size();
  return fit;
}

GroupMeans group_means(std::span<const Observation> observations, std::span<const Session> sessions,
                       std::string metric) {
  std::unordered_map<std::string, const Session*> by_id;
  for (const auto& s : sessions) by_id.emplace(s.session_id, &s);

  std::map<std::string, std::vector<const Observation*>> per_session;
  for (const auto& o : observations) {
    if (!by_id.contains(o.session_id)) throw DataError("score refers to unknown session '" + o.session_id + "'");
    per_session[o.session_id].push_back(&o);
  }

  GroupMeans out;
  out.metric = metric;
  struct Acc {
    std::vector<double> means;
    std::size_t utterances = 0;
  };
  std::map<int, Acc> groups;
  for (auto& [id, obs] : per_session) {
    std::sort(obs.begin(), obs.end(), [](const Observation* a, const Observation* b) {
      return std::tie(a->utterance_index, a->value) < std::tie(b->utterance_index, b->value);
    });
    double sum = 0.0;
    std::size_t utterances = 0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      sum += obs[i]->value;
      if (i == 0 || obs[i]->utterance_index != obs[i - 1]->utterance_index) ++utterances;
    }
    const Session& s = *by_id.at(id);
    SessionValue v{id, s.diagnosis, s.bprs_total, sum / static_cast<double>(obs.size()), obs.size()};
    auto& g = groups[group_rank(s.diagnosis)];
    g.means.push_back(v.mean);
    g.utterances += utterances;
    out.sessions.push_back(std::move(v));
  }
  for (const auto& [rank, acc] : groups) {
    GroupSummary g;
    g.group = static_cast<Diagnosis>(rank);
    g.metric = metric;
    g.mean = mean(acc.means);
    g.sd = sample_sd(acc.means, g.mean);
    g.n_sessions = acc.means.size();
    g.n_utterances = acc.utterances;
    out.groups.push_back(g);
  }
  return out;
}

MethodAgreement method_agreement(std::span<const Observation> lda, std::span<const Observation> embed) {
  using Key = std::pair<std::string, std::int64_t>;
  std::map<Key, double> left;
  for (const auto& o : lda) {
    if (!left.emplace(Key{o.session_id, o.utterance_index}, o.value).second) {
      throw DataError("duplicate LDA score for session '" + o.session_id + "' utterance " +
                      std::to_string(o.utterance_index));
    }
  }
  std::map<Key, double> right;
  for (const auto& o : embed) {
    if (!right.emplace(Key{o.session_id, o.utterance_index}, o.value).second) {
      throw DataError("duplicate embedding score for session '" + o.session_id + "' utterance " +
                      std::to_string(o.utterance_index));
    }
  }
  MethodAgreement out;
  std::vector<double> x, y;
  for (const auto& [key, value] : left) {
    auto it = right.find(key);
    if (it == right.end()) continue;
    out.pairs.push_back({key.first, key.second, value, it->second});
    x.push_back(value);
    y.push_back(it->second);
  }
  if (out.pairs.size() < 3) {
    throw DataError("method agreement needs at least 3 utterances scored by both methods, got " +
                    std::to_string(out.pairs.size()));
  }
  out.pearson = pearson(x, y);
  out.spearman = spearman(x, y);
  return out;
}

std::string_view to_string(RelationStatus s) noexcept {
  switch (s) {
    case RelationStatus::Ok: return "ok";
    case RelationStatus::InsufficientSessions: return "insufficient_sessions";
    case RelationStatus::DegenerateVariance: return "degenerate_variance";
  }
  return "?";
}

std::vector<GroupRelation> group_relation(std::span<const SessionValue> surprisal,
                                          std::span<const SessionValue> coherence, std::size_t min_sessions) {
  std::map<std::string, const SessionValue*> coh;
  for (const auto& c : coherence) coh.emplace(c.session_id, &c);

  std::map<int, std::vector<std::pair<std::string, std::pair<double, double>>>> points;
  for (const auto& s : surprisal) {
    auto it = coh.find(s.session_id);
    if (it == coh.end()) continue;
    points[group_rank(s.diagnosis)].push_back({s.session_id, {s.mean, it->second->mean}});
  }

  std::vector<GroupRelation> out;
  for (auto& [rank, pts] : points) {
    std::sort(pts.begin(), pts.end());
    GroupRelation rel;
    rel.group = static_cast<Diagnosis>(rank);
    rel.n_sessions = pts.size();
    if (pts.size() < min_sessions) {
      rel.status = RelationStatus::InsufficientSessions;
    } else {
      std::vector<double> x, y;
      for (const auto& [id, xy] : pts) {
        x.push_back(xy.first);
        y.push_back(xy.second);
      }
      try {
        rel.fit = ols(x, y);
      } catch (const DegenerateVariance&) {
        rel.status = RelationStatus::DegenerateVariance;
      }
    }
    out.push_back(rel);
  }
  return out;
}

std::vector<TrendPoint> severity_trend(std::span<const SessionValue> values, const TrendOptions& options) {
  if (options.window_halfwidth < 0) throw std::invalid_argument("window halfwidth must be >= 0");
  std::vector<std::pair<int, double>> pts;
  for (const auto& v : values) {
    if (v.bprs_total) pts.emplace_back(*v.bprs_total, v.mean);
  }
  if (pts.empty()) throw DataError("no session carries a BPRS total");
  std::sort(pts.begin(), pts.end());

  std::vector<TrendPoint> out;
  for (int c = options.center_min; c <= options.center_max; ++c) {
    TrendPoint p;
    p.bprs_center = c;
    p.window_lo = c - options.window_halfwidth;
    p.window_hi = c + options.window_halfwidth;
    double sum = 0.0;
    for (const auto& [bprs, value] : pts) {
      if (bprs < p.window_lo || bprs > p.window_hi) continue;
      sum += value;
      ++p.n_sessions;
    }
    if (p.n_sessions < std::max<std::size_t>(options.min_support, 1)) continue;
    p.mean = sum / static_cast<double>(p.n_sessions);
    out.push_back(p);
  }
  return out;
}

OlsFit trend_fit(std::span<const TrendPoint> points) {
  std::vector<double> x, y;
  for (const auto& p : points) {
    x.push_back(p.bprs_center);
    y.push_back(p.mean);
  }
  return ols(x, y);
}

void write_group_means(std::ostream& out, std::span<const GroupMeans> tables) {
  csv::write_row(out, {"level", "group", "session_id", "metric", "mean", "sd", "n_sessions", "n_units"});
  for (const auto& t : tables) {
    for (const auto& g : t.groups) {
      csv::write_row(out, {"group", std::string(to_string(g.group)), "", g.metric, format_double(g.mean),
                           format_double(g.sd), std::to_string(g.n_sessions), std::to_string(g.n_utterances)});
    }
  }
  for (const auto& t : tables) {
    for (const auto& s : t.sessions) {
      csv::write_row(out, {"session", std::string(to_string(s.diagnosis)), s.session_id, t.metric,
                           format_double(s.mean), "", "1", std::to_string(s.n_units)});
    }
  }
}

void write_method_agreement(std::ostream& out, const MethodAgreement& agreement) {
  csv::write_row(out, {"session_id", "utterance_index", "lda_coherence", "embed_coherence"});
  for (const auto& p : agreement.pairs) {
    csv::write_row(out, {p.session_id, std::to_string(p.utterance_index), format_double(p.lda), format_double(p.embed)});
  }
}

void write_agreement_summary(std::ostream& out, const MethodAgreement& agreement) {
  csv::write_row(out, {"statistic", "value"});
  csv::write_row(out, {"n_pairs", std::to_string(agreement.pairs.size())});
  csv::write_row(out, {"pearson_r", format_double(agreement.pearson)});
  csv::write_row(out, {"spearman_rho", format_double(agreement.spearman)});
}

void write_group_relation(std::ostream& out, std::span<const GroupRelation> relations) {
  csv::write_row(out, {"coherence_metric", "group", "n_sessions", "status", "slope", "intercept", "r"});
  for (const auto& r : relations) {
    if (r.fit) {
      csv::write_row(out, {r.coherence_metric, std::string(to_string(r.group)), std::to_string(r.n_sessions),
                           std::string(to_string(r.status)), format_double(r.fit->slope),
                           format_double(r.fit->intercept), format_double(r.fit->r)});
    } else {
      csv::write_row(out, {r.coherence_metric, std::string(to_string(r.group)), std::to_string(r.n_sessions),
                           std::string(to_string(r.status)), "", "", ""});
    }
  }
}

void write_severity_trend(std::ostream& out, std::span<const TrendPoint> points) {
  csv::write_row(out, {"bprs_center", "window_lo", "window_hi", "mean", "n_sessions"});
  for (const auto& p : points) {
    csv::write_row(out, {std::to_string(p.bprs_center), std::to_string(p.window_lo), std::to_string(p.window_hi),
                         format_double(p.mean), std::to_string(p.n_sessions)});
  }
}

}  // namespace lexd
