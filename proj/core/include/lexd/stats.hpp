#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lexd/corpus.hpp"
#include "lexd/score_table.hpp"

namespace lexd {

/// Mean of one metric over the observations of one session.
struct SessionValue {
  std::string session_id;
  Diagnosis diagnosis = Diagnosis::HC;
  std::optional<int> bprs_total;
  double mean = 0.0;
  std::size_t n_units = 0;
};

struct GroupSummary {
  Diagnosis group = Diagnosis::HC;
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;  // sample SD over session means; 0 for a single session
  std::size_t n_sessions = 0;
  std::size_t n_utterances = 0;
};

struct GroupMeans {
  std::string metric;
  std::vector<SessionValue> sessions;  // sorted by session_id
  std::vector<GroupSummary> groups;    // HC, SZ, MDD order; empty groups omitted
};

/// Session means first, then the mean of session means within each
/// diagnosis group. Sums run in a canonical order, so the result does not
/// depend on input order. Throws DataError for an observation whose session
/// is unknown.
GroupMeans group_means(std::span<const Observation> observations, std::span<const Session> sessions,
                       std::string metric);

double mean(std::span<const double> xs);
/// Throws DegenerateVariance when either input is constant,
/// std::invalid_argument on length mismatch or fewer than two points.
double pearson(std::span<const double> x, std::span<const double> y);
/// Ranks with ties given their average rank, 1-based.
std::vector<double> average_ranks(std::span<const double> xs);
double spearman(std::span<const double> x, std::span<const double> y);

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r = 0.0;
  std::size_t n = 0;
};

/// Least squares of y on x. Throws DegenerateVariance on constant x or y.
OlsFit ols(std::span<const double> x, std::span<const double> y);

struct PairedScore {
  std::string session_id;
  std::int64_t utterance_index = 0;
  double lda = 0.0;
  double embed = 0.0;
};

struct MethodAgreement {
  std::vector<PairedScore> pairs;  // sorted by (session_id, utterance_index)
  double pearson = 0.0;
  double spearman = 0.0;
};

/// Pairs utterances scored by both methods. Throws DataError with fewer than
/// three pairs or duplicate keys, DegenerateVariance when a method is
/// constant.
MethodAgreement method_agreement(std::span<const Observation> lda, std::span<const Observation> embed);

enum class RelationStatus { Ok, InsufficientSessions, DegenerateVariance };
std::string_view to_string(RelationStatus s) noexcept;

struct GroupRelation {
  std::string coherence_metric;  // label only, set by the caller
  Diagnosis group = Diagnosis::HC;
  std::size_t n_sessions = 0;
  RelationStatus status = RelationStatus::Ok;
  std::optional<OlsFit> fit;  // coherence regressed on surprisal
};

/// Per-group OLS of session coherence on session surprisal. Groups with fewer
/// than `min_sessions` joined sessions are reported with
/// InsufficientSessions; constant inputs with DegenerateVariance.
std::vector<GroupRelation> group_relation(std::span<const SessionValue> surprisal,
                                          std::span<const SessionValue> coherence, std::size_t min_sessions = 3);

struct TrendOptions {
  int window_halfwidth = 5;
  std::size_t min_support = 3;
  int center_min = 18;
  int center_max = 67;
};

struct TrendPoint {
  int bprs_center = 0;
  int window_lo = 0;
  int window_hi = 0;
  double mean = 0.0;
  std::size_t n_sessions = 0;
};

/// Sliding-window mean of session values against BPRS total, diagnosis
/// ignored. A point is emitted for each integer center with at least
/// min_support sessions inside [center - h, center + h]. Throws DataError
/// when no session has a BPRS total.
std::vector<TrendPoint> severity_trend(std::span<const SessionValue> values, const TrendOptions& options = {});

/// OLS of the point means on their centers.
OlsFit trend_fit(std::span<const TrendPoint> points);

// ---- plot-ready tables -------------------------------------------------

void write_group_means(std::ostream& out, std::span<const GroupMeans> tables);
void write_method_agreement(std::ostream& out, const MethodAgreement& agreement);
void write_agreement_summary(std::ostream& out, const MethodAgreement& agreement);
void write_group_relation(std::ostream& out, std::span<const GroupRelation> relations);
void write_severity_trend(std::ostream& out, std::span<const TrendPoint> points);

}  // namespace lexd
