#pragma once

// ERC metrics: weighted-F1, micro-F1 with an excluded class, emotion-shift
// partitions and per-label / label-group reports.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hcl/corpus.hpp"
#include "hcl/curriculum.hpp"
#include "hcl/error.hpp"

namespace hcl {

struct LabelScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;    // gold occurrences
  std::size_t predicted = 0;  // predicted occurrences
};

namespace detail {

template <class Label>
void check_lengths(const std::vector<Label>& gold, const std::vector<Label>& pred) {
  if (gold.size() != pred.size())
    throw DataError("metric: gold has " + std::to_string(gold.size()) + " items, pred has " +
                    std::to_string(pred.size()));
}

inline double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

inline double f1_from(double p, double r) { return safe_div(2.0 * p * r, p + r); }

}  // namespace detail

// Precision/recall/F1 for every label seen in gold or pred. Zero
// denominators give 0.
template <class Label>
std::map<Label, LabelScore> per_label_scores(const std::vector<Label>& gold,
                                             const std::vector<Label>& pred) {
  detail::check_lengths(gold, pred);
  std::map<Label, LabelScore> out;
  std::map<Label, std::size_t> tp;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++out[gold[i]].support;
    ++out[pred[i]].predicted;
    if (gold[i] == pred[i]) ++tp[gold[i]];
  }
  for (auto& [label, s] : out) {
    const double hits = static_cast<double>(tp[label]);
    s.precision = detail::safe_div(hits, static_cast<double>(s.predicted));
    s.recall = detail::safe_div(hits, static_cast<double>(s.support));
    s.f1 = detail::f1_from(s.precision, s.recall);
  }
  return out;
}

// Sum over labels of support share times F1.
template <class Label>
double weighted_f1(const std::vector<Label>& gold, const std::vector<Label>& pred) {
  detail::check_lengths(gold, pred);
  if (gold.empty()) throw DataError("weighted_f1: empty input");
  double total = 0.0;
  for (const auto& [_, s] : per_label_scores(gold, pred))
    total += static_cast<double>(s.support) * s.f1;
  return total / static_cast<double>(gold.size());
}

struct MicroF1 {
  double value = 0.0;
  bool undefined = false;  // no gold item outside the excluded class
};

// Micro-averaged F1 with TP/FP/FN pooled over every label except `excluded`.
template <class Label>
MicroF1 micro_f1_excluding(const std::vector<Label>& gold, const std::vector<Label>& pred,
                           const Label& excluded) {
  detail::check_lengths(gold, pred);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool g_in = !(gold[i] == excluded);
    const bool p_in = !(pred[i] == excluded);
    if (g_in && p_in && gold[i] == pred[i]) {
      ++tp;
      continue;
    }
    if (p_in) ++fp;
    if (g_in) ++fn;
  }
  if (tp + fn == 0) return {0.0, true};
  const double p = detail::safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
  const double r = detail::safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
  return {detail::f1_from(p, r), false};
}

// Support-weighted F1 over the members of `group`, using per-label F1
// computed on the full prediction set.
template <class Label>
double group_weighted_f1(const std::vector<Label>& gold, const std::vector<Label>& pred,
                         const std::set<Label>& group) {
  const auto scores = per_label_scores(gold, pred);
  double num = 0.0, den = 0.0;
  for (const auto& label : group) {
    auto it = scores.find(label);
    if (it == scores.end()) continue;
    num += static_cast<double>(it->second.support) * it->second.f1;
    den += static_cast<double>(it->second.support);
  }
  return detail::safe_div(num, den);
}

// ---------------------------------------------------------------------------
// Emotion-shift partition

// One flag per utterance in conversation order: true when the label differs
// from the previous utterance of the same conversation. First utterances
// are never shifts.
inline std::vector<bool> es_flags(const std::vector<Conversation>& convs,
                                  ShiftMode mode = ShiftMode::any) {
  std::vector<bool> flags;
  for (const auto& conv : convs)
    for (std::size_t i = 0; i < conv.size(); ++i) flags.push_back(i > 0 && is_shift(conv, i, mode));
  return flags;
}

struct EsPartition {
  std::vector<std::size_t> es;      // flat utterance positions
  std::vector<std::size_t> non_es;
};

inline EsPartition es_partition(const std::vector<Conversation>& convs,
                                ShiftMode mode = ShiftMode::any) {
  EsPartition out;
  const auto flags = es_flags(convs, mode);
  for (std::size_t i = 0; i < flags.size(); ++i) (flags[i] ? out.es : out.non_es).push_back(i);
  return out;
}

// ---------------------------------------------------------------------------
// Reports

enum class Metric { weighted_f1, micro_f1_excluding };

struct MetricValue {
  std::string name;
  double value = 0.0;
  bool undefined = false;
};

struct PartScore {
  double score = 0.0;
  double share = 0.0;
  std::size_t count = 0;
};

struct EvalReport {
  MetricValue overall;
  std::map<std::string, PartScore> per_label;  // score = F1, share = support share
  PartScore es, non_es;
  std::map<std::string, double> groups;
};

struct ReportOptions {
  Metric metric = Metric::weighted_f1;
  std::string excluded;  // for micro_f1_excluding
  std::map<std::string, std::set<std::string>> groups;
};

inline MetricValue compute_metric(const std::vector<std::string>& gold,
                                  const std::vector<std::string>& pred, const ReportOptions& opt) {
  if (opt.metric == Metric::weighted_f1) {
    if (gold.empty()) return {"weighted-F1", 0.0, true};
    return {"weighted-F1", weighted_f1(gold, pred), false};
  }
  const auto m = micro_f1_excluding(gold, pred, opt.excluded);
  return {"micro-F1 excl. " + opt.excluded, m.value, m.undefined};
}

// `label_set` lists every known label; `flags` marks emotion-shift
// utterances, aligned with gold/pred.
inline EvalReport report(const std::vector<std::string>& gold, const std::vector<std::string>& pred,
                         const std::vector<std::string>& label_set, const std::vector<bool>& flags,
                         const ReportOptions& opt = {}) {
  detail::check_lengths(gold, pred);
  if (flags.size() != gold.size()) throw DataError("report: shift flags misaligned with labels");
  if (gold.empty()) throw DataError("report: empty input");
  const std::set<std::string> known(label_set.begin(), label_set.end());
  for (const auto& [name, members] : opt.groups)
    for (const auto& l : members)
      if (!known.contains(l))
        throw DataError("report: group '" + name + "' names unknown label '" + l + "'");

  EvalReport rep;
  rep.overall = compute_metric(gold, pred, opt);

  const auto scores = per_label_scores(gold, pred);
  const double n = static_cast<double>(gold.size());
  for (const auto& l : label_set) {
    auto it = scores.find(l);
    PartScore ps;
    if (it != scores.end()) {
      ps.score = it->second.f1;
      ps.count = it->second.support;
      ps.share = static_cast<double>(ps.count) / n;
    }
    rep.per_label[l] = ps;
  }

  std::vector<std::string> g_es, p_es, g_n, p_n;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    (flags[i] ? g_es : g_n).push_back(gold[i]);
    (flags[i] ? p_es : p_n).push_back(pred[i]);
  }
  auto part = [&](const std::vector<std::string>& g, const std::vector<std::string>& p) {
    PartScore ps;
    ps.count = g.size();
    ps.share = static_cast<double>(g.size()) / n;
    if (!g.empty()) ps.score = compute_metric(g, p, opt).value;
    return ps;
  };
  rep.es = part(g_es, p_es);
  rep.non_es = part(g_n, p_n);

  for (const auto& [name, members] : opt.groups)
    rep.groups[name] = group_weighted_f1(gold, pred, members);
  return rep;
}

// IEMOCAP groupings: confusing labels and the rest.
inline std::map<std::string, std::set<std::string>> hesf_groups() {
  return {{"HESF", {"happy", "excited", "sad", "frustrated"}}, {"NA", {"neutral", "angry"}}};
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["overall"] = {{"metric", r.overall.name}, {"value", r.overall.value},
                  {"undefined", r.overall.undefined}};
  for (const auto& [l, s] : r.per_label)
    j["per_label"][l] = {{"f1", s.score}, {"share", s.share}, {"support", s.count}};
  j["partitions"]["ES"] = {{"score", r.es.score}, {"share", r.es.share}, {"count", r.es.count}};
  j["partitions"]["N-ES"] = {
      {"score", r.non_es.score}, {"share", r.non_es.share}, {"count", r.non_es.count}};
  j["groups"] = nlohmann::json::object();
  for (const auto& [g, v] : r.groups) j["groups"][g] = v;
  return j;
}

}  // namespace hcl
