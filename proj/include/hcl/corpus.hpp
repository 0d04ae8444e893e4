#pragma once

// Conversation corpus: data model, line-delimited file format, validation
// and summary statistics.
//
// File format (UTF-8, one JSON object per line):
//   {"type":"header","name":"...","labels":["a","b",...],"neutral":"a"|null}
//   {"type":"utt","split":"train|val|test","conv":"c1","speaker":"A",
//    "text":"...","label":"a","features":[...], "id":"..."}
// The header comes first. Utterances of a conversation are contiguous and
// keep file order. "features" and "id" are optional.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "hcl/error.hpp"

namespace hcl {

enum class Split { train = 0, val = 1, test = 2 };

inline constexpr std::array<Split, 3> kAllSplits{Split::train, Split::val, Split::test};

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  return std::nullopt;
}

struct Utterance {
  std::string id;
  std::string speaker;
  std::string text;
  std::string label;
  std::optional<std::vector<double>> features;

  bool operator==(const Utterance&) const = default;
};

struct Conversation {
  std::string id;
  std::vector<Utterance> utterances;
  std::set<std::string> participants;

  // Builds a conversation whose participant set is the set of speakers.
  static Conversation from_utterances(std::string id, std::vector<Utterance> utts) {
    Conversation c{std::move(id), std::move(utts), {}};
    for (const auto& u : c.utterances) c.participants.insert(u.speaker);
    return c;
  }

  std::size_t size() const noexcept { return utterances.size(); }

  bool operator==(const Conversation&) const = default;
};

struct Dataset {
  std::string name;
  std::vector<std::string> label_set;
  std::optional<std::string> neutral_label;
  std::array<std::vector<Conversation>, 3> splits;

  std::vector<Conversation>& split(Split s) { return splits[static_cast<std::size_t>(s)]; }
  const std::vector<Conversation>& split(Split s) const {
    return splits[static_cast<std::size_t>(s)];
  }

  // Index of `label` in label_set, or nullopt.
  std::optional<std::size_t> label_index(std::string_view label) const {
    auto it = std::find(label_set.begin(), label_set.end(), label);
    if (it == label_set.end()) return std::nullopt;
    return static_cast<std::size_t>(it - label_set.begin());
  }

  bool operator==(const Dataset&) const = default;
};

// ---------------------------------------------------------------------------
// Parsing and serialization

namespace detail {

inline std::string require_string(const nlohmann::json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end()) throw ParseError(line, std::string("missing field '") + key + "'");
  if (!it->is_string()) throw ParseError(line, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace detail

// Reads a corpus stream. Throws ParseError on malformed records, unknown
// labels and duplicate (non-contiguous) conversation ids.
inline Dataset parse_dataset(std::istream& in) {
  Dataset ds;
  bool have_header = false;
  std::set<std::string> label_lookup;
  // Conversation ids already closed, per split.
  std::array<std::set<std::string>, 3> seen;
  std::array<std::size_t, 3> utt_counter{};

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!rec.is_object()) throw ParseError(lineno, "record is not an object");
    const std::string type = detail::require_string(rec, "type", lineno);

    if (type == "header") {
      if (have_header) throw ParseError(lineno, "duplicate header record");
      ds.name = detail::require_string(rec, "name", lineno);
      auto labels = rec.find("labels");
      if (labels == rec.end() || !labels->is_array() || labels->empty())
        throw ParseError(lineno, "header needs a nonempty 'labels' array");
      for (const auto& l : *labels) {
        if (!l.is_string()) throw ParseError(lineno, "labels must be strings");
        auto name = l.get<std::string>();
        if (!label_lookup.insert(name).second)
          throw ParseError(lineno, "duplicate label '" + name + "'");
        ds.label_set.push_back(std::move(name));
      }
      if (auto n = rec.find("neutral"); n != rec.end() && !n->is_null()) {
        if (!n->is_string()) throw ParseError(lineno, "'neutral' must be a string or null");
        auto neutral = n->get<std::string>();
        if (!label_lookup.contains(neutral))
          throw ParseError(lineno, "neutral label '" + neutral + "' is not in labels");
        ds.neutral_label = std::move(neutral);
      }
      have_header = true;
      continue;
    }

    if (type != "utt") throw ParseError(lineno, "unknown record type '" + type + "'");
    if (!have_header) throw ParseError(lineno, "utterance record before header");

    const auto split_name = detail::require_string(rec, "split", lineno);
    const auto split = parse_split(split_name);
    if (!split) throw ParseError(lineno, "unknown split '" + split_name + "'");
    const auto si = static_cast<std::size_t>(*split);

    Utterance u;
    const auto conv_id = detail::require_string(rec, "conv", lineno);
    u.speaker = detail::require_string(rec, "speaker", lineno);
    u.text = detail::require_string(rec, "text", lineno);
    u.label = detail::require_string(rec, "label", lineno);
    if (!label_lookup.contains(u.label))
      throw ParseError(lineno, "label '" + u.label + "' is not in the declared label set");
    if (auto f = rec.find("features"); f != rec.end() && !f->is_null()) {
      if (!f->is_array()) throw ParseError(lineno, "'features' must be an array");
      std::vector<double> values;
      values.reserve(f->size());
      for (const auto& v : *f) {
        if (!v.is_number()) throw ParseError(lineno, "'features' entries must be numbers");
        values.push_back(v.get<double>());
      }
      u.features = std::move(values);
    }

    auto& convs = ds.splits[si];
    if (convs.empty() || convs.back().id != conv_id) {
      if (!convs.empty()) seen[si].insert(convs.back().id);
      if (seen[si].contains(conv_id))
        throw ParseError(lineno, "duplicate conversation id '" + conv_id + "' in split " +
                                     split_name);
      convs.push_back(Conversation{conv_id, {}, {}});
      utt_counter[si] = 0;
    }
    if (auto id = rec.find("id"); id != rec.end() && !id->is_null()) {
      if (!id->is_string()) throw ParseError(lineno, "'id' must be a string");
      u.id = id->get<std::string>();
    } else {
      u.id = std::to_string(utt_counter[si]);
    }
    ++utt_counter[si];
    convs.back().participants.insert(u.speaker);
    convs.back().utterances.push_back(std::move(u));
  }
  if (!have_header) throw ParseError(lineno, "missing header record");
  return ds;
}

inline Dataset parse_dataset(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_dataset(in);
}

// Writes `ds` in the corpus format; parse_dataset(serialize) == ds.
inline void serialize_dataset(const Dataset& ds, std::ostream& out) {
  nlohmann::json header = {{"type", "header"}, {"name", ds.name}, {"labels", ds.label_set}};
  header["neutral"] = ds.neutral_label ? nlohmann::json(*ds.neutral_label) : nlohmann::json();
  out << header.dump() << '\n';
  for (Split s : kAllSplits) {
    for (const auto& conv : ds.split(s)) {
      for (const auto& u : conv.utterances) {
        nlohmann::json rec = {{"type", "utt"},     {"split", to_string(s)}, {"conv", conv.id},
                              {"id", u.id},        {"speaker", u.speaker},  {"text", u.text},
                              {"label", u.label}};
        if (u.features) rec["features"] = *u.features;
        out << rec.dump() << '\n';
      }
    }
  }
}

inline std::string serialize_dataset(const Dataset& ds) {
  std::ostringstream out;
  serialize_dataset(ds, out);
  return out.str();
}

// ---------------------------------------------------------------------------
// Validation

enum class Severity { warning, violation };

struct Issue {
  Severity severity;
  std::string location;  // "split/conv[/utt]"
  std::string message;

  bool operator==(const Issue&) const = default;
  auto operator<=>(const Issue&) const = default;
};

// Checks every data-model invariant. Violations and warnings are returned,
// never thrown; an empty result means the dataset is well formed.
inline std::vector<Issue> validate(const Dataset& ds) {
  std::vector<Issue> issues;
  const std::set<std::string> labels(ds.label_set.begin(), ds.label_set.end());
  if (labels.size() != ds.label_set.size())
    issues.push_back({Severity::violation, "header", "label set contains duplicates"});
  if (ds.neutral_label && !labels.contains(*ds.neutral_label))
    issues.push_back({Severity::violation, "header", "neutral label not in label set"});

  std::optional<std::size_t> feature_dim;
  for (Split s : kAllSplits) {
    std::set<std::string> ids;
    for (const auto& conv : ds.split(s)) {
      const std::string where = std::string(to_string(s)) + "/" + conv.id;
      if (!ids.insert(conv.id).second)
        issues.push_back({Severity::violation, where, "duplicate conversation id"});
      if (conv.utterances.empty()) {
        issues.push_back({Severity::violation, where, "conversation has no utterances"});
        continue;
      }
      std::set<std::string> speakers;
      for (const auto& u : conv.utterances) {
        const std::string uwhere = where + "/" + u.id;
        speakers.insert(u.speaker);
        if (!labels.contains(u.label))
          issues.push_back({Severity::violation, uwhere, "label '" + u.label + "' not in label set"});
        if (!conv.participants.contains(u.speaker))
          issues.push_back(
              {Severity::violation, uwhere, "speaker '" + u.speaker + "' not a participant"});
        if (u.text.empty() && !u.features)
          issues.push_back({Severity::violation, uwhere, "empty text without features"});
        if (u.features) {
          if (!feature_dim) feature_dim = u.features->size();
          if (u.features->size() != *feature_dim)
            issues.push_back({Severity::violation, uwhere, "feature dimension mismatch"});
          if (!std::all_of(u.features->begin(), u.features->end(),
                           [](double v) { return std::isfinite(v); }))
            issues.push_back({Severity::violation, uwhere, "non-finite feature value"});
        }
      }
      for (const auto& p : conv.participants)
        if (!speakers.contains(p))
          issues.push_back({Severity::violation, where, "participant '" + p + "' never speaks"});
      if (conv.participants.size() == 1)
        issues.push_back({Severity::warning, where, "single-speaker conversation"});
    }
  }
  return issues;
}

inline bool has_violations(const std::vector<Issue>& issues) {
  return std::any_of(issues.begin(), issues.end(),
                     [](const Issue& i) { return i.severity == Severity::violation; });
}

// ---------------------------------------------------------------------------
// Statistics

struct SplitStats {
  std::size_t conversations = 0;
  std::size_t utterances = 0;
  std::map<std::string, std::size_t> histogram;
};

struct DatasetStats {
  std::array<SplitStats, 3> splits;
  std::size_t classes = 0;
  double avg_utt = 0.0;

  const SplitStats& split(Split s) const { return splits[static_cast<std::size_t>(s)]; }
};

inline DatasetStats stats(const Dataset& ds) {
  DatasetStats st;
  st.classes = ds.label_set.size();
  std::size_t convs = 0, utts = 0;
  for (Split s : kAllSplits) {
    auto& ss = st.splits[static_cast<std::size_t>(s)];
    for (const auto& l : ds.label_set) ss.histogram[l] = 0;
    for (const auto& conv : ds.split(s)) {
      ++ss.conversations;
      ss.utterances += conv.size();
      for (const auto& u : conv.utterances) ++ss.histogram[u.label];
    }
    convs += ss.conversations;
    utts += ss.utterances;
  }
  if (convs == 0) throw DataError("dataset '" + ds.name + "' has no conversations");
  st.avg_utt = static_cast<double>(utts) / static_cast<double>(convs);
  return st;
}

inline nlohmann::json to_json(const DatasetStats& st) {
  nlohmann::json j;
  for (Split s : kAllSplits) {
    const auto& ss = st.split(s);
    j["splits"][std::string(to_string(s))] = {{"conversations", ss.conversations},
                                              {"utterances", ss.utterances},
                                              {"histogram", ss.histogram}};
  }
  j["classes"] = st.classes;
  j["avg_utt"] = st.avg_utt;
  return j;
}

// Aligned text table with the Table-1 columns.
inline void print_stats(const DatasetStats& st, std::ostream& out) {
  out << std::left << std::setw(8) << "split" << std::right << std::setw(14) << "conversations"
      << std::setw(12) << "utterances" << '\n';
  for (Split s : kAllSplits) {
    const auto& ss = st.split(s);
    out << std::left << std::setw(8) << to_string(s) << std::right << std::setw(14)
        << ss.conversations << std::setw(12) << ss.utterances << '\n';
  }
  out << "classes " << st.classes << '\n';
  out << "avg_utt " << std::fixed << std::setprecision(4) << st.avg_utt << '\n';
  out << std::defaultfloat;
  out << "histogram";
  for (Split s : kAllSplits) out << "  " << to_string(s);
  out << '\n';
  for (const auto& [label, _] : st.split(Split::train).histogram) {
    out << "  " << label;
    for (Split s : kAllSplits) {
      auto it = st.split(s).histogram.find(label);
      out << "  " << (it == st.split(s).histogram.end() ? 0 : it->second);
    }
    out << '\n';
  }
}

}  // namespace hcl
