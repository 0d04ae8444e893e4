#pragma once

// Conversation-level curriculum (emotion-shift difficulty, baby-step buckets)
// and the utterance-level emotion-similarity curriculum (target decay).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hcl/corpus.hpp"
#include "hcl/emotion_wheel.hpp"
#include "hcl/error.hpp"

namespace hcl {

// Which consecutive-label changes count as an emotion shift.
enum class ShiftMode { any, inter_speaker_only };

inline std::string_view to_string(ShiftMode m) {
  return m == ShiftMode::any ? "any" : "inter_speaker_only";
}

inline ShiftMode parse_shift_mode(std::string_view s) {
  if (s == "any") return ShiftMode::any;
  if (s == "inter_speaker_only") return ShiftMode::inter_speaker_only;
  throw ConfigError("unknown shift mode '" + std::string(s) + "'");
}

// True when utterance i (i >= 1) shifts emotion relative to utterance i-1.
inline bool is_shift(const Conversation& conv, std::size_t i, ShiftMode mode = ShiftMode::any) {
  const auto& cur = conv.utterances[i];
  const auto& prev = conv.utterances[i - 1];
  if (cur.label == prev.label) return false;
  return mode == ShiftMode::any || cur.speaker != prev.speaker;
}

inline std::size_t emotion_shift_count(const Conversation& conv,
                                       ShiftMode mode = ShiftMode::any) {
  std::size_t n = 0;
  for (std::size_t i = 1; i < conv.utterances.size(); ++i) n += is_shift(conv, i, mode);
  return n;
}

struct DifficultyScore {
  std::string conversation;
  double score = 0.0;
  std::size_t n_es = 0;  // emotion shifts
  std::size_t n_u = 0;   // utterances
  std::size_t n_sp = 0;  // speakers

  bool operator==(const DifficultyScore&) const = default;
};

// (shifts + speakers) / (utterances + speakers); speakers smooth the ratio
// away from zero.
inline double difficulty_ratio(std::size_t n_es, std::size_t n_u, std::size_t n_sp) {
  return static_cast<double>(n_es + n_sp) / static_cast<double>(n_u + n_sp);
}

inline DifficultyScore difficulty(const Conversation& conv, ShiftMode mode = ShiftMode::any) {
  if (conv.utterances.empty())
    throw DataError("difficulty: conversation '" + conv.id + "' is empty");
  DifficultyScore d;
  d.conversation = conv.id;
  d.n_es = emotion_shift_count(conv, mode);
  d.n_u = conv.utterances.size();
  std::set<std::string> speakers;
  for (const auto& u : conv.utterances) speakers.insert(u.speaker);
  d.n_sp = speakers.size();
  d.score = difficulty_ratio(d.n_es, d.n_u, d.n_sp);
  return d;
}

// Sorted training conversations split into k buckets (easy to hard).
// Buckets hold indices into the training split.
struct CurriculumPlan {
  std::vector<std::vector<std::size_t>> buckets;
  std::vector<DifficultyScore> scores;  // aligned with the training split

  std::size_t k() const noexcept { return buckets.size(); }

  // Training split indices visible after merging buckets [0, step].
  std::vector<std::size_t> cumulative(std::size_t step) const {
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s <= step && s < buckets.size(); ++s)
      out.insert(out.end(), buckets[s].begin(), buckets[s].end());
    return out;
  }
};

// Stable ascending sort of `scores`, then an equal-count split into k
// buckets; the first (n mod k) buckets take one extra element.
inline std::vector<std::vector<std::size_t>> bucketize(std::span<const double> scores,
                                                       std::size_t k) {
  const std::size_t n = scores.size();
  if (k < 1 || k > n)
    throw ConfigError("bucket count k=" + std::to_string(k) + " must be in [1, " +
                      std::to_string(n) + "]");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<std::vector<std::size_t>> buckets(k);
  const std::size_t base = n / k, extra = n % k;
  std::size_t pos = 0;
  for (std::size_t b = 0; b < k; ++b) {
    const std::size_t len = base + (b < extra ? 1 : 0);
    buckets[b].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                      order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return buckets;
}

inline std::vector<DifficultyScore> score_split(const Dataset& ds, Split split,
                                                ShiftMode mode = ShiftMode::any) {
  std::vector<DifficultyScore> out;
  out.reserve(ds.split(split).size());
  for (const auto& conv : ds.split(split)) out.push_back(difficulty(conv, mode));
  return out;
}

inline CurriculumPlan build_plan(const Dataset& ds, std::size_t k,
                                 ShiftMode mode = ShiftMode::any) {
  CurriculumPlan plan;
  plan.scores = score_split(ds, Split::train, mode);
  std::vector<double> values;
  values.reserve(plan.scores.size());
  for (const auto& s : plan.scores) values.push_back(s.score);
  plan.buckets = bucketize(values, k);
  return plan;
}

// Shannon entropy in nats of a count histogram; 0 log 0 = 0.
template <class Counts>
double entropy_nats(const Counts& counts) {
  double total = 0.0;
  for (const auto& c : counts) total += static_cast<double>(c);
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (const auto& c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return h;
}

inline double label_entropy(const Dataset& ds, std::span<const std::size_t> train_indices) {
  std::map<std::string, std::size_t> hist;
  for (std::size_t idx : train_indices)
    for (const auto& u : ds.split(Split::train)[idx].utterances) ++hist[u.label];
  std::vector<std::size_t> counts;
  for (const auto& [_, c] : hist) counts.push_back(c);
  return entropy_nats(counts);
}

// Label entropy of the cumulative training subset after each bucket merge.
inline std::vector<double> entropy_curve(const CurriculumPlan& plan, const Dataset& ds) {
  std::vector<double> out;
  for (std::size_t s = 0; s < plan.k(); ++s) out.push_back(label_entropy(ds, plan.cumulative(s)));
  return out;
}

// ---------------------------------------------------------------------------
// Emotion-similarity curriculum

struct EscState {
  TargetMatrix target;
  double epsilon = 0.75;
  std::size_t delta_t = 1;  // optimizer steps between updates
  std::size_t step = 0;     // optimizer steps taken since initialization

  // Initial state: row-normalized similarity matrix.
  static EscState from_wheel(const EmotionWheel& wheel, double epsilon, std::size_t delta_t) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
    if (delta_t < 1) throw ConfigError("delta_t must be >= 1");
    return EscState{normalize_rows(similarity_matrix(wheel)), epsilon, delta_t, 0};
  }
};

// Off-diagonal mass of row i.
inline double offdiag_mass(const TargetMatrix& m, std::size_t i) {
  double s = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j)
    if (j != i) s += m.at(i, j);
  return s;
}

inline double offdiag_mass(const EscState& state, std::string_view label) {
  return offdiag_mass(state.target, state.target.index_of(label));
}

inline double max_offdiag_mass(const TargetMatrix& m) {
  double best = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) best = std::max(best, offdiag_mass(m, i));
  return best;
}

// One decay step towards one-hot targets: the diagonal becomes 1/(1+eps*S)
// and off-diagonal entries eps*m/(1+eps*S), S being the row's off-diagonal
// mass; then each row is renormalized.
inline void esc_decay(TargetMatrix& m, double epsilon) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double s = offdiag_mass(m, i);
    const double denom = 1.0 + epsilon * s;
    auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j)
      row[j] = (j == i) ? 1.0 / denom : epsilon * row[j] / denom;
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    for (double& v : row) v /= sum;
  }
  ++m.step;
}

inline EscState esc_update(EscState state) {
  esc_decay(state.target, state.epsilon);
  return state;
}

// Advances the step counter and applies the decay when the counter hits a
// multiple of delta_t. Returns true if an update happened.
inline bool esc_tick(EscState& state) {
  ++state.step;
  if (state.step % state.delta_t != 0) return false;
  esc_decay(state.target, state.epsilon);
  return true;
}

}  // namespace hcl
