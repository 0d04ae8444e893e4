#pragma once

// Emotion labels as points on the valence-arousal unit circle, pairwise
// label similarity, and the row-stochastic target matrix derived from it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hcl/error.hpp"

namespace hcl {

// Dense square matrix indexed by an ordered label list.
struct LabelMatrix {
  std::vector<std::string> labels;
  std::vector<double> values;  // row-major, labels.size()^2

  LabelMatrix() = default;
  explicit LabelMatrix(std::vector<std::string> l)
      : labels(std::move(l)), values(labels.size() * labels.size(), 0.0) {}

  std::size_t size() const noexcept { return labels.size(); }
  double& at(std::size_t i, std::size_t j) { return values[i * size() + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * size() + j]; }

  std::span<double> row(std::size_t i) { return {values.data() + i * size(), size()}; }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * size(), size()};
  }

  std::size_t index_of(std::string_view label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw DataError("unknown label '" + std::string(label) + "'");
    return static_cast<std::size_t>(it - labels.begin());
  }

  bool operator==(const LabelMatrix&) const = default;
};

// Pairwise label similarities; symmetric, entries in [0, 1].
struct SimilarityMatrix : LabelMatrix {
  using LabelMatrix::LabelMatrix;
};

// Row-stochastic training targets. Row i is the target distribution for an
// utterance whose gold label is labels[i].
struct TargetMatrix : LabelMatrix {
  using LabelMatrix::LabelMatrix;
  std::size_t step = 0;  // number of decay updates applied

  static TargetMatrix identity(std::vector<std::string> labels) {
    TargetMatrix m(std::move(labels));
    for (std::size_t i = 0; i < m.size(); ++i) m.at(i, i) = 1.0;
    return m;
  }
};

class EmotionWheel {
 public:
  EmotionWheel() = default;

  // angles[i] is empty exactly for the neutral label.
  EmotionWheel(std::vector<std::string> labels, std::vector<std::optional<double>> angles)
      : labels_(std::move(labels)), angles_(std::move(angles)) {
    if (labels_.size() != angles_.size()) throw DataError("wheel: labels/angles size mismatch");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (!angles_[i]) {
        if (neutral_) throw DataError("wheel: more than one label without an angle");
        neutral_ = i;
        continue;
      }
      double deg = std::fmod(*angles_[i], 360.0);
      if (deg < 0) deg += 360.0;
      if (deg == 90.0 || deg == 270.0)
        throw DataError("wheel: label '" + labels_[i] + "' has zero valence (angle " +
                        std::to_string(*angles_[i]) + ")");
      angles_[i] = deg;
    }
  }

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::optional<std::size_t> neutral_index() const noexcept { return neutral_; }
  std::optional<double> angle(std::size_t i) const { return angles_.at(i); }

  std::size_t index_of(std::string_view label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw DataError("unknown label '" + std::string(label) + "'");
    return static_cast<std::size_t>(it - labels_.begin());
  }

  // +1, -1, or 0 (neutral). Decided from the angle, never from cos().
  int valence_sign(std::size_t i) const {
    if (!angles_.at(i)) return 0;
    const double deg = *angles_[i];
    return (deg < 90.0 || deg > 270.0) ? 1 : -1;
  }

  double similarity(std::size_t i, std::size_t j) const {
    const int vi = valence_sign(i), vj = valence_sign(j);
    if (vi == 0 || vj == 0) {
      // Neutral against itself keeps a unit diagonal.
      if (i == j) return 1.0;
      return 1.0 / static_cast<double>(size());
    }
    if (vi * vj < 0) return 0.0;
    if (i == j) return 1.0;
    const double diff = (*angles_[i] - *angles_[j]) * std::numbers::pi / 180.0;
    return std::max(std::cos(diff), 0.0);
  }

  double similarity(std::string_view a, std::string_view b) const {
    return similarity(index_of(a), index_of(b));
  }

 private:
  std::vector<std::string> labels_;
  std::vector<std::optional<double>> angles_;
  std::optional<std::size_t> neutral_;
};

// Default wheel config. Angles in degrees, valence axis at 0.
inline nlohmann::json default_wheel_config() {
  return nlohmann::json{
      {"neutral", "neutral"},
      {"happy", 20},      {"joy", 20},         {"joyful", 20},   {"happiness", 20},
      {"excited", 50},    {"powerful", 65},    {"surprise", 85}, {"peaceful", 340},
      {"scared", 115},    {"fear", 115},       {"mad", 135},     {"angry", 135},
      {"anger", 135},     {"frustrated", 150}, {"disgust", 165}, {"sad", 200},
      {"sadness", 200},
  };
}

// Builds the wheel for `label_set` from a config mapping label -> angle plus
// an optional "neutral" key naming the neutral label. `neutral_label`, when
// given, takes precedence over the config's key.
inline EmotionWheel load_wheel(const nlohmann::json& config,
                               const std::vector<std::string>& label_set,
                               std::optional<std::string> neutral_label) {
  if (!config.is_object()) throw DataError("wheel config must be an object");
  if (!neutral_label) {
    if (auto n = config.find("neutral"); n != config.end() && n->is_string()) {
      const auto name = n->get<std::string>();
      if (std::find(label_set.begin(), label_set.end(), name) != label_set.end())
        neutral_label = name;
    }
  }
  std::vector<std::optional<double>> angles;
  angles.reserve(label_set.size());
  for (const auto& label : label_set) {
    auto it = config.find(label);
    if (neutral_label && label == *neutral_label) {
      if (it != config.end() && it->is_number())
        throw DataError("wheel: neutral label '" + label + "' must not have an angle");
      angles.emplace_back(std::nullopt);
      continue;
    }
    if (it == config.end()) throw DataError("wheel: no angle for label '" + label + "'");
    if (!it->is_number()) throw DataError("wheel: angle for '" + label + "' is not a number");
    angles.emplace_back(it->get<double>());
  }
  return EmotionWheel(label_set, std::move(angles));
}

inline SimilarityMatrix similarity_matrix(const EmotionWheel& wheel) {
  SimilarityMatrix m(wheel.labels());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) m.at(i, j) = wheel.similarity(i, j);
  return m;
}

// Divides each row by its sum. Throws on a row without positive mass.
inline TargetMatrix normalize_rows(const LabelMatrix& m) {
  TargetMatrix t(m.labels);
  for (std::size_t i = 0; i < m.size(); ++i) {
    double sum = 0.0;
    for (double v : m.row(i)) {
      if (v < 0.0 || !std::isfinite(v)) throw DataError("normalize_rows: invalid entry");
      sum += v;
    }
    if (!(sum > 0.0)) throw DataError("normalize_rows: row '" + m.labels[i] + "' sums to zero");
    for (std::size_t j = 0; j < m.size(); ++j) t.at(i, j) = m.at(i, j) / sum;
  }
  return t;
}

// Non-neutral labels with positive similarity to some other non-neutral label.
inline std::vector<std::string> confusing_labels(const EmotionWheel& wheel) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < wheel.size(); ++i) {
    if (wheel.valence_sign(i) == 0) continue;
    for (std::size_t j = 0; j < wheel.size(); ++j) {
      if (i == j || wheel.valence_sign(j) == 0) continue;
      if (wheel.similarity(i, j) > 0.0) {
        out.push_back(wheel.labels()[i]);
        break;
      }
    }
  }
  return out;
}

}  // namespace hcl
