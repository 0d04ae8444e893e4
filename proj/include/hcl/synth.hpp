#pragma once

// Synthetic ERC corpora with a controllable emotion-shift rate and label
// confusability.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hcl/corpus.hpp"
#include "hcl/emotion_wheel.hpp"
#include "hcl/error.hpp"
#include "hcl/random.hpp"

namespace hcl {

struct Range {
  std::size_t min = 1;
  std::size_t max = 1;
};

struct SynthConfig {
  std::string name = "synth";
  std::vector<std::string> labels{"neutral", "happy", "excited", "sad", "frustrated", "angry"};
  std::optional<std::string> neutral = "neutral";
  nlohmann::json wheel = default_wheel_config();
  std::array<std::size_t, 3> conversations{100, 20, 40};  // train, val, test
  Range utterances{6, 14};
  Range speakers{2, 2};
  double p_shift = 0.3;
  double confusability = 0.5;
  std::size_t vocab_per_label = 20;
  Range tokens{2, 6};
  std::uint64_t seed = 1;
  std::string id_prefix;
  // Pairs sharing a token pool; derived from the wheel when empty.
  std::vector<std::pair<std::string, std::string>> confusable_pairs;

  void validate() const {
    auto prob = [](double p, const char* what) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(what) + " must lie in [0, 1]");
    };
    prob(p_shift, "p_shift");
    prob(confusability, "confusability");
    auto range = [](Range r, const char* what) {
      if (r.min < 1 || r.min > r.max)
        throw ConfigError(std::string(what) + " range must satisfy 1 <= min <= max");
    };
    range(utterances, "utterances");
    range(speakers, "speakers");
    range(tokens, "tokens");
    if (labels.size() < 2) throw ConfigError("synth needs at least two labels");
    if (vocab_per_label < 1) throw ConfigError("vocab_per_label must be >= 1");
  }
};

// Disjoint label pairs taken greedily by decreasing wheel similarity, over
// non-neutral labels with positive similarity. Each label joins at most one
// pair.
inline std::vector<std::pair<std::string, std::string>> wheel_confusable_pairs(
    const EmotionWheel& wheel) {
  struct Cand {
    double sim;
    std::size_t i, j;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 0; i < wheel.size(); ++i)
    for (std::size_t j = i + 1; j < wheel.size(); ++j) {
      if (wheel.valence_sign(i) == 0 || wheel.valence_sign(j) == 0) continue;
      const double s = wheel.similarity(i, j);
      if (s > 0.0) cands.push_back({s, i, j});
    }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Cand& a, const Cand& b) { return a.sim > b.sim; });
  std::vector<bool> used(wheel.size(), false);
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& c : cands) {
    if (used[c.i] || used[c.j]) continue;
    used[c.i] = used[c.j] = true;
    out.emplace_back(wheel.labels()[c.i], wheel.labels()[c.j]);
  }
  return out;
}

namespace detail {

inline std::string conv_id(const std::string& prefix, Split s, std::size_t idx) {
  std::ostringstream os;
  os << prefix << to_string(s) << '-' << std::setw(4) << std::setfill('0') << idx;
  return os.str();
}

}  // namespace detail

inline Dataset generate(const SynthConfig& cfg) {
  cfg.validate();
  const EmotionWheel wheel = load_wheel(cfg.wheel, cfg.labels, cfg.neutral);
  const auto pairs =
      cfg.confusable_pairs.empty() ? wheel_confusable_pairs(wheel) : cfg.confusable_pairs;

  const std::size_t L = cfg.labels.size();
  const std::size_t V = cfg.vocab_per_label;
  // partner_pool[label] = index of the shared pool, if the label is paired.
  std::vector<std::optional<std::size_t>> pool(L);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto a = wheel.index_of(pairs[p].first), b = wheel.index_of(pairs[p].second);
    if (a == b || pool[a] || pool[b])
      throw ConfigError("confusable pairs must be disjoint pairs of distinct labels");
    pool[a] = pool[b] = p;
  }

  Dataset ds;
  ds.name = cfg.name;
  ds.label_set = cfg.labels;
  ds.neutral_label = cfg.neutral;

  for (Split split : kAllSplits) {
    const auto si = static_cast<std::uint64_t>(split);
    for (std::size_t c = 0; c < cfg.conversations[si]; ++c) {
      Engine rng(derive_seed(cfg.seed, (si << 40) | c));
      const auto n = static_cast<std::size_t>(
          uniform_int(rng, static_cast<long long>(cfg.utterances.min),
                      static_cast<long long>(cfg.utterances.max)));
      const auto n_sp = static_cast<std::size_t>(uniform_int(
          rng, static_cast<long long>(cfg.speakers.min), static_cast<long long>(cfg.speakers.max)));
      std::vector<Utterance> utts;
      utts.reserve(n);
      auto label = static_cast<std::size_t>(uniform_index(rng, L));
      for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && uniform01(rng) < cfg.p_shift) {
          const auto other = static_cast<std::size_t>(uniform_index(rng, L - 1));
          label = other < label ? other : other + 1;
        }
        const auto n_tok = static_cast<std::size_t>(uniform_int(
            rng, static_cast<long long>(cfg.tokens.min), static_cast<long long>(cfg.tokens.max)));
        std::string text;
        for (std::size_t t = 0; t < n_tok; ++t) {
          std::size_t base = label * V;
          if (pool[label] && uniform01(rng) < cfg.confusability) base = (L + *pool[label]) * V;
          const auto tok = base + static_cast<std::size_t>(uniform_index(rng, V));
          if (!text.empty()) text += ' ';
          text += 't' + std::to_string(tok);
        }
        utts.push_back(Utterance{std::to_string(i), "s" + std::to_string(i % n_sp),
                                 std::move(text), cfg.labels[label], std::nullopt});
      }
      ds.split(split).push_back(
          Conversation::from_utterances(detail::conv_id(cfg.id_prefix, split, c), std::move(utts)));
    }
  }
  return ds;
}

// Generates one batch per config and concatenates them split by split.
// Conversation ids carry the batch's shift probability ("p0.30-train-0007").
inline Dataset sweep_pshift(const std::vector<SynthConfig>& configs) {
  if (configs.empty()) throw ConfigError("sweep_pshift: no configs");
  if (configs.size() == 1) return generate(configs.front());
  Dataset out;
  for (std::size_t b = 0; b < configs.size(); ++b) {
    SynthConfig cfg = configs[b];
    std::ostringstream prefix;
    prefix << 'p' << std::fixed << std::setprecision(2) << cfg.p_shift << '-';
    cfg.id_prefix = prefix.str() + cfg.id_prefix;
    Dataset part = generate(cfg);
    if (b == 0) {
      out.name = part.name;
      out.label_set = part.label_set;
      out.neutral_label = part.neutral_label;
    } else if (part.label_set != out.label_set || part.neutral_label != out.neutral_label) {
      throw ConfigError("sweep_pshift: configs disagree on the label set");
    }
    for (Split s : kAllSplits) {
      auto& dst = out.split(s);
      for (auto& conv : part.split(s)) {
        if (std::any_of(dst.begin(), dst.end(),
                        [&](const Conversation& c) { return c.id == conv.id; }))
          throw ConfigError("sweep_pshift: duplicate conversation id '" + conv.id + "'");
        dst.push_back(std::move(conv));
      }
    }
  }
  return out;
}

// Reads a synth config document. "p_shift" may be a number or a list; a
// list yields one config per value with seeds seed, seed+1, ...
inline std::vector<SynthConfig> synth_configs_from_json(const nlohmann::json& j) {
  SynthConfig base;
  try {
    if (j.contains("name")) base.name = j.at("name").get<std::string>();
    if (j.contains("labels")) base.labels = j.at("labels").get<std::vector<std::string>>();
    if (j.contains("neutral")) {
      if (j.at("neutral").is_null())
        base.neutral.reset();
      else
        base.neutral = j.at("neutral").get<std::string>();
    }
    if (j.contains("wheel")) base.wheel = j.at("wheel");
    if (j.contains("conversations")) {
      const auto& c = j.at("conversations");
      base.conversations = {c.value("train", std::size_t{0}), c.value("val", std::size_t{0}),
                            c.value("test", std::size_t{0})};
    }
    auto range = [&](const char* key, Range& r) {
      if (!j.contains(key)) return;
      const auto v = j.at(key).get<std::vector<std::size_t>>();
      if (v.size() != 2) throw ConfigError(std::string(key) + " must be [min, max]");
      r = {v[0], v[1]};
    };
    range("utterances", base.utterances);
    range("speakers", base.speakers);
    range("tokens", base.tokens);
    if (j.contains("confusability")) base.confusability = j.at("confusability").get<double>();
    if (j.contains("vocab_per_label"))
      base.vocab_per_label = j.at("vocab_per_label").get<std::size_t>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("confusable_pairs"))
      for (const auto& p : j.at("confusable_pairs"))
        base.confusable_pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());

    std::vector<SynthConfig> out;
    const auto& ps = j.contains("p_shift") ? j.at("p_shift") : nlohmann::json(base.p_shift);
    if (ps.is_array()) {
      if (ps.empty()) throw ConfigError("p_shift list is empty");
      for (std::size_t i = 0; i < ps.size(); ++i) {
        SynthConfig c = base;
        c.p_shift = ps[i].get<double>();
        c.seed = base.seed + i;
        out.push_back(std::move(c));
      }
    } else {
      base.p_shift = ps.get<double>();
      out.push_back(base);
    }
    for (const auto& c : out) c.validate();
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
}

}  // namespace hcl
