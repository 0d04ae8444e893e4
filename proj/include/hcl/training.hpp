#pragma once

// Hybrid curriculum training loop and its ablation strategies.
//
// Every strategy is a sequence of phases. A phase trains on a fixed pool of
// training conversations for a fixed number of optimizer steps (one step =
// one conversation batch), with either one-hot targets or the decaying
// similarity targets. All strategies share the step budget of `hcl`:
//
//   sum over buckets s of epochs_per_step * |buckets 1..s|
//     + extra_epochs * |train|

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hcl/corpus.hpp"
#include "hcl/curriculum.hpp"
#include "hcl/emotion_wheel.hpp"
#include "hcl/error.hpp"
#include "hcl/eval.hpp"
#include "hcl/model.hpp"
#include "hcl/random.hpp"

namespace hcl {

enum class Strategy { random_baseline, cc_only, uc_only, hcl, ccf, ucf };

inline constexpr std::array<Strategy, 6> kAllStrategies{
    Strategy::random_baseline, Strategy::cc_only, Strategy::uc_only,
    Strategy::ccf,             Strategy::ucf,     Strategy::hcl};

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::random_baseline: return "random";
    case Strategy::cc_only: return "cc";
    case Strategy::uc_only: return "uc";
    case Strategy::hcl: return "hcl";
    case Strategy::ccf: return "ccf";
    case Strategy::ucf: return "ucf";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view s) {
  if (s == "random" || s == "random_baseline") return Strategy::random_baseline;
  if (s == "cc" || s == "cc_only") return Strategy::cc_only;
  if (s == "uc" || s == "uc_only") return Strategy::uc_only;
  if (s == "hcl") return Strategy::hcl;
  if (s == "ccf") return Strategy::ccf;
  if (s == "ucf") return Strategy::ucf;
  throw ConfigError("unknown strategy '" + std::string(s) + "'");
}

// Interval between target updates, in optimizer steps or in epochs of the
// current training pool.
struct DeltaT {
  enum class Unit { steps, epochs };
  std::size_t value = 1;
  Unit unit = Unit::epochs;

  std::size_t steps_for(std::size_t pool_size) const {
    return std::max<std::size_t>(1, unit == Unit::steps ? value : value * pool_size);
  }

  // "25" (steps) or "2e"/"2epoch" (epochs).
  static DeltaT parse(std::string_view s) {
    DeltaT d;
    std::size_t pos = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    if (pos == 0) throw ConfigError("delta-t must start with a positive integer");
    d.value = std::stoul(std::string(s.substr(0, pos)));
    const auto unit = s.substr(pos);
    if (unit.empty() || unit == "s" || unit == "steps")
      d.unit = Unit::steps;
    else if (unit == "e" || unit == "epoch" || unit == "epochs")
      d.unit = Unit::epochs;
    else
      throw ConfigError("unknown delta-t unit '" + std::string(unit) + "'");
    return d;
  }

  std::string str() const {
    return std::to_string(value) + (unit == Unit::steps ? "" : "epoch");
  }
};

struct TrainConfig {
  Strategy strategy = Strategy::hcl;
  std::size_t k = 5;
  std::size_t epochs_per_step = 2;
  std::size_t extra_epochs = 4;
  double epsilon = 0.75;
  DeltaT delta_t{};
  double lr = 0.05;
  std::uint64_t seed = 0;
  ShiftMode shift_mode = ShiftMode::any;
  bool esc_reset_per_step = true;
  std::size_t hidden = 32;
  std::size_t hash_dim = 64;

  void validate() const {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
    if (delta_t.value < 1) throw ConfigError("delta_t must be >= 1");
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be finite and >= 0");
    if (hidden < 1 || hash_dim < 1) throw ConfigError("hidden and hash_dim must be >= 1");
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"strategy", to_string(c.strategy)},
          {"k", c.k},
          {"epochs_per_step", c.epochs_per_step},
          {"extra_epochs", c.extra_epochs},
          {"epsilon", c.epsilon},
          {"delta_t", c.delta_t.str()},
          {"lr", c.lr},
          {"seed", c.seed},
          {"shift_mode", to_string(c.shift_mode)},
          {"esc_reset_per_step", c.esc_reset_per_step},
          {"hidden", c.hidden},
          {"hash_dim", c.hash_dim}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.strategy = parse_strategy(j.at("strategy").get<std::string>());
    c.k = j.at("k").get<std::size_t>();
    c.epochs_per_step = j.at("epochs_per_step").get<std::size_t>();
    c.extra_epochs = j.at("extra_epochs").get<std::size_t>();
    c.epsilon = j.at("epsilon").get<double>();
    c.delta_t = DeltaT::parse(j.at("delta_t").get<std::string>());
    c.lr = j.at("lr").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.shift_mode = parse_shift_mode(j.at("shift_mode").get<std::string>());
    c.esc_reset_per_step = j.at("esc_reset_per_step").get<bool>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.hash_dim = j.at("hash_dim").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

// The gold label's row of the current target matrix, or one-hot when the
// similarity curriculum is inactive.
inline std::vector<double> target_row_for(const std::vector<std::string>& labels,
                                          std::string_view gold, const EscState* esc) {
  const auto it = std::find(labels.begin(), labels.end(), gold);
  if (it == labels.end()) throw DataError("unknown gold label '" + std::string(gold) + "'");
  const auto g = static_cast<std::size_t>(it - labels.begin());
  if (!esc) {
    std::vector<double> row(labels.size(), 0.0);
    row[g] = 1.0;
    return row;
  }
  const auto r = esc->target.row(esc->target.index_of(gold));
  return {r.begin(), r.end()};
}

// ---------------------------------------------------------------------------
// Schedules

enum class TargetMode { one_hot, esc_new, esc_continue };

struct Phase {
  std::size_t babystep = 0;
  std::vector<std::size_t> pool;  // training split indices
  std::size_t steps = 0;
  TargetMode targets = TargetMode::one_hot;
};

inline std::size_t step_budget(const CurriculumPlan& plan, const TrainConfig& cfg,
                               std::size_t n_train) {
  std::size_t total = cfg.extra_epochs * n_train;
  for (std::size_t s = 0; s < plan.k(); ++s) total += cfg.epochs_per_step * plan.cumulative(s).size();
  return total;
}

// The phase sequence for `cfg.strategy`; pools refer to ds's training split.
inline std::vector<Phase> schedule(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t n = ds.split(Split::train).size();
  if (n == 0) throw DataError("training split is empty");
  const CurriculumPlan plan = build_plan(ds, cfg.k, cfg.shift_mode);
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  const std::size_t budget = step_budget(plan, cfg, n);
  const std::size_t extra = cfg.extra_epochs * n;

  auto baby_steps = [&](std::size_t first_index, bool esc) {
    std::vector<Phase> out;
    for (std::size_t s = 0; s < plan.k(); ++s) {
      auto pool = plan.cumulative(s);
      const std::size_t steps = cfg.epochs_per_step * pool.size();
      TargetMode mode = TargetMode::one_hot;
      if (esc) mode = (s == 0 || cfg.esc_reset_per_step) ? TargetMode::esc_new : TargetMode::esc_continue;
      out.push_back({first_index + s, std::move(pool), steps, mode});
    }
    return out;
  };

  std::vector<Phase> phases;
  switch (cfg.strategy) {
    case Strategy::random_baseline:
      phases.push_back({0, all, budget, TargetMode::one_hot});
      break;
    case Strategy::uc_only:
      phases.push_back({0, all, budget, TargetMode::esc_new});
      break;
    case Strategy::cc_only:
      phases = baby_steps(0, false);
      phases.push_back({plan.k(), all, extra, TargetMode::one_hot});
      break;
    case Strategy::hcl:
      phases = baby_steps(0, true);
      phases.push_back({plan.k(), all, extra, TargetMode::esc_continue});
      break;
    case Strategy::ccf:
      phases = baby_steps(0, false);
      phases.push_back({plan.k(), all, extra, TargetMode::esc_new});
      break;
    case Strategy::ucf: {
      phases.push_back({0, all, extra, TargetMode::esc_new});
      auto cc = baby_steps(1, false);
      phases.insert(phases.end(), cc.begin(), cc.end());
      break;
    }
  }
  return phases;
}

// ---------------------------------------------------------------------------
// Training

struct StepRecord {
  std::size_t step = 0;  // 1-based global optimizer step
  std::size_t babystep = 0;
  double loss = 0.0;          // mean per-utterance soft-target cross-entropy
  double offdiag_mass = 0.0;  // largest off-diagonal row mass of the targets
  double entropy = 0.0;       // label entropy (nats) of the current pool

  bool operator==(const StepRecord&) const = default;
};

struct PhaseRecord {
  std::size_t babystep = 0;
  std::vector<std::string> conversations;
  std::size_t steps = 0;
  std::string targets;

  bool operator==(const PhaseRecord&) const = default;
};

struct TrainLog {
  std::vector<PhaseRecord> phases;
  std::vector<StepRecord> steps;
  std::map<std::string, double> final_metrics;

  bool operator==(const TrainLog&) const = default;
};

struct TrainResult {
  ModelParams params;
  TrainLog log;
};

// Precomputed features and gold indices for one split.
struct FeaturizedSplit {
  std::vector<std::vector<FeatureVector>> features;  // [conversation][utterance]
  std::vector<std::vector<std::size_t>> gold;
};

inline FeaturizedSplit featurize_split(const Dataset& ds, Split split, std::size_t hash_dim) {
  FeaturizedSplit out;
  for (const auto& conv : ds.split(split)) {
    out.features.push_back(featurize(conv, hash_dim));
    std::vector<std::size_t> g;
    for (const auto& u : conv.utterances) {
      const auto idx = ds.label_index(u.label);
      if (!idx) throw DataError("label '" + u.label + "' not in label set");
      g.push_back(*idx);
    }
    out.gold.push_back(std::move(g));
  }
  return out;
}

inline std::size_t feature_dim(const Dataset& ds, std::size_t hash_dim) {
  for (Split s : kAllSplits)
    for (const auto& conv : ds.split(s))
      if (!conv.utterances.empty()) return featurize(conv.utterances.front(), nullptr, hash_dim).size();
  return 2 * hash_dim + 1;
}

// Predicted label names for every utterance of `split`, in order.
inline std::vector<std::string> predict_split(const ModelParams& params, const Dataset& ds,
                                              Split split, std::size_t hash_dim) {
  std::vector<std::string> out;
  for (const auto& conv : ds.split(split))
    for (const auto& x : featurize(conv, hash_dim)) out.push_back(ds.label_set.at(predict(params, x)));
  return out;
}

inline std::vector<std::string> gold_labels(const Dataset& ds, Split split) {
  std::vector<std::string> out;
  for (const auto& conv : ds.split(split))
    for (const auto& u : conv.utterances) out.push_back(u.label);
  return out;
}

inline std::string_view to_string(TargetMode m) {
  switch (m) {
    case TargetMode::one_hot: return "one_hot";
    case TargetMode::esc_new: return "esc_new";
    case TargetMode::esc_continue: return "esc_continue";
  }
  return "?";
}

inline TrainResult train(const Dataset& ds, const EmotionWheel& wheel, const TrainConfig& cfg) {
  cfg.validate();
  if (ds.label_set.empty()) throw DataError("empty label set");
  if (wheel.labels() != ds.label_set)
    throw DataError("wheel labels do not match the dataset label set");
  const auto phases = schedule(ds, cfg);
  const auto& train_convs = ds.split(Split::train);
  const FeaturizedSplit data = featurize_split(ds, Split::train, cfg.hash_dim);
  const std::size_t r = ds.label_set.size();

  Engine rng(cfg.seed);
  TrainResult res;
  res.params = init_params(feature_dim(ds, cfg.hash_dim), cfg.hidden, r, rng);

  const TargetMatrix one_hot = TargetMatrix::identity(ds.label_set);
  std::optional<EscState> esc;
  std::size_t global = 0;
  std::vector<Example> batch;

  for (const auto& phase : phases) {
    PhaseRecord pr{phase.babystep, {}, phase.steps, std::string(to_string(phase.targets))};
    for (auto i : phase.pool) pr.conversations.push_back(train_convs[i].id);
    res.log.phases.push_back(std::move(pr));
    if (phase.steps == 0) continue;

    if (phase.targets == TargetMode::esc_new || (phase.targets == TargetMode::esc_continue && !esc))
      esc = EscState::from_wheel(wheel, cfg.epsilon, 1);
    if (phase.targets == TargetMode::one_hot) esc.reset();
    if (esc) esc->delta_t = cfg.delta_t.steps_for(phase.pool.size());
    const double entropy = label_entropy(ds, phase.pool);

    std::vector<std::size_t> order = phase.pool;
    std::size_t taken = 0;
    while (taken < phase.steps) {
      shuffle(std::span<std::size_t>(order), rng);
      for (std::size_t idx : order) {
        if (taken == phase.steps) break;
        if (esc) esc_tick(*esc);
        const TargetMatrix& targets = esc ? esc->target : one_hot;
        batch.clear();
        for (std::size_t u = 0; u < data.features[idx].size(); ++u)
          batch.push_back({data.features[idx][u], targets.row(data.gold[idx][u])});
        auto lg = loss_and_grad(res.params, batch, Reduction::mean);
        sgd_step(res.params, lg.grads, cfg.lr);
        ++taken;
        ++global;
        res.log.steps.push_back(
            {global, phase.babystep, lg.loss, esc ? max_offdiag_mass(esc->target) : 0.0, entropy});
      }
    }
  }

  for (Split s : {Split::val, Split::test}) {
    if (ds.split(s).empty()) continue;
    const auto pred = predict_split(res.params, ds, s, cfg.hash_dim);
    const auto gold = gold_labels(ds, s);
    res.log.final_metrics[std::string(to_string(s)) + "_weighted_f1"] = weighted_f1(gold, pred);
    if (ds.neutral_label)
      res.log.final_metrics[std::string(to_string(s)) + "_micro_f1_excl_neutral"] =
          micro_f1_excluding(gold, pred, *ds.neutral_label).value;
  }
  return res;
}

// Line-delimited log: phase records, one record per optimizer step, then a
// final metrics record.
inline void write_train_log(const TrainLog& log, std::ostream& out) {
  for (const auto& p : log.phases)
    out << nlohmann::json{{"type", "phase"},
                          {"babystep", p.babystep},
                          {"steps", p.steps},
                          {"targets", p.targets},
                          {"conversations", p.conversations}}
               .dump()
        << '\n';
  for (const auto& s : log.steps)
    out << nlohmann::json{{"type", "step"},         {"step", s.step},
                          {"babystep", s.babystep}, {"loss", s.loss},
                          {"offdiag_mass", s.offdiag_mass}, {"entropy", s.entropy}}
               .dump()
        << '\n';
  out << nlohmann::json{{"type", "final"}, {"metrics", log.final_metrics}}.dump() << '\n';
}

inline TrainLog read_train_log(std::istream& in) {
  TrainLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "phase") {
        log.phases.push_back({j.at("babystep").get<std::size_t>(),
                              j.at("conversations").get<std::vector<std::string>>(),
                              j.at("steps").get<std::size_t>(), j.at("targets").get<std::string>()});
      } else if (type == "step") {
        log.steps.push_back({j.at("step").get<std::size_t>(), j.at("babystep").get<std::size_t>(),
                             j.at("loss").get<double>(), j.at("offdiag_mass").get<double>(),
                             j.at("entropy").get<double>()});
      } else if (type == "final") {
        log.final_metrics = j.at("metrics").get<std::map<std::string, double>>();
      } else {
        throw ParseError(lineno, "unknown log record '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return log;
}

}  // namespace hcl
