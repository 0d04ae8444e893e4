#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "hcl/curriculum.hpp"
#include "hcl/synth.hpp"

namespace {

using hcl::Split;
using hcl::SynthConfig;

SynthConfig small(double p_shift, std::uint64_t seed = 3) {
  SynthConfig c;
  c.p_shift = p_shift;
  c.seed = seed;
  c.conversations = {40, 10, 10};
  c.speakers = {2, 3};
  return c;
}

TEST(WheelPairs, IemocapDefault) {
  SynthConfig c;
  const auto w = hcl::load_wheel(c.wheel, c.labels, c.neutral);
  const auto pairs = hcl::wheel_confusable_pairs(w);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0], (std::pair<std::string, std::string>{"frustrated", "angry"}));
  EXPECT_EQ(pairs[1], (std::pair<std::string, std::string>{"happy", "excited"}));
}

TEST(Generate, NoShiftsGivesSmoothingFloor) {
  const auto ds = hcl::generate(small(0.0));
  for (auto s : hcl::kAllSplits)
    for (const auto& conv : ds.split(s)) {
      for (const auto& u : conv.utterances) EXPECT_EQ(u.label, conv.utterances[0].label);
      const auto d = hcl::difficulty(conv);
      EXPECT_EQ(d.n_es, 0u);
      EXPECT_EQ(d.score, static_cast<double>(d.n_sp) / static_cast<double>(d.n_u + d.n_sp));
    }
}

TEST(Generate, AlwaysShift) {
  const auto ds = hcl::generate(small(1.0));
  for (const auto& conv : ds.split(Split::train))
    EXPECT_EQ(hcl::emotion_shift_count(conv), conv.size() - 1);
}

TEST(Generate, ValidAndDeterministic) {
  const auto cfg = small(0.4, 17);
  const auto a = hcl::generate(cfg);
  EXPECT_FALSE(hcl::has_violations(hcl::validate(a)));
  EXPECT_EQ(hcl::serialize_dataset(a), hcl::serialize_dataset(hcl::generate(cfg)));
  auto other = cfg;
  other.seed = 18;
  EXPECT_NE(hcl::serialize_dataset(a), hcl::serialize_dataset(hcl::generate(other)));
}

TEST(Generate, SpeakersRoundRobin) {
  const auto ds = hcl::generate(small(0.5));
  for (const auto& conv : ds.split(Split::train)) {
    const std::size_t m = conv.participants.size();
    for (std::size_t i = 0; i < conv.size(); ++i)
      EXPECT_EQ(conv.utterances[i].speaker, "s" + std::to_string(i % m));
  }
}

TEST(Generate, UniformMarginalsAndShiftRate) {
  SynthConfig c;
  c.p_shift = 0.35;
  c.conversations = {1000, 0, 0};
  c.utterances = {10, 10};
  const auto ds = hcl::generate(c);
  std::map<std::string, double> counts;
  std::size_t total = 0, transitions = 0, shifts = 0;
  for (const auto& conv : ds.split(Split::train)) {
    for (const auto& u : conv.utterances) ++counts[u.label];
    total += conv.size();
    transitions += conv.size() - 1;
    shifts += hcl::emotion_shift_count(conv);
  }
  ASSERT_EQ(total, 10000u);
  for (const auto& l : c.labels)
    EXPECT_NEAR(counts[l] / static_cast<double>(total), 1.0 / 6.0, 0.03) << l;
  EXPECT_GE(transitions, 9000u);
  EXPECT_NEAR(static_cast<double>(shifts) / static_cast<double>(transitions), 0.35, 0.02);
}

TEST(Generate, ConfusablePairsShareTokens) {
  SynthConfig c = small(0.3);
  c.confusability = 1.0;
  c.vocab_per_label = 5;
  const auto ds = hcl::generate(c);
  std::map<std::string, std::set<std::string>> vocab;
  for (const auto& conv : ds.split(Split::train))
    for (const auto& u : conv.utterances) {
      std::istringstream in(u.text);
      std::string tok;
      while (in >> tok) vocab[u.label].insert(tok);
    }
  EXPECT_EQ(vocab["happy"], vocab["excited"]);
  EXPECT_EQ(vocab["angry"], vocab["frustrated"]);
  for (const auto& t : vocab["sad"]) EXPECT_FALSE(vocab["neutral"].contains(t));
  for (const auto& t : vocab["sad"]) EXPECT_FALSE(vocab["happy"].contains(t));
}

TEST(Generate, ConfigValidation) {
  auto c = small(1.5);
  EXPECT_THROW(hcl::generate(c), hcl::ConfigError);
  c = small(0.5);
  c.tokens = {3, 2};
  EXPECT_THROW(hcl::generate(c), hcl::ConfigError);
  c = small(0.5);
  c.confusable_pairs = {{"happy", "excited"}, {"excited", "sad"}};
  EXPECT_THROW(hcl::generate(c), hcl::ConfigError);
}

TEST(Sweep, DifficultyIncreasesWithShiftRate) {
  std::vector<SynthConfig> cfgs;
  for (double p : {0.1, 0.5, 0.9}) cfgs.push_back(small(p, static_cast<std::uint64_t>(p * 10)));
  const auto ds = hcl::sweep_pshift(cfgs);
  EXPECT_EQ(ds.split(Split::train).size(), 120u);
  std::map<std::string, std::pair<double, int>> by_batch;
  for (const auto& conv : ds.split(Split::train)) {
    auto& [sum, n] = by_batch[conv.id.substr(0, 5)];
    sum += hcl::difficulty(conv).score;
    ++n;
  }
  ASSERT_EQ(by_batch.size(), 3u);
  const double m1 = by_batch["p0.10"].first / by_batch["p0.10"].second;
  const double m5 = by_batch["p0.50"].first / by_batch["p0.50"].second;
  const double m9 = by_batch["p0.90"].first / by_batch["p0.90"].second;
  EXPECT_LT(m1, m5);
  EXPECT_LT(m5, m9);
  EXPECT_FALSE(hcl::has_violations(hcl::validate(ds)));
}

TEST(Sweep, SingleAndEmpty) {
  const auto c = small(0.3);
  EXPECT_EQ(hcl::sweep_pshift({c}), hcl::generate(c));
  EXPECT_THROW(hcl::sweep_pshift({}), hcl::ConfigError);
}

TEST(SynthConfigJson, ParsesSweep) {
  const auto j = nlohmann::json::parse(R"({
    "labels": ["neutral","happy","excited","sad"], "neutral": "neutral",
    "conversations": {"train": 5, "val": 1, "test": 2},
    "utterances": [3, 4], "tokens": [1, 2], "p_shift": [0.1, 0.9], "seed": 9})");
  const auto cfgs = hcl::synth_configs_from_json(j);
  ASSERT_EQ(cfgs.size(), 2u);
  EXPECT_EQ(cfgs[1].seed, 10u);
  EXPECT_EQ(cfgs[0].conversations[2], 2u);
  EXPECT_EQ(cfgs[1].p_shift, 0.9);
  EXPECT_THROW(hcl::synth_configs_from_json(nlohmann::json::parse(R"({"p_shift": []})")),
               hcl::ConfigError);
}

}  // namespace
