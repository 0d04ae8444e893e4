#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "hcl/synth.hpp"
#include "hcl/training.hpp"

namespace {

using hcl::Split;
using hcl::Strategy;
using hcl::TrainConfig;

hcl::Dataset corpus() {
  std::vector<hcl::SynthConfig> cfgs;
  for (double p : {0.1, 0.5, 0.9}) {
    hcl::SynthConfig c;
    c.p_shift = p;
    c.conversations = {7, 2, 3};
    c.utterances = {3, 6};
    c.seed = static_cast<std::uint64_t>(100 * p);
    cfgs.push_back(c);
  }
  return hcl::sweep_pshift(cfgs);
}

hcl::EmotionWheel wheel_for(const hcl::Dataset& ds) {
  return hcl::load_wheel(hcl::default_wheel_config(), ds.label_set, ds.neutral_label);
}

TrainConfig small_config(Strategy s) {
  TrainConfig c;
  c.strategy = s;
  c.k = 3;
  c.epochs_per_step = 2;
  c.extra_epochs = 2;
  c.delta_t = hcl::DeltaT{4, hcl::DeltaT::Unit::steps};
  c.hidden = 8;
  c.hash_dim = 16;
  c.seed = 5;
  return c;
}

TEST(TargetRow, Fixtures) {
  const std::vector<std::string> abc{"a", "b", "c"};
  EXPECT_EQ(hcl::target_row_for(abc, "b", nullptr), (std::vector<double>{0, 1, 0}));
  EXPECT_THROW(hcl::target_row_for(abc, "z", nullptr), hcl::DataError);

  const std::vector<std::string> iemocap{"neutral", "happy", "excited", "sad", "frustrated", "angry"};
  const auto w = hcl::load_wheel(hcl::default_wheel_config(), iemocap, std::string("neutral"));
  auto esc = hcl::EscState::from_wheel(w, 0.75, 1);
  const auto row = hcl::target_row_for(iemocap, "neutral", &esc);
  EXPECT_NEAR(row[0], 6.0 / 11.0, 1e-12);
  for (std::size_t j = 1; j < 6; ++j) EXPECT_NEAR(row[j], 1.0 / 11.0, 1e-12);

  for (int u = 0; u < 40; ++u) esc = hcl::esc_update(esc);
  for (const auto& l : iemocap) {
    const auto r = hcl::target_row_for(iemocap, l, &esc);
    const auto expected = hcl::target_row_for(iemocap, l, nullptr);
    for (std::size_t j = 0; j < r.size(); ++j) EXPECT_NEAR(r[j], expected[j], 1e-3);
  }
}

TEST(DeltaT, Parse) {
  EXPECT_EQ(hcl::DeltaT::parse("25").unit, hcl::DeltaT::Unit::steps);
  EXPECT_EQ(hcl::DeltaT::parse("25").steps_for(100), 25u);
  EXPECT_EQ(hcl::DeltaT::parse("2epoch").steps_for(30), 60u);
  EXPECT_EQ(hcl::DeltaT::parse("1e").steps_for(7), 7u);
  EXPECT_THROW(hcl::DeltaT::parse("x"), hcl::ConfigError);
  EXPECT_THROW(hcl::DeltaT::parse("3weeks"), hcl::ConfigError);
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  const auto ds = corpus();
  auto cfg = small_config(Strategy::hcl);
  cfg.epochs_per_step = 0;
  cfg.extra_epochs = 0;
  const auto res = hcl::train(ds, wheel_for(ds), cfg);
  hcl::Engine rng(cfg.seed);
  const auto init = hcl::init_params(hcl::feature_dim(ds, cfg.hash_dim), cfg.hidden, 6, rng);
  EXPECT_EQ(res.params, init);
  EXPECT_TRUE(res.log.steps.empty());
}

TEST(Train, Deterministic) {
  const auto ds = corpus();
  for (auto s : hcl::kAllStrategies) {
    const auto a = hcl::train(ds, wheel_for(ds), small_config(s));
    const auto b = hcl::train(ds, wheel_for(ds), small_config(s));
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.log, b.log);
    std::ostringstream la, lb;
    hcl::write_train_log(a.log, la);
    hcl::write_train_log(b.log, lb);
    EXPECT_EQ(la.str(), lb.str());
  }
}

TEST(Train, StepBudgetParity) {
  const auto ds = corpus();
  const std::size_t n = ds.split(Split::train).size();  // 21, buckets of 7
  const std::size_t expected = 2 * (7 + 14 + 21) + 2 * n;
  for (auto s : hcl::kAllStrategies) {
    const auto res = hcl::train(ds, wheel_for(ds), small_config(s));
    EXPECT_EQ(res.log.steps.size(), expected) << to_string(s);
    for (std::size_t i = 0; i < res.log.steps.size(); ++i) {
      EXPECT_EQ(res.log.steps[i].step, i + 1);
      EXPECT_TRUE(std::isfinite(res.log.steps[i].loss));
    }
  }
}

TEST(Train, HclVisibleSetsFollowPlan) {
  const auto ds = corpus();
  const auto cfg = small_config(Strategy::hcl);
  const auto plan = hcl::build_plan(ds, cfg.k);
  const auto res = hcl::train(ds, wheel_for(ds), cfg);
  ASSERT_EQ(res.log.phases.size(), cfg.k + 1);
  for (std::size_t s = 0; s < cfg.k; ++s) {
    std::set<std::string> expected;
    for (auto idx : plan.cumulative(s)) expected.insert(ds.split(Split::train)[idx].id);
    const auto& got = res.log.phases[s].conversations;
    EXPECT_EQ(std::set<std::string>(got.begin(), got.end()), expected);
    EXPECT_EQ(res.log.phases[s].babystep, s);
  }
  EXPECT_EQ(res.log.phases.back().conversations.size(), ds.split(Split::train).size());
}

TEST(Train, OffdiagMassNonIncreasingWithinBabyStep) {
  const auto ds = corpus();
  for (auto s : {Strategy::hcl, Strategy::uc_only, Strategy::ccf, Strategy::ucf}) {
    const auto res = hcl::train(ds, wheel_for(ds), small_config(s));
    for (std::size_t i = 1; i < res.log.steps.size(); ++i) {
      const auto& prev = res.log.steps[i - 1];
      const auto& cur = res.log.steps[i];
      if (cur.babystep == prev.babystep) {
        EXPECT_LE(cur.offdiag_mass, prev.offdiag_mass);
      }
    }
  }
  // One-hot strategies never carry off-diagonal mass.
  for (auto s : {Strategy::random_baseline, Strategy::cc_only}) {
    const auto res = hcl::train(ds, wheel_for(ds), small_config(s));
    for (const auto& r : res.log.steps) EXPECT_EQ(r.offdiag_mass, 0.0);
  }
}

TEST(Train, HclResetsTargetsEachBabyStep) {
  const auto ds = corpus();
  auto cfg = small_config(Strategy::hcl);
  const auto res = hcl::train(ds, wheel_for(ds), cfg);
  // The first step of each bucket sees fresh similarity targets.
  double first_mass = -1;
  std::size_t last_babystep = 99;
  for (const auto& r : res.log.steps) {
    if (r.babystep != last_babystep && r.babystep < cfg.k) {
      if (first_mass < 0) first_mass = r.offdiag_mass;
      EXPECT_DOUBLE_EQ(r.offdiag_mass, first_mass);
    }
    last_babystep = r.babystep;
  }
  cfg.esc_reset_per_step = false;
  const auto cont = hcl::train(ds, wheel_for(ds), cfg);
  for (std::size_t i = 1; i < cont.log.steps.size(); ++i)
    EXPECT_LE(cont.log.steps[i].offdiag_mass, cont.log.steps[i - 1].offdiag_mass);
}

TEST(Schedule, PhaseShapes) {
  const auto ds = corpus();
  auto phases = hcl::schedule(ds, small_config(Strategy::ccf));
  ASSERT_EQ(phases.size(), 4u);
  EXPECT_EQ(phases[0].targets, hcl::TargetMode::one_hot);
  EXPECT_EQ(phases[3].targets, hcl::TargetMode::esc_new);
  phases = hcl::schedule(ds, small_config(Strategy::ucf));
  ASSERT_EQ(phases.size(), 4u);
  EXPECT_EQ(phases[0].targets, hcl::TargetMode::esc_new);
  EXPECT_EQ(phases[0].pool.size(), 21u);
  EXPECT_EQ(phases[1].pool.size(), 7u);
  phases = hcl::schedule(ds, small_config(Strategy::random_baseline));
  ASSERT_EQ(phases.size(), 1u);
}

TEST(Train, ConfigErrors) {
  const auto ds = corpus();
  auto cfg = small_config(Strategy::hcl);
  cfg.epsilon = 1.0;
  EXPECT_THROW(hcl::train(ds, wheel_for(ds), cfg), hcl::ConfigError);
  cfg = small_config(Strategy::hcl);
  cfg.k = 100;
  EXPECT_THROW(hcl::train(ds, wheel_for(ds), cfg), hcl::ConfigError);
  hcl::Dataset empty = ds;
  empty.split(Split::train).clear();
  EXPECT_THROW(hcl::train(empty, wheel_for(ds), small_config(Strategy::hcl)), hcl::DataError);
}

TEST(TrainLog, WriteReadRoundTrip) {
  const auto ds = corpus();
  const auto res = hcl::train(ds, wheel_for(ds), small_config(Strategy::hcl));
  std::stringstream ss;
  hcl::write_train_log(res.log, ss);
  EXPECT_EQ(hcl::read_train_log(ss), res.log);
  EXPECT_TRUE(res.log.final_metrics.contains("test_weighted_f1"));
}

TEST(TrainConfigJson, RoundTrip) {
  auto cfg = small_config(Strategy::ucf);
  cfg.shift_mode = hcl::ShiftMode::inter_speaker_only;
  const auto back = hcl::train_config_from_json(hcl::to_json(cfg));
  EXPECT_EQ(hcl::to_json(back), hcl::to_json(cfg));
}

}  // namespace
