#include <gtest/gtest.h>

#include <map>
#include <string>
#include <vector>

#include "hcl/eval.hpp"
#include "hcl/random.hpp"

namespace {

using Labels = std::vector<std::string>;

// Independent oracle: explicit r x r confusion matrix over label indices.
struct Confusion {
  std::vector<std::vector<double>> m;  // m[gold][pred]
  explicit Confusion(std::size_t r) : m(r, std::vector<double>(r, 0.0)) {}
  double tp(std::size_t l) const { return m[l][l]; }
  double row(std::size_t l) const {
    double s = 0;
    for (double v : m[l]) s += v;
    return s;
  }
  double col(std::size_t l) const {
    double s = 0;
    for (const auto& r : m) s += r[l];
    return s;
  }
};

Confusion confusion(const std::vector<std::size_t>& g, const std::vector<std::size_t>& p,
                    std::size_t r) {
  Confusion c(r);
  for (std::size_t i = 0; i < g.size(); ++i) c.m[g[i]][p[i]] += 1;
  return c;
}

double oracle_weighted_f1(const Confusion& c) {
  double total = 0, acc = 0;
  for (std::size_t l = 0; l < c.m.size(); ++l) {
    const double prec = c.col(l) > 0 ? c.tp(l) / c.col(l) : 0.0;
    const double rec = c.row(l) > 0 ? c.tp(l) / c.row(l) : 0.0;
    const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    acc += c.row(l) * f1;
    total += c.row(l);
  }
  return acc / total;
}

double oracle_micro_excluding(const Confusion& c, std::size_t excluded) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t l = 0; l < c.m.size(); ++l) {
    if (l == excluded) continue;
    tp += c.tp(l);
    fp += c.col(l) - c.tp(l);
    fn += c.row(l) - c.tp(l);
  }
  return 2 * tp + fp + fn > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
}

TEST(WeightedF1, Fixtures) {
  EXPECT_EQ(hcl::weighted_f1(Labels{"a", "b", "c"}, Labels{"a", "b", "c"}), 1.0);
  EXPECT_NEAR(hcl::weighted_f1(Labels{"a", "a", "b"}, Labels{"a", "b", "b"}), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(hcl::weighted_f1(Labels{"a"}, Labels{"a", "b"}), hcl::DataError);
}

TEST(WeightedF1, AllOneClassAgainstUniformGold) {
  const Labels gold{"a", "b", "c", "a", "b", "c"};
  const Labels pred(6, "b");
  const auto c = confusion({0, 1, 2, 0, 1, 2}, {1, 1, 1, 1, 1, 1}, 3);
  // b: P = 1/3, R = 1, F1 = 0.5, share 1/3.
  EXPECT_NEAR(hcl::weighted_f1(gold, pred), oracle_weighted_f1(c), 1e-15);
  EXPECT_NEAR(hcl::weighted_f1(gold, pred), 1.0 / 6.0, 1e-15);
}

TEST(MicroF1Excluding, Fixtures) {
  const auto perfect = hcl::micro_f1_excluding(Labels{"a", "b"}, Labels{"a", "b"}, std::string("n"));
  EXPECT_EQ(perfect.value, 1.0);
  EXPECT_FALSE(perfect.undefined);

  const auto degenerate =
      hcl::micro_f1_excluding(Labels{"n", "n"}, Labels{"n", "n"}, std::string("n"));
  EXPECT_EQ(degenerate.value, 0.0);
  EXPECT_TRUE(degenerate.undefined);

  // TP = 2, FP = 2, FN = 2 pooled by hand.
  const Labels gold{"n", "a", "b", "a", "n", "b"};
  const Labels pred{"a", "a", "n", "b", "n", "b"};
  const auto m = hcl::micro_f1_excluding(gold, pred, std::string("n"));
  EXPECT_NEAR(m.value, 0.5, 1e-15);
  EXPECT_NEAR(m.value, oracle_micro_excluding(confusion({0, 1, 2, 1, 0, 2}, {1, 1, 0, 2, 0, 2}, 3), 0),
              1e-15);
}

class RandomInstances : public ::testing::Test {
 protected:
  template <class F>
  void for_each_instance(F&& f) {
    hcl::Engine rng(2024);
    for (int t = 0; t < 200; ++t) {
      const auto n = static_cast<std::size_t>(hcl::uniform_int(rng, 1, 20));
      const auto r = static_cast<std::size_t>(hcl::uniform_int(rng, 1, 5));
      std::vector<std::size_t> g(n), p(n);
      for (auto& v : g) v = hcl::uniform_index(rng, r);
      for (auto& v : p) v = hcl::uniform01(rng) < 0.4 ? g[&v - p.data()] : hcl::uniform_index(rng, r);
      f(g, p, r);
    }
  }
  static Labels names(const std::vector<std::size_t>& idx, const std::vector<std::string>& alpha) {
    Labels out;
    for (auto i : idx) out.push_back(alpha[i]);
    return out;
  }
};

TEST_F(RandomInstances, MatchOracle) {
  const std::vector<std::string> alpha{"n", "a", "b", "c", "d"};
  for_each_instance([&](const auto& g, const auto& p, std::size_t r) {
    const auto c = confusion(g, p, r);
    const auto wf = hcl::weighted_f1(names(g, alpha), names(p, alpha));
    EXPECT_NEAR(wf, oracle_weighted_f1(c), 1e-12);
    EXPECT_GE(wf, 0.0);
    EXPECT_LE(wf, 1.0);
    const auto mf = hcl::micro_f1_excluding(names(g, alpha), names(p, alpha), std::string("n"));
    EXPECT_NEAR(mf.value, oracle_micro_excluding(c, 0), 1e-12);
    EXPECT_GE(mf.value, 0.0);
    EXPECT_LE(mf.value, 1.0);
    // Works on any label type.
    EXPECT_NEAR(hcl::weighted_f1(g, p), wf, 1e-15);
  });
}

TEST_F(RandomInstances, RelabelingInvariance) {
  const std::vector<std::string> alpha{"n", "a", "b", "c", "d"};
  const std::vector<std::string> permuted{"d", "n", "c", "a", "b"};
  for_each_instance([&](const auto& g, const auto& p, std::size_t) {
    EXPECT_NEAR(hcl::weighted_f1(names(g, alpha), names(p, alpha)),
                hcl::weighted_f1(names(g, permuted), names(p, permuted)), 1e-12);
    EXPECT_NEAR(
        hcl::micro_f1_excluding(names(g, alpha), names(p, alpha), std::string("n")).value,
        hcl::micro_f1_excluding(names(g, permuted), names(p, permuted), std::string("d")).value,
        1e-12);
  });
}

// ---------------------------------------------------------------------------

hcl::Conversation conv(std::string id, std::vector<std::string> labels) {
  std::vector<hcl::Utterance> utts;
  for (std::size_t i = 0; i < labels.size(); ++i)
    utts.push_back({std::to_string(i), i % 2 ? "B" : "A", "t", labels[i], std::nullopt});
  return hcl::Conversation::from_utterances(std::move(id), std::move(utts));
}

TEST(EsPartition, Fixtures) {
  const auto p = hcl::es_partition({conv("c", {"a", "b", "b"})});
  EXPECT_EQ(p.es, (std::vector<std::size_t>{1}));
  EXPECT_EQ(p.non_es, (std::vector<std::size_t>{0, 2}));
  const auto q = hcl::es_partition({conv("c", {"a", "a", "a"}), conv("d", {"b"})});
  EXPECT_TRUE(q.es.empty());
  EXPECT_EQ(q.non_es.size(), 4u);
  // First utterances never count even when the label differs across conversations.
  const auto r = hcl::es_partition({conv("c", {"a"}), conv("d", {"b", "a"})});
  EXPECT_EQ(r.es, (std::vector<std::size_t>{2}));
}

TEST(EsPartition, SizesSumToTotal) {
  hcl::Engine rng(31);
  std::vector<hcl::Conversation> convs;
  std::size_t total = 0;
  for (int c = 0; c < 50; ++c) {
    std::vector<std::string> labels;
    const auto n = hcl::uniform_int(rng, 1, 12);
    for (long long i = 0; i < n; ++i) labels.push_back(std::string(1, char('a' + hcl::uniform_index(rng, 3))));
    total += labels.size();
    convs.push_back(conv("c" + std::to_string(c), labels));
  }
  const auto p = hcl::es_partition(convs);
  EXPECT_EQ(p.es.size() + p.non_es.size(), total);
  const auto again = hcl::es_partition(convs);
  EXPECT_EQ(p.es, again.es);
}

TEST(Report, SingleLabel) {
  const Labels gold{"a", "a", "a"}, pred{"a", "a", "a"};
  const auto rep = hcl::report(gold, pred, {"a", "b"}, {false, false, false});
  EXPECT_EQ(rep.per_label.at("a").score, rep.overall.value);
  EXPECT_EQ(rep.per_label.at("a").share, 1.0);
  EXPECT_EQ(rep.per_label.at("b").share, 0.0);
}

TEST(Report, GroupsAndPartitions) {
  const Labels gold{"a", "a", "b", "c", "c", "c"};
  const Labels pred{"a", "b", "b", "c", "a", "c"};
  const std::vector<bool> flags{false, false, true, true, false, false};
  hcl::ReportOptions opt;
  opt.groups = {{"g1", {"a", "b"}}, {"all", {"a", "b", "c"}}};
  const auto rep = hcl::report(gold, pred, {"a", "b", "c"}, flags, opt);
  // Hand values: F1 a = 1/2 (support 2), b = 2/3 (1), c = 4/5 (3).
  EXPECT_NEAR(rep.overall.value, 61.0 / 90.0, 1e-12);
  EXPECT_NEAR(rep.groups.at("g1"), (2 * 0.5 + 2.0 / 3.0) / 3.0, 1e-12);
  EXPECT_NEAR(rep.groups.at("all"), rep.overall.value, 1e-12);
  double share = 0;
  for (const auto& [_, s] : rep.per_label) share += s.share;
  EXPECT_NEAR(share, 1.0, 1e-9);
  EXPECT_NEAR(rep.es.share + rep.non_es.share, 1.0, 1e-9);
  EXPECT_EQ(rep.es.count, 2u);
  EXPECT_NEAR(rep.es.score, hcl::weighted_f1(Labels{"b", "c"}, Labels{"b", "c"}), 1e-15);
  EXPECT_NEAR(rep.non_es.score,
              hcl::weighted_f1(Labels{"a", "a", "c", "c"}, Labels{"a", "b", "a", "c"}), 1e-15);

  opt.groups = {{"bad", {"zzz"}}};
  EXPECT_THROW(hcl::report(gold, pred, {"a", "b", "c"}, flags, opt), hcl::DataError);
}

TEST(Report, MicroMetric) {
  hcl::ReportOptions opt;
  opt.metric = hcl::Metric::micro_f1_excluding;
  opt.excluded = "n";
  const Labels gold{"n", "a", "b", "a", "n", "b"};
  const Labels pred{"a", "a", "n", "b", "n", "b"};
  const auto rep = hcl::report(gold, pred, {"n", "a", "b"}, std::vector<bool>(6, false), opt);
  EXPECT_NEAR(rep.overall.value, 0.5, 1e-15);
  EXPECT_EQ(rep.overall.name, "micro-F1 excl. n");
}

}  // namespace
