#include <gtest/gtest.h>

#include <fstream>
#include <numeric>
#include <sstream>

#include "qe/harness.hpp"
#include "qe/rng.hpp"
#include "test_util.hpp"

using testutil::kind_of;

namespace {

void noisy_linear(std::size_t n, std::uint64_t seed, std::vector<double>& pred, std::vector<double>& gold) {
  qe::Rng rng(seed);
  pred.resize(n);
  gold.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    gold[i] = rng.normal();
    pred[i] = 0.5 * gold[i] + rng.normal();
  }
}

}  // namespace

TEST(Evaluate, Pearson) {
  std::vector<double> g{1, 2, 3, 4};
  EXPECT_NEAR(qe::evaluate(g, g).pearson, 1.0, 1e-15);
  std::vector<double> neg{-1, -2, -3, -4};
  EXPECT_NEAR(qe::evaluate(neg, g).pearson, -1.0, 1e-15);
  std::vector<double> p{1, 3, 2, 4};
  auto report = qe::evaluate(p, g, "xlmr-recall", "layer=8");
  EXPECT_NEAR(report.pearson, 0.8, 1e-15);
  EXPECT_EQ(report.n, 4u);
  EXPECT_EQ(report.method, "xlmr-recall");
  EXPECT_EQ(report.config_digest, qe::config_digest("layer=8"));
  EXPECT_NE(report.config_digest, qe::config_digest("layer=10"));
}

TEST(Evaluate, DigestIsSha256) {
  EXPECT_EQ(qe::config_digest("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Evaluate, Errors) {
  std::vector<double> a{1, 2, 3}, b{1, 2}, flat{5, 5, 5};
  EXPECT_EQ(kind_of([&] { qe::evaluate(a, b); }), qe::ErrorKind::LengthMismatch);
  EXPECT_EQ(kind_of([&] { qe::evaluate(flat, a); }), qe::ErrorKind::ZeroVariance);
}

TEST(Stability, FullSizeHasZeroSpread) {
  std::vector<double> pred, gold;
  noisy_linear(200, 1, pred, gold);
  auto curve = qe::size_stability(pred, gold, {50, 200}, 10, 7);
  ASSERT_EQ(curve.sizes.size(), 2u);
  EXPECT_EQ(curve.std_r[1], 0.0);
  EXPECT_EQ(curve.mean_r[1], qe::pearson(pred, gold));
  EXPECT_GT(curve.std_r[0], 0.0);
  EXPECT_EQ(curve.valid[0], 10u);
}

TEST(Stability, DeterministicForSeed) {
  std::vector<double> pred, gold;
  noisy_linear(300, 2, pred, gold);
  auto a = qe::size_stability(pred, gold, {10, 100, 250}, 20, 5);
  auto b = qe::size_stability(pred, gold, {10, 100, 250}, 20, 5);
  EXPECT_EQ(a.mean_r, b.mean_r);
  EXPECT_EQ(a.std_r, b.std_r);
  auto c = qe::size_stability(pred, gold, {10, 100, 250}, 20, 6);
  EXPECT_NE(a.mean_r, c.mean_r);
  // A size's subsets do not depend on which other sizes were requested.
  auto d = qe::size_stability(pred, gold, {100}, 20, 5);
  EXPECT_EQ(d.mean_r[0], a.mean_r[1]);
}

TEST(Stability, SpreadShrinksWithSize) {
  std::vector<double> pred, gold;
  noisy_linear(1000, 3, pred, gold);
  auto curve = qe::size_stability(pred, gold, {100, 850}, 50, 11);
  EXPECT_LT(curve.std_r[1], curve.std_r[0]);
}

TEST(Stability, Errors) {
  std::vector<double> pred{1, 2, 3, 4}, gold{4, 3, 2, 2};
  EXPECT_EQ(kind_of([&] { qe::size_stability(pred, gold, {5}, 3, 1); }), qe::ErrorKind::SizeTooLarge);
  EXPECT_EQ(kind_of([&] { qe::size_stability(pred, gold, {3, 2}, 3, 1); }), qe::ErrorKind::InvalidArgument);
}

TEST(Stability, ConstantSubsetsAreSkipped) {
  std::vector<double> pred{0, 0, 0, 0, 0, 0, 0, 1}, gold{1, 2, 3, 4, 5, 6, 7, 8};
  auto curve = qe::size_stability(pred, gold, {2}, 40, 3);
  EXPECT_GT(curve.skipped[0], 0u);
  EXPECT_EQ(curve.skipped[0] + curve.valid[0], 40u);
}

TEST(Distribution, Bins) {
  std::vector<double> zeros(7, 0.0);
  auto c = qe::score_distribution(zeros, 10);
  EXPECT_EQ(c[0], 7u);
  std::vector<double> edges{-0.5, 0.0, 0.05, 0.1, 0.95, 1.0, 1.5};
  auto e = qe::score_distribution(edges, 10);
  EXPECT_EQ(std::accumulate(e.begin(), e.end(), std::size_t{0}), edges.size());
  EXPECT_EQ(e[0], 3u);
  EXPECT_EQ(e[9], 3u);
}

TEST(Distribution, UniformScoresSpreadEvenly) {
  qe::Rng rng(4);
  std::vector<double> s(20000);
  for (auto& v : s) v = rng.uniform();
  auto c = qe::score_distribution(s, 20);
  EXPECT_EQ(std::accumulate(c.begin(), c.end(), std::size_t{0}), s.size());
  double chi2 = 0.0;
  for (auto k : c) chi2 += (static_cast<double>(k) - 1000.0) * (static_cast<double>(k) - 1000.0) / 1000.0;
  EXPECT_LT(chi2, 60.0);  // 19 degrees of freedom
}

TEST(Files, CsvAndIdValues) {
  qe::StabilityCurve curve{{10, 20}, {0.5, 0.25}, {0.125, 0.0}, {3, 3}, {0, 0}, 3};
  std::ostringstream out;
  qe::write_stability_csv(curve, out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "size,mean_r,std_r,valid,skipped");

  const auto dir = testutil::scratch_dir();
  {
    std::ofstream f(dir / "scores.tsv");
    std::vector<std::uint32_t> ids{3, 1};
    std::vector<double> values{0.5, -0.25};
    qe::write_id_values(ids, values, f);
  }
  auto back = qe::read_id_values((dir / "scores.tsv").string());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], (std::pair<std::uint32_t, double>{3, 0.5}));
  EXPECT_EQ(back[1], (std::pair<std::uint32_t, double>{1, -0.25}));

  {
    std::ofstream f(dir / "data.tsv");
    f << "id\tsource\thypothesis\tgold_score\n0\ta\tb\t1.5\n1\tc\td\t2\n";
  }
  auto gold = qe::read_id_values((dir / "data.tsv").string());
  ASSERT_EQ(gold.size(), 2u);
  EXPECT_EQ(gold[1].second, 2.0);
}
