#include <gtest/gtest.h>

#include <algorithm>

#include "ids/errors.hpp"
#include "ids/ids_metrics.hpp"
#include "test_util.hpp"

using ids::FeatureMatrix;
using ids::IdsOptions;
using ids::testing::add_noise;
using ids::testing::from_rows;
using ids::testing::gaussian_features;

namespace {

FeatureMatrix constant_rows(std::size_t n, double value) {
  return FeatureMatrix(n, 1, std::vector<float>(n, static_cast<float>(value)));
}

}  // namespace

TEST(IdsScores, StrictInequalities) {
  std::vector<double> real = {1.0, 0.0, -1.0, 2.0};
  std::vector<double> fake = {0.5, 0.0, 3.0, -2.0};
  // Only pair 2 has f(fake) > f(real); pair 1 is a tie.
  EXPECT_DOUBLE_EQ(ids::p_ids_from_scores(real, fake), 0.25);
  // Reals below 0: one of four. Fakes above 0: two of four.
  EXPECT_DOUBLE_EQ(ids::u_ids_from_scores(real, fake), 0.5 * 0.25 + 0.5 * 0.5);
}

TEST(Pids, IdenticalPairsScoreZero) {
  auto real = gaussian_features(200, 6, 1);
  auto r = ids::p_ids(ids::PairedFeatureSet(real, real), {}, 3);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.name, "p_ids");
  EXPECT_EQ(r.n_samples, 200u);
  EXPECT_EQ(r.config.at("seed"), 3u);
}

TEST(Pids, PerfectlySeparatedDataScoresZero) {
  ids::PairedFeatureSet pairs(constant_rows(100, 10.0), constant_rows(100, -10.0));
  EXPECT_EQ(ids::p_ids(pairs, {}, 1).value, 0.0);
  EXPECT_EQ(ids::u_ids(pairs.real, pairs.fake, {}, 1).value, 0.0);
}

TEST(Uids, TwoPointHandSolvedCase) {
  // Real at -1, fake at +1: the separator is f(x) = -x and nothing is misclassified.
  auto ev = ids::evaluate_ids(from_rows({{-1.0}}), from_rows({{1.0}}), {}, 1, true);
  EXPECT_NEAR(ev.model.weights[0], -1.0, 1e-6);
  EXPECT_NEAR(ev.model.bias, 0.0, 1e-6);
  EXPECT_EQ(ev.u_ids, 0.0);
  EXPECT_EQ(ev.p_ids, 0.0);
}

TEST(Uids, PermutedCopyIsIndistinguishable) {
  auto real = gaussian_features(2000, 64, 5);
  ids::Pcg64 rng(6);
  auto perm = ids::random_permutation(real.n(), rng);
  auto fake = real.select_rows(perm);
  double u = ids::u_ids(real, fake, {}, 2).value;
  EXPECT_GE(u, 0.40);
  EXPECT_LE(u, 0.50);
}

TEST(Uids, UnequalSizesNeedOptIn) {
  auto real = gaussian_features(50, 3, 1);
  auto fake = gaussian_features(40, 3, 2);
  EXPECT_THROW(ids::u_ids(real, fake, {}, 1), ids::DomainError);
  IdsOptions opts;
  opts.allow_unequal_sizes = true;
  auto r = ids::u_ids(real, fake, opts, 1);
  EXPECT_TRUE(r.config.contains("unequal_class_sizes_override"));
  EXPECT_THROW(ids::u_ids(real, gaussian_features(50, 4, 2), opts, 1), ids::DomainError);
}

TEST(Ids, ShiftedFakesAreDetected) {
  auto real = gaussian_features(400, 8, 1);
  auto fake = gaussian_features(400, 8, 2, 1.0);
  auto ev = ids::evaluate_ids(real, fake, {}, 1, false);
  EXPECT_LT(ev.u_ids, 0.1);
  auto near = add_noise(real, 0.05, 3);
  auto far = add_noise(real, 2.0, 3);
  EXPECT_GT(ids::p_ids(ids::PairedFeatureSet(real, near), {}, 1).value,
            ids::p_ids(ids::PairedFeatureSet(real, far), {}, 1).value);
}

TEST(RunRepeated, SingleRunAndDeterministicMetric) {
  auto constant = [](std::uint64_t) { return ids::MetricResult::single("c", 0.25, 10, {}); };
  auto one = ids::run_repeated(constant, 1, 4);
  EXPECT_EQ(one.mean, 0.25);
  EXPECT_EQ(one.std, 0.0);
  EXPECT_EQ(one.per_run_values.size(), 1u);
  auto five = ids::run_repeated(constant, 5, 4);
  EXPECT_EQ(five.std, 0.0);
  EXPECT_EQ(five.config.at("runs"), 5);
  EXPECT_THROW(ids::run_repeated(constant, 0, 4), ids::DomainError);
}

TEST(RunRepeated, SeedsArePrefixStable) {
  auto echo = [](std::uint64_t s) {
    return ids::MetricResult::single("s", static_cast<double>(s % 1000003), 1, {});
  };
  auto three = ids::run_repeated(echo, 3, 77);
  auto five = ids::run_repeated(echo, 5, 77);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(three.per_run_values[k], five.per_run_values[k]);
    EXPECT_EQ(three.per_run_values[k], static_cast<double>(ids::run_seed(77, k) % 1000003));
  }
}

TEST(RunRepeated, SvmSeedBarelyMovesUids) {
  auto real = gaussian_features(500, 16, 1);
  auto fake = gaussian_features(500, 16, 2);
  auto r = ids::run_repeated([&](std::uint64_t s) { return ids::u_ids(real, fake, {}, s); }, 5, 1);
  EXPECT_LT(r.std, 0.01);
}

TEST(MeanAndStd, PopulationStdAndPermutationInvariance) {
  auto [m, s] = ids::mean_and_std({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m, 2.5);
  EXPECT_DOUBLE_EQ(s, std::sqrt(1.25));
  std::vector<double> v = {0.1, 1e-9, 0.7, 0.30000000000000004, 12.5, 0.2};
  auto base = ids::mean_and_std(v);
  std::sort(v.begin(), v.end());
  do {
    auto p = ids::mean_and_std(v);
    ASSERT_EQ(p.first, base.first);
    ASSERT_EQ(p.second, base.second);
  } while (std::next_permutation(v.begin(), v.end()));
}

TEST(MetricResult, JsonRoundTrip) {
  auto r = ids::run_repeated(
      [](std::uint64_t s) { return ids::MetricResult::single("x", (s % 7) / 7.0, 3, {{"k", 1}}); }, 4,
      2);
  auto back = ids::metric_result_from_json(ids::to_json(r));
  EXPECT_EQ(back.name, r.name);
  EXPECT_EQ(back.per_run_values, r.per_run_values);
  EXPECT_EQ(back.mean, r.mean);
  EXPECT_EQ(back.std, r.std);
  EXPECT_EQ(back.config, r.config);
}
