//
// Copyright 2026 The Unlearning Audit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "unlearn_audit/risk.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "oracles.h"
#include "test_util.h"

namespace unlearn_audit {
namespace {

using ::testing::HasSubstr;

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(PerSampleRiskTest, PerfectSeparation) {
  std::vector<double> out(10);
  std::iota(out.begin(), out.end(), 0.0);
  ASSERT_OK_AND_ASSIGN(RiskRecord r, PerSampleRisk(std::vector<double>{20, 21, 22}, out, 0.1));
  EXPECT_EQ(r.tpr, 1.0);
  EXPECT_EQ(r.fpr, 0.1);
  EXPECT_NEAR(r.ratio, 10.0, 1e-12);
  EXPECT_NEAR(r.ln_ratio, 2.302585, 1e-6);
}

TEST(PerSampleRiskTest, IdenticalListsGiveOne) {
  const std::vector<double> scores = {0.3, 1.2, -0.7, 2.2, 0.9};
  ASSERT_OK_AND_ASSIGN(RiskRecord r, PerSampleRisk(scores, scores, 0.2));
  EXPECT_EQ(r.ratio, 1.0);
  EXPECT_EQ(r.ln_ratio, 0.0);
  EXPECT_EQ(r.tpr, 1.0);  // the tie goes to the larger TPR
}

TEST(PerSampleRiskTest, ZeroTprGivesTheSentinel) {
  ASSERT_OK_AND_ASSIGN(
      RiskRecord r, PerSampleRisk(std::vector<double>{-5.0}, std::vector<double>{1, 2, 3}, 0.25));
  // tau = -inf flags everything, so TPR = FPR = 1 there; the sentinel only
  // appears when no threshold yields a positive TPR, which needs a member
  // list whose every score is -inf.
  EXPECT_EQ(r.ratio, 1.0);
  ASSERT_OK_AND_ASSIGN(RiskRecord none,
                       PerSampleRisk(std::vector<double>{-kInf}, std::vector<double>{1, 2}, 0.5));
  EXPECT_EQ(none.tpr, 0.0);
  EXPECT_EQ(none.ratio, 0.0);
  EXPECT_EQ(none.ln_ratio, -kInf);
}

TEST(PerSampleRiskTest, RejectsBadInput) {
  EXPECT_FALSE(PerSampleRisk({}, std::vector<double>{1.0}, 0.5).ok());
  EXPECT_FALSE(PerSampleRisk(std::vector<double>{1.0}, {}, 0.5).ok());
  EXPECT_FALSE(PerSampleRisk(std::vector<double>{1.0}, std::vector<double>{1.0}, 0.0).ok());
  EXPECT_FALSE(PerSampleRisk(std::vector<double>{1.0}, std::vector<double>{1.0}, 1.0).ok());
}

TEST(PerSampleRiskTest, EqualsTheBruteForceScanExactly) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t nm = 1 + rng() % 32, nn = 1 + rng() % 32;
    const int levels = 2 + static_cast<int>(rng() % 12);  // controls ties
    std::vector<double> in(nm), out(nn);
    for (double& s : in) s = static_cast<double>(rng() % levels) + 0.5 * (rng() % 2);
    for (double& s : out) s = static_cast<double>(rng() % levels);
    const int64_t floor_den = std::max<int64_t>(static_cast<int64_t>(nn), 2);
    ASSERT_OK_AND_ASSIGN(RiskRecord got, PerSampleRisk(in, out, 1.0 / floor_den));
    const RiskRecord want = testing::BruteForceRisk(in, out, floor_den);
    ASSERT_EQ(got.tpr, want.tpr) << "trial " << trial;
    ASSERT_EQ(got.fpr, want.fpr) << "trial " << trial;
    ASSERT_EQ(got.ratio, want.ratio) << "trial " << trial;
    ASSERT_EQ(got.ln_ratio, want.ln_ratio) << "trial " << trial;
    // The smoothing floor caps the ratio.
    ASSERT_LE(got.ln_ratio, std::log(static_cast<double>(floor_den)) + 1e-12);
  }
}

// Shared fixture: a small, memorizable dataset and a pool over it.
class RiskPoolTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dataset_ = new Dataset(*GenerateSynthetic(80, 4, 6, 1.5, 11));
    pool_ = new ModelPool(*TrainModelPool(*dataset_, 32, {6, 24, 4},
                                          {.learning_rate = 0.3, .epochs = 60, .batch_size = 8},
                                          std::nullopt, 500, 2));
  }
  static void TearDownTestSuite() {
    delete pool_;
    delete dataset_;
  }
  static AttackContext Online() {
    AttackContext ctx;
    ctx.config.kind = AttackKind::kOnline;
    ctx.reference = pool_;
    return ctx;
  }

  static Dataset* dataset_;
  static ModelPool* pool_;
};

Dataset* RiskPoolTest::dataset_ = nullptr;
ModelPool* RiskPoolTest::pool_ = nullptr;

TEST_F(RiskPoolTest, PoolUsesHalvesAndFixedSeeds) {
  for (int j = 0; j < pool_->size(); ++j) {
    const PoolModel& pm = pool_->models[static_cast<size_t>(j)];
    EXPECT_EQ(pm.mask.count(), 40);
    EXPECT_EQ(pm.mask_seed, 500u + j);
    EXPECT_EQ(pm.train_seed, 500u + kPoolTrainSeedOffset + j);
  }
  ASSERT_OK_AND_ASSIGN(ModelPool again, TrainModelPool(*dataset_, 32, pool_->arch, pool_->train,
                                                       std::nullopt, 500, 1));
  for (int j = 0; j < 32; ++j) {
    EXPECT_EQ(again.models[static_cast<size_t>(j)].model,
              pool_->models[static_cast<size_t>(j)].model);
  }
  EXPECT_FALSE(TrainModelPool(*dataset_, 2, {6, 4}, {}, std::nullopt, 1).ok());
  EXPECT_FALSE(TrainModelPool(*dataset_, 5, {6, 4}, {}, std::nullopt, 1).ok());
}

TEST(ModelPoolTest, TenSamplesFourModels) {
  const Dataset d = *GenerateSynthetic(10, 2, 2, 1.0, 1);
  ASSERT_OK_AND_ASSIGN(ModelPool pool, TrainModelPool(d, 4, {2, 2}, {.epochs = 1, .batch_size = 2},
                                                      std::nullopt, 9));
  for (const PoolModel& pm : pool.models) EXPECT_EQ(pm.mask.count(), 5);
}

TEST(ModelPoolTest, MemberCountsStayNearHalf) {
  // Each count is Binomial(32, 1/2); P(outside [0.3m, 0.7m]) is about 0.02.
  const Dataset d = *GenerateSynthetic(200, 2, 2, 1.0, 1);
  ASSERT_OK_AND_ASSIGN(ModelPool pool,
                       TrainModelPool(d, 32, {2, 2}, {.epochs = 1}, std::nullopt, 77, 4));
  int outside = 0;
  double total = 0.0;
  for (int64_t id = 0; id < d.size(); ++id) {
    int in = 0;
    for (const PoolModel& pm : pool.models) in += pm.mask.contains(id);
    total += in;
    outside += in < 0.3 * 32 || in > 0.7 * 32;
  }
  EXPECT_EQ(total / d.size(), 16.0);
  EXPECT_LE(outside, 10);
}

TEST_F(RiskPoolTest, ScoresCarryOneEntryPerModelAndTheMaskBits) {
  const std::vector<int64_t> ids = {0, 5, 17};
  ASSERT_OK_AND_ASSIGN(std::vector<SampleScores> scores,
                       CollectScores(*pool_, Online(), *dataset_, ids, 2));
  ASSERT_EQ(scores.size(), 3u);
  for (const SampleScores& row : scores) {
    ASSERT_EQ(row.scores.size(), 32u);
    for (int j = 0; j < 32; ++j) {
      EXPECT_EQ(row.member[static_cast<size_t>(j)] != 0,
                pool_->models[static_cast<size_t>(j)].mask.contains(row.sample_id));
    }
  }
}

TEST_F(RiskPoolTest, TableCoversEverySampleAndIsDeterministic) {
  ASSERT_OK_AND_ASSIGN(RiskTable a, EstimateRiskTable(*dataset_, *pool_, Online(), {}, 1));
  ASSERT_OK_AND_ASSIGN(RiskTable b, EstimateRiskTable(*dataset_, *pool_, Online(), {}, 4));
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.records.size(), 80u);
  for (int64_t id = 0; id < 80; ++id) {
    const RiskRecord* r = a.Find(id);
    ASSERT_NE(r, nullptr);
    EXPECT_GE(r->fpr, r->fpr_floor);
    EXPECT_LE(r->ln_ratio, std::log(1.0 / r->fpr_floor) + 1e-12);
  }
  EXPECT_EQ(a.Find(1000), nullptr);
}

TEST_F(RiskPoolTest, OverfitPoolHasPositiveMeanRisk) {
  ASSERT_OK_AND_ASSIGN(RiskTable table, EstimateRiskTable(*dataset_, *pool_, Online(), {}, 4));
  double sum = 0.0;
  int finite = 0;
  for (const RiskRecord& r : table.records) {
    if (std::isfinite(r.ln_ratio)) sum += r.ln_ratio, ++finite;
  }
  ASSERT_GT(finite, 0);
  EXPECT_GT(sum / finite, 0.0);
}

TEST_F(RiskPoolTest, TableIsInvariantToPoolOrder) {
  ModelPool reversed = *pool_;
  std::reverse(reversed.models.begin(), reversed.models.end());
  AttackContext ctx = Online();
  ctx.reference = &reversed;
  const std::vector<int64_t> ids = {1, 2, 3, 40, 79};
  ASSERT_OK_AND_ASSIGN(RiskTable a, EstimateRiskTable(*dataset_, *pool_, Online(), ids, 2));
  ASSERT_OK_AND_ASSIGN(RiskTable b, EstimateRiskTable(*dataset_, reversed, ctx, ids, 2));
  ASSERT_EQ(a.records.size(), b.records.size());
  for (size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].tpr, b.records[i].tpr);
    EXPECT_EQ(a.records[i].fpr, b.records[i].fpr);
    EXPECT_NEAR(a.records[i].ln_ratio, b.records[i].ln_ratio, 1e-12);
  }
}

TEST_F(RiskPoolTest, AliraTableUsesGroupedShadows) {
  AttackContext ctx;
  ctx.config = {.kind = AttackKind::kAlira, .n_aug = 8, .seed = 3, .shadow_group_size = 20};
  const std::vector<int64_t> ids = {0, 1, 2, 3, 4, 5};
  ASSERT_OK_AND_ASSIGN(AliraShadows shadows, TrainAliraShadows(*dataset_, ids, 4, pool_->arch,
                                                               pool_->train, std::nullopt, 3, 2));
  EXPECT_EQ(shadows.pairs.size(), 2u);
  for (int64_t id : ids) EXPECT_GE(shadows.pair_of_sample[static_cast<size_t>(id)], 0);
  ctx.alira = &shadows;
  ASSERT_OK_AND_ASSIGN(RiskTable table, EstimateRiskTable(*dataset_, *pool_, ctx, ids, 2));
  EXPECT_EQ(table.records.size(), ids.size());
  // A sample outside every group is a coverage failure.
  absl::Status missing = EstimateRiskTable(*dataset_, *pool_, ctx, {50}, 1).status();
  EXPECT_EQ(missing.code(), absl::StatusCode::kFailedPrecondition);
  EXPECT_THAT(missing.message(), HasSubstr("coverage"));
}

TEST_F(RiskPoolTest, CoverageErrorsNameTheSample) {
  ModelPool broken = *pool_;
  for (PoolModel& pm : broken.models) pm.mask.set(7, false);
  AttackContext ctx = Online();
  ctx.reference = &broken;
  absl::Status status = CollectScores(broken, ctx, *dataset_, {6, 7}, 1).status();
  EXPECT_EQ(status.code(), absl::StatusCode::kFailedPrecondition);
  EXPECT_THAT(status.message(), HasSubstr("7"));
}

TEST_F(RiskPoolTest, ForgettingAnUntrainedSampleChangesNothing) {
  // Sample 7 is marked out of every model, so no model holds it.
  ModelPool pool = *pool_;
  for (PoolModel& pm : pool.models) pm.mask.set(7, false);
  AttackContext ctx = Online();
  ctx.reference = &pool;
  const std::vector<int64_t> ids = {0, 1, 2, 3};
  ASSERT_OK_AND_ASSIGN(RiskTable before, EstimateRiskTable(*dataset_, pool, ctx, ids, 2));
  ASSERT_OK_AND_ASSIGN(UnlearnOutcome after,
                       ReestimateAfterUnlearn(pool, {.method = UnlearnMethod::kFinetune}, {7},
                                              *dataset_, ctx, ids, 2));
  EXPECT_EQ(after.models_modified, 0);
  EXPECT_EQ(after.table.records, before.records);
  EXPECT_FALSE(ReestimateAfterUnlearn(pool, {}, {}, *dataset_, ctx, ids, 1).ok());
}

TEST_F(RiskPoolTest, UnlearningKeepsOriginalMembershipLabels) {
  const std::vector<int64_t> forget = {3, 9};
  ASSERT_OK_AND_ASSIGN(UnlearnOutcome out,
                       ReestimateAfterUnlearn(*pool_, {.method = UnlearnMethod::kRetrain}, forget,
                                              *dataset_, Online(), {}, 4));
  int holders = 0;
  for (int j = 0; j < pool_->size(); ++j) {
    const PoolModel& orig = pool_->models[static_cast<size_t>(j)];
    const PoolModel& now = out.unlearned.models[static_cast<size_t>(j)];
    EXPECT_EQ(now.mask, orig.mask);
    const bool holds = orig.mask.contains(3) || orig.mask.contains(9);
    holders += holds;
    if (!holds) {
      EXPECT_EQ(now.model, orig.model) << "model " << j;
    }
  }
  EXPECT_EQ(out.models_modified, holders);
  EXPECT_THAT(out.table.provenance, HasSubstr("retrain"));
}

TEST(RiskRetrainTest, RetrainLowersTheForgetSetMedianRisk) {
  int decreased = 0;
  for (uint64_t seed : {1, 2, 3}) {
    const Dataset d = *GenerateSynthetic(80, 4, 6, 1.5, seed);
    ASSERT_OK_AND_ASSIGN(
        ModelPool pool,
        TrainModelPool(d, 32, {6, 24, 4}, {.learning_rate = 0.3, .epochs = 60, .batch_size = 8},
                       std::nullopt, 100 * seed, 4));
    AttackContext ctx;
    ctx.config.kind = AttackKind::kOnline;
    ctx.reference = &pool;
    ASSERT_OK_AND_ASSIGN(RiskTable before, EstimateRiskTable(d, pool, ctx, {}, 4));
    std::vector<RiskRecord> sorted = before.records;
    std::sort(sorted.begin(), sorted.end(),
              [](const RiskRecord& a, const RiskRecord& b) { return a.ln_ratio > b.ln_ratio; });
    std::vector<int64_t> forget;
    for (int i = 0; i < 8; ++i) forget.push_back(sorted[static_cast<size_t>(i)].sample_id);
    ASSERT_OK_AND_ASSIGN(UnlearnOutcome after,
                         ReestimateAfterUnlearn(pool, {.method = UnlearnMethod::kRetrain}, forget,
                                                d, ctx, forget, 4));
    auto median = [&](const RiskTable& t) {
      std::vector<double> v;
      for (int64_t id : forget) v.push_back(t.Find(id)->ln_ratio);
      std::sort(v.begin(), v.end());
      return 0.5 * (v[3] + v[4]);
    };
    decreased += median(after.table) < median(before);
  }
  EXPECT_EQ(decreased, 3);
}

TEST(RiskTableIoTest, RoundTripsIncludingTheSentinel) {
  RiskTable table;
  table.provenance = "original;alira;m=4";
  table.records = {{0, 0.5, 0.25, 2.0, std::log(2.0), 0.25},
                   {3, 0.0, 0.5, 0.0, -kInf, 0.5},
                   {4, 1.0, 1.0 / 3.0, 3.0, std::log(3.0), 1.0 / 3.0}};
  const std::string dir = testing::MakeTempDir("risk_io");
  ASSERT_OK(WriteRiskTable(table, dir + "/t.csv"));
  ASSERT_OK_AND_ASSIGN(RiskTable back, ReadRiskTable(dir + "/t.csv"));
  EXPECT_EQ(back, table);

  table.provenance = "bad,tag";
  EXPECT_FALSE(WriteRiskTable(table, dir + "/u.csv").ok());
  EXPECT_FALSE(ReadRiskTable(dir + "/missing.csv").ok());
}

}  // namespace
}  // namespace unlearn_audit
