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

#include "unlearn_audit/model.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "oracles.h"
#include "test_util.h"

namespace unlearn_audit {
namespace {

using ::testing::DoubleNear;
using ::testing::ElementsAre;
using ::testing::Pointwise;

SplitMask AllOf(int64_t n) {
  SplitMask mask(n);
  for (int64_t i = 0; i < n; ++i) mask.set(i, true);
  return mask;
}

// Straight-line forward pass over the documented layout, used as an oracle.
std::vector<double> ReferenceLogits(const ModelState& m, const std::vector<double>& x) {
  std::vector<double> a = x;
  for (int l = 0; l < m.num_layers(); ++l) {
    const int out = m.arch()[static_cast<size_t>(l) + 1];
    std::vector<double> z(static_cast<size_t>(out));
    for (int j = 0; j < out; ++j) {
      z[static_cast<size_t>(j)] = m.bias(l, j);
      for (size_t i = 0; i < a.size(); ++i) {
        z[static_cast<size_t>(j)] += a[i] * m.weight(l, static_cast<int>(i), j);
      }
      if (l + 1 < m.num_layers())
        z[static_cast<size_t>(j)] = std::max(0.0, z[static_cast<size_t>(j)]);
    }
    a = z;
  }
  return a;
}

TEST(ModelStateTest, CreateChecksTheParameterCount) {
  EXPECT_FALSE(ModelState::Create({2, 3}, std::vector<double>(8)).ok());
  ASSERT_OK_AND_ASSIGN(ModelState m, ModelState::Create({2, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9}));
  EXPECT_EQ(m.num_params(), 9);
  // Row-major (in x out) weights, then biases.
  EXPECT_EQ(m.weight(0, 1, 0), 4);
  EXPECT_EQ(m.bias(0, 2), 9);
  EXPECT_TRUE(m.is_weight(5));
  EXPECT_FALSE(m.is_weight(6));
  EXPECT_FALSE(ModelState::Create({2}, {}).ok());
  EXPECT_FALSE(ModelState::Create({2, 0}, {}).ok());
}

TEST(InitModelTest, IsSeededAndBounded) {
  ASSERT_OK_AND_ASSIGN(ModelState a, InitModel({4, 8, 3}, 1));
  ASSERT_OK_AND_ASSIGN(ModelState b, InitModel({4, 8, 3}, 1));
  ASSERT_OK_AND_ASSIGN(ModelState c, InitModel({4, 8, 3}, 2));
  EXPECT_EQ(a, b);
  EXPECT_NE(a.params(), c.params());
  for (int l = 0; l < a.num_layers(); ++l) {
    const int in = a.arch()[static_cast<size_t>(l)];
    const double bound = 1.0 / std::sqrt(in);
    for (int i = 0; i < in; ++i) {
      for (int j = 0; j < a.arch()[static_cast<size_t>(l) + 1]; ++j) {
        EXPECT_LE(std::abs(a.weight(l, i, j)), bound);
      }
    }
    for (int j = 0; j < a.arch()[static_cast<size_t>(l) + 1]; ++j) EXPECT_EQ(a.bias(l, j), 0.0);
  }
}

TEST(ForwardTest, MatchesTheReferencePass) {
  ASSERT_OK_AND_ASSIGN(ModelState m, InitModel({3, 5, 4}, 17));
  for (double& p : m.mutable_params()) p += 0.05;  // nonzero biases
  const std::vector<double> x = {0.3, -1.2, 0.8};
  EXPECT_THAT(ForwardLogits(m, x), Pointwise(DoubleNear(1e-12), ReferenceLogits(m, x)));
}

TEST(SoftmaxTest, IsStableForLargeLogits) {
  std::vector<double> p = Softmax(std::vector<double>{1000.0, 1000.0 + std::log(3.0)});
  EXPECT_THAT(p, ElementsAre(DoubleNear(0.25, 1e-12), DoubleNear(0.75, 1e-12)));
  p = Softmax(std::vector<double>{-1e308, 0.0});
  EXPECT_EQ(p[1], 1.0);
}

TEST(ConfidenceTest, ClampsSaturatedOutputs) {
  ASSERT_OK_AND_ASSIGN(ModelState m, ModelState::Create({1, 2}, {0, 0, 100, -100}));
  const Sample s{0, {0.0}, 0};
  EXPECT_EQ(ClampedTrueLabelConfidence(m, s.features, 0), 1.0 - kMinConfidence);
  EXPECT_EQ(ClampedTrueLabelConfidence(m, s.features, 1), kMinConfidence);
  ASSERT_OK_AND_ASSIGN(double checked, ConfidenceOfTrueLabel(m, s));
  EXPECT_EQ(checked, 1.0 - kMinConfidence);
  ASSERT_OK_AND_ASSIGN(std::vector<double> raw, PredictProba(m, s));
  EXPECT_GT(raw[0], 1.0 - kMinConfidence);
  EXPECT_FALSE(ConfidenceOfTrueLabel(m, Sample{0, {0.0}, 2}).ok());
  EXPECT_FALSE(PredictProba(m, Sample{0, {0.0, 1.0}, 0}).ok());
}

// Criterion-3 style check: analytic gradients against central differences.
TEST(GradientTest, MatchesCentralFiniteDifferences) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> width(1, 5);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> arch = {width(rng)};
    const int hidden_layers = trial % 3;
    for (int h = 0; h < hidden_layers; ++h) arch.push_back(width(rng) + 1);
    arch.push_back(width(rng) + 1);
    ASSERT_OK_AND_ASSIGN(ModelState m, InitModel(arch, static_cast<uint64_t>(trial)));
    for (double& p : m.mutable_params()) p = normal(rng);
    std::vector<double> x(static_cast<size_t>(arch.front()));
    for (double& v : x) v = normal(rng);
    const int label = static_cast<int>(rng() % static_cast<uint64_t>(arch.back()));

    std::vector<double> grad(static_cast<size_t>(m.num_params()));
    const double loss = SampleLossGradient(m, x, label, absl::MakeSpan(grad));
    EXPECT_NEAR(loss, SampleLoss(m, x, label), 1e-12);
    const std::vector<double> numeric = testing::FiniteDifferenceGradient(m, x, label);
    for (size_t k = 0; k < grad.size(); ++k) {
      const double scale = std::max({std::abs(numeric[k]), std::abs(grad[k]), 1e-3});
      EXPECT_LE(std::abs(numeric[k] - grad[k]) / scale, 1e-5)
          << "trial " << trial << " param " << k;
    }
  }
}

class TrainTest : public ::testing::Test {
 protected:
  void SetUp() override {
    auto d = GenerateSynthetic(200, 3, 4, 0.3, 11);
    ASSERT_TRUE(d.ok());
    data_ = *d;
    auto init = InitModel({4, 8, 3}, 3);
    ASSERT_TRUE(init.ok());
    init_ = *init;
    config_.epochs = 20;
    config_.batch_size = 16;
  }
  Dataset data_;
  ModelState init_;
  TrainConfig config_;
};

TEST_F(TrainTest, IsDeterministicAndLeavesTheInputAlone) {
  const ModelState before = init_;
  SplitMask mask = AllOf(data_.size());
  ASSERT_OK_AND_ASSIGN(ModelState a, Train(init_, data_, mask, config_));
  ASSERT_OK_AND_ASSIGN(ModelState b, Train(init_, data_, mask, config_));
  EXPECT_EQ(a, b);
  EXPECT_EQ(init_, before);
  config_.seed = 1;
  ASSERT_OK_AND_ASSIGN(ModelState c, Train(init_, data_, mask, config_));
  EXPECT_NE(a, c);
}

TEST_F(TrainTest, ReducesTheLossAndCountsSteps) {
  SplitMask mask(data_.size());
  for (int64_t i = 0; i < 100; ++i) mask.set(i, true);
  TrainLog log;
  ASSERT_OK_AND_ASSIGN(ModelState trained, Train(init_, data_, mask, config_, &log));
  EXPECT_LT(MeanLoss(trained, data_, mask.members()), 0.5 * MeanLoss(init_, data_, mask.members()));
  EXPECT_EQ(log.member_count, 100);
  EXPECT_EQ(log.steps, 20 * 7);  // ceil(100 / 16) batches per epoch
  EXPECT_EQ(log.examples_processed, 20 * 100);
  EXPECT_EQ(StepsFor(config_, 100), 140);
}

TEST_F(TrainTest, OnlyMembersInfluenceTraining) {
  SplitMask mask(data_.size());
  for (int64_t i = 0; i < 60; ++i) mask.set(i, true);
  Dataset changed = data_;
  for (int64_t i = 60; i < changed.size(); ++i)
    changed.samples[static_cast<size_t>(i)].features[0] += 5.0;
  ASSERT_OK_AND_ASSIGN(ModelState a, Train(init_, data_, mask, config_));
  ASSERT_OK_AND_ASSIGN(ModelState b, Train(init_, changed, mask, config_));
  EXPECT_EQ(a, b);
}

TEST_F(TrainTest, WeightDecayLeavesBiasesAlone) {
  // With a zero learning signal (lr tiny vs decay), only weights shrink.
  ASSERT_OK_AND_ASSIGN(ModelState m, ModelState::Create({1, 2}, {1.0, -1.0, 0.5, 0.5}));
  Dataset d{{{0, {0.0}, 0}, {1, {0.0}, 1}}, 2, 1, std::nullopt};
  TrainConfig config;
  config.epochs = 1;
  config.batch_size = 2;
  config.learning_rate = 0.1;
  config.weight_decay = 1.0;
  ASSERT_OK_AND_ASSIGN(ModelState trained, Train(m, d, AllOf(2), config));
  // x = 0, so the data gradient on the weights is zero and the biases see
  // a symmetric batch with equal logits: both gradients vanish.
  EXPECT_NEAR(trained.weight(0, 0, 0), 0.9, 1e-12);
  EXPECT_NEAR(trained.weight(0, 0, 1), -0.9, 1e-12);
  EXPECT_NEAR(trained.bias(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(trained.bias(0, 1), 0.5, 1e-12);
}

TEST_F(TrainTest, RejectsBadConfigs) {
  SplitMask mask = AllOf(data_.size());
  TrainConfig bad = config_;
  bad.learning_rate = 0.0;
  EXPECT_FALSE(Train(init_, data_, mask, bad).ok());
  bad = config_;
  bad.batch_size = 1000;
  EXPECT_FALSE(Train(init_, data_, mask, bad).ok());
  EXPECT_FALSE(Train(init_, data_, SplitMask(3), config_).ok());
  ASSERT_OK_AND_ASSIGN(ModelState wrong, InitModel({5, 3}, 1));
  EXPECT_FALSE(Train(wrong, data_, mask, config_).ok());
}

TEST_F(TrainTest, DpIsDeterministicAndReportsItsSpend) {
  SplitMask mask = AllOf(data_.size());
  DpConfig dp;
  dp.noise_multiplier = 2.0;
  ASSERT_OK_AND_ASSIGN(DpTrainResult a, TrainDp(init_, data_, mask, config_, dp));
  ASSERT_OK_AND_ASSIGN(DpTrainResult b, TrainDp(init_, data_, mask, config_, dp));
  EXPECT_EQ(a.model, b.model);
  ASSERT_OK_AND_ASSIGN(double eps, AccountEpsilon(2.0, StepsFor(config_, 200), dp.delta));
  EXPECT_DOUBLE_EQ(a.spend.epsilon, eps);
  EXPECT_EQ(a.spend.delta, dp.delta);
  dp.noise_multiplier = 0.0;
  EXPECT_FALSE(TrainDp(init_, data_, mask, config_, dp).ok());
}

TEST(DpTrainTest, HugeNoiseGivesChanceAccuracy) {
  // Heavily overlapping clusters, so a label-independent predictor scores
  // close to 1/3 on each seed instead of claiming whole clusters.
  ASSERT_OK_AND_ASSIGN(Dataset data, GenerateSynthetic(600, 3, 4, 3.0, 12));
  ASSERT_OK_AND_ASSIGN(ModelState init, InitModel({4, 8, 3}, 3));
  SplitMask mask = AllOf(data.size());
  TrainConfig config;
  config.epochs = 5;
  config.batch_size = 16;
  DpConfig dp;
  dp.noise_multiplier = 1e6;
  double mean = 0.0;
  for (uint64_t seed : {1, 2, 3}) {
    config.seed = seed;
    ASSERT_OK_AND_ASSIGN(DpTrainResult r, TrainDp(init, data, mask, config, dp));
    ASSERT_TRUE(r.model.AllFinite());
    mean += Accuracy(r.model, data, mask.members()) / 3.0;
  }
  EXPECT_NEAR(mean, 1.0 / 3.0, 0.1);
}

TEST(ClipToNormTest, ScalesOnlyLongVectors) {
  std::vector<double> g = {3.0, 4.0};
  EXPECT_DOUBLE_EQ(ClipToNorm(absl::MakeSpan(g), 1.0), 0.2);
  EXPECT_THAT(g, ElementsAre(DoubleNear(0.6, 1e-15), DoubleNear(0.8, 1e-15)));
  std::vector<double> short_g = {0.1, 0.1};
  EXPECT_EQ(ClipToNorm(absl::MakeSpan(short_g), 1.0), 1.0);
  EXPECT_THAT(short_g, ElementsAre(0.1, 0.1));
}

TEST(AccountantTest, ClosedFormMatchesNumericMinimization) {
  ASSERT_OK_AND_ASSIGN(double eps, AccountEpsilon(1.0, 1, 1e-5));
  EXPECT_NEAR(eps, testing::NumericEpsilon(1.0, 1, 1e-5), 1e-6);
  EXPECT_NEAR(eps, 0.5 + std::sqrt(2 * std::log(1e5)), 1e-12);
  for (double sigma : {0.7, 1.3, 4.0, 25.0}) {
    for (int64_t steps : {1, 10, 400}) {
      ASSERT_OK_AND_ASSIGN(double closed, AccountEpsilon(sigma, steps, 1e-6));
      EXPECT_NEAR(closed, testing::NumericEpsilon(sigma, static_cast<double>(steps), 1e-6), 1e-6)
          << sigma << " " << steps;
    }
  }
}

TEST(AccountantTest, InverseRecoversTheNoise) {
  for (double eps : {0.5, 2.0, 6.0}) {
    ASSERT_OK_AND_ASSIGN(double sigma, NoiseMultiplierForEpsilon(eps, 300, 1e-5));
    ASSERT_OK_AND_ASSIGN(double back, AccountEpsilon(sigma, 300, 1e-5));
    EXPECT_NEAR(back, eps, 1e-9);
  }
  EXPECT_FALSE(AccountEpsilon(1.0, 1, 0.0).ok());
  EXPECT_FALSE(AccountEpsilon(0.0, 1, 1e-5).ok());
  EXPECT_FALSE(NoiseMultiplierForEpsilon(-1.0, 1, 1e-5).ok());
}

TEST(AccountantTest, EpsilonGrowsWithStepsAndShrinksWithNoise) {
  double last = 0.0;
  for (int64_t steps = 1; steps < 2000; steps *= 3) {
    ASSERT_OK_AND_ASSIGN(double eps, AccountEpsilon(2.0, steps, 1e-5));
    EXPECT_GT(eps, last);
    last = eps;
  }
  ASSERT_OK_AND_ASSIGN(double low_noise, AccountEpsilon(1.0, 50, 1e-5));
  ASSERT_OK_AND_ASSIGN(double high_noise, AccountEpsilon(3.0, 50, 1e-5));
  EXPECT_GT(low_noise, high_noise);
}

TEST(PersistenceTest, RoundTripsLosslessly) {
  const std::string dir = testing::MakeTempDir("persistence");
  ASSERT_OK_AND_ASSIGN(ModelState m, InitModel({3, 4, 2}, 8));
  m.mutable_params()[0] = 1.0 / 3.0;
  StoredModel stored{m, 99, PrivacySpend{1.25, 1e-5}, "abc123"};
  ASSERT_OK(SaveModel(stored, dir + "/m.bin"));
  ASSERT_OK_AND_ASSIGN(StoredModel back, LoadModel(dir + "/m.bin"));
  EXPECT_EQ(back.model, m);
  EXPECT_EQ(back.train_seed, 99u);
  EXPECT_EQ(back.spend, stored.spend);
  EXPECT_EQ(back.config_hash, "abc123");

  StoredModel plain{m, 1, std::nullopt, ""};
  ASSERT_OK(SaveModel(plain, dir + "/p.bin"));
  ASSERT_OK_AND_ASSIGN(StoredModel plain_back, LoadModel(dir + "/p.bin"));
  EXPECT_FALSE(plain_back.spend.has_value());
}

TEST(PersistenceTest, RejectsCorruptFiles) {
  const std::string dir = testing::MakeTempDir("persistence_corrupt");
  std::ofstream(dir + "/junk.bin") << "not a model";
  EXPECT_EQ(LoadModel(dir + "/junk.bin").status().code(), absl::StatusCode::kDataLoss);
  ASSERT_OK_AND_ASSIGN(ModelState m, InitModel({2, 2}, 1));
  ASSERT_OK(SaveModel(StoredModel{m, 0, std::nullopt, "h"}, dir + "/m.bin"));
  std::filesystem::resize_file(dir + "/m.bin", std::filesystem::file_size(dir + "/m.bin") - 3);
  EXPECT_EQ(LoadModel(dir + "/m.bin").status().code(), absl::StatusCode::kDataLoss);
  EXPECT_FALSE(LoadModel(dir + "/missing.bin").ok());
}

}  // namespace
}  // namespace unlearn_audit
