#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tgfnet/amef.hpp"
#include "tgfnet/ops.hpp"

using namespace tgfnet;
using namespace tgfnet::amef;
using fixtures::random_tensor;

TEST(RqafCandidates, SingleCandidateIsTheLocation) {
  Rng rng(1);
  const Tensor f = random_tensor(rng, {2, 9, 4}, false);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(rqaf_candidates(f, 1, i, 1), (std::vector<std::size_t>{i}));
}

TEST(RqafCandidates, FullSetCoversAllPatches) {
  Rng rng(2);
  const Tensor f = random_tensor(rng, {1, 6, 3}, false);
  for (std::size_t i = 0; i < 6; ++i) {
    auto c = rqaf_candidates(f, 0, i, 6);
    EXPECT_EQ(c.front(), i);
    std::sort(c.begin(), c.end());
    EXPECT_EQ(c, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  }
}

TEST(RqafCandidates, MatchesFullSort) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Tensor f = random_tensor(rng, {2, 16, 8}, false);
    for (std::size_t b = 0; b < 2; ++b) {
      const oracle::Vec slice(f.values().begin() + b * 128, f.values().begin() + (b + 1) * 128);
      for (std::size_t i = 0; i < 16; ++i) {
        EXPECT_EQ(rqaf_candidates(f, b, i, 3), oracle::candidates(slice, 16, 8, i, 3));
      }
    }
  }
}

TEST(RqafCandidates, TiesGoToLowerIndex) {
  const Tensor f({1, 4, 1}, {1, 2, 2, 2});
  EXPECT_EQ(rqaf_candidates(f, 0, 0, 3), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(rqaf_candidates(f, 0, 3, 2), (std::vector<std::size_t>{3, 1}));
}

TEST(RqafCandidates, RangeErrors) {
  const Tensor f = Tensor::zeros({1, 4, 2});
  EXPECT_THROW(rqaf_candidates(f, 0, 4, 1), std::out_of_range);
  EXPECT_THROW(rqaf_candidates(f, 1, 0, 1), std::out_of_range);
  EXPECT_THROW(rqaf_candidates(f, 0, 0, 0), std::out_of_range);
  EXPECT_THROW(rqaf_candidates(f, 0, 0, 5), std::out_of_range);
}

TEST(RqafWeights, HandExample) {
  Tape tape;
  const Tensor w = rqaf_weights(tape, Tensor({1, 1, 1}, {1}), Tensor({1, 2, 1}, {2, 4}));
  EXPECT_NEAR(w[0], 0.11920292202211755, 1e-15);
  EXPECT_NEAR(w[1], 0.88079707797788231, 1e-15);
}

TEST(RqafWeights, ZeroQuestionIsUniform) {
  Rng rng(3);
  Tape tape;
  const Tensor w = rqaf_weights(tape, Tensor::zeros({2, 3, 4}), random_tensor(rng, {2, 6, 4}, false));
  for (double v : w.values()) EXPECT_EQ(v, 1.0 / 6.0);
}

TEST(RqafWeights, RowsSumToOne) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Tape tape;
    const Tensor w = rqaf_weights(tape, random_tensor(rng, {3, 4, 2}, false, 3.0),
                                  random_tensor(rng, {3, 6, 2}, false, 3.0));
    for (std::size_t r = 0; r < 3; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 6; ++c) {
        EXPECT_GE(w[r * 6 + c], 0.0);
        s += w[r * 6 + c];
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(RqafFuse, MatchesLoop) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    ParameterStore store;
    const auto p = RqafParams::create(ParamInit(store, rng), 8, 2, 3, 16);
    const Tensor q = random_tensor(rng, {2, 3, 8}, false);
    const Tensor opt = random_tensor(rng, {2, 9, 8}, false);
    const Tensor sar = random_tensor(rng, {2, 9, 8}, false);
    Tape tape;
    RqafTrace trace;
    rqaf_fuse(tape, q, opt, sar, p, &trace);
    oracle::Vec weights;
    const auto expected = oracle::rqaf_weighted(q, opt, sar, p.w_question, p.w_optical, p.w_sar, 2, 3, &weights);
    EXPECT_LT(oracle::max_abs_diff(trace.weighted.values(), expected), 1e-12);
    EXPECT_LT(oracle::max_abs_diff(trace.weights.values(), weights), 1e-12);
  }
}

TEST(RqafFuse, WeightedSlicesLieInCandidateHull) {
  Rng rng(4);
  ParameterStore store;
  const auto p = RqafParams::create(ParamInit(store, rng), 4, 2, 2, 8);
  const Tensor q = random_tensor(rng, {1, 2, 4}, false, 2.0);
  Tape tape;
  RqafTrace trace;
  rqaf_fuse(tape, q, random_tensor(rng, {1, 4, 4}, false), random_tensor(rng, {1, 4, 4}, false), p, &trace);
  // Per location and channel, the fused value is bracketed by the candidates.
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t d = 0; d < 4; ++d) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t c = 0; c < 4; ++c) {
        const double v = trace.candidates[(i * 4 + c) * 4 + d];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      const double x = trace.weighted[i * 4 + d];
      EXPECT_GE(x, lo - 1e-12);
      EXPECT_LE(x, hi + 1e-12);
    }
  }
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(trace.optical_sets[0][i].front(), i);
    EXPECT_EQ(trace.sar_sets[0][i].front(), i);
  }
}

TEST(RqafFuse, ZeroQuestionAveragesIdenticalPools) {
  Rng rng(5);
  ParameterStore store;
  RqafParams p = RqafParams::create(ParamInit(store, rng), 4, 1, 2, 8);
  std::copy(p.w_optical.values().begin(), p.w_optical.values().end(), p.w_sar.mutable_values().begin());
  const Tensor img = random_tensor(rng, {1, 4, 4}, false);
  Tape tape;
  RqafTrace trace;
  rqaf_fuse(tape, Tensor::zeros({1, 2, 4}), img, img, p, &trace);
  Tape plain(Tape::Mode::kInference);
  const Tensor proj = ops::matmul(plain, img, p.w_optical);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(trace.optical_sets[0][i], trace.sar_sets[0][i]);
    for (std::size_t d = 0; d < 4; ++d) {
      double mean = 0.0;
      for (std::size_t j : trace.optical_sets[0][i]) mean += proj[j * 4 + d] / 2.0;
      EXPECT_NEAR(trace.weighted[i * 4 + d], mean, 1e-14);
    }
  }
}

TEST(Expert, ConstantPathGivesClassifierBias) {
  Rng rng(6);
  ParameterStore store;
  ExpertParams p = ExpertParams::create(ParamInit(store, rng), 8, 2, 16, 8, 5);
  p.zero_residual_branches();
  p.zero_classifier_output();
  auto b2 = p.classifier.b2.mutable_values();
  for (std::size_t c = 0; c < 5; ++c) b2[c] = 0.25 * static_cast<double>(c) - 0.5;
  Tape tape;
  const Tensor out = expert_predict(tape, random_tensor(rng, {3, 4, 8}, false), random_tensor(rng, {3, 9, 8}, false), p);
  ASSERT_EQ(out.shape(), (Shape{3, 1, 5}));
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], b2[i % 5]);
}

TEST(Expert, CrossAttentionRowsAreDistributions) {
  Rng rng(7);
  ParameterStore store;
  const ExpertParams p = ExpertParams::create(ParamInit(store, rng), 8, 4, 16, 8, 3);
  Tape tape;
  ExpertTrace trace;
  expert_predict(tape, random_tensor(rng, {2, 5, 8}, false), random_tensor(rng, {2, 16, 8}, false), p, &trace);
  for (const auto& layer : trace.cross) {
    ASSERT_EQ(layer.weights.shape(), (Shape{2, 4, 5, 16}));
    const Tensor sums = ops::sum_axis(tape, layer.weights, 3);
    for (double s : sums.values()) EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(AdaptiveFuse, ZeroGateGivesHalf) {
  const GateParams g{Tensor::zeros({9, 3}), Tensor::zeros({3})};
  Rng rng(8);
  Tape tape;
  const auto r = adaptive_fuse(tape, random_tensor(rng, {2, 1, 3}, false), random_tensor(rng, {2, 1, 3}, false),
                               random_tensor(rng, {2, 1, 3}, false), g);
  for (double v : r.gates.values()) EXPECT_EQ(v, 0.5);
}

TEST(AdaptiveFuse, AgreementPreservesArgmax) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    ParameterStore store;
    const auto g = GateParams::create(ParamInit(store, rng), 7);
    fixtures::randomize(store, rng, 2.0);
    const Tensor p = random_tensor(rng, {1, 1, 7}, false, 3.0);
    Tape tape;
    const auto r = adaptive_fuse(tape, p, p, p, g);
    const auto vals = p.values();
    const auto best = std::max_element(vals.begin(), vals.end()) - vals.begin();
    const auto dist = r.distribution.values();
    EXPECT_EQ(std::max_element(dist.begin(), dist.end()) - dist.begin(), best);
  }
}

TEST(AdaptiveFuse, MatchesLoop) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    ParameterStore store;
    const auto g = GateParams::create(ParamInit(store, rng), 5);
    fixtures::randomize(store, rng, 1.0);
    const Tensor po = random_tensor(rng, {3, 1, 5}, false, 2.0);
    const Tensor ps = random_tensor(rng, {3, 1, 5}, false, 2.0);
    const Tensor pf = random_tensor(rng, {3, 1, 5}, false, 2.0);
    Tape tape;
    const auto r = adaptive_fuse(tape, po, ps, pf, g);
    oracle::Vec gates;
    const auto expected = oracle::adaptive_fuse(po, ps, pf, g.w, g.b, &gates);
    EXPECT_LT(oracle::max_abs_diff(r.distribution.values(), expected), 1e-12);
    EXPECT_LT(oracle::max_abs_diff(r.gates.values(), gates), 1e-12);
    for (double v : r.gates.values()) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(AdaptiveFuse, RejectsMismatchedShapes) {
  const GateParams g{Tensor::zeros({6, 3}), Tensor::zeros({3})};
  Tape tape;
  EXPECT_THROW(adaptive_fuse(tape, Tensor::zeros({1, 1, 2}), Tensor::zeros({1, 1, 2}), Tensor::zeros({1, 1, 3}), g),
               ShapeError);
}

