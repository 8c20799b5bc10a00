#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sync_fixtures.hpp"
#include "toxvid/sync.hpp"

using namespace toxvid;
using V = ad::Var<double>;

TEST(Conv1d, MatchesLoopOracle) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    fixtures::ConvInstance c(derive_seed(s, "conv"));
    auto out = ad::conv1d_seq<double>(V::constant(c.x), V::constant(c.kernel), V::constant(c.bias), c.ks, c.stride, c.pad);
    EXPECT_LE(oracle::max_abs_diff(c.expected(), out.value()), 1e-10) << "seed " << s;
  }
}

TEST(Conv1d, OutputLength) {
  auto x = V::constant(Matrix<double>(16, 2));
  auto out = ad::conv1d_seq<double>(x, V::constant(Matrix<double>(6, 3)), V::constant(Matrix<double>(1, 3)), 3, 2, 1);
  EXPECT_EQ(out.rows(), 8u);
  EXPECT_THROW(ad::conv1d_seq<double>(V::constant(Matrix<double>(1, 2)), V::constant(Matrix<double>(6, 3)),
                                      V::constant(Matrix<double>(1, 3)), 3, 1, 0),
               std::invalid_argument);
}

TEST(AbstractFeatures, MatchesLoopOracleAndHasTargetShape) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    fixtures::AbstractInstance a(derive_seed(s, "abstract"));
    auto out = abstract_features<double>(V::constant(a.z), a.params, a.target);
    EXPECT_EQ(out.rows(), a.target);
    EXPECT_EQ(out.cols(), a.params.proj_weight.cols());
    EXPECT_LE(oracle::max_abs_diff(a.expected(), out.value()), 1e-10) << "seed " << s;
  }
}

TEST(AbstractFeatures, SingleFrameInput) {
  fixtures::AbstractInstance a(3);
  a.z = Matrix<double>(1, a.z.cols(), 0.5);
  EXPECT_EQ(abstract_features<double>(V::constant(a.z), a.params, 4).rows(), 4u);
}

TEST(Mhca, MatchesLoopOracle) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    fixtures::MhcaInstance m(derive_seed(s, "mhca"));
    auto out = mhca_detailed<double>(V::constant(m.q), V::constant(m.kv), &m.mask, m.params);
    const auto want = m.expected();
    EXPECT_LE(oracle::max_abs_diff(want.output, out.output.value()), 1e-10) << "seed " << s;
    for (std::size_t h = 0; h < want.weights.size(); ++h)
      EXPECT_LE(oracle::max_abs_diff(want.weights[h], out.weights[h]), 1e-12);
  }
}

TEST(Mhca, RowsSumToOneAndMaskedKeysAreIgnored) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    fixtures::MhcaInstance m(derive_seed(s, "mhca-mask"));
    auto base = mhca_detailed<double>(V::constant(m.q), V::constant(m.kv), &m.mask, m.params);
    for (const auto& w : base.weights)
      for (std::size_t r = 0; r < w.rows(); ++r) {
        double sum = 0;
        for (std::size_t c = 0; c < w.cols(); ++c) {
          sum += w(r, c);
          if (!m.mask[c]) {
            EXPECT_EQ(w(r, c), 0.0);
          }
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
      }
    Matrix<double> perturbed = m.kv;
    Rng rng(s);
    for (std::size_t r = 0; r < perturbed.rows(); ++r)
      if (!m.mask[r])
        for (std::size_t c = 0; c < perturbed.cols(); ++c) perturbed(r, c) += rng.uniform(-100, 100);
    auto out = mhca<double>(V::constant(m.q), V::constant(perturbed), &m.mask, m.params);
    EXPECT_EQ(out.value(), base.output.value());
  }
}

TEST(Mhca, OutputTakesQueryLengthAndRejectsFullMask) {
  fixtures::MhcaInstance m(9);
  auto out = mhca<double>(V::constant(m.q), V::constant(m.kv), &m.mask, m.params);
  EXPECT_EQ(out.rows(), m.q.rows());
  EXPECT_EQ(out.cols(), m.kv.cols());
  RowMask none(m.kv.rows(), 0);
  EXPECT_THROW(mhca<double>(V::constant(m.q), V::constant(m.kv), &none, m.params), std::invalid_argument);
}

TEST(Attention, HeadsMustDivideWidth) {
  ParameterSet<double> ps;
  Rng rng(0);
  EXPECT_THROW(AttentionParams<double>::create(ps, "a", 6, 4, rng), std::invalid_argument);
}

TEST(GatedFusion, MatchesLoopOracle) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    fixtures::GateInstance g(derive_seed(s, "gate"));
    auto out = gated_fusion<double>(V::constant(g.cv), V::constant(g.ca), g.params);
    const auto want = g.expected();
    EXPECT_LE(oracle::max_abs_diff(want.joint, out.joint.value()), 1e-10);
    EXPECT_LE(oracle::max_abs_diff(want.alpha, out.alpha.value()), 1e-12);
  }
}

TEST(GatedFusion, AlphaOpenIntervalAndJointWithinBounds) {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    fixtures::GateInstance g(derive_seed(s, "gate-bounds"), s % 2 ? 50.0 : 1.0);
    auto out = gated_fusion<double>(V::constant(g.cv), V::constant(g.ca), g.params);
    const auto& a = out.alpha.value();
    const auto& j = out.joint.value();
    for (std::size_t k = 0; k < a.size(); ++k) {
      ASSERT_GT(a[k], 0.0);
      ASSERT_LT(a[k], 1.0);
      ASSERT_GE(j[k], std::min(g.cv[k], g.ca[k]));
      ASSERT_LE(j[k], std::max(g.cv[k], g.ca[k]));
    }
  }
}

TEST(GatedFusion, ShapeMismatch) {
  fixtures::GateInstance g(1);
  EXPECT_THROW(gated_fusion<double>(V::constant(g.cv), V::constant(Matrix<double>(g.cv.rows() + 1, g.cv.cols())), g.params),
               ShapeError);
}
