#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck_suite.hpp"
#include "oracles.hpp"
#include "toxvid/autodiff.hpp"
#include "toxvid/gradcheck.hpp"
#include "toxvid/matrix.hpp"
#include "toxvid/parameters.hpp"
#include "toxvid/rng.hpp"

using namespace toxvid;
using V = ad::Var<double>;

TEST(Matrix, ShapeChecks) {
  Matrix<double> a(2, 3), b(3, 2);
  EXPECT_THROW(a += b, ShapeError);
  EXPECT_THROW((Matrix<double>(2, 2, std::vector<double>{1, 2, 3})), ShapeError);
  Matrix<double> c{{1, 2}, {3, 4}};
  EXPECT_EQ(c(1, 0), 3);
  EXPECT_EQ(Matrix<double>::identity(3)(2, 2), 1);
  EXPECT_EQ(c.shape(), "2x2");
}

TEST(Rng, DerivedSeedsAreStableAndDistinct) {
  EXPECT_EQ(derive_seed(7, "split", 3), derive_seed(7, "split", 3));
  EXPECT_NE(derive_seed(7, "split", 3), derive_seed(7, "split", 4));
  EXPECT_NE(derive_seed(7, "split"), derive_seed(7, "init"));
  Rng a(11), b(11);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  Rng r(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(r.below(7), 7u);
  }
}

TEST(Autodiff, ForwardValues) {
  auto a = V::constant({{1, 2}, {3, 4}});
  auto b = V::constant({{5, 6}, {7, 8}});
  EXPECT_EQ(ad::matmul<double>(a, b).value(), (Matrix<double>{{19, 22}, {43, 50}}));
  EXPECT_EQ(ad::matmul_nt<double>(a, b).value(), (Matrix<double>{{17, 23}, {39, 53}}));
  EXPECT_EQ(ad::transpose<double>(a).value(), (Matrix<double>{{1, 3}, {2, 4}}));
  EXPECT_EQ(ad::sum<double>(a).item(), 10);
  EXPECT_DOUBLE_EQ(ad::sigmoid<double>(V::constant({{0.0}})).item(), 0.5);
  EXPECT_NEAR(ad::gelu<double>(V::constant({{1.0}})).item(), 0.8411919906, 1e-9);
}

TEST(Autodiff, SoftmaxRowsSumToOneAndMaskedColumnsAreZero) {
  auto x = V::constant({{1000, 1001, -5}, {0.5, 0.25, 3}});
  RowMask mask{1, 1, 0};
  auto s = ad::masked_rowwise_softmax<double>(x, &mask).value();
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_NEAR(s(r, 0) + s(r, 1) + s(r, 2), 1.0, 1e-15);
    EXPECT_EQ(s(r, 2), 0.0);
  }
  RowMask none{0, 0, 0};
  EXPECT_THROW(ad::masked_rowwise_softmax<double>(x, &none), std::invalid_argument);
}

TEST(Autodiff, CrossEntropyIsStableForLargeLogits) {
  auto l = ad::cross_entropy<double>(V::constant({{1000, 0}}), 1);
  EXPECT_NEAR(l.item(), 1000.0, 1e-9);
  EXPECT_THROW(ad::cross_entropy<double>(V::constant({{1, 2}}), 2), std::out_of_range);
}

TEST(Autodiff, ConvexMixStaysWithinBounds) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    auto alpha = ad::sigmoid<double>(V::constant(oracle::random_matrix(3, 3, rng, 40.0)));
    auto a = V::constant(oracle::random_matrix(3, 3, rng, 1e3));
    auto b = V::constant(oracle::random_matrix(3, 3, rng, 1e-3));
    auto j = ad::convex_mix<double>(alpha, a, b).value();
    for (std::size_t k = 0; k < j.size(); ++k) {
      EXPECT_GE(j[k], std::min(a.value()[k], b.value()[k]));
      EXPECT_LE(j[k], std::max(a.value()[k], b.value()[k]));
    }
  }
}

TEST(Autodiff, ShapeErrorsAreReported) {
  auto a = V::constant(Matrix<double>(2, 3));
  auto b = V::constant(Matrix<double>(2, 3));
  EXPECT_THROW(ad::matmul<double>(a, b), ShapeError);
  EXPECT_THROW(ad::add<double>(a, V::constant(Matrix<double>(3, 2))), ShapeError);
  EXPECT_THROW(ad::conv1d_seq<double>(a, V::constant(Matrix<double>(4, 2)), V::constant(Matrix<double>(1, 2)), 3, 1, 0),
               ShapeError);
  EXPECT_THROW(ad::segment_mean_pool<double>(a, 0), std::invalid_argument);
  const std::size_t ids[] = {5};
  EXPECT_THROW(ad::embedding_lookup<double>(a, ids), std::out_of_range);
}

TEST(Autodiff, BackwardRequiresScalarRecordedLoss) {
  auto p = V::parameter({{1, 2}});
  EXPECT_THROW(ad::backward<double>(p), ShapeError);
  EXPECT_THROW(ad::backward<double>(V::constant({{1.0}})), std::logic_error);
}

TEST(Autodiff, ParameterGradientsAccumulateUntilZeroed) {
  auto p = V::parameter({{3.0}});
  auto loss = [&] { return ad::sum<double>(ad::hadamard<double>(p, p)); };
  ad::backward<double>(loss());
  EXPECT_DOUBLE_EQ(p.grad()[0], 6.0);
  ad::backward<double>(loss());
  EXPECT_DOUBLE_EQ(p.grad()[0], 12.0);
  p.zero_grad();
  EXPECT_DOUBLE_EQ(p.grad()[0], 0.0);
}

TEST(Autodiff, SharedSubgraphGradientsAreSummed) {
  auto x = V::parameter({{2.0}});
  auto y = ad::hadamard<double>(x, x);  // x^2
  auto z = ad::add<double>(y, ad::hadamard<double>(y, x));  // x^2 + x^3
  ad::backward<double>(ad::sum<double>(z));
  EXPECT_DOUBLE_EQ(x.grad()[0], 2 * 2.0 + 3 * 4.0);
}

TEST(Autodiff, SegmentPoolBoundsMatchAdaptivePooling) {
  for (std::size_t len = 1; len < 20; ++len)
    for (std::size_t target = 1; target < 10; ++target)
      for (std::size_t i = 0; i < target; ++i) {
        const auto [b, e] = ad::pool_segment(i, len, target);
        EXPECT_EQ(b, static_cast<std::size_t>(std::floor(double(i) * len / target)));
        EXPECT_EQ(e, static_cast<std::size_t>(std::ceil(double(i + 1) * len / target)));
        EXPECT_LT(b, e);
      }
}

TEST(GradCheck, RelativeErrorFloor) {
  EXPECT_EQ(relative_error(1.0, 1.0, 1e-7), 0.0);
  EXPECT_NEAR(relative_error(1.0, 1.1, 1e-7), 0.1 / 1.1, 1e-15);
  EXPECT_NEAR(relative_error(0.0, 1e-9, 1e-7), 1e-2, 1e-12);
  EXPECT_NEAR(relative_error(0.0, 1e-9, GradCheckOptions{}.abs_floor), 1e-3, 1e-12);
}

TEST(GradCheck, DetectsAWrongGradient) {
  ParameterSet<double> ps;
  auto x = ps.add("x", Matrix<double>{{0.7}});
  // Build a node whose recorded backward is deliberately off by a factor of two.
  auto wrong = [&] {
    Matrix<double> v{{x.value()[0] * x.value()[0]}};
    return ad::detail::record<double>(std::move(v), "wrong", {x},
                                      [](ad::Node<double>& self) { self.inputs[0]->grad[0] += 4.0 * self.inputs[0]->value[0] * self.grad[0]; });
  };
  auto report = grad_check(wrong, ps);
  EXPECT_FALSE(report.all_passed());
}

class OpGradients : public ::testing::TestWithParam<std::size_t> {};

TEST_P(OpGradients, MatchCentralDifferences) {
  const auto cases = suite::op_cases();
  const auto& c = cases.at(GetParam());
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto report = c.run(derive_seed(seed, c.name));
    EXPECT_TRUE(report.all_passed()) << c.name << " seed " << seed << " worst " << report.worst();
  }
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradients, ::testing::Range<std::size_t>(0, suite::op_cases().size()),
                         [](const auto& info) { return suite::op_cases().at(info.param).name; });

TEST(Initializers, XavierBoundsAndDeterminism) {
  Rng a(1), b(1);
  const auto m = init::xavier_uniform<double>(8, 4, a);
  EXPECT_EQ(m, init::xavier_uniform<double>(8, 4, b));
  const double bound = std::sqrt(6.0 / 12.0);
  for (double v : m.flat()) EXPECT_LE(std::abs(v), bound);
}

TEST(ParameterSet, RejectsDuplicatesAndMismatchedAssign) {
  ParameterSet<double> ps;
  ps.add("w", Matrix<double>(2, 2));
  EXPECT_THROW(ps.add("w", Matrix<double>(1, 1)), std::invalid_argument);
  EXPECT_THROW(ps.assign({Matrix<double>(1, 2)}), ShapeError);
  EXPECT_THROW(ps.assign({}), std::invalid_argument);
  EXPECT_EQ(ps.scalar_count(), 4u);
}
