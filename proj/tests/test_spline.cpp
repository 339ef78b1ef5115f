#include "mnri/error.hpp"
#include "mnri/spline.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mnri;
using namespace mnri::spline;

namespace {

std::vector<double> one_to_100() {
  std::vector<double> x(100);
  for (int i = 0; i < 100; ++i) x[i] = i + 1.0;
  return x;
}

std::vector<double> random_knots(std::mt19937& gen, int k) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<double> t(k);
  for (auto& v : t) v = u(gen);
  std::sort(t.begin(), t.end());
  for (int i = 1; i < k; ++i) t[i] = std::max(t[i], t[i - 1] + 0.1);
  return t;
}

Eigen::MatrixXd at(double x, const std::vector<double>& knots) {
  const double v[1] = {x};
  return rcs_basis(v, knots);
}

}  // namespace

TEST(DefaultKnots, OneToHundredFourKnots) {
  const auto t = default_knots(one_to_100(), 4);
  ASSERT_EQ(t.size(), 4u);
  EXPECT_NEAR(t[0], 5.95, 1e-12);
  EXPECT_NEAR(t[1], 35.65, 1e-12);
  EXPECT_NEAR(t[2], 65.35, 1e-12);
  EXPECT_NEAR(t[3], 95.05, 1e-12);
}

TEST(DefaultKnots, LevelsAndQuantileRule) {
  const auto l3 = knot_quantile_levels(3);
  EXPECT_EQ(l3, (std::vector<double>{0.10, 0.50, 0.90}));
  EXPECT_EQ(knot_quantile_levels(5).size(), 5u);
  EXPECT_THROW(knot_quantile_levels(6), Error);

  std::mt19937 gen(4);
  std::normal_distribution<double> nd;
  std::vector<double> x(57);
  for (auto& v : x) v = nd(gen);
  const auto t = default_knots(x, 3);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(t[i], oracle::quantile_type7(x, l3[i]));
}

TEST(DefaultKnots, TooFewDistinctValues) {
  const std::vector<double> constant(30, 2.5);
  try {
    default_knots(constant, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewDistinctValues);
  }
  // Four distinct values but tied quantiles.
  std::vector<double> lumpy(100, 0.0);
  lumpy[0] = 1.0;
  lumpy[1] = 2.0;
  lumpy[2] = 3.0;
  EXPECT_THROW(default_knots(lumpy, 4), Error);
}

TEST(RcsBasis, ColumnsAndFirstKnot) {
  const std::vector<double> knots = {5.95, 35.65, 65.35, 95.05};
  const auto x = one_to_100();
  const auto b = rcs_basis(x, knots);
  EXPECT_EQ(b.cols(), 3);
  EXPECT_EQ(b.rows(), 100);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(b(i, 0), x[i]);
  const auto first = at(knots[0], knots);
  EXPECT_EQ(first(0, 1), 0.0);
  EXPECT_EQ(first(0, 2), 0.0);
  EXPECT_EQ(rcs_basis(x, SplineBasis{{1, 2, 3, 4, 5}}).cols(), 4);
}

TEST(RcsBasis, InvalidKnots) {
  const std::vector<double> x = {1, 2, 3};
  EXPECT_THROW(rcs_basis(x, std::vector<double>{1, 2}), Error);
  EXPECT_THROW(rcs_basis(x, std::vector<double>{1, 3, 2}), Error);
  EXPECT_THROW(rcs_basis(x, std::vector<double>{1, 1, 2}), Error);
}

TEST(RcsBasis, HandValueBetweenKnots) {
  // k = 3, knots (0, 1, 2), x = 1.5: (1.5^3 - 0.5^3 * 2 / 1) / 4.
  const auto b = at(1.5, {0.0, 1.0, 2.0});
  EXPECT_NEAR(b(0, 1), (3.375 - 0.125 * 2.0) / 4.0, 1e-15);
}

TEST(Invariants, TailLinearity) {
  std::mt19937 gen(21);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 3 + trial % 5;
    const auto t = random_knots(gen, k);
    const double h = 0.37;
    for (double start : {t.front() - 10.0, t.back() + 0.5}) {
      for (int s = 0; s < 8; ++s) {
        const double x0 = start + s * h;
        const auto a = at(x0, t), b = at(x0 + h, t), c = at(x0 + 2 * h, t);
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
          EXPECT_LE(std::abs(a(0, j) - 2 * b(0, j) + c(0, j)), 1e-8) << "k=" << k << " col " << j;
        }
      }
    }
  }
}

TEST(Invariants, ContinuityAcrossKnots) {
  std::mt19937 gen(22);
  const double eps = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 3 + trial % 5;
    const auto t = random_knots(gen, k);
    for (double knot : t) {
      const auto lo2 = at(knot - 2 * eps, t), lo = at(knot - eps, t), mid = at(knot, t);
      const auto hi = at(knot + eps, t), hi2 = at(knot + 2 * eps, t);
      for (Eigen::Index j = 0; j < mid.cols(); ++j) {
        // Values, first and second differences agree on both sides.
        EXPECT_NEAR(lo(0, j), mid(0, j), 1e-5);
        EXPECT_NEAR(hi(0, j), mid(0, j), 1e-5);
        const double d_left = (mid(0, j) - lo(0, j)) / eps;
        const double d_right = (hi(0, j) - mid(0, j)) / eps;
        EXPECT_NEAR(d_left, d_right, 1e-4);
        const double s_left = (mid(0, j) - 2 * lo(0, j) + lo2(0, j)) / (eps * eps);
        const double s_right = (hi2(0, j) - 2 * hi(0, j) + mid(0, j)) / (eps * eps);
        EXPECT_NEAR(s_left, s_right, 1e-1);
      }
    }
  }
}

TEST(Invariants, AffineInvarianceOfColumnSpace) {
  std::mt19937 gen(23);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(80);
    for (auto& v : x) v = 2.0 * nd(gen);
    const auto t = default_knots(x, 3 + trial % 3);
    const double a = 0.5 + trial, b = -3.0 + trial;
    std::vector<double> x2(x.size()), t2(t.size());
    for (std::size_t i = 0; i < x.size(); ++i) x2[i] = a * x[i] + b;
    for (std::size_t i = 0; i < t.size(); ++i) t2[i] = a * t[i] + b;

    Eigen::MatrixXd m1(x.size(), t.size()), m2(x.size(), t.size());
    m1.col(0).setOnes();
    m2.col(0).setOnes();
    m1.rightCols(t.size() - 1) = rcs_basis(x, t);
    m2.rightCols(t.size() - 1) = rcs_basis(x2, t2);
    // Project each column of m2 onto span(m1).
    const Eigen::MatrixXd q = m1.householderQr().householderQ() * Eigen::MatrixXd::Identity(m1.rows(), m1.cols());
    const Eigen::MatrixXd resid = m2 - q * (q.transpose() * m2);
    EXPECT_LE(resid.cwiseAbs().maxCoeff() / m2.cwiseAbs().maxCoeff(), 1e-8);
  }
}
