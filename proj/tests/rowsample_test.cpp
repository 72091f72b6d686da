#include "commopt/exactnum/leverage.hpp"
#include "commopt/instances/generators.hpp"
#include "commopt/rowsample/leverage.hpp"

#include <gtest/gtest.h>

using namespace commopt;
using namespace commopt::rowsample;

namespace {

std::vector<ExactMatrix> deal(const ExactMatrix& a, std::size_t s) {
  std::vector<std::vector<std::size_t>> idx(s);
  for (std::size_t r = 0; r < a.rows(); ++r) idx[r % s].push_back(r);
  std::vector<ExactMatrix> out;
  for (auto& v : idx) out.push_back(v.empty() ? ExactMatrix(0, a.cols()) : a.select_rows(v));
  return out;
}

}  // namespace

TEST(Plan, RoundsUpToPowersOfTwo) {
  auto plan = make_plan({3.0, 0.3, 1.0, 0.0}, Norm::l2);
  EXPECT_EQ(plan.p[0], 4.0);
  EXPECT_GE(plan.p[1], 0.3);
  EXPECT_EQ(plan.p[2], 1.0);
  EXPECT_EQ(plan.p[3], 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    double e = std::log2(plan.scale(i));
    EXPECT_EQ(e, std::round(e));
  }
  auto l1 = make_plan({3.0, 0.3}, Norm::l1);
  EXPECT_EQ(l1.p[0], 4.0);
  EXPECT_EQ(l1.p[1], 0.5);
}

TEST(Sampler, SingleRowPlan) {
  SamplingPlan plan{{4.0}, Norm::l2};
  auto s = build_sampler(plan, 1);
  ASSERT_EQ(s.rows(), 4u);
  Eigen::MatrixXd d = s.dense();
  EXPECT_DOUBLE_EQ((d.transpose() * d)(0, 0), 1.0);
  for (std::size_t r = 0; r < s.rows(); ++r) EXPECT_DOUBLE_EQ(s.scale[r], 0.5);
}

TEST(Sampler, UniformPlanIsUnbiased) {
  SamplingPlan plan{{2.0, 2.0, 2.0, 2.0}, Norm::l2};
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(4, 4);
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    auto s = build_sampler(plan, 1000 + t);
    Eigen::MatrixXd d = s.dense();
    EXPECT_EQ(s.rows(), 8u);
    mean += d.transpose() * d;
  }
  mean /= draws;
  EXPECT_LT((mean - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Sampler, DegenerateL1Plan) {
  SamplingPlan plan{{4.0, 0.0}, Norm::l1};
  auto s = build_sampler(plan, 3);
  for (auto i : s.index) EXPECT_EQ(i, 0u);
  Eigen::VectorXd y(2);
  y << -3.0, 7.0;
  EXPECT_DOUBLE_EQ((s.dense() * y).lpNorm<1>(), 3.0);
  EXPECT_THROW(build_sampler(SamplingPlan{{0.0}, Norm::l1}, 1), std::invalid_argument);
}

TEST(Sampler, OneNonzeroPerRow) {
  auto s = build_sampler(SamplingPlan{{1.5, 2.5, 3.0}, Norm::l1}, 9);
  Eigen::MatrixXd d = s.dense();
  for (Eigen::Index r = 0; r < d.rows(); ++r) EXPECT_EQ((d.row(r).array() != 0).count(), 1);
}

TEST(LeverageDouble, MatchesExactOracle) {
  RngStream rng(2);
  ExactMatrix a = instances::random_matrix(12, 3, 6, rng);
  auto exact = leverage_scores(a);
  auto approx = leverage_double(to_eigen(a), to_eigen(a));
  for (std::size_t i = 0; i < exact.size(); ++i) EXPECT_NEAR(approx[i], exact[i]->get_d(), 1e-9);
  auto inf = leverage_double(to_eigen(ExactMatrix{{0, 1}}), to_eigen(ExactMatrix{{1, 0}}));
  EXPECT_TRUE(std::isinf(inf[0]));
}

TEST(LeverageProtocol, BaseCaseIsExact) {
  Network net(Mode::coordinator, 2);
  auto blocks = deal(ExactMatrix::identity(3), 2);
  auto res = leverage_protocol(blocks, 3, net, RngStream(1));
  EXPECT_EQ(res.reduced, stack(blocks, 3));
  for (const auto& v : res.step_scores)
    for (double t : v) EXPECT_NEAR(t, 1.0, 1e-12);
  EXPECT_GT(net.transcript().total_bits(), 0u);
}

TEST(LeverageProtocol, ConstantFactorOnRandomMatrix) {
  RngStream rng(5);
  ExactMatrix a = instances::random_matrix(400, 5, 8, rng);
  auto exact = leverage_scores(a);
  auto blocks = deal(a, 4);
  Network net(Mode::blackboard, 4);
  auto res = leverage_protocol(blocks, 5, net, RngStream(17));
  EXPECT_GT(res.levels, 1u);
  int good_step = 0, good_final = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t k = 0; k < blocks[i].rows(); ++k) {
      double t = exact[k * 4 + i]->get_d();
      double r1 = res.step_scores[i][k] / t, r2 = res.scores[i][k] / t;
      good_step += r1 >= 1.0 / 8 && r1 <= 8;
      good_final += r2 >= 1.0 / 8 && r2 <= 8;
    }
  }
  EXPECT_GE(good_step, 360);
  EXPECT_GE(good_final, 360);
}

TEST(Lewis, SquareInvertibleIsAllOnes) {
  ExactMatrix a{{2, 1}, {1, 3}};
  Network net(Mode::coordinator, 2);
  auto res = lewis_protocol(deal(a, 2), 2, 2, net, RngStream(4));
  for (const auto& v : res.weights)
    for (double w : v) EXPECT_NEAR(w, 1.0, 1e-9);
}

TEST(Lewis, TwoEqualRowsConvergeToHalf) {
  Network net(Mode::coordinator, 2);
  auto res = lewis_protocol(deal(ExactMatrix{{1}, {1}}, 2), 1, 1, net, RngStream(4));
  const double tol = std::exp2(1.0 / std::exp2(static_cast<double>(res.iterations)));
  for (const auto& v : res.weights) {
    EXPECT_LE(v[0], 0.5 * tol);
    EXPECT_GE(v[0], 0.5 / tol);
  }
}

TEST(Lewis, SumNearRankAndWeightsInUnitInterval) {
  RngStream rng(6);
  ExactMatrix a = instances::random_matrix(150, 3, 8, rng);
  Network net(Mode::blackboard, 3);
  auto res = lewis_protocol(deal(a, 3), 3, 8, net, RngStream(8));
  double sum = 0;
  for (const auto& v : res.weights)
    for (double w : v) {
      sum += w;
      EXPECT_GT(w, 0.0);
      EXPECT_LE(w, 1.0);
    }
  EXPECT_GE(sum, 1.5);
  EXPECT_LE(sum, 6.0);
  for (std::size_t t = 0; t < res.iterations; ++t) {
    EXPECT_GT(res.min_weight_per_iteration[t], 0.0);
    EXPECT_LE(res.max_weight_per_iteration[t], 1.0);
  }
  EXPECT_THROW(lewis_protocol(deal(ExactMatrix{{0, 0}, {1, 1}}, 1), 2, 1, net, RngStream(1)), std::invalid_argument);
}

TEST(LewisLocal, MatchesDistributedOnSmallInput) {
  ExactMatrix a{{1}, {1}, {1}, {1}};
  auto w = lewis_weights_local(to_eigen(a));
  for (double v : w) EXPECT_NEAR(v, 0.25, 1e-6);
}
