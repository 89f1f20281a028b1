#include "dloe/qp_solver.hpp"

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace dloe {
namespace {

using test::Rng;

void ExpectFeasible(const SimplexQP& qp, const VecX& x) {
  ASSERT_EQ(x.size(), qp.size());
  EXPECT_GE(x.minCoeff(), 0.0);
  EXPECT_NEAR(x.sum(), qp.sum_target, 1e-12 * qp.sum_target);
  for (int k : qp.fixed_zero) EXPECT_EQ(x(k), 0.0);
}

TEST(SimplexQP, UniqueFeasiblePoint) {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    SimplexQP qp = test::RandomSimplexQP(2, rng);
    qp.fixed_zero = {0};
    const VecX x = SolveSimplexQP(qp);
    EXPECT_EQ(x(0), 0.0);
    EXPECT_DOUBLE_EQ(x(1), 1.0);
  }
}

TEST(SimplexQP, IdentityHessianGivesBarycenter) {
  SimplexQP qp;
  qp.hessian = MatX::Identity(3, 3);
  qp.linear = VecX::Zero(3);
  const VecX x = SolveSimplexQP(qp);
  EXPECT_LT((x - VecX::Constant(3, 1.0 / 3)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SimplexQP, LinearObjectivePicksCheapestVertex) {
  SimplexQP qp;
  qp.hessian = MatX::Zero(4, 4);
  qp.linear = Eigen::Vector4d(0.3, -0.2, 0.5, -0.1);
  qp.sum_target = 2.0;
  const VecX x = SolveSimplexQP(qp);
  EXPECT_DOUBLE_EQ(x(1), 2.0);
  EXPECT_DOUBLE_EQ(x.sum(), 2.0);
}

TEST(SimplexQP, MatchesGridOracle) {
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const SimplexQP qp = test::RandomSimplexQP(2 + trial % 4, rng);
    const SimplexQPResult r = SolveSimplexQPDetailed(qp);
    ExpectFeasible(qp, r.x);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.objective, test::GridMinimum(qp, 0.01) + 1e-6);
    EXPECT_NEAR(r.objective, test::RefinedGridMinimum(qp), 1e-6);
    EXPECT_LT(SimplexKKTResidual(qp, r.x), 1e-8);
  }
}

TEST(SimplexQP, ScaledSumTarget) {
  Rng rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    SimplexQP qp = test::RandomSimplexQP(3 + trial % 3, rng);
    qp.sum_target = test::Uniform(rng, 0.05, 3.0);
    const VecX x = SolveSimplexQP(qp);
    ExpectFeasible(qp, x);
    EXPECT_LT(SimplexKKTResidual(qp, x), 1e-8);
  }
}

TEST(SimplexQP, LargerProblemsSatisfyKkt) {
  Rng rng(44);
  for (int trial = 0; trial < 30; ++trial) {
    const SimplexQP qp = test::RandomSimplexQP(10 + trial, rng);
    const SimplexQPResult r = SolveSimplexQPDetailed(qp);
    ExpectFeasible(qp, r.x);
    EXPECT_TRUE(r.converged);
    EXPECT_LT(SimplexKKTResidual(qp, r.x), 1e-8);
  }
}

TEST(SimplexQP, DoesNotIncreaseFromFeasibleStart) {
  Rng rng(45);
  for (int trial = 0; trial < 50; ++trial) {
    const SimplexQP qp = test::RandomSimplexQP(2 + trial % 6, rng);
    VecX start = VecX::Zero(qp.size());
    for (int j = 0; j < qp.size(); ++j) start(j) = test::Uniform(rng);
    for (int k : qp.fixed_zero) start(k) = 0.0;
    start *= qp.sum_target / start.sum();
    const SimplexQPResult r = SolveSimplexQPDetailed(qp, start);
    ExpectFeasible(qp, r.x);
    EXPECT_LE(r.objective, qp.Objective(start) + 1e-12);
  }
}

TEST(SimplexQP, WarmStartAtOptimumStays) {
  Rng rng(46);
  for (int trial = 0; trial < 20; ++trial) {
    const SimplexQP qp = test::RandomSimplexQP(5, rng);
    const VecX x = SolveSimplexQP(qp);
    const VecX y = SolveSimplexQP(qp, x);
    EXPECT_NEAR(qp.Objective(y), qp.Objective(x), 1e-12);
  }
}

TEST(SimplexQP, InfeasibleStartIsIgnored) {
  SimplexQP qp;
  qp.hessian = MatX::Identity(3, 3);
  qp.linear = VecX::Zero(3);
  const VecX x = SolveSimplexQP(qp, VecX::Constant(3, 5.0));
  EXPECT_LT((x - VecX::Constant(3, 1.0 / 3)).norm(), 1e-14);
}

TEST(SimplexQP, Deterministic) {
  Rng rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    const SimplexQP qp = test::RandomSimplexQP(6, rng);
    const VecX a = SolveSimplexQP(qp);
    const VecX b = SolveSimplexQP(qp);
    EXPECT_EQ(a, b);
  }
}

TEST(SimplexQP, TiesGoToLowestIndex) {
  SimplexQP qp;
  qp.hessian = MatX::Zero(3, 3);
  qp.linear = VecX::Constant(3, 1.0);
  const VecX x = SolveSimplexQP(qp);
  EXPECT_DOUBLE_EQ(x(0), 1.0);
}

TEST(SimplexQP, Errors) {
  SimplexQP qp;
  qp.hessian = MatX::Identity(2, 2);
  qp.linear = VecX::Zero(2);
  qp.fixed_zero = {0, 1};
  EXPECT_THROW(SolveSimplexQP(qp), Error);

  qp.fixed_zero.clear();
  qp.sum_target = 0.0;
  EXPECT_THROW(SolveSimplexQP(qp), Error);

  qp.sum_target = 1.0;
  qp.hessian << 1, 0, 0, -1;
  EXPECT_THROW(SolveSimplexQP(qp), Error);

  qp.hessian << 1, 2, 0, 1;
  EXPECT_THROW(SolveSimplexQP(qp), Error);

  qp.hessian = MatX::Identity(3, 3);
  EXPECT_THROW(SolveSimplexQP(qp), Error);
}

TEST(SimplexQP, NonconvexMessage) {
  SimplexQP qp;
  qp.hessian.resize(2, 2);
  qp.hessian << 1, 3, 3, 1;
  qp.linear = VecX::Zero(2);
  try {
    SolveSimplexQP(qp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "nonconvex subproblem");
  }
}

}  // namespace
}  // namespace dloe
