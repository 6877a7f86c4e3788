#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "gsfm/errors.h"
#include "gsfm/rotation.h"
#include "gsfm/solver.h"

namespace gsfm {
namespace {

// r = a x + b on a scalar block.
class AffineCost : public CostFunction {
 public:
  AffineCost(double a, double b) : CostFunction(1, {1}), a_(a), b_(b) {}
  void Evaluate(const double* const* p, double* r, double** J) const override {
    r[0] = a_ * p[0][0] + b_;
    if (J && J[0]) J[0][0] = a_;
  }

 private:
  double a_, b_;
};

class RosenbrockCost : public CostFunction {
 public:
  RosenbrockCost() : CostFunction(2, {2}) {}
  void Evaluate(const double* const* p, double* r, double** J) const override {
    const double x = p[0][0], y = p[0][1];
    r[0] = 1.0 - x;
    r[1] = 10.0 * (y - x * x);
    if (J && J[0]) {
      J[0][0] = -1.0;
      J[0][1] = 0.0;
      J[0][2] = -20.0 * x;
      J[0][3] = 10.0;
    }
  }
};

// Exponential fit residual y - a exp(b t) over blocks (a) and (b).
class ExpCost : public CostFunction {
 public:
  ExpCost(double t, double y) : CostFunction(1, {1, 1}), t_(t), y_(y) {}
  void Evaluate(const double* const* p, double* r, double** J) const override {
    const double e = std::exp(p[1][0] * t_);
    r[0] = y_ - p[0][0] * e;
    if (!J) return;
    if (J[0]) J[0][0] = -e;
    if (J[1]) J[1][0] = -p[0][0] * t_ * e;
  }

 private:
  double t_, y_;
};

// Rotated vector minus target, over a rotation block.
class RotateCost : public CostFunction {
 public:
  RotateCost(const Vector3d& v, const Vector3d& target)
      : CostFunction(3, {3}), v_(v), target_(target) {}
  void Evaluate(const double* const* p, double* r, double** J) const override {
    const Rotation q(p[0][0], p[0][1], p[0][2], p[0][3]);
    const Vector3d rv = q * v_;
    Eigen::Map<Vector3d> residual(r);
    residual = rv - target_;
    if (J && J[0]) {
      Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> M(J[0]);
      M = -CrossMatrix(rv);
    }
  }

 private:
  Vector3d v_, target_;
};

class NanCost : public CostFunction {
 public:
  NanCost() : CostFunction(1, {1}) {}
  void Evaluate(const double* const* p, double* r, double** J) const override {
    r[0] = p[0][0] > 0.5 ? std::numeric_limits<double>::quiet_NaN() : p[0][0] - 1.0;
    if (J && J[0]) J[0][0] = 1.0;
  }
};

TEST(Solve, LinearScalar) {
  double x = 0.0;
  Problem problem;
  problem.AddParameterBlock(&x, 1);
  problem.AddResidualBlock(std::make_shared<AffineCost>(1.0, -3.0), LossFunction::Trivial(),
                           {&x});
  const SolverReport report = Solve(SolverOptions{}, &problem);
  EXPECT_EQ(report.termination, TerminationReason::kConverged);
  EXPECT_NEAR(x, 3.0, 1e-10);
}

TEST(Solve, Rosenbrock) {
  double xy[2] = {-1.2, 1.0};
  Problem problem;
  problem.AddParameterBlock(xy, 2);
  problem.AddResidualBlock(std::make_shared<RosenbrockCost>(), LossFunction::Trivial(), {xy});
  SolverOptions options;
  options.max_iterations = 200;
  const SolverReport report = Solve(options, &problem);
  EXPECT_EQ(report.termination, TerminationReason::kConverged);
  EXPECT_NEAR(xy[0], 1.0, 1e-8);
  EXPECT_NEAR(xy[1], 1.0, 1e-8);
  EXPECT_LE(report.final_cost, report.initial_cost);
}

TEST(LossFunction, HuberCost) {
  double a = 0.5, b = 10.0;
  Problem problem;
  problem.AddParameterBlock(&a, 1);
  problem.AddParameterBlock(&b, 1);
  problem.AddResidualBlock(std::make_shared<AffineCost>(1.0, 0.0), LossFunction::Huber(1.0),
                           {&a});
  problem.AddResidualBlock(std::make_shared<AffineCost>(1.0, 0.0), LossFunction::Huber(1.0),
                           {&b});
  EXPECT_DOUBLE_EQ(problem.EvaluateCost(), 0.5 * 0.25 + (1.0 * 10.0 - 0.5));
  EXPECT_DOUBLE_EQ(problem.EvaluateCost(), 9.625);
  EXPECT_THROW(LossFunction::Huber(0.0), InputError);
}

TEST(LossFunction, WeightReproducesRobustGradient) {
  const LossFunction huber = LossFunction::Huber(0.7);
  for (const double r : {0.1, 0.7, 1.5, 20.0}) {
    const double h = 1e-6;
    const double derivative = (huber.Cost(r + h) - huber.Cost(r - h)) / (2 * h);
    EXPECT_NEAR(huber.Weight(r) * huber.Weight(r) * r, derivative, 1e-6);
  }
  EXPECT_DOUBLE_EQ(LossFunction::Trivial().Weight(5.0), 1.0);
}

TEST(Solve, AllFixed) {
  double x = 2.0;
  Problem problem;
  problem.AddParameterBlock(&x, 1);
  problem.AddResidualBlock(std::make_shared<AffineCost>(1.0, -3.0), LossFunction::Trivial(),
                           {&x});
  problem.SetParameterBlockConstant(&x);
  const SolverReport report = Solve(SolverOptions{}, &problem);
  EXPECT_EQ(report.termination, TerminationReason::kAllFixed);
  EXPECT_EQ(report.iterations, 0);
  EXPECT_EQ(x, 2.0);
}

TEST(Solve, FixedBlockNeverMoves) {
  double a = 1.0, b = 0.0;
  Problem problem;
  problem.AddParameterBlock(&a, 1);
  problem.AddParameterBlock(&b, 1);
  for (int k = 0; k < 10; ++k) {
    problem.AddResidualBlock(std::make_shared<ExpCost>(0.1 * k, 2.0 * std::exp(0.3 * 0.1 * k)),
                             LossFunction::Trivial(), {&a, &b});
  }
  problem.SetParameterBlockConstant(&a);
  Solve(SolverOptions{}, &problem);
  EXPECT_EQ(a, 1.0);
  EXPECT_TRUE(problem.IsParameterBlockConstant(&a));
}

TEST(Solve, LowerBoundProjected) {
  double x = 5.0;
  Problem problem;
  problem.AddParameterBlock(&x, 1);
  problem.AddResidualBlock(std::make_shared<AffineCost>(1.0, 3.0), LossFunction::Trivial(),
                           {&x});
  problem.SetLowerBound(&x, 0, 1e-12);
  Solve(SolverOptions{}, &problem);
  EXPECT_GE(x, 1e-12);
  EXPECT_NEAR(x, 1e-12, 1e-15);
}

TEST(Solve, AcceptedCostsStrictlyDecrease) {
  double a = 0.5, b = 1.0;
  Problem problem;
  problem.AddParameterBlock(&a, 1);
  problem.AddParameterBlock(&b, 1);
  for (int k = 0; k < 20; ++k) {
    const double t = 0.05 * k;
    problem.AddResidualBlock(std::make_shared<ExpCost>(t, 3.0 * std::exp(-1.2 * t) + 0.01 * (k % 3)),
                             LossFunction::Huber(0.5), {&a, &b});
  }
  std::vector<double> accepted;
  SolverOptions options;
  options.iteration_callback = [&](const IterationSummary& s) {
    if (s.step_accepted) accepted.push_back(s.candidate_cost);
  };
  const SolverReport report = Solve(options, &problem);
  ASSERT_GE(accepted.size(), 2u);
  for (std::size_t k = 1; k < accepted.size(); ++k) EXPECT_LT(accepted[k], accepted[k - 1]);
  EXPECT_LE(report.final_cost, report.initial_cost);
}

TEST(Solve, DenseAndSparsePathsAgree) {
  auto run = [](LinearSolverType type, bool schur) {
    std::vector<double> values = {0.5, 1.0};
    Problem problem;
    problem.AddParameterBlock(&values[0], 1);
    problem.AddParameterBlock(&values[1], 1);
    if (schur) problem.SetEliminate(&values[1]);
    for (int k = 0; k < 20; ++k) {
      const double t = 0.05 * k;
      problem.AddResidualBlock(std::make_shared<ExpCost>(t, 3.0 * std::exp(-1.2 * t)),
                               LossFunction::Trivial(), {&values[0], &values[1]});
    }
    std::vector<double> costs;
    SolverOptions options;
    options.linear_solver = type;
    options.use_schur = schur;
    options.iteration_callback = [&](const IterationSummary& s) { costs.push_back(s.cost); };
    Solve(options, &problem);
    costs.push_back(values[0]);
    costs.push_back(values[1]);
    return costs;
  };
  const auto sparse = run(LinearSolverType::kSparseCholesky, false);
  const auto dense = run(LinearSolverType::kDenseCholesky, false);
  const auto schur = run(LinearSolverType::kSparseCholesky, true);
  ASSERT_EQ(sparse.size(), dense.size());
  ASSERT_EQ(sparse.size(), schur.size());
  for (std::size_t k = 0; k < sparse.size(); ++k) {
    EXPECT_NEAR(sparse[k], dense[k], 1e-10 * (1 + std::abs(dense[k])));
    EXPECT_NEAR(sparse[k], schur[k], 1e-10 * (1 + std::abs(dense[k])));
  }
}

TEST(Solve, RotationManifold) {
  const Rotation truth = Rotation::FromAxisAngle(Vector3d(1, 2, 3).normalized(), 1.1);
  double q[4] = {1, 0, 0, 0};
  Problem problem;
  problem.AddParameterBlock(q, 4, Manifold::kRotation);
  for (const Vector3d& v : {Vector3d(1, 0, 0), Vector3d(0, 1, 0), Vector3d(1, 1, 1)}) {
    problem.AddResidualBlock(std::make_shared<RotateCost>(v, truth * v),
                             LossFunction::Trivial(), {q});
  }
  EXPECT_LT(CheckJacobian(problem), 1e-6);
  Solve(SolverOptions{}, &problem);
  EXPECT_NEAR(Eigen::Vector4d(q[0], q[1], q[2], q[3]).norm(), 1.0, 1e-12);
  EXPECT_LT(AngularDistance(Rotation(q[0], q[1], q[2], q[3]), truth), 1e-9);
}

TEST(Solve, NonFiniteResidualNamesBlock) {
  double good = 0.0, bad = 0.0;
  Problem problem;
  problem.AddParameterBlock(&good, 1);
  problem.AddParameterBlock(&bad, 1);
  problem.AddResidualBlock(std::make_shared<AffineCost>(1.0, -0.2), LossFunction::Trivial(),
                           {&good});
  problem.AddResidualBlock(std::make_shared<NanCost>(), LossFunction::Trivial(), {&bad});
  const SolverReport report = Solve(SolverOptions{}, &problem);
  ASSERT_TRUE(report.failed_residual_block);
  EXPECT_EQ(*report.failed_residual_block, 1);
  EXPECT_EQ(report.termination, TerminationReason::kFailure);
}

TEST(Problem, RejectsUnknownBlocks) {
  double x = 0.0, y[2] = {0, 0};
  Problem problem;
  EXPECT_THROW(problem.AddResidualBlock(std::make_shared<AffineCost>(1.0, 0.0),
                                        LossFunction::Trivial(), {&x}),
               InputError);
  problem.AddParameterBlock(y, 2);
  EXPECT_THROW(problem.AddResidualBlock(std::make_shared<AffineCost>(1.0, 0.0),
                                        LossFunction::Trivial(), {y}),
               InputError);
}

TEST(CheckJacobian, LinearResidual) {
  double x = 0.7;
  Problem problem;
  problem.AddParameterBlock(&x, 1);
  problem.AddResidualBlock(std::make_shared<AffineCost>(2.5, 1.0), LossFunction::Trivial(),
                           {&x});
  EXPECT_LT(CheckJacobian(problem), 1e-9);
}

}  // namespace
}  // namespace gsfm
