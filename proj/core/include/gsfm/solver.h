#pragma once

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gsfm {

// rho(r) = r^2 / 2 for TRIVIAL; for HUBER(delta) rho(r) = r^2 / 2 when
// |r| <= delta and delta |r| - delta^2 / 2 otherwise. The cost of a residual
// block is rho(|r|).
class LossFunction {
 public:
  enum class Type { kTrivial, kHuber };

  static LossFunction Trivial() { return LossFunction(Type::kTrivial, 0.0); }
  // Throws InputError if scale <= 0.
  static LossFunction Huber(double scale);

  Type type() const { return type_; }
  double scale() const { return scale_; }

  double Cost(double residual_norm) const;
  // sqrt(rho'(r) / r): the factor applied to residual and Jacobian rows so the
  // Gauss-Newton model reproduces the robust gradient.
  double Weight(double residual_norm) const;

 private:
  LossFunction(Type type, double scale) : type_(type), scale_(scale) {}
  Type type_;
  double scale_;
};

enum class Manifold {
  kEuclidean,
  // Unit quaternion (w, x, y, z) updated as q <- Exp(delta) * q.
  kRotation,
};

// Residual callback. Jacobians are taken with respect to the tangent
// coordinates of each parameter block (3 for rotations), stored row-major
// num_residuals x tangent_size. jacobians (or any entry) may be null.
// Implementations must be pure functions of the parameter values; the solver
// may call them concurrently.
class CostFunction {
 public:
  CostFunction(int num_residuals, std::vector<int> tangent_sizes)
      : num_residuals_(num_residuals), tangent_sizes_(std::move(tangent_sizes)) {}
  virtual ~CostFunction() = default;

  int num_residuals() const { return num_residuals_; }
  const std::vector<int>& tangent_sizes() const { return tangent_sizes_; }

  virtual void Evaluate(const double* const* parameters, double* residuals,
                        double** jacobians) const = 0;

 private:
  int num_residuals_;
  std::vector<int> tangent_sizes_;
};

// Parameter values stay owned by the caller; blocks are identified by the
// address of their first coordinate.
class Problem {
 public:
  struct ParameterBlock {
    double* values = nullptr;
    int size = 0;
    Manifold manifold = Manifold::kEuclidean;
    bool fixed = false;
    bool eliminate = false;
    std::vector<double> lower_bounds;  // empty = unbounded

    int TangentSize() const { return manifold == Manifold::kRotation ? 3 : size; }
  };
  struct ResidualBlock {
    std::shared_ptr<const CostFunction> cost;
    LossFunction loss = LossFunction::Trivial();
    std::vector<int> blocks;
  };

  // Adding an existing block again is a no-op if the size matches.
  int AddParameterBlock(double* values, int size,
                        Manifold manifold = Manifold::kEuclidean);
  // Throws InputError if a referenced block was not added or its tangent
  // size disagrees with the cost function.
  int AddResidualBlock(std::shared_ptr<const CostFunction> cost,
                       LossFunction loss, const std::vector<double*>& blocks);

  void SetParameterBlockConstant(const double* values);
  void SetParameterBlockVariable(const double* values);
  bool IsParameterBlockConstant(const double* values) const;
  // Projection bound on one coordinate of a Euclidean block.
  void SetLowerBound(const double* values, int index, double lower);
  // Marks a block for Schur elimination (used when SolverOptions::use_schur).
  void SetEliminate(const double* values, bool eliminate = true);

  int BlockId(const double* values) const;
  bool HasParameterBlock(const double* values) const { return index_.count(values) > 0; }
  const std::vector<ParameterBlock>& parameter_blocks() const { return params_; }
  const std::vector<ResidualBlock>& residual_blocks() const { return residuals_; }
  std::size_t NumResidualBlocks() const { return residuals_.size(); }

  // Sum of robust costs at the current parameter values.
  double EvaluateCost() const;
  // Unweighted residual vector of one block at the current values.
  std::vector<double> EvaluateResidual(int residual_block) const;

 private:
  std::vector<ParameterBlock> params_;
  std::map<const double*, int> index_;
  std::vector<ResidualBlock> residuals_;
};

enum class LinearSolverType { kSparseCholesky, kDenseCholesky };

struct IterationSummary {
  int iteration = 0;
  double cost = 0.0;           // cost at the current (accepted) iterate
  double candidate_cost = 0.0;
  double lambda = 0.0;
  double step_norm = 0.0;
  double gradient_max_norm = 0.0;
  bool step_accepted = false;
};

struct SolverOptions {
  int max_iterations = 100;
  // Relative cost decrease below which an accepted step ends the solve.
  double function_tolerance = 1e-12;
  // Max-norm of the projected gradient.
  double gradient_tolerance = 1e-12;
  // |step| <= parameter_tolerance * (|x| + parameter_tolerance).
  double parameter_tolerance = 1e-12;
  double initial_lambda = 1e-4;
  double min_lambda = 1e-14;
  double max_lambda = 1e16;
  LinearSolverType linear_solver = LinearSolverType::kSparseCholesky;
  // Eliminate blocks flagged with Problem::SetEliminate via the Schur
  // complement before the (dense) reduced solve.
  bool use_schur = false;
  std::function<void(const IterationSummary&)> iteration_callback;
};

enum class TerminationReason { kConverged, kNoConvergence, kFailure, kAllFixed };

std::string TerminationReasonName(TerminationReason reason);

struct SolverReport {
  TerminationReason termination = TerminationReason::kNoConvergence;
  std::string message;
  int iterations = 0;
  int accepted_iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double gradient_max_norm = 0.0;
  double step_norm = 0.0;
  // Residual block that produced a non-finite value, if any.
  std::optional<int> failed_residual_block;

  bool IsUsable() const {
    return termination == TerminationReason::kConverged ||
           termination == TerminationReason::kNoConvergence ||
           termination == TerminationReason::kAllFixed;
  }
};

// Levenberg-Marquardt with diagonal damping. Fixed blocks never move and
// lower bounds are enforced by projecting every candidate step.
SolverReport Solve(const SolverOptions& options, Problem* problem);

// Worst relative deviation between analytic and central finite-difference
// Jacobians over all residual blocks at the current values.
double CheckJacobian(const Problem& problem, double epsilon = 1e-6);

}  // namespace gsfm
