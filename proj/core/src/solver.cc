#include "gsfm/solver.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "gsfm/errors.h"
#include "gsfm/parallel.h"

namespace gsfm {

LossFunction LossFunction::Huber(double scale) {
  if (!(scale > 0.0)) {
    throw InputError("Huber scale must be positive");
  }
  return LossFunction(Type::kHuber, scale);
}

double LossFunction::Cost(double r) const {
  r = std::abs(r);
  if (type_ == Type::kTrivial || r <= scale_) {
    return 0.5 * r * r;
  }
  return scale_ * r - 0.5 * scale_ * scale_;
}

double LossFunction::Weight(double r) const {
  r = std::abs(r);
  if (type_ == Type::kTrivial || r <= scale_) {
    return 1.0;
  }
  return std::sqrt(scale_ / r);
}

std::string TerminationReasonName(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::kConverged:
      return "CONVERGED";
    case TerminationReason::kNoConvergence:
      return "NO_CONVERGENCE";
    case TerminationReason::kFailure:
      return "FAILURE";
    case TerminationReason::kAllFixed:
      return "ALL_FIXED";
  }
  return "UNKNOWN";
}

int Problem::AddParameterBlock(double* values, int size, Manifold manifold) {
  if (values == nullptr || size <= 0) {
    throw InputError("parameter block must have positive size");
  }
  if (manifold == Manifold::kRotation && size != 4) {
    throw InputError("rotation parameter blocks hold 4 quaternion values");
  }
  const auto it = index_.find(values);
  if (it != index_.end()) {
    if (params_[it->second].size != size ||
        params_[it->second].manifold != manifold) {
      throw InputError("parameter block re-added with a different layout");
    }
    return it->second;
  }
  ParameterBlock block;
  block.values = values;
  block.size = size;
  block.manifold = manifold;
  params_.push_back(std::move(block));
  index_[values] = static_cast<int>(params_.size()) - 1;
  return static_cast<int>(params_.size()) - 1;
}

int Problem::BlockId(const double* values) const {
  const auto it = index_.find(values);
  if (it == index_.end()) {
    throw InputError("unknown parameter block");
  }
  return it->second;
}

int Problem::AddResidualBlock(std::shared_ptr<const CostFunction> cost,
                              LossFunction loss,
                              const std::vector<double*>& blocks) {
  if (!cost || cost->tangent_sizes().size() != blocks.size()) {
    throw InputError("residual block arity does not match its cost function");
  }
  ResidualBlock residual;
  residual.cost = std::move(cost);
  residual.loss = loss;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const int id = BlockId(blocks[i]);
    if (params_[id].TangentSize() != residual.cost->tangent_sizes()[i]) {
      throw InputError("tangent size mismatch in residual block");
    }
    if (std::find(residual.blocks.begin(), residual.blocks.end(), id) !=
        residual.blocks.end()) {
      throw InputError("residual block references a parameter block twice");
    }
    residual.blocks.push_back(id);
  }
  residuals_.push_back(std::move(residual));
  return static_cast<int>(residuals_.size()) - 1;
}

void Problem::SetParameterBlockConstant(const double* values) {
  params_[BlockId(values)].fixed = true;
}

void Problem::SetParameterBlockVariable(const double* values) {
  params_[BlockId(values)].fixed = false;
}

bool Problem::IsParameterBlockConstant(const double* values) const {
  return params_[BlockId(values)].fixed;
}

void Problem::SetLowerBound(const double* values, int index, double lower) {
  ParameterBlock& block = params_[BlockId(values)];
  if (block.manifold != Manifold::kEuclidean || index < 0 ||
      index >= block.size) {
    throw InputError("lower bounds apply to Euclidean coordinates only");
  }
  if (block.lower_bounds.empty()) {
    block.lower_bounds.assign(block.size,
                              -std::numeric_limits<double>::infinity());
  }
  block.lower_bounds[index] = lower;
}

void Problem::SetEliminate(const double* values, bool eliminate) {
  params_[BlockId(values)].eliminate = eliminate;
}

std::vector<double> Problem::EvaluateResidual(int residual_block) const {
  const ResidualBlock& residual = residuals_.at(residual_block);
  std::vector<const double*> ptrs;
  for (const int id : residual.blocks) ptrs.push_back(params_[id].values);
  std::vector<double> r(residual.cost->num_residuals());
  residual.cost->Evaluate(ptrs.data(), r.data(), nullptr);
  return r;
}

double Problem::EvaluateCost() const {
  double cost = 0.0;
  for (std::size_t i = 0; i < residuals_.size(); ++i) {
    const std::vector<double> r = EvaluateResidual(static_cast<int>(i));
    double sq = 0.0;
    for (const double v : r) sq += v * v;
    cost += residuals_[i].loss.Cost(std::sqrt(sq));
  }
  return cost;
}

namespace {

using Values = std::vector<std::vector<double>>;

Values Snapshot(const Problem& problem) {
  Values values;
  for (const auto& block : problem.parameter_blocks()) {
    values.emplace_back(block.values, block.values + block.size);
  }
  return values;
}

void WriteBack(const Values& values, Problem* problem) {
  const auto& blocks = problem->parameter_blocks();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    std::copy(values[i].begin(), values[i].end(), blocks[i].values);
  }
}

void Plus(const Problem::ParameterBlock& block, const double* x,
          const double* delta, double* out) {
  if (block.manifold == Manifold::kRotation) {
    const Eigen::Vector3d omega(delta[0], delta[1], delta[2]);
    const double theta = omega.norm();
    const double scale =
        theta < 1e-8 ? 0.5 - theta * theta / 48.0 : std::sin(0.5 * theta) / theta;
    const Eigen::Quaterniond dq(std::cos(0.5 * theta), scale * omega.x(),
                                scale * omega.y(), scale * omega.z());
    Eigen::Quaterniond q = dq * Eigen::Quaterniond(x[0], x[1], x[2], x[3]);
    q.normalize();
    out[0] = q.w();
    out[1] = q.x();
    out[2] = q.y();
    out[3] = q.z();
    return;
  }
  for (int i = 0; i < block.size; ++i) {
    double v = x[i] + delta[i];
    if (!block.lower_bounds.empty()) v = std::max(v, block.lower_bounds[i]);
    out[i] = v;
  }
}

struct Layout {
  std::vector<int> offset;  // tangent offset per parameter block, -1 if fixed
  std::vector<int> free_blocks;
  int num_dims = 0;

  explicit Layout(const Problem& problem) {
    const auto& blocks = problem.parameter_blocks();
    offset.assign(blocks.size(), -1);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (blocks[i].fixed) continue;
      offset[i] = num_dims;
      num_dims += blocks[i].TangentSize();
      free_blocks.push_back(static_cast<int>(i));
    }
  }
};

// Robust-scaled residuals and Jacobians of every residual block.
struct Linearization {
  std::vector<std::vector<double>> residuals;
  std::vector<std::vector<std::vector<double>>> jacobians;
  double cost = 0.0;
  std::optional<int> bad_block;
};

void Evaluate(const Problem& problem, const Layout& layout, const Values& x,
              bool with_jacobians, Linearization* lin) {
  const auto& residual_blocks = problem.residual_blocks();
  const std::size_t n = residual_blocks.size();
  lin->residuals.resize(n);
  if (with_jacobians) lin->jacobians.resize(n);
  std::vector<double> costs(n, 0.0);
  std::vector<char> finite(n, 1);

  ParallelFor(0, n, [&](std::size_t i) {
    const auto& rb = residual_blocks[i];
    const int m = rb.cost->num_residuals();
    std::vector<const double*> ptrs;
    ptrs.reserve(rb.blocks.size());
    for (const int id : rb.blocks) ptrs.push_back(x[id].data());
    auto& r = lin->residuals[i];
    r.assign(m, 0.0);
    std::vector<double*> jac_ptrs(rb.blocks.size(), nullptr);
    if (with_jacobians) {
      auto& jac = lin->jacobians[i];
      jac.resize(rb.blocks.size());
      for (std::size_t k = 0; k < rb.blocks.size(); ++k) {
        if (layout.offset[rb.blocks[k]] < 0) {
          jac[k].clear();
          continue;
        }
        jac[k].assign(static_cast<std::size_t>(m) * rb.cost->tangent_sizes()[k], 0.0);
        jac_ptrs[k] = jac[k].data();
      }
    }
    rb.cost->Evaluate(ptrs.data(), r.data(),
                      with_jacobians ? jac_ptrs.data() : nullptr);
    double sq = 0.0;
    for (const double v : r) sq += v * v;
    const double norm = std::sqrt(sq);
    bool ok = std::isfinite(norm);
    if (with_jacobians) {
      for (const auto& jac : lin->jacobians[i]) {
        for (const double v : jac) ok = ok && std::isfinite(v);
      }
    }
    if (!ok) {
      finite[i] = 0;
      return;
    }
    costs[i] = rb.loss.Cost(norm);
    const double w = rb.loss.Weight(norm);
    if (w != 1.0) {
      for (double& v : r) v *= w;
      if (with_jacobians) {
        for (auto& jac : lin->jacobians[i]) {
          for (double& v : jac) v *= w;
        }
      }
    }
  });

  lin->cost = 0.0;
  lin->bad_block.reset();
  for (std::size_t i = 0; i < n; ++i) {
    if (!finite[i]) {
      lin->bad_block = static_cast<int>(i);
      lin->cost = std::numeric_limits<double>::infinity();
      return;
    }
    lin->cost += costs[i];
  }
}

// Gauss-Newton system H = J^T J, g = J^T r over the free tangent space.
// Every backend accumulates in residual-block order.
class NormalEquations {
 public:
  NormalEquations(const Problem& problem, const Layout& layout,
                  const SolverOptions& options)
      : problem_(problem), layout_(layout), options_(options) {
    const auto& params = problem.parameter_blocks();
    if (options.use_schur) {
      reduced_offset_.assign(params.size(), -1);
      for (const int b : layout.free_blocks) {
        if (params[b].eliminate) continue;
        reduced_offset_[b] = num_reduced_;
        num_reduced_ += params[b].TangentSize();
      }
      for (const auto& rb : problem.residual_blocks()) {
        int eliminated = 0;
        for (const int b : rb.blocks) {
          if (layout.offset[b] >= 0 && params[b].eliminate) ++eliminated;
        }
        if (eliminated > 1) {
          throw InputError(
              "Schur elimination requires at most one eliminated block per "
              "residual block");
        }
      }
    } else if (options.linear_solver == LinearSolverType::kSparseCholesky) {
      BuildSparsePattern();
    }
  }

  void Assemble(const Linearization& lin) {
    const int n = layout_.num_dims;
    gradient_.setZero(n);
    if (options_.use_schur) {
      AssembleSchur(lin);
      return;
    }
    if (options_.linear_solver == LinearSolverType::kDenseCholesky) {
      dense_.setZero(n, n);
    } else {
      std::fill(sparse_.valuePtr(), sparse_.valuePtr() + sparse_.nonZeros(), 0.0);
    }
    const auto& params = problem_.parameter_blocks();
    const auto& residual_blocks = problem_.residual_blocks();
    for (std::size_t r = 0; r < residual_blocks.size(); ++r) {
      const auto& rb = residual_blocks[r];
      const int m = rb.cost->num_residuals();
      const auto& res = lin.residuals[r];
      for (std::size_t a = 0; a < rb.blocks.size(); ++a) {
        const int ba = rb.blocks[a];
        const int oa = layout_.offset[ba];
        if (oa < 0) continue;
        const int ta = params[ba].TangentSize();
        const auto& Ja = lin.jacobians[r][a];
        for (int p = 0; p < ta; ++p) {
          double s = 0.0;
          for (int k = 0; k < m; ++k) s += Ja[k * ta + p] * res[k];
          gradient_[oa + p] += s;
        }
        for (std::size_t b = 0; b < rb.blocks.size(); ++b) {
          const int bb = rb.blocks[b];
          const int ob = layout_.offset[bb];
          if (ob < 0 || ob > oa) continue;
          const int tb = params[bb].TangentSize();
          const auto& Jb = lin.jacobians[r][b];
          if (options_.linear_solver == LinearSolverType::kDenseCholesky) {
            for (int p = 0; p < ta; ++p) {
              for (int q = 0; q < tb; ++q) {
                if (ba == bb && q > p) continue;
                double s = 0.0;
                for (int k = 0; k < m; ++k) s += Ja[k * ta + p] * Jb[k * tb + q];
                dense_(oa + p, ob + q) += s;
              }
            }
          } else {
            const auto& starts = slots_.at({ba, bb});
            double* values = sparse_.valuePtr();
            for (int q = 0; q < tb; ++q) {
              const int row0 = ba == bb ? q : 0;
              for (int p = row0; p < ta; ++p) {
                double s = 0.0;
                for (int k = 0; k < m; ++k) s += Ja[k * ta + p] * Jb[k * tb + q];
                values[starts[q] + (p - row0)] += s;
              }
            }
          }
        }
      }
    }
    if (options_.linear_solver == LinearSolverType::kDenseCholesky) {
      dense_ = dense_.selfadjointView<Eigen::Lower>();
    }
  }

  const Eigen::VectorXd& gradient() const { return gradient_; }

  Eigen::VectorXd Diagonal() const {
    const int n = layout_.num_dims;
    Eigen::VectorXd d(n);
    if (options_.use_schur) {
      const auto& params = problem_.parameter_blocks();
      for (const int b : layout_.free_blocks) {
        const int o = layout_.offset[b];
        if (reduced_offset_[b] >= 0) {
          for (int p = 0; p < params[b].TangentSize(); ++p) {
            d[o + p] = schur_rr_(reduced_offset_[b] + p, reduced_offset_[b] + p);
          }
        } else {
          const auto& C = schur_cc_.at(b);
          for (int p = 0; p < params[b].TangentSize(); ++p) d[o + p] = C(p, p);
        }
      }
    } else if (options_.linear_solver == LinearSolverType::kDenseCholesky) {
      d = dense_.diagonal();
    } else {
      for (int i = 0; i < n; ++i) d[i] = sparse_.valuePtr()[diag_index_[i]];
    }
    return d;
  }

  // Solves (H + lambda D) step = -g. Returns false on numerical failure.
  bool SolveDamped(double lambda, Eigen::VectorXd* step) {
    const int n = layout_.num_dims;
    Eigen::VectorXd damping = Diagonal();
    for (int i = 0; i < n; ++i) {
      damping[i] = lambda * std::clamp(damping[i], 1e-6, 1e32);
    }
    if (options_.use_schur) {
      return SolveSchur(damping, step);
    }
    if (options_.linear_solver == LinearSolverType::kDenseCholesky) {
      Eigen::MatrixXd A = dense_;
      A.diagonal() += damping;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
      if (ldlt.info() != Eigen::Success) return false;
      *step = ldlt.solve(-gradient_);
    } else {
      Eigen::SparseMatrix<double> A = sparse_;
      for (int i = 0; i < n; ++i) A.valuePtr()[diag_index_[i]] += damping[i];
      if (!analyzed_) {
        sparse_solver_.analyzePattern(A);
        analyzed_ = true;
      }
      sparse_solver_.factorize(A);
      if (sparse_solver_.info() != Eigen::Success) return false;
      *step = sparse_solver_.solve(-gradient_);
    }
    return step->allFinite();
  }

 private:
  void BuildSparsePattern() {
    const auto& params = problem_.parameter_blocks();
    std::set<std::pair<int, int>> pairs;
    for (const auto& rb : problem_.residual_blocks()) {
      for (const int a : rb.blocks) {
        for (const int b : rb.blocks) {
          if (layout_.offset[a] < 0 || layout_.offset[b] < 0) continue;
          if (layout_.offset[b] > layout_.offset[a]) continue;
          pairs.emplace(a, b);
        }
      }
    }
    for (const int b : layout_.free_blocks) pairs.emplace(b, b);

    const int n = layout_.num_dims;
    std::vector<Eigen::Triplet<double>> triplets;
    for (const auto& [a, b] : pairs) {
      const int oa = layout_.offset[a];
      const int ob = layout_.offset[b];
      for (int q = 0; q < params[b].TangentSize(); ++q) {
        for (int p = a == b ? q : 0; p < params[a].TangentSize(); ++p) {
          triplets.emplace_back(oa + p, ob + q, 0.0);
        }
      }
    }
    sparse_.resize(n, n);
    sparse_.setFromTriplets(triplets.begin(), triplets.end());
    sparse_.makeCompressed();

    auto index_of = [&](int row, int col) {
      const int* inner = sparse_.innerIndexPtr();
      const int* begin = inner + sparse_.outerIndexPtr()[col];
      const int* end = inner + sparse_.outerIndexPtr()[col + 1];
      return static_cast<int>(std::lower_bound(begin, end, row) - inner);
    };
    for (const auto& [a, b] : pairs) {
      const int oa = layout_.offset[a];
      const int ob = layout_.offset[b];
      std::vector<int> starts(params[b].TangentSize());
      for (int q = 0; q < params[b].TangentSize(); ++q) {
        starts[q] = index_of(oa + (a == b ? q : 0), ob + q);
      }
      slots_[{a, b}] = std::move(starts);
    }
    diag_index_.resize(n);
    for (int i = 0; i < n; ++i) diag_index_[i] = index_of(i, i);
  }

  static Eigen::MatrixXd JtJ(const std::vector<double>& Ja, int ta,
                             const std::vector<double>& Jb, int tb, int m) {
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                         Eigen::RowMajor>>
        A(Ja.data(), m, ta), B(Jb.data(), m, tb);
    return A.transpose() * B;
  }

  void AssembleSchur(const Linearization& lin) {
    const auto& params = problem_.parameter_blocks();
    schur_rr_.setZero(num_reduced_, num_reduced_);
    schur_cc_.clear();
    schur_rc_.clear();
    const auto& residual_blocks = problem_.residual_blocks();
    for (std::size_t r = 0; r < residual_blocks.size(); ++r) {
      const auto& rb = residual_blocks[r];
      const int m = rb.cost->num_residuals();
      const Eigen::Map<const Eigen::VectorXd> res(lin.residuals[r].data(), m);
      for (std::size_t a = 0; a < rb.blocks.size(); ++a) {
        const int ba = rb.blocks[a];
        if (layout_.offset[ba] < 0) continue;
        const int ta = params[ba].TangentSize();
        const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                             Eigen::Dynamic, Eigen::RowMajor>>
            Ja(lin.jacobians[r][a].data(), m, ta);
        gradient_.segment(layout_.offset[ba], ta) += Ja.transpose() * res;
        for (std::size_t b = 0; b < rb.blocks.size(); ++b) {
          const int bb = rb.blocks[b];
          if (layout_.offset[bb] < 0) continue;
          const int tb = params[bb].TangentSize();
          const bool ea = reduced_offset_[ba] < 0;
          const bool eb = reduced_offset_[bb] < 0;
          if (!ea && !eb) {
            schur_rr_.block(reduced_offset_[ba], reduced_offset_[bb], ta, tb) +=
                JtJ(lin.jacobians[r][a], ta, lin.jacobians[r][b], tb, m);
          } else if (ea && eb) {
            auto& C = schur_cc_[ba];
            if (C.size() == 0) C.setZero(ta, ta);
            C += JtJ(lin.jacobians[r][a], ta, lin.jacobians[r][b], tb, m);
          } else if (!ea && eb) {
            auto& H = schur_rc_[bb][ba];
            if (H.size() == 0) H.setZero(ta, tb);
            H += JtJ(lin.jacobians[r][a], ta, lin.jacobians[r][b], tb, m);
          }
        }
      }
    }
    for (const int b : layout_.free_blocks) {
      if (reduced_offset_[b] < 0 && !schur_cc_.count(b)) {
        const int t = params[b].TangentSize();
        schur_cc_[b] = Eigen::MatrixXd::Zero(t, t);
      }
    }
  }

  bool SolveSchur(const Eigen::VectorXd& damping, Eigen::VectorXd* step) {
    const auto& params = problem_.parameter_blocks();
    Eigen::MatrixXd S = schur_rr_;
    Eigen::VectorXd rhs(num_reduced_);
    for (const int b : layout_.free_blocks) {
      const int ro = reduced_offset_[b];
      if (ro < 0) continue;
      const int t = params[b].TangentSize();
      rhs.segment(ro, t) = -gradient_.segment(layout_.offset[b], t);
      S.diagonal().segment(ro, t) += damping.segment(layout_.offset[b], t);
    }
    std::map<int, Eigen::MatrixXd> c_inv;
    for (const auto& [e, C] : schur_cc_) {
      const int t = params[e].TangentSize();
      Eigen::MatrixXd Cd = C;
      Cd.diagonal() += damping.segment(layout_.offset[e], t);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(Cd);
      if (ldlt.info() != Eigen::Success) return false;
      c_inv[e] = ldlt.solve(Eigen::MatrixXd::Identity(t, t));
      const Eigen::VectorXd ge = gradient_.segment(layout_.offset[e], t);
      const auto neighbors = schur_rc_.find(e);
      if (neighbors == schur_rc_.end()) continue;
      for (const auto& [a, Hae] : neighbors->second) {
        const int ra = reduced_offset_[a];
        rhs.segment(ra, params[a].TangentSize()) += Hae * (c_inv[e] * ge);
        for (const auto& [b, Hbe] : neighbors->second) {
          const int rb = reduced_offset_[b];
          S.block(ra, rb, params[a].TangentSize(), params[b].TangentSize()) -=
              Hae * c_inv[e] * Hbe.transpose();
        }
      }
    }
    Eigen::VectorXd reduced_step = Eigen::VectorXd::Zero(num_reduced_);
    if (num_reduced_ > 0) {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
      if (ldlt.info() != Eigen::Success) return false;
      reduced_step = ldlt.solve(rhs);
    }
    step->setZero(layout_.num_dims);
    for (const int b : layout_.free_blocks) {
      const int ro = reduced_offset_[b];
      if (ro >= 0) {
        step->segment(layout_.offset[b], params[b].TangentSize()) =
            reduced_step.segment(ro, params[b].TangentSize());
      }
    }
    for (const auto& [e, Cinv] : c_inv) {
      const int t = params[e].TangentSize();
      Eigen::VectorXd v = -gradient_.segment(layout_.offset[e], t);
      const auto neighbors = schur_rc_.find(e);
      if (neighbors != schur_rc_.end()) {
        for (const auto& [a, Hae] : neighbors->second) {
          v -= Hae.transpose() *
               reduced_step.segment(reduced_offset_[a], params[a].TangentSize());
        }
      }
      step->segment(layout_.offset[e], t) = Cinv * v;
    }
    return step->allFinite();
  }

  const Problem& problem_;
  const Layout& layout_;
  const SolverOptions& options_;
  Eigen::VectorXd gradient_;

  Eigen::MatrixXd dense_;

  Eigen::SparseMatrix<double> sparse_;
  std::map<std::pair<int, int>, std::vector<int>> slots_;
  std::vector<int> diag_index_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> sparse_solver_;
  bool analyzed_ = false;

  std::vector<int> reduced_offset_;
  int num_reduced_ = 0;
  Eigen::MatrixXd schur_rr_;
  std::map<int, Eigen::MatrixXd> schur_cc_;
  // eliminated block -> reduced block -> H(reduced, eliminated)
  std::map<int, std::map<int, Eigen::MatrixXd>> schur_rc_;
};

double ProjectedGradientMaxNorm(const Problem& problem, const Layout& layout,
                                const Values& x, const Eigen::VectorXd& g) {
  const auto& params = problem.parameter_blocks();
  double max_norm = 0.0;
  for (const int b : layout.free_blocks) {
    const int o = layout.offset[b];
    for (int p = 0; p < params[b].TangentSize(); ++p) {
      double gi = g[o + p];
      if (!params[b].lower_bounds.empty() && gi > 0.0 &&
          x[b][p] <= params[b].lower_bounds[p]) {
        gi = 0.0;
      }
      max_norm = std::max(max_norm, std::abs(gi));
    }
  }
  return max_norm;
}

}  // namespace

SolverReport Solve(const SolverOptions& options, Problem* problem) {
  SolverReport report;
  const Layout layout(*problem);
  Values x = Snapshot(*problem);
  const auto& params = problem->parameter_blocks();

  Linearization lin;
  Evaluate(*problem, layout, x, /*with_jacobians=*/layout.num_dims > 0, &lin);
  report.initial_cost = lin.cost;
  report.final_cost = lin.cost;
  if (lin.bad_block) {
    report.termination = TerminationReason::kFailure;
    report.failed_residual_block = lin.bad_block;
    report.message = "non-finite residual at the initial point in block " +
                     std::to_string(*lin.bad_block);
    return report;
  }
  if (layout.num_dims == 0) {
    report.termination = TerminationReason::kAllFixed;
    report.message = "all parameter blocks are fixed";
    return report;
  }

  NormalEquations system(*problem, layout, options);
  double cost = lin.cost;
  double lambda = options.initial_lambda;
  Values candidate = x;
  Linearization trial;
  bool done = false;

  while (!done) {
    system.Assemble(lin);
    report.gradient_max_norm =
        ProjectedGradientMaxNorm(*problem, layout, x, system.gradient());
    if (report.gradient_max_norm <= options.gradient_tolerance) {
      report.termination = TerminationReason::kConverged;
      report.message = "gradient tolerance reached";
      break;
    }

    while (true) {
      if (report.iterations >= options.max_iterations) {
        report.termination = TerminationReason::kNoConvergence;
        report.message = "maximum number of iterations reached";
        done = true;
        break;
      }
      ++report.iterations;

      Eigen::VectorXd step;
      if (!system.SolveDamped(lambda, &step)) {
        lambda *= 2.0;
        if (lambda > options.max_lambda) {
          report.termination = TerminationReason::kFailure;
          report.message = "linear system could not be solved at maximum damping";
          done = true;
          break;
        }
        continue;
      }

      report.step_norm = step.norm();
      double x_norm_sq = 0.0;
      for (const int b : layout.free_blocks) {
        for (const double v : x[b]) x_norm_sq += v * v;
      }
      if (report.step_norm <= options.parameter_tolerance *
                                  (std::sqrt(x_norm_sq) + options.parameter_tolerance)) {
        report.termination = TerminationReason::kConverged;
        report.message = "parameter tolerance reached";
        done = true;
        break;
      }

      for (const int b : layout.free_blocks) {
        Plus(params[b], x[b].data(), step.data() + layout.offset[b],
             candidate[b].data());
      }
      Evaluate(*problem, layout, candidate, /*with_jacobians=*/false, &trial);
      if (trial.bad_block) {
        report.termination = TerminationReason::kFailure;
        report.failed_residual_block = trial.bad_block;
        report.message = "non-finite residual in block " +
                         std::to_string(*trial.bad_block);
        done = true;
        break;
      }

      const bool accepted = trial.cost < cost;
      if (options.iteration_callback) {
        IterationSummary summary;
        summary.iteration = report.iterations;
        summary.cost = accepted ? trial.cost : cost;
        summary.candidate_cost = trial.cost;
        summary.lambda = lambda;
        summary.step_norm = report.step_norm;
        summary.gradient_max_norm = report.gradient_max_norm;
        summary.step_accepted = accepted;
        options.iteration_callback(summary);
      }

      if (accepted) {
        const double relative_decrease = (cost - trial.cost) / cost;
        for (const int b : layout.free_blocks) x[b] = candidate[b];
        cost = trial.cost;
        ++report.accepted_iterations;
        lambda = std::max(lambda / 3.0, options.min_lambda);
        if (cost == 0.0 || relative_decrease <= options.function_tolerance) {
          report.termination = TerminationReason::kConverged;
          report.message = cost == 0.0 ? "zero cost" : "function tolerance reached";
          done = true;
        } else {
          Evaluate(*problem, layout, x, /*with_jacobians=*/true, &lin);
          if (lin.bad_block) {
            report.termination = TerminationReason::kFailure;
            report.failed_residual_block = lin.bad_block;
            report.message = "non-finite Jacobian in block " +
                             std::to_string(*lin.bad_block);
            done = true;
          }
        }
        break;
      }

      lambda *= 2.0;
      if (lambda > options.max_lambda) {
        report.termination = TerminationReason::kConverged;
        report.message = "no cost decrease at maximum damping";
        done = true;
        break;
      }
    }
  }

  report.final_cost = cost;
  WriteBack(x, problem);
  return report;
}

double CheckJacobian(const Problem& problem, double epsilon) {
  const auto& params = problem.parameter_blocks();
  double worst = 0.0;
  for (const auto& rb : problem.residual_blocks()) {
    const int m = rb.cost->num_residuals();
    const std::size_t nb = rb.blocks.size();
    std::vector<std::vector<double>> values(nb);
    std::vector<const double*> ptrs(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      const auto& block = params[rb.blocks[k]];
      values[k].assign(block.values, block.values + block.size);
      ptrs[k] = values[k].data();
    }
    std::vector<std::vector<double>> analytic(nb);
    std::vector<double*> jac_ptrs(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      analytic[k].assign(static_cast<std::size_t>(m) * rb.cost->tangent_sizes()[k], 0.0);
      jac_ptrs[k] = analytic[k].data();
    }
    std::vector<double> r(m), r_plus(m), r_minus(m);
    rb.cost->Evaluate(ptrs.data(), r.data(), jac_ptrs.data());

    for (std::size_t k = 0; k < nb; ++k) {
      const auto& block = params[rb.blocks[k]];
      const int t = block.TangentSize();
      Problem::ParameterBlock unbounded = block;
      unbounded.lower_bounds.clear();
      double max_diff = 0.0;
      double max_ref = 0.0;
      const std::vector<double> original = values[k];
      for (int j = 0; j < t; ++j) {
        const double h = block.manifold == Manifold::kRotation
                             ? epsilon
                             : epsilon * std::max(1.0, std::abs(original[j]));
        std::vector<double> delta(t, 0.0);
        delta[j] = h;
        Plus(unbounded, original.data(), delta.data(), values[k].data());
        rb.cost->Evaluate(ptrs.data(), r_plus.data(), nullptr);
        delta[j] = -h;
        Plus(unbounded, original.data(), delta.data(), values[k].data());
        rb.cost->Evaluate(ptrs.data(), r_minus.data(), nullptr);
        values[k] = original;
        for (int i = 0; i < m; ++i) {
          const double numeric = (r_plus[i] - r_minus[i]) / (2.0 * h);
          max_diff = std::max(max_diff, std::abs(numeric - analytic[k][i * t + j]));
          max_ref = std::max(max_ref, std::abs(numeric));
        }
      }
      worst = std::max(worst, max_diff / std::max(1.0, max_ref));
    }
  }
  return worst;
}

}  // namespace gsfm
