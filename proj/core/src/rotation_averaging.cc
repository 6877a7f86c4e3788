#include "gsfm/rotation_averaging.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <glog/logging.h>

#include "gsfm/errors.h"
#include "gsfm/parallel.h"

namespace gsfm {

RotationProblem RotationProblem::FromViewGraph(const ViewGraph& graph) {
  std::set<image_t> nodes;
  std::vector<std::pair<image_t, image_t>> links;
  for (const auto& [pair, edge] : graph.Edges()) {
    if (!edge.valid || !edge.rotation) continue;
    if (!graph.Images().at(pair.first).registered ||
        !graph.Images().at(pair.second).registered) {
      continue;
    }
    nodes.insert(pair.first);
    nodes.insert(pair.second);
    links.emplace_back(pair.first, pair.second);
  }
  RotationProblem problem;
  const auto components = ConnectedComponents(nodes, links);
  if (components.empty()) {
    return problem;
  }
  const std::set<image_t> keep(components.front().begin(),
                               components.front().end());
  problem.nodes.assign(keep.begin(), keep.end());
  std::map<image_t, int> degree;
  for (const auto& [pair, edge] : graph.Edges()) {
    if (!edge.valid || !edge.rotation || !keep.count(pair.first) ||
        !keep.count(pair.second)) {
      continue;
    }
    problem.edges.push_back({edge.image_id1, edge.image_id2, *edge.rotation,
                             static_cast<double>(edge.matches.size())});
    ++degree[pair.first];
    ++degree[pair.second];
  }
  problem.anchor = problem.nodes.front();
  for (const image_t node : problem.nodes) {
    if (degree[node] > degree[problem.anchor]) problem.anchor = node;
  }
  return problem;
}

void RotationProblem::Validate() const {
  if (nodes.empty()) {
    throw InputError("rotation averaging on an empty graph");
  }
  const std::set<image_t> node_set(nodes.begin(), nodes.end());
  if (!node_set.count(anchor)) {
    throw InputError("rotation averaging anchor is not a node");
  }
  std::vector<std::pair<image_t, image_t>> links;
  for (const auto& edge : edges) {
    if (!(edge.weight > 0.0)) {
      throw InputError("rotation averaging edge weights must be positive");
    }
    if (!node_set.count(edge.i) || !node_set.count(edge.j)) {
      throw InputError("rotation averaging edge references an unknown node");
    }
    links.emplace_back(edge.i, edge.j);
  }
  if (ConnectedComponents(node_set, links).size() != 1) {
    throw InputError("rotation averaging problem is not connected");
  }
}

std::map<image_t, Rotation> InitSpanningTree(const RotationProblem& problem) {
  problem.Validate();

  std::vector<std::size_t> order(problem.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return problem.edges[a].weight > problem.edges[b].weight;
  });

  std::map<image_t, image_t> parent;
  for (const image_t node : problem.nodes) parent[node] = node;
  auto find = [&](image_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::map<image_t, std::vector<std::size_t>> adjacency;
  for (const std::size_t e : order) {
    const auto& edge = problem.edges[e];
    const image_t ri = find(edge.i);
    const image_t rj = find(edge.j);
    if (ri == rj) continue;
    parent[ri] = rj;
    adjacency[edge.i].push_back(e);
    adjacency[edge.j].push_back(e);
  }

  std::map<image_t, Rotation> rotations;
  rotations[problem.anchor] = Rotation::Identity();
  std::queue<image_t> queue;
  queue.push(problem.anchor);
  while (!queue.empty()) {
    const image_t node = queue.front();
    queue.pop();
    for (const std::size_t e : adjacency[node]) {
      const auto& edge = problem.edges[e];
      if (edge.i == node && !rotations.count(edge.j)) {
        rotations[edge.j] = edge.rotation * rotations[node];
        queue.push(edge.j);
      } else if (edge.j == node && !rotations.count(edge.i)) {
        rotations[edge.i] = edge.rotation.Inverse() * rotations[node];
        queue.push(edge.i);
      }
    }
  }
  return rotations;
}

Vector3d RotationResidual(const RelativeRotation& edge, const Rotation& Ri,
                          const Rotation& Rj) {
  return LogMap(Rj.Inverse() * edge.rotation * Ri);
}

namespace {

class TangentSystem {
 public:
  explicit TangentSystem(const RotationProblem& problem) : problem_(problem) {
    int next = 0;
    for (const image_t node : problem.nodes) {
      if (node == problem.anchor) continue;
      index_[node] = next++;
    }
    dims_ = 3 * next;
  }

  // Solves min sum_e w_e |omega_i - omega_j + r_e|^2 with omega_anchor = 0.
  bool Solve(const std::vector<Vector3d>& residuals,
             const std::vector<double>& weights,
             std::map<image_t, Vector3d>* update) {
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dims_);
    for (std::size_t e = 0; e < problem_.edges.size(); ++e) {
      const auto& edge = problem_.edges[e];
      const double w = weights[e];
      const int a = Index(edge.i);
      const int b = Index(edge.j);
      for (int k = 0; k < 3; ++k) {
        if (a >= 0) {
          triplets.emplace_back(a + k, a + k, w);
          rhs[a + k] -= w * residuals[e][k];
        }
        if (b >= 0) {
          triplets.emplace_back(b + k, b + k, w);
          rhs[b + k] += w * residuals[e][k];
        }
        if (a >= 0 && b >= 0) {
          triplets.emplace_back(a + k, b + k, -w);
          triplets.emplace_back(b + k, a + k, -w);
        }
      }
    }
    update->clear();
    if (dims_ == 0) return true;
    Eigen::SparseMatrix<double> A(dims_, dims_);
    A.setFromTriplets(triplets.begin(), triplets.end());
    if (!analyzed_) {
      solver_.analyzePattern(A);
      analyzed_ = true;
    }
    solver_.factorize(A);
    if (solver_.info() != Eigen::Success) return false;
    const Eigen::VectorXd x = solver_.solve(rhs);
    if (!x.allFinite()) return false;
    for (const auto& [node, idx] : index_) {
      (*update)[node] = x.segment<3>(3 * idx);
    }
    return true;
  }

 private:
  int Index(image_t node) const {
    const auto it = index_.find(node);
    return it == index_.end() ? -1 : 3 * it->second;
  }

  const RotationProblem& problem_;
  std::map<image_t, int> index_;
  int dims_ = 0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
  bool analyzed_ = false;
};

std::vector<Vector3d> EdgeResiduals(const RotationProblem& problem,
                                    const std::map<image_t, Rotation>& rotations) {
  std::vector<Vector3d> residuals(problem.edges.size());
  ParallelFor(0, problem.edges.size(), [&](std::size_t e) {
    const auto& edge = problem.edges[e];
    residuals[e] =
        RotationResidual(edge, rotations.at(edge.i), rotations.at(edge.j));
  });
  return residuals;
}

double GemanMcClure(double x, double sigma) {
  const double s2 = sigma * sigma;
  return 0.5 * s2 * x * x / (s2 + x * x);
}

double RobustObjective(const RotationProblem& problem,
                       const std::vector<Vector3d>& residuals, double sigma) {
  double total = 0.0;
  for (std::size_t e = 0; e < residuals.size(); ++e) {
    total += problem.edges[e].weight * GemanMcClure(residuals[e].norm(), sigma);
  }
  return total;
}

std::map<image_t, Rotation> Apply(const std::map<image_t, Rotation>& rotations,
                                  const std::map<image_t, Vector3d>& update,
                                  double scale) {
  std::map<image_t, Rotation> out = rotations;
  for (const auto& [node, omega] : update) {
    out[node] = rotations.at(node) * ExpMap(scale * omega);
  }
  return out;
}

double MaxNorm(const std::map<image_t, Vector3d>& update) {
  double m = 0.0;
  for (const auto& [node, omega] : update) m = std::max(m, omega.norm());
  return m;
}

}  // namespace

RotationAveragingResult SolveRotationAveraging(
    const RotationProblem& problem, const std::map<image_t, Rotation>& initial,
    const RotationAveragingOptions& options) {
  problem.Validate();
  for (const image_t node : problem.nodes) {
    if (!initial.count(node)) {
      throw InputError("rotation averaging: no initial rotation for image " +
                       std::to_string(node));
    }
  }
  RotationAveragingResult result;

  // Re-gauge the initialization so the anchor is exactly the identity.
  const Rotation gauge = initial.at(problem.anchor).Inverse();
  for (const image_t node : problem.nodes) {
    result.rotations[node] = initial.at(node) * gauge;
  }
  result.rotations[problem.anchor] = Rotation::Identity();

  TangentSystem system(problem);
  std::vector<double> weights(problem.edges.size());
  std::map<image_t, Vector3d> update;

  bool l1_converged = false;
  for (int iter = 0; iter < options.l1_iterations; ++iter) {
    const auto residuals = EdgeResiduals(problem, result.rotations);
    for (std::size_t e = 0; e < residuals.size(); ++e) {
      weights[e] = problem.edges[e].weight /
                   std::max(residuals[e].norm(), options.l1_epsilon);
    }
    if (!system.Solve(residuals, weights, &update)) {
      LOG(WARNING) << "rotation averaging: L1 system could not be solved";
      break;
    }
    result.rotations = Apply(result.rotations, update, 1.0);
    ++result.l1_iterations;
    if (MaxNorm(update) < options.convergence_tolerance) {
      l1_converged = true;
      break;
    }
  }

  const double sigma = DegToRad(options.irls_sigma_deg);
  const double sigma2 = sigma * sigma;
  auto residuals = EdgeResiduals(problem, result.rotations);
  double objective = RobustObjective(problem, residuals, sigma);
  result.irls_objective.push_back(objective);
  bool irls_converged = false;
  for (int iter = 0; iter < options.irls_iterations; ++iter) {
    for (std::size_t e = 0; e < residuals.size(); ++e) {
      const double d = sigma2 + residuals[e].squaredNorm();
      weights[e] = problem.edges[e].weight * sigma2 * sigma2 / (d * d);
    }
    if (!system.Solve(residuals, weights, &update)) {
      LOG(WARNING) << "rotation averaging: IRLS system could not be solved";
      break;
    }
    ++result.irls_iterations;
    // Step halving keeps the robust objective non-increasing.
    bool accepted = false;
    double scale = 1.0;
    for (int halving = 0; halving < 20; ++halving, scale *= 0.5) {
      auto candidate = Apply(result.rotations, update, scale);
      auto candidate_residuals = EdgeResiduals(problem, candidate);
      const double candidate_objective =
          RobustObjective(problem, candidate_residuals, sigma);
      if (candidate_objective <= objective) {
        result.rotations = std::move(candidate);
        residuals = std::move(candidate_residuals);
        objective = candidate_objective;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      irls_converged = true;
      break;
    }
    result.irls_objective.push_back(objective);
    if (scale * MaxNorm(update) < options.convergence_tolerance) {
      irls_converged = true;
      break;
    }
  }

  result.converged = l1_converged && irls_converged;
  if (!result.converged) {
    LOG(WARNING) << "rotation averaging did not converge (L1 iterations "
                 << result.l1_iterations << ", IRLS iterations "
                 << result.irls_iterations << ")";
  }
  return result;
}

int FilterEdgesByRotation(const std::map<image_t, Rotation>& rotations,
                          double max_angle_deg, ViewGraph* graph) {
  const double max_angle = DegToRad(max_angle_deg);
  int removed = 0;
  auto& edges = graph->MutableEdges();
  for (auto it = edges.begin(); it != edges.end();) {
    const auto& edge = it->second;
    const auto ri = rotations.find(edge.image_id1);
    const auto rj = rotations.find(edge.image_id2);
    bool drop = !edge.rotation || ri == rotations.end() || rj == rotations.end();
    if (!drop) {
      drop = AngularDistance(*edge.rotation,
                             rj->second * ri->second.Inverse()) > max_angle;
    }
    if (drop) {
      it = edges.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  for (auto& [id, image] : graph->MutableImages()) {
    if (!rotations.count(id)) image.registered = false;
  }
  graph->KeepRegistered(graph->LargestConnectedComponent());
  return removed;
}

}  // namespace gsfm
