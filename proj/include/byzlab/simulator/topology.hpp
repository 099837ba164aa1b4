#pragma once

#include <cstdint>
#include <vector>

#include "byzlab/core/types.hpp"

namespace byzlab {

enum class WeightRule { Uniform, Metropolis };

using Adjacency = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct TopologyParams {
  int agents = 30;
  double edge_prob = 0.7;
  double epsilon = 0.0;
  WeightRule rule = WeightRule::Metropolis;
  std::uint64_t seed = 1;
  double max_local_epsilon = 0.5;  // every honest agent needs |B_k| / |N_k| <= this (and < 0.5)
  int max_retries = 1000;

  void validate() const;
};

/// Undirected graph with self-loops, combination matrix and byzantine placement.
struct Topology {
  Adjacency adjacency;                    // symmetric, true on the diagonal
  Eigen::MatrixXd weights;                // weights(l, k) = a_lk, columns sum to one
  std::vector<bool> byzantine;            // per agent
  std::vector<std::vector<int>> neighbors;  // closed neighborhoods, ascending
  int attempts = 1;                       // draws needed to satisfy the constraints

  int agents() const { return static_cast<int>(byzantine.size()); }
  int byzantine_neighbors(int k) const;
  double local_epsilon(int k) const;      // |B_k| / |N_k|
  double max_local_epsilon() const;       // over honest agents
  std::vector<int> honest_agents() const;
  std::vector<int> byzantine_agents() const;
};

/// a_lk = 1/|N_k| (uniform) or 1/max(|N_k|, |N_l|) with the self weight
/// absorbing the remainder (Metropolis).
Eigen::MatrixXd combination_weights(const Adjacency& adjacency, WeightRule rule);

/// True when the subgraph induced by the agents with keep[k] is connected.
bool induced_connected(const Adjacency& adjacency, const std::vector<bool>& keep);

/// Erdos-Renyi graph with floor(epsilon K) byzantine agents, redrawn until the
/// honest subgraph is connected and every honest neighborhood keeps an honest
/// majority. Throws InfeasibleTopology after max_retries draws.
Topology gen_topology(const TopologyParams& params);

}  // namespace byzlab
