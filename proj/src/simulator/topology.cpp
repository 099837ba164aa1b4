#include "byzlab/simulator/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "byzlab/core/rng.hpp"

namespace byzlab {

namespace {

constexpr std::uint64_t kTopologyStream = 1;

std::vector<std::vector<int>> closed_neighborhoods(const Adjacency& adj) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(adj.rows()));
  for (Eigen::Index k = 0; k < adj.cols(); ++k)
    for (Eigen::Index l = 0; l < adj.rows(); ++l)
      if (adj(l, k)) out[static_cast<std::size_t>(k)].push_back(static_cast<int>(l));
  return out;
}

}  // namespace

void TopologyParams::validate() const {
  if (agents < 1) throw InvalidConfig("topology: K must be >= 1");
  if (!(edge_prob > 0.0 && edge_prob <= 1.0)) throw InvalidConfig("topology: edge_prob must lie in (0, 1]");
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw InvalidConfig("topology: epsilon must lie in [0, 0.5)");
  if (!(max_local_epsilon > 0.0 && max_local_epsilon <= 0.5))
    throw InvalidConfig("topology: max_local_epsilon must lie in (0, 0.5]");
  if (max_retries < 1) throw InvalidConfig("topology: max_retries must be >= 1");
}

int Topology::byzantine_neighbors(int k) const {
  int count = 0;
  for (int l : neighbors[static_cast<std::size_t>(k)]) count += byzantine[static_cast<std::size_t>(l)] ? 1 : 0;
  return count;
}

double Topology::local_epsilon(int k) const {
  return static_cast<double>(byzantine_neighbors(k)) / static_cast<double>(neighbors[static_cast<std::size_t>(k)].size());
}

double Topology::max_local_epsilon() const {
  double worst = 0.0;
  for (int k : honest_agents()) worst = std::max(worst, local_epsilon(k));
  return worst;
}

std::vector<int> Topology::honest_agents() const {
  std::vector<int> out;
  for (int k = 0; k < agents(); ++k)
    if (!byzantine[static_cast<std::size_t>(k)]) out.push_back(k);
  return out;
}

std::vector<int> Topology::byzantine_agents() const {
  std::vector<int> out;
  for (int k = 0; k < agents(); ++k)
    if (byzantine[static_cast<std::size_t>(k)]) out.push_back(k);
  return out;
}

Eigen::MatrixXd combination_weights(const Adjacency& adjacency, WeightRule rule) {
  const Eigen::Index n = adjacency.rows();
  if (adjacency.cols() != n) throw InvalidInput("combination_weights: adjacency must be square");
  for (Eigen::Index k = 0; k < n; ++k)
    if (!adjacency(k, k)) throw InvalidInput("combination_weights: neighborhoods must include the agent itself");

  Eigen::VectorXd degree(n);
  for (Eigen::Index k = 0; k < n; ++k) degree(k) = static_cast<double>(adjacency.col(k).count());

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (rule == WeightRule::Uniform) {
      for (Eigen::Index l = 0; l < n; ++l)
        if (adjacency(l, k)) a(l, k) = 1.0 / degree(k);
      continue;
    }
    double off = 0.0;
    for (Eigen::Index l = 0; l < n; ++l) {
      if (l == k || !adjacency(l, k)) continue;
      a(l, k) = 1.0 / std::max(degree(k), degree(l));
      off += a(l, k);
    }
    a(k, k) = 1.0 - off;
  }
  return a;
}

bool induced_connected(const Adjacency& adjacency, const std::vector<bool>& keep) {
  const auto n = static_cast<int>(keep.size());
  const auto start = std::find(keep.begin(), keep.end(), true);
  if (start == keep.end()) return true;
  std::vector<bool> seen(keep.size(), false);
  std::queue<int> frontier;
  const int s = static_cast<int>(start - keep.begin());
  frontier.push(s);
  seen[static_cast<std::size_t>(s)] = true;
  int reached = 1;
  while (!frontier.empty()) {
    const int k = frontier.front();
    frontier.pop();
    for (int l = 0; l < n; ++l) {
      if (!keep[static_cast<std::size_t>(l)] || seen[static_cast<std::size_t>(l)] || !adjacency(l, k)) continue;
      seen[static_cast<std::size_t>(l)] = true;
      ++reached;
      frontier.push(l);
    }
  }
  return reached == std::count(keep.begin(), keep.end(), true);
}

Topology gen_topology(const TopologyParams& params) {
  params.validate();
  const int n = params.agents;
  const int byz = static_cast<int>(std::floor(params.epsilon * n + 1e-9));
  const RngStream root(params.seed, kTopologyStream);

  for (int attempt = 0; attempt < params.max_retries; ++attempt) {
    RngStream rng = root.split(static_cast<std::uint64_t>(attempt));
    Topology topo;
    topo.adjacency = Adjacency::Identity(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.bernoulli(params.edge_prob)) topo.adjacency(i, j) = topo.adjacency(j, i) = true;

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (int i = 0; i < byz; ++i) {
      const auto j = i + static_cast<int>(rng.index(static_cast<std::size_t>(n - i)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    topo.byzantine.assign(static_cast<std::size_t>(n), false);
    for (int i = 0; i < byz; ++i) topo.byzantine[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

    std::vector<bool> honest(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) honest[static_cast<std::size_t>(k)] = !topo.byzantine[static_cast<std::size_t>(k)];
    if (!induced_connected(topo.adjacency, honest)) continue;

    topo.neighbors = closed_neighborhoods(topo.adjacency);
    bool majority = true;
    for (int k = 0; k < n && majority; ++k) {
      if (topo.byzantine[static_cast<std::size_t>(k)]) continue;
      const double eps_k = topo.local_epsilon(k);
      majority = eps_k < 0.5 && eps_k <= params.max_local_epsilon;
    }
    if (!majority) continue;

    topo.weights = combination_weights(topo.adjacency, params.rule);
    topo.attempts = attempt + 1;
    return topo;
  }
  throw InfeasibleTopology("topology: no draw satisfied connectivity and local majority constraints within " +
                           std::to_string(params.max_retries) + " attempts");
}

}  // namespace byzlab
