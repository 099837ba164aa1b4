#pragma once

#include <vector>

#include "byzlab/aggregators/config.hpp"
#include "byzlab/attacks/attacks.hpp"
#include "byzlab/simulator/regression.hpp"
#include "byzlab/simulator/topology.hpp"

namespace byzlab {

struct TaskParams {
  int dim = 10;
  double sigma_v2 = 0.01;
  double mu = 0.05;
  int iterations = 2000;
  double huber_delta = 1.0;
  double shift = 0.0;  // translates w_opt and the initial iterate by shift * 1

  void validate() const;
};

struct ExperimentConfig {
  TopologyParams topology;  // topology.seed seeds every stream of the run
  TaskParams task;
  AggregatorConfig aggregator{Mean{}};
  AttackConfig attack{NoAttack{}};
  bool per_agent = false;
};

struct RunTrace {
  std::vector<double> mean_loss;
  std::vector<double> mean_dist_sq;
  std::vector<std::vector<double>> agent_dist_sq;  // per iteration, honest agents ascending; filled on request
  std::vector<int> honest;
  std::vector<int> byzantine;
  int topology_attempts = 0;
  double max_local_epsilon = 0.0;
  VectorXd w_opt;
  bool diverged = false;
  int diverged_at = -1;  // 1-based iteration of the first non-finite iterate
  FlagSet flags;
};

/// Adapt-then-combine diffusion: local Huber SGD step, byzantine neighbors
/// replace their messages by crafted vectors, then robust aggregation.
/// The trace is a pure function of cfg; `threads` only changes the schedule.
RunTrace run_atc(const ExperimentConfig& cfg, int threads = 1);

RunTrace run_atc(const ExperimentConfig& cfg, const Topology& topo, int threads = 1);

}  // namespace byzlab
