#include "byzlab/simulator/atc.hpp"

#include <cmath>

#include "byzlab/core/parallel.hpp"

namespace byzlab {

namespace {

constexpr std::uint64_t kDataStream = 3;
constexpr std::uint64_t kAttackStream = 4;
constexpr std::uint64_t kAggregateStream = 5;

}  // namespace

void TaskParams::validate() const {
  if (dim < 1) throw InvalidConfig("task: r must be >= 1");
  if (!(sigma_v2 > 0.0)) throw InvalidConfig("task: sigma_v2 must be > 0");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw InvalidConfig("task: mu must be >= 0");
  if (iterations < 1) throw InvalidConfig("task: iterations must be >= 1");
  if (!(huber_delta > 0.0)) throw InvalidConfig("task: huber_delta must be > 0");
  if (!std::isfinite(shift)) throw InvalidConfig("task: shift must be finite");
}

RunTrace run_atc(const ExperimentConfig& cfg, int threads) {
  return run_atc(cfg, gen_topology(cfg.topology), threads);
}

RunTrace run_atc(const ExperimentConfig& cfg, const Topology& topo, int threads) {
  cfg.task.validate();
  validate(cfg.aggregator);
  validate(cfg.attack);
  const std::uint64_t seed = cfg.topology.seed;
  const int n = topo.agents();
  const int r = cfg.task.dim;
  const RegressionTask task = make_regression_task(r, cfg.task.sigma_v2, cfg.task.huber_delta, seed, cfg.task.shift);
  const bool cooperative = std::holds_alternative<NoAttack>(cfg.attack.kind);

  RunTrace trace;
  trace.honest = topo.honest_agents();
  trace.byzantine = topo.byzantine_agents();
  trace.topology_attempts = topo.attempts;
  trace.max_local_epsilon = topo.max_local_epsilon();
  trace.w_opt = task.w_opt;

  // Agents that run SGD and aggregate; byzantine agents join only without an attack.
  std::vector<int> active = cooperative ? std::vector<int>() : trace.honest;
  if (cooperative)
    for (int k = 0; k < n; ++k) active.push_back(k);
  std::vector<bool> is_active(static_cast<std::size_t>(n), cooperative);
  for (int k : active) is_active[static_cast<std::size_t>(k)] = true;

  // Targets: active agents with at least one crafting neighbor.
  std::vector<int> targets;
  if (!cooperative)
    for (int k : active)
      if (topo.byzantine_neighbors(k) > 0) targets.push_back(k);

  std::vector<RngStream> data_rng, agg_rng, attack_rng;
  for (int k = 0; k < n; ++k) {
    data_rng.push_back(RngStream(seed, kDataStream).split(static_cast<std::uint64_t>(k)));
    agg_rng.push_back(RngStream(seed, kAggregateStream).split(static_cast<std::uint64_t>(k)));
    attack_rng.push_back(RngStream(seed, kAttackStream).split(static_cast<std::uint64_t>(k)));
  }

  std::vector<VectorXd> w(static_cast<std::size_t>(n), VectorXd::Constant(r, cfg.task.shift));
  std::vector<VectorXd> phi(static_cast<std::size_t>(n), VectorXd::Zero(r));
  std::vector<VectorXd> crafted(static_cast<std::size_t>(n));
  std::vector<std::optional<VectorXd>> prev_sc(static_cast<std::size_t>(n));
  std::vector<double> loss(static_cast<std::size_t>(n), 0.0);
  std::vector<FlagSet> agent_flags(static_cast<std::size_t>(n));

  auto craft_for_target = [&](std::size_t i) {
    const int k = targets[i];
    const auto ks = static_cast<std::size_t>(k);
    const std::vector<int>& nb = topo.neighbors[ks];
    AttackContext ctx;
    ctx.honest.resize(r, static_cast<Eigen::Index>(nb.size()) - topo.byzantine_neighbors(k));
    Eigen::Index col = 0;
    for (int l : nb) {
      if (!is_active[static_cast<std::size_t>(l)]) continue;
      if (l == k) ctx.self = col;
      ctx.honest.col(col++) = phi[static_cast<std::size_t>(l)];
    }
    ctx.prev_weight = w[ks];
    ctx.prev_sc = prev_sc[ks];
    ctx.byz_count = topo.byzantine_neighbors(k);
    ctx.neighborhood_size = static_cast<int>(nb.size());
    ctx.rng = &attack_rng[ks];
    ctx.target = &cfg.aggregator;
    ctx.sc_options.mixtailor_seed = RngStream::mix(seed, static_cast<std::uint64_t>(k));
    AttackOutput out = craft(cfg.attack, ctx);
    crafted[ks] = std::move(out.z);
    if (out.sc) prev_sc[ks] = std::move(out.sc);
    agent_flags[ks].merge(out.flags);
  };

  const double mu = cfg.task.mu;
  for (int iter = 1; iter <= cfg.task.iterations; ++iter) {
    parallel_for(active.size(), threads, [&](std::size_t i) {
      const auto k = static_cast<std::size_t>(active[i]);
      const RegressionSample s = draw_sample(task, data_rng[k]);
      loss[k] = regression_loss(task, w[k], s);
      phi[k] = w[k] - mu * regression_gradient(task, w[k], s);
    });

    bool finite = true;
    for (int k : active) finite = finite && phi[static_cast<std::size_t>(k)].allFinite();
    if (finite) {
      try {
        parallel_for(targets.size(), threads, craft_for_target);
      } catch (const NumericError&) {
        finite = false;
      }
    }
    if (!finite) {
      trace.diverged = true;
      trace.diverged_at = iter;
      break;
    }

    std::vector<VectorXd> next(static_cast<std::size_t>(n));
    parallel_for(active.size(), threads, [&](std::size_t i) {
      const int k = active[i];
      const auto ks = static_cast<std::size_t>(k);
      const std::vector<int>& nb = topo.neighbors[ks];
      SamplesXd received(r, static_cast<Eigen::Index>(nb.size()));
      AggregationContext ctx;
      ctx.weights.resize(received.cols());
      for (std::size_t j = 0; j < nb.size(); ++j) {
        const auto l = static_cast<std::size_t>(nb[j]);
        const auto c = static_cast<Eigen::Index>(j);
        received.col(c) = is_active[l] ? phi[l] : crafted[ks];
        ctx.weights(c) = topo.weights(nb[j], k);
        if (nb[j] == k) ctx.self = c;
      }
      ctx.byz_count = topo.byzantine_neighbors(k);
      ctx.rng = &agg_rng[ks];
      next[ks] = aggregate(cfg.aggregator, received, ctx, &agent_flags[ks]);
    });

    double loss_sum = 0.0;
    double dist_sum = 0.0;
    std::vector<double> per_agent;
    for (int k : trace.honest) {
      const auto ks = static_cast<std::size_t>(k);
      const double d = (next[ks] - task.w_opt).squaredNorm();
      finite = finite && next[ks].allFinite() && std::isfinite(d) && std::isfinite(loss[ks]);
      loss_sum += loss[ks];
      dist_sum += d;
      if (cfg.per_agent) per_agent.push_back(d);
    }
    if (!finite || !std::isfinite(loss_sum) || !std::isfinite(dist_sum)) {
      trace.diverged = true;
      trace.diverged_at = iter;
      break;
    }
    const auto h = static_cast<double>(trace.honest.size());
    trace.mean_loss.push_back(loss_sum / h);
    trace.mean_dist_sq.push_back(dist_sum / h);
    if (cfg.per_agent) trace.agent_dist_sq.push_back(std::move(per_agent));
    for (int k : active) w[static_cast<std::size_t>(k)] = std::move(next[static_cast<std::size_t>(k)]);
  }
  for (const FlagSet& f : agent_flags) trace.flags.merge(f);
  return trace;
}

}  // namespace byzlab
