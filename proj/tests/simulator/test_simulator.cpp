#include <catch_amalgamated.hpp>

#include <cmath>

#include "byzlab/simulator/atc.hpp"

using namespace byzlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ExperimentConfig small_config(const std::string& agg = "mean", const std::string& attack = "none") {
  ExperimentConfig cfg;
  cfg.topology.agents = 12;
  cfg.topology.seed = 3;
  cfg.task.dim = 4;
  cfg.task.iterations = 300;
  cfg.aggregator = parse_aggregator_spec(agg);
  cfg.attack = parse_attack_spec(attack);
  return cfg;
}

Adjacency path3() {
  Adjacency a = Adjacency::Constant(3, 3, false);
  for (int k = 0; k < 3; ++k) a(k, k) = true;
  a(0, 1) = a(1, 0) = a(1, 2) = a(2, 1) = true;
  return a;
}

}  // namespace

TEST_CASE("complete graph without byzantine agents", "[simulator][topology]") {
  TopologyParams p;
  p.agents = 8;
  p.edge_prob = 1.0;
  const Topology t = gen_topology(p);
  CHECK(t.adjacency.all());
  CHECK(t.byzantine_agents().empty());
  CHECK(t.honest_agents().size() == 8);
  for (int k = 0; k < 8; ++k) CHECK(t.neighbors[static_cast<std::size_t>(k)].size() == 8);
}

TEST_CASE("byzantine placement", "[simulator][topology]") {
  TopologyParams p;
  p.epsilon = 0.2;
  p.max_local_epsilon = 0.31;
  p.seed = 7;
  const Topology a = gen_topology(p);
  const Topology b = gen_topology(p);
  CHECK(a.byzantine_agents().size() == 6);
  CHECK(a.byzantine == b.byzantine);
  CHECK(a.adjacency == b.adjacency);
  CHECK(a.max_local_epsilon() <= 0.31);
  CHECK(induced_connected(a.adjacency, std::vector<bool>(30, true)));
  std::vector<bool> honest(30);
  for (int k = 0; k < 30; ++k) honest[static_cast<std::size_t>(k)] = !a.byzantine[static_cast<std::size_t>(k)];
  CHECK(induced_connected(a.adjacency, honest));
}

TEST_CASE("infeasible topology constraints throw", "[simulator][topology]") {
  TopologyParams p;
  p.agents = 10;
  p.edge_prob = 0.05;
  p.epsilon = 0.4;
  p.max_local_epsilon = 0.01;
  p.max_retries = 20;
  CHECK_THROWS_AS(gen_topology(p), InfeasibleTopology);
  TopologyParams bad;
  bad.edge_prob = 1.5;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
}

TEST_CASE("Metropolis weights on a path", "[simulator][weights]") {
  const Eigen::MatrixXd w = combination_weights(path3(), WeightRule::Metropolis);
  CHECK_THAT(w(0, 1), WithinAbs(1.0 / 3.0, 1e-15));
  CHECK_THAT(w(0, 0), WithinAbs(2.0 / 3.0, 1e-15));
  CHECK_THAT(w(1, 1), WithinAbs(1.0 / 3.0, 1e-15));
  CHECK(w(0, 2) == 0.0);
  const Eigen::MatrixXd u = combination_weights(path3(), WeightRule::Uniform);
  CHECK_THAT(u(0, 1), WithinAbs(1.0 / 3.0, 1e-15));
  CHECK_THAT(u(1, 0), WithinAbs(0.5, 1e-15));
}

TEST_CASE("uniform weights on a complete graph", "[simulator][weights]") {
  const Eigen::MatrixXd w = combination_weights(Adjacency::Constant(5, 5, true), WeightRule::Uniform);
  CHECK((w.array() - 0.2).abs().maxCoeff() <= 1e-15);
}

TEST_CASE("combination matrices are stochastic", "[simulator][weights][property]") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TopologyParams p;
    p.agents = 15;
    p.edge_prob = 0.4;
    p.seed = seed;
    const Topology t = gen_topology(p);
    CHECK((t.weights.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK((t.weights.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK((t.weights.array() >= 0.0).all());
    const Eigen::MatrixXd u = combination_weights(t.adjacency, WeightRule::Uniform);
    CHECK((u.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("Huber regression gradient", "[simulator][regression]") {
  RegressionTask task{VectorXd::Zero(2), 0.01, 1.0};
  const VectorXd w = VectorXd::Zero(2);
  RegressionSample s{VectorXd::Unit(2, 0), 0.0};
  CHECK(regression_gradient(task, w, s) == VectorXd::Zero(2));
  s.d = 0.5;
  CHECK(regression_gradient(task, w, s) == (VectorXd(2) << -0.5, 0).finished());
  s.d = 3.0;
  CHECK(regression_gradient(task, w, s) == (VectorXd(2) << -1.0, 0).finished());
  s.d = -3.0;
  CHECK(regression_gradient(task, w, s) == (VectorXd(2) << 1.0, 0).finished());
  CHECK_THAT(regression_loss(task, w, s), WithinAbs(2.5, 1e-15));
  s.d = 0.5;
  CHECK_THAT(regression_loss(task, w, s), WithinAbs(0.125, 1e-15));
}

TEST_CASE("regression tasks replay from the seed", "[simulator][regression]") {
  const RegressionTask a = make_regression_task(5, 0.01, 1.0, 9);
  const RegressionTask b = make_regression_task(5, 0.01, 1.0, 9, 2.0);
  CHECK((b.w_opt - a.w_opt - VectorXd::Constant(5, 2.0)).norm() <= 1e-15);
  RngStream r1(9, 3), r2(9, 3);
  const RegressionSample s1 = draw_sample(a, r1), s2 = draw_sample(a, r2);
  CHECK(s1.u == s2.u);
  CHECK(s1.d == s2.d);
}

TEST_CASE("zero step size freezes the trace", "[simulator][atc]") {
  ExperimentConfig cfg = small_config();
  cfg.task.mu = 0.0;
  cfg.task.iterations = 20;
  const RunTrace t = run_atc(cfg);
  REQUIRE(t.mean_dist_sq.size() == 20);
  for (double v : t.mean_dist_sq) CHECK(v == t.mean_dist_sq.front());
  CHECK_THAT(t.mean_dist_sq.front(), WithinRel(t.w_opt.squaredNorm(), 1e-12));
}

TEST_CASE("mean diffusion converges", "[simulator][atc]") {
  const RunTrace t = run_atc(small_config());
  CHECK_FALSE(t.diverged);
  CHECK(t.mean_dist_sq.back() < t.mean_dist_sq.front());
  CHECK(t.mean_dist_sq.back() < 10.0 * 0.01);
}

TEST_CASE("traces do not depend on the thread count", "[simulator][atc][property]") {
  ExperimentConfig cfg = small_config("m_huber", "alie");
  cfg.topology.epsilon = 0.2;
  cfg.topology.max_local_epsilon = 0.45;
  cfg.task.iterations = 60;
  cfg.per_agent = true;
  const RunTrace a = run_atc(cfg, 1);
  const RunTrace b = run_atc(cfg, 3);
  CHECK(a.mean_dist_sq == b.mean_dist_sq);
  CHECK(a.mean_loss == b.mean_loss);
  CHECK(a.agent_dist_sq == b.agent_dist_sq);
}

TEST_CASE("shifting the task shifts the iterates", "[simulator][atc][property]") {
  for (const std::string agg : {"mean", "median", "m_tukey", "geomedian:tol=1e-12,max_iter=2000"}) {
    ExperimentConfig cfg = small_config(agg);
    cfg.task.iterations = 50;
    const RunTrace a = run_atc(cfg);
    cfg.task.shift = 25.0;
    const RunTrace b = run_atc(cfg);
    INFO(agg);
    for (std::size_t i = 0; i < a.mean_dist_sq.size(); ++i)
      CHECK_THAT(b.mean_dist_sq[i], WithinAbs(a.mean_dist_sq[i], 1e-6 * (1.0 + a.mean_dist_sq[i])));
  }
}

TEST_CASE("metrics cover honest agents only", "[simulator][atc]") {
  ExperimentConfig cfg = small_config("median", "lv_ones");
  cfg.topology.agents = 20;
  cfg.topology.epsilon = 0.2;
  cfg.topology.max_local_epsilon = 0.45;
  cfg.task.iterations = 5;
  cfg.per_agent = true;
  const RunTrace t = run_atc(cfg);
  CHECK(t.byzantine.size() == 4);
  CHECK(t.honest.size() == 16);
  for (const auto& row : t.agent_dist_sq) CHECK(row.size() == 16);
}

TEST_CASE("divergent runs truncate the trace", "[simulator][atc]") {
  ExperimentConfig cfg = small_config("mean", "lv_ones:gamma=1e300");
  cfg.topology.epsilon = 0.2;
  cfg.topology.max_local_epsilon = 0.45;
  cfg.task.iterations = 50;
  const RunTrace t = run_atc(cfg);
  CHECK(t.diverged);
  CHECK(t.diverged_at >= 1);
  CHECK(static_cast<int>(t.mean_dist_sq.size()) == t.diverged_at - 1);
}
