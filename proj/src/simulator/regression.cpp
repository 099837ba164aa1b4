#include "byzlab/simulator/regression.hpp"

#include <cmath>

namespace byzlab {

namespace {
constexpr std::uint64_t kTaskStream = 2;
}

RegressionTask make_regression_task(int dim, double sigma_v2, double huber_delta, std::uint64_t seed, double shift) {
  if (dim < 1) throw InvalidConfig("task: r must be >= 1");
  if (!(sigma_v2 > 0.0)) throw InvalidConfig("task: sigma_v2 must be > 0");
  if (!(huber_delta > 0.0)) throw InvalidConfig("task: huber_delta must be > 0");
  RngStream rng(seed, kTaskStream);
  RegressionTask task;
  task.w_opt = rng.normal_vector(dim).array() + shift;
  task.sigma_v2 = sigma_v2;
  task.huber_delta = huber_delta;
  return task;
}

RegressionSample draw_sample(const RegressionTask& task, RngStream& rng) {
  RegressionSample s;
  s.u = rng.normal_vector(task.w_opt.size());
  s.d = s.u.dot(task.w_opt) + rng.normal(0.0, std::sqrt(task.sigma_v2));
  return s;
}

double regression_loss(const RegressionTask& task, const VectorXd& w, const RegressionSample& s) {
  const double e = std::abs(s.d - s.u.dot(w));
  const double delta = task.huber_delta;
  return e <= delta ? 0.5 * e * e : delta * (e - 0.5 * delta);
}

}  // namespace byzlab
