#pragma once

#include <cstdint>

#include "byzlab/core/rng.hpp"
#include "byzlab/core/types.hpp"

namespace byzlab {

/// Streaming linear model d = u^T w_opt + v with u ~ N(0, I) and v ~ N(0, sigma_v2).
struct RegressionTask {
  VectorXd w_opt;
  double sigma_v2 = 0.01;
  double huber_delta = 1.0;
};

struct RegressionSample {
  VectorXd u;
  double d = 0.0;
};

/// w_opt ~ N(0, I) drawn from the task stream of `seed`, then shifted by shift * 1.
RegressionTask make_regression_task(int dim, double sigma_v2, double huber_delta, std::uint64_t seed,
                                    double shift = 0.0);

RegressionSample draw_sample(const RegressionTask& task, RngStream& rng);

/// Gradient in w of the Huber loss of e = d - u^T w.
template <typename Derived>
Vector<typename Derived::Scalar> regression_gradient(const RegressionTask& task, const Eigen::MatrixBase<Derived>& w,
                                                     const RegressionSample& s) {
  using Scalar = typename Derived::Scalar;
  if (w.size() != s.u.size()) throw InvalidInput("regression_gradient: dimension mismatch");
  const Scalar e = s.d - s.u.dot(w);
  const Scalar delta = task.huber_delta;
  if (std::abs(e) <= delta) return -e * s.u;
  return -delta * (e > 0 ? Scalar(1) : Scalar(-1)) * s.u;
}

double regression_loss(const RegressionTask& task, const VectorXd& w, const RegressionSample& s);

}  // namespace byzlab
