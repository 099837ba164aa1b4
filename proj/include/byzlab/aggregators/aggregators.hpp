#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "byzlab/aggregators/psi.hpp"
#include "byzlab/core/stats.hpp"
#include "byzlab/core/types.hpp"

// Aggregation rules agg(.) over a column-wise sample set. Rules that need the
// aggregating agent's identity (SCC, IOS) take the self column and the
// combination weights explicitly.

namespace byzlab {

struct FixedPointOptions {
  double tol = 1e-8;
  int max_iter = 200;
};

template <typename Derived>
Vector<typename Derived::Scalar> agg_mean(const Eigen::MatrixBase<Derived>& samples) {
  require_nonempty(samples, "agg_mean");
  return samples.rowwise().mean();
}

template <typename Derived, typename DerivedW>
Vector<typename Derived::Scalar> weighted_mean(const Eigen::MatrixBase<Derived>& samples,
                                               const Eigen::MatrixBase<DerivedW>& weights) {
  require_nonempty(samples, "weighted_mean");
  const auto total = weights.sum();
  if (!(total > 0)) throw InvalidInput("weighted_mean: weights must have positive sum");
  return (samples * weights) / total;
}

/// Coordinate-wise trimmed mean dropping floor(alpha * n) values from each end.
template <typename Derived>
Vector<typename Derived::Scalar> agg_trimmed_mean(const Eigen::MatrixBase<Derived>& samples, double alpha) {
  using Scalar = typename Derived::Scalar;
  require_nonempty(samples, "agg_trimmed_mean");
  if (!(alpha >= 0.0 && alpha < 0.5)) throw InvalidConfig("trimmed_mean: alpha must lie in [0, 0.5)");
  const auto n = static_cast<std::size_t>(samples.cols());
  const auto g = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n)));
  if (n <= 2 * g) throw InvalidConfig("trimmed_mean: trimming removes every value");

  Vector<Scalar> out(samples.rows());
  std::vector<Scalar> buf(n);
  for (Eigen::Index m = 0; m < samples.rows(); ++m) {
    for (std::size_t j = 0; j < n; ++j) buf[j] = samples(m, static_cast<Eigen::Index>(j));
    std::sort(buf.begin(), buf.end());
    Scalar sum(0);
    for (std::size_t j = g; j < n - g; ++j) sum += buf[j];
    out(m) = sum / static_cast<Scalar>(n - 2 * g);
  }
  return out;
}

template <typename Derived>
Vector<typename Derived::Scalar> agg_median(const Eigen::MatrixBase<Derived>& samples) {
  return coordinate_median(samples);
}

namespace detail {

// Fixed point of w = sum psi(t_l) phi_l / sum psi(t_l), t_l the squared
// distance normalized by the diagonal scales.
template <typename Derived, typename DerivedS>
Vector<typename Derived::Scalar> m_fixed_point(const Eigen::MatrixBase<Derived>& samples,
                                               const Eigen::MatrixBase<DerivedS>& scales, const PsiKind& kind,
                                               const FixedPointOptions& opt, FlagSet* flags) {
  using Scalar = typename Derived::Scalar;
  const Vector<Scalar> start = coordinate_median(samples);
  const Vector<Scalar> inv_scale = scales.cwiseInverse();
  const Eigen::Index n = samples.cols();

  Vector<Scalar> w = start;
  Vector<Scalar> weights(n);
  for (int it = 0; it < opt.max_iter; ++it) {
    for (Eigen::Index l = 0; l < n; ++l) {
      const Scalar t = (samples.col(l) - w).cwiseProduct(inv_scale).squaredNorm();
      weights(l) = psi(kind, t);
    }
    const Scalar total = weights.sum();
    if (!(total > Scalar(0))) {
      raise_flag(flags, Flag::DegenerateAggregation);
      return start;
    }
    const Vector<Scalar> next = (samples * weights) / total;
    const Scalar step = (next - w).norm();
    const Scalar bound = Scalar(opt.tol) * (Scalar(1) + w.norm());
    w = next;
    if (step <= bound) return w;
  }
  raise_flag(flags, Flag::NonConverged);
  return w;
}

}  // namespace detail

/// M-estimator of location with the scatter fixed to diag(mad)^2.
///
/// In coordinate-wise mode each coordinate is estimated on its own with a
/// one-dimensional weight function; otherwise `kind` must already be
/// resolved for the full dimension (Student-t dim, Huber c^2 and b).
template <typename Derived>
Vector<typename Derived::Scalar> agg_m_estimator(const Eigen::MatrixBase<Derived>& samples, const PsiKind& kind,
                                                 bool coordinate_wise, const FixedPointOptions& opt = {},
                                                 FlagSet* flags = nullptr) {
  using Scalar = typename Derived::Scalar;
  require_nonempty(samples, "agg_m_estimator");
  validate(kind);
  const Vector<Scalar> scales = robust_scales(samples, flags);
  if (!coordinate_wise) return detail::m_fixed_point(samples, scales, kind, opt, flags);

  Vector<Scalar> out(samples.rows());
  for (Eigen::Index m = 0; m < samples.rows(); ++m) {
    const Samples<Scalar> row = samples.row(m);
    out(m) = detail::m_fixed_point(row, scales.segment(m, 1), kind, opt, flags)(0);
  }
  return out;
}

/// Geometric median by Weiszfeld iteration.
///
/// When an iterate lands on a sample, the sample is returned if it satisfies
/// the optimality condition; otherwise the iterate leaves it along the
/// steepest-descent direction with the step of the modified Weiszfeld method.
template <typename Derived>
Vector<typename Derived::Scalar> agg_geometric_median(const Eigen::MatrixBase<Derived>& samples,
                                                      const FixedPointOptions& opt = {}, FlagSet* flags = nullptr) {
  using Scalar = typename Derived::Scalar;
  require_nonempty(samples, "agg_geometric_median");
  const Eigen::Index n = samples.cols();
  const Scalar coincide = Scalar(1e-12) * (Scalar(1) + samples.cwiseAbs().maxCoeff());

  Vector<Scalar> w = samples.rowwise().mean();
  Vector<Scalar> dist(n);
  for (int it = 0; it < opt.max_iter; ++it) {
    for (Eigen::Index l = 0; l < n; ++l) dist(l) = (samples.col(l) - w).norm();

    Eigen::Index hit = -1;
    Scalar multiplicity(0);
    Vector<Scalar> pull = Vector<Scalar>::Zero(samples.rows());
    Scalar inv_sum(0);
    Vector<Scalar> weighted = Vector<Scalar>::Zero(samples.rows());
    for (Eigen::Index l = 0; l < n; ++l) {
      if (dist(l) <= coincide) {
        if (hit < 0) hit = l;
        multiplicity += Scalar(1);
        continue;
      }
      pull += (samples.col(l) - w) / dist(l);
      inv_sum += Scalar(1) / dist(l);
      weighted += samples.col(l) / dist(l);
    }

    if (hit < 0) {
      // optimality test at the sample nearest to the iterate
      Eigen::Index nearest = 0;
      dist.minCoeff(&nearest);
      Vector<Scalar> vertex_pull = Vector<Scalar>::Zero(samples.rows());
      Scalar vertex_mult(0);
      for (Eigen::Index l = 0; l < n; ++l) {
        const Scalar d = (samples.col(l) - samples.col(nearest)).norm();
        if (d <= coincide)
          vertex_mult += Scalar(1);
        else
          vertex_pull += (samples.col(l) - samples.col(nearest)) / d;
      }
      if (vertex_pull.norm() <= vertex_mult) return samples.col(nearest);
    }

    Vector<Scalar> next;
    if (hit >= 0) {
      const Scalar pull_norm = pull.norm();
      if (pull_norm <= multiplicity || inv_sum == Scalar(0)) return samples.col(hit);
      next = w + ((pull_norm - multiplicity) / inv_sum) * (pull / pull_norm);
    } else {
      next = weighted / inv_sum;
    }
    const Scalar step = (next - w).norm();
    const Scalar bound = Scalar(opt.tol) * (Scalar(1) + w.norm());
    w = next;
    if (step <= bound) return w;
  }
  raise_flag(flags, Flag::NonConverged);
  return w;
}

template <typename Derived>
Vector<typename Derived::Scalar> clip(const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  const Scalar norm = x.norm();
  if (!(norm > tau) || norm == Scalar(0)) return x;
  return (tau / norm) * x;
}

/// Self-centered clipping: sum_l a_l (phi_self + CLIP(phi_l - phi_self, tau)).
template <typename Derived, typename DerivedW>
Vector<typename Derived::Scalar> agg_scc(const Eigen::MatrixBase<Derived>& samples,
                                         const Eigen::MatrixBase<DerivedW>& weights, Eigen::Index self,
                                         typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  require_nonempty(samples, "agg_scc");
  if (self < 0 || self >= samples.cols()) throw InvalidInput("agg_scc: self vector missing from sample");
  if (weights.size() != samples.cols()) throw InvalidInput("agg_scc: weight count mismatch");
  const Vector<Scalar> center = samples.col(self);
  Vector<Scalar> out = Vector<Scalar>::Zero(samples.rows());
  for (Eigen::Index l = 0; l < samples.cols(); ++l)
    out += weights(l) * (center + clip(samples.col(l) - center, tau));
  return out;
}

/// Adaptive SCC radius: the ceil((1 - eps_hat)(n - 1))-th smallest distance to the self vector.
template <typename Derived>
typename Derived::Scalar scc_adaptive_tau(const Eigen::MatrixBase<Derived>& samples, Eigen::Index self,
                                          double eps_hat) {
  using Scalar = typename Derived::Scalar;
  std::vector<Scalar> d;
  d.reserve(static_cast<std::size_t>(samples.cols()));
  for (Eigen::Index l = 0; l < samples.cols(); ++l)
    if (l != self) d.push_back((samples.col(l) - samples.col(self)).norm());
  if (d.empty()) return Scalar(0);
  std::sort(d.begin(), d.end());
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - eps_hat) * static_cast<double>(d.size()) - 1e-12));
  rank = std::clamp<std::size_t>(rank, 1, d.size());
  return d[rank - 1];
}

/// Krum scores: sum of squared distances to the n - byz - 2 nearest other samples.
template <typename Derived>
std::vector<typename Derived::Scalar> krum_scores(const Eigen::MatrixBase<Derived>& samples, int byz_count) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = samples.cols();
  const Eigen::Index nearest = n - byz_count - 2;
  if (byz_count < 0 || nearest < 1) throw InvalidConfig("multikrum: need |S| - byz - 2 >= 1");
  std::vector<Scalar> scores(static_cast<std::size_t>(n));
  std::vector<Scalar> d;
  for (Eigen::Index l = 0; l < n; ++l) {
    d.clear();
    for (Eigen::Index s = 0; s < n; ++s)
      if (s != l) d.push_back((samples.col(l) - samples.col(s)).squaredNorm());
    std::partial_sort(d.begin(), d.begin() + nearest, d.end());
    scores[static_cast<std::size_t>(l)] = std::accumulate(d.begin(), d.begin() + nearest, Scalar(0));
  }
  return scores;
}

/// Mean of the m lowest-scoring samples; ties go to the lowest index.
template <typename Derived>
Vector<typename Derived::Scalar> agg_multi_krum(const Eigen::MatrixBase<Derived>& samples, int byz_count, int m) {
  using Scalar = typename Derived::Scalar;
  require_nonempty(samples, "agg_multi_krum");
  if (m < 1 || m > samples.cols()) throw InvalidConfig("multikrum: m must lie in [1, |S|]");
  const std::vector<Scalar> scores = krum_scores(samples, byz_count);
  std::vector<Eigen::Index> order(scores.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return scores[a] < scores[b]; });
  Vector<Scalar> out = Vector<Scalar>::Zero(samples.rows());
  for (int i = 0; i < m; ++i) out += samples.col(order[static_cast<std::size_t>(i)]);
  return out / static_cast<Scalar>(m);
}

template <typename Scalar>
struct IosTrace {
  Vector<Scalar> result;
  std::vector<Eigen::Index> discarded;     // in removal order
  std::vector<Scalar> discard_distance;    // distance to the trusted average it was removed from
  std::vector<Vector<Scalar>> averages;    // trusted average before each removal
};

/// Iterative outlier scissor with the full removal history.
template <typename Derived, typename DerivedW>
IosTrace<typename Derived::Scalar> ios_trace(const Eigen::MatrixBase<Derived>& samples,
                                             const Eigen::MatrixBase<DerivedW>& weights, Eigen::Index self,
                                             int byz_count) {
  using Scalar = typename Derived::Scalar;
  require_nonempty(samples, "agg_ios");
  const Eigen::Index n = samples.cols();
  if (self < 0 || self >= n) throw InvalidInput("agg_ios: self vector missing from sample");
  if (weights.size() != n) throw InvalidInput("agg_ios: weight count mismatch");
  if (byz_count < 0 || byz_count >= n - 1) throw InvalidConfig("ios: byz count must satisfy 0 <= byz < |S| - 1");

  std::vector<bool> trusted(static_cast<std::size_t>(n), true);
  auto trusted_average = [&]() {
    Vector<Scalar> acc = Vector<Scalar>::Zero(samples.rows());
    Scalar total(0);
    for (Eigen::Index l = 0; l < n; ++l) {
      if (!trusted[static_cast<std::size_t>(l)]) continue;
      acc += weights(l) * samples.col(l);
      total += weights(l);
    }
    if (!(total > Scalar(0))) throw InvalidInput("agg_ios: trusted weights sum to zero");
    return Vector<Scalar>(acc / total);
  };

  IosTrace<Scalar> trace;
  for (int round = 0; round < byz_count; ++round) {
    const Vector<Scalar> avg = trusted_average();
    Eigen::Index worst = -1;
    Scalar worst_dist(-1);
    for (Eigen::Index l = 0; l < n; ++l) {
      if (l == self || !trusted[static_cast<std::size_t>(l)]) continue;
      const Scalar d = (samples.col(l) - avg).norm();
      if (d > worst_dist) {
        worst_dist = d;
        worst = l;
      }
    }
    trusted[static_cast<std::size_t>(worst)] = false;
    trace.discarded.push_back(worst);
    trace.discard_distance.push_back(worst_dist);
    trace.averages.push_back(avg);
  }
  trace.result = trusted_average();
  return trace;
}

template <typename Derived, typename DerivedW>
Vector<typename Derived::Scalar> agg_ios(const Eigen::MatrixBase<Derived>& samples,
                                         const Eigen::MatrixBase<DerivedW>& weights, Eigen::Index self,
                                         int byz_count) {
  return ios_trace(samples, weights, self, byz_count).result;
}

/// IOS with uniform combination weights.
template <typename Derived>
Vector<typename Derived::Scalar> agg_faba(const Eigen::MatrixBase<Derived>& samples, Eigen::Index self,
                                          int byz_count) {
  using Scalar = typename Derived::Scalar;
  const Vector<Scalar> uniform = Vector<Scalar>::Constant(samples.cols(), Scalar(1) / samples.cols());
  return agg_ios(samples, uniform, self, byz_count);
}

}  // namespace byzlab
