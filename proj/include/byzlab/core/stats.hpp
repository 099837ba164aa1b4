#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "byzlab/core/types.hpp"

namespace byzlab {

/// Gaussian consistency factor applied to every MAD in the library.
inline constexpr double kMadScale = 1.4826;

namespace detail {

// Median of a scratch buffer; reorders it. Even counts average the two middle
// order statistics.
template <typename Scalar>
Scalar median_inplace(std::vector<Scalar>& v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  Scalar med = v[mid];
  if (n % 2 == 0) {
    const Scalar lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    med = Scalar(0.5) * (med + lower);
  }
  return med;
}

}  // namespace detail

template <typename Scalar>
Scalar median(std::vector<Scalar> values) {
  if (values.empty()) throw InvalidInput("median: empty sample set");
  return detail::median_inplace(values);
}

template <typename Derived>
Vector<typename Derived::Scalar> coordinate_median(const Eigen::MatrixBase<Derived>& samples) {
  using Scalar = typename Derived::Scalar;
  require_nonempty(samples, "coordinate_median");
  Vector<Scalar> out(samples.rows());
  std::vector<Scalar> buf(static_cast<std::size_t>(samples.cols()));
  for (Eigen::Index m = 0; m < samples.rows(); ++m) {
    for (Eigen::Index j = 0; j < samples.cols(); ++j) buf[static_cast<std::size_t>(j)] = samples(m, j);
    out(m) = detail::median_inplace(buf);
  }
  return out;
}

/// Per-coordinate scaled median absolute deviation around the coordinate median.
template <typename Derived>
Vector<typename Derived::Scalar> coordinate_mad(const Eigen::MatrixBase<Derived>& samples) {
  using Scalar = typename Derived::Scalar;
  const Vector<Scalar> med = coordinate_median(samples);
  Vector<Scalar> out(samples.rows());
  std::vector<Scalar> buf(static_cast<std::size_t>(samples.cols()));
  for (Eigen::Index m = 0; m < samples.rows(); ++m) {
    for (Eigen::Index j = 0; j < samples.cols(); ++j)
      buf[static_cast<std::size_t>(j)] = std::abs(samples(m, j) - med(m));
    out(m) = Scalar(kMadScale) * detail::median_inplace(buf);
  }
  return out;
}

/// Scaled MAD with zero entries replaced by a machine-epsilon multiple of the
/// coordinate's magnitude. Raises ZeroScale when a replacement happens.
template <typename Derived>
Vector<typename Derived::Scalar> robust_scales(const Eigen::MatrixBase<Derived>& samples, FlagSet* flags) {
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> s = coordinate_mad(samples);
  for (Eigen::Index m = 0; m < s.size(); ++m) {
    if (s(m) > Scalar(0)) continue;
    const Scalar magnitude = std::max(Scalar(1), samples.row(m).cwiseAbs().maxCoeff());
    s(m) = std::numeric_limits<Scalar>::epsilon() * magnitude;
    raise_flag(flags, Flag::ZeroScale);
  }
  return s;
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) throw InvalidInput("cosine_similarity: dimension mismatch");
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (!(na > Scalar(0)) || !(nb > Scalar(0))) throw UndefinedDirection("cosine_similarity: zero-norm input");
  const Scalar c = a.dot(b) / (na * nb);
  return std::clamp(c, Scalar(-1), Scalar(1));
}

/// Cosine similarity with cos := 0 whenever either vector has zero norm.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_or_zero(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (!(a.norm() > Scalar(0)) || !(b.norm() > Scalar(0))) return Scalar(0);
  return cosine_similarity(a, b);
}

}  // namespace byzlab
