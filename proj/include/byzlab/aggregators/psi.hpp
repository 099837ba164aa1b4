#pragma once

#include <cmath>
#include <type_traits>
#include <variant>

#include "byzlab/core/distributions.hpp"
#include "byzlab/core/types.hpp"

namespace byzlab {

// Weight functions psi(t) of the M-estimators, t being the squared
// (Mahalanobis) distance of a sample to the current location estimate.

struct StudentT {
  double nu = 3.0;
  int dim = 1;  // r in (nu + r) / (2 (nu + t))
};

struct Huber {
  double c2 = 1.0;  // squared cutoff
  double b = 0.5;   // consistency constant
};

struct Tukey {
  double c = 4.685;
};

struct Talwar {
  double c = 2.7955;
};

using PsiKind = std::variant<StudentT, Huber, Tukey, Talwar>;

/// Fisher-consistency constant of the Huber weight at the Gaussian in dimension r.
inline double huber_consistency(double c2, int r) {
  return chi_square_cdf(c2, r + 2) + (c2 / r) * (1.0 - chi_square_cdf(c2, r));
}

/// Huber weight with c^2 the q-quantile of chi-square with r degrees of freedom.
inline Huber make_huber(double q, int r) {
  const double c2 = chi_square_quantile(q, r);
  return Huber{c2, huber_consistency(c2, r)};
}

inline Huber make_huber_from_cutoff(double c, int r) { return Huber{c * c, huber_consistency(c * c, r)}; }

template <typename Scalar>
Scalar psi(const PsiKind& kind, Scalar t) {
  if (t < Scalar(0)) throw InvalidInput("psi: negative squared distance");
  return std::visit(
      [t](const auto& k) -> Scalar {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, StudentT>) {
          return Scalar(k.nu + k.dim) / (Scalar(2) * (Scalar(k.nu) + t));
        } else if constexpr (std::is_same_v<K, Huber>) {
          const Scalar c2 = Scalar(k.c2);
          return t <= c2 ? Scalar(1) / (Scalar(2 * k.b)) : c2 / (Scalar(2 * k.b) * t);
        } else if constexpr (std::is_same_v<K, Tukey>) {
          const Scalar c2 = Scalar(k.c * k.c);
          if (t > c2) return Scalar(0);
          return t * t / (Scalar(2) * c2 * c2) - t / c2 + Scalar(0.5);
        } else {
          return t <= Scalar(k.c * k.c) ? Scalar(0.5) : Scalar(0);
        }
      },
      kind);
}

inline void validate(const PsiKind& kind) {
  std::visit(
      [](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, StudentT>) {
          if (!(k.nu > 0.0) || k.dim < 1) throw InvalidConfig("psi: Student-t requires nu > 0");
        } else if constexpr (std::is_same_v<K, Huber>) {
          if (!(k.c2 > 0.0) || !(k.b > 0.0)) throw InvalidConfig("psi: Huber requires c > 0 and b > 0");
        } else {
          if (!(k.c > 0.0)) throw InvalidConfig("psi: tuning constant must be > 0");
        }
      },
      kind);
}

}  // namespace byzlab
