#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace byzlab {

/// A model iterate or intermediate update, one entry per model coordinate.
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// A multiset of vectors stored column-wise: rows are coordinates, columns are samples.
template <typename Scalar>
using Samples = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using SamplesXd = Samples<double>;

// Error taxonomy. Every error the library raises derives from Error so callers
// (the CLI in particular) can map them onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class UndefinedDirection : public Error {
 public:
  using Error::Error;
};

class DegenerateAttack : public Error {
 public:
  using Error::Error;
};

class InfeasibleTopology : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

/// Non-fatal conditions raised during aggregation, attack synthesis or search.
enum class Flag : std::uint32_t {
  NonConverged = 1u << 0,
  DegenerateAggregation = 1u << 1,
  ZeroScale = 1u << 2,
  ConstraintInfeasible = 1u << 3,
};

class FlagSet {
 public:
  constexpr FlagSet() = default;

  constexpr void raise(Flag f) { bits_ |= static_cast<std::uint32_t>(f); }
  constexpr bool has(Flag f) const { return (bits_ & static_cast<std::uint32_t>(f)) != 0; }
  constexpr bool any() const { return bits_ != 0; }
  constexpr std::uint32_t bits() const { return bits_; }
  constexpr void merge(const FlagSet& other) { bits_ |= other.bits_; }

 private:
  std::uint32_t bits_ = 0;
};

inline void raise_flag(FlagSet* flags, Flag f) {
  if (flags != nullptr) flags->raise(f);
}

inline const char* flag_name(Flag f) {
  switch (f) {
    case Flag::NonConverged: return "non_converged";
    case Flag::DegenerateAggregation: return "degenerate_aggregation";
    case Flag::ZeroScale: return "zero_scale";
    case Flag::ConstraintInfeasible: return "constraint_infeasible";
  }
  return "unknown";
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entry");
}

template <typename Derived>
void require_nonempty(const Eigen::DenseBase<Derived>& samples, const char* what) {
  if (samples.cols() == 0 || samples.rows() == 0) throw InvalidInput(std::string(what) + ": empty sample set");
}

}  // namespace byzlab
