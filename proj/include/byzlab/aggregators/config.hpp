#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "byzlab/aggregators/aggregators.hpp"
#include "byzlab/core/rng.hpp"

namespace byzlab {

/// Ordered key=value parameters of a canonical aggregator/attack spelling.
using ParamMap = std::map<std::string, std::string>;

enum class PsiFamily { StudentT, Huber, Tukey, Talwar };

/// Dimension-free description of a weight function; resolved into a PsiKind
/// once the estimation dimension is known.
struct PsiSpec {
  PsiFamily family = PsiFamily::Huber;
  double nu = 3.0;              // Student-t
  double q = 0.8;               // Huber: c^2 = chi2_r quantile at q
  std::optional<double> c;      // Huber override; Tukey/Talwar cutoff

  PsiKind resolve(int dim) const;
  double tuning() const;  // effective c for Tukey/Talwar, nu for t, q for Huber
};

struct Mean {};

struct TrimmedMean {
  double alpha = 0.0688;
};

struct Median {};

struct MEstimator {
  PsiSpec psi;
  bool coordinate_wise = true;
  FixedPointOptions fixed_point;
};

struct GeometricMedian {
  FixedPointOptions fixed_point;
};

enum class CombinationRule { Context, Uniform };

struct Scc {
  std::optional<double> tau;        // fixed radius; adaptive when empty
  std::optional<double> eps_hat;    // assumed byzantine fraction for the adaptive rule
  CombinationRule rule = CombinationRule::Context;
};

struct MultiKrum {
  std::optional<int> m;             // defaults to |S| - byz
  std::optional<int> byz;           // defaults to the context's byzantine count
};

struct Ios {
  std::optional<int> byz;
  CombinationRule rule = CombinationRule::Context;
};

struct Faba {
  std::optional<int> byz;
};

struct AggregatorConfig;

struct MixTailor {
  std::vector<AggregatorConfig> menu;
};

struct AggregatorConfig {
  std::variant<Mean, TrimmedMean, Median, MEstimator, GeometricMedian, Scc, MultiKrum, Ios, Faba, MixTailor> kind;
};

/// Per-call information available to the aggregating agent.
struct AggregationContext {
  Eigen::Index self = 0;          // column holding the agent's own vector
  VectorXd weights;               // combination weights a_lk; empty means uniform
  int byz_count = 0;              // byzantine-count estimate for IOS/Krum/adaptive SCC
  RngStream* rng = nullptr;       // MixTailor only
};

VectorXd aggregate(const AggregatorConfig& cfg, const SamplesXd& samples, const AggregationContext& ctx,
                   FlagSet* flags = nullptr);

/// Throws InvalidConfig when a parameter is out of range.
void validate(const AggregatorConfig& cfg);

/// Canonical name (mean, trimmed_mean, ...).
std::string aggregator_name(const AggregatorConfig& cfg);

/// All parameters, defaults included, in canonical spelling.
ParamMap aggregator_params(const AggregatorConfig& cfg);

/// Canonical one-line spelling: name[:key=value,...]. MixTailor menus are
/// written as mixtailor:<spec>|<spec>|...
std::string to_spec_string(const AggregatorConfig& cfg);

AggregatorConfig make_aggregator(const std::string& name, const ParamMap& params);
AggregatorConfig parse_aggregator_spec(const std::string& spec);

const std::vector<std::string>& aggregator_names();

// Helpers shared with the attack parser.
ParamMap parse_params(const std::string& text);
std::string format_number(double value);
double param_double(const ParamMap& p, const std::string& key, double fallback);
std::optional<double> param_optional_double(const ParamMap& p, const std::string& key);
std::optional<int> param_optional_int(const ParamMap& p, const std::string& key);
bool param_bool(const ParamMap& p, const std::string& key, bool fallback);
void reject_unknown(const ParamMap& p, const std::vector<std::string>& allowed, const std::string& owner);

PsiSpec parse_psi_spec(PsiFamily family, const ParamMap& p);
void write_psi_params(const PsiSpec& spec, ParamMap& out);
std::string psi_family_name(PsiFamily f);
PsiFamily parse_psi_family(const std::string& name);

}  // namespace byzlab
