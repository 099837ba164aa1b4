#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "byzlab/aggregators/config.hpp"
#include "byzlab/sensitivity/sensitivity.hpp"

namespace byzlab {

/// What the colluding attackers of one target agent see in one round.
struct AttackContext {
  SamplesXd honest;                  // honest updates received by the target, its own included
  Eigen::Index self = 0;             // column of the target's own update
  VectorXd prev_weight;              // target's previous iterate w_{k,i-1}
  std::optional<VectorXd> prev_sc;   // SC realized against this target in the previous round
  int byz_count = 1;                 // |B_k|, the number of copies P
  int neighborhood_size = 0;         // |N_k|; 0 means honest + byz
  RngStream* rng = nullptr;
  const AggregatorConfig* target = nullptr;  // aggregator run by the target
  SCOptions sc_options;

  int total() const { return neighborhood_size > 0 ? neighborhood_size : static_cast<int>(honest.cols()) + byz_count; }
};

struct AttackOutput {
  VectorXd z;
  std::optional<VectorXd> sc;  // realized SC, for attacks that predict it
  FlagSet flags;
};

enum class LvVariant { Own, HonestPos, HonestNeg, Ones, Random };

struct LargeValue {
  LvVariant variant = LvVariant::Ones;
  double gamma = 1000.0;
};

struct Gaussian {
  double sigma = 1.0;
};

struct SignFlip {};

struct Alie {};

enum class RopReference { Self, PrevWeight };

struct Rop {
  double theta = 3.141592653589793;
  double gamma = 10.0;
  RopReference reference = RopReference::Self;
};

struct ScmCoordM {
  std::optional<PsiSpec> psi;     // taken from the target when empty
  std::string sign = "+";         // one character per coordinate, or one for all
};

struct ScmMultiM {
  std::optional<PsiSpec> psi;
  std::optional<int> axis;        // direction e_axis; ones / sqrt(r) when empty
};

struct ScmIos {
  std::optional<int> axis;
};

struct Sascm {
  std::optional<double> half_width;  // search box around median(Y) for the generic search
  int resolution = 21;
  int refine_iters = 3;
  double delta = 0.9;
  bool generic = false;              // skip the closed-form constructions
};

struct NoAttack {};

struct AttackConfig {
  std::variant<NoAttack, LargeValue, Gaussian, SignFlip, Alie, Rop, ScmCoordM, ScmMultiM, ScmIos, Sascm> kind;
};

VectorXd attack_lv(const AttackContext& ctx, LvVariant variant, double gamma);
VectorXd attack_gaussian(const AttackContext& ctx, double sigma);
VectorXd attack_signflip(const AttackContext& ctx);
VectorXd attack_alie(const AttackContext& ctx);
VectorXd attack_rop(const AttackContext& ctx, double theta, double gamma, RopReference reference);

/// Optimal outlier magnitude: positive root of the closed-form z0^2.
double z0_for(const PsiKind& kind);

/// argmax over t of |sqrt(t) psi(t)| by grid search and golden-section
/// refinement, returned as sqrt(t).
double z0_by_search(const PsiKind& kind, int grid = 4001);

VectorXd attack_scm_coord_m(const AttackContext& ctx, const PsiSpec& psi, const std::string& sign,
                            FlagSet* flags = nullptr);
VectorXd attack_scm_multi_m(const AttackContext& ctx, const PsiSpec& psi, const VectorXd& direction,
                            FlagSet* flags = nullptr);
VectorXd attack_scm_ios(const AttackContext& ctx, const VectorXd& direction);
AttackOutput attack_sascm_generic(const AttackContext& ctx, const AggregatorConfig& agg, const SearchBox& box,
                                  double delta);

/// Dispatches on the configured attack. NoAttack returns the target's own update.
AttackOutput craft(const AttackConfig& cfg, const AttackContext& ctx);

void validate(const AttackConfig& cfg);
std::string attack_name(const AttackConfig& cfg);
ParamMap attack_params(const AttackConfig& cfg);
std::string to_spec_string(const AttackConfig& cfg);
AttackConfig make_attack(const std::string& name, const ParamMap& params);
AttackConfig parse_attack_spec(const std::string& spec);
const std::vector<std::string>& attack_names();

}  // namespace byzlab
