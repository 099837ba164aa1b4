#include "byzlab/attacks/attacks.hpp"

#include <cmath>
#include <numbers>

#include "byzlab/core/distributions.hpp"
#include "byzlab/core/stats.hpp"

namespace byzlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_context(const AttackContext& ctx) {
  require_nonempty(ctx.honest, "attack");
  require_finite(ctx.honest, "attack honest updates");
  if (ctx.self < 0 || ctx.self >= ctx.honest.cols()) throw InvalidInput("attack: target update missing");
  if (ctx.byz_count < 0) throw InvalidInput("attack: negative byzantine count");
}

VectorXd honest_mean(const AttackContext& ctx) { return ctx.honest.rowwise().mean(); }

int copies_of(const AttackContext& ctx) { return std::max(ctx.byz_count, 1); }

SamplesXd with_copies(const SamplesXd& honest, const VectorXd& z, int copies) {
  SamplesXd out(honest.rows(), honest.cols() + copies);
  out.leftCols(honest.cols()) = honest;
  out.rightCols(copies) = z.replicate(1, copies);
  return out;
}

VectorXd sign_vector(const std::string& pattern, Eigen::Index r) {
  if (pattern.empty() || (pattern.size() != 1 && static_cast<Eigen::Index>(pattern.size()) != r))
    throw InvalidConfig("scm_coord_m: sign pattern needs one character or one per coordinate");
  VectorXd s(r);
  for (Eigen::Index m = 0; m < r; ++m) {
    const char c = pattern.size() == 1 ? pattern[0] : pattern[static_cast<std::size_t>(m)];
    if (c != '+' && c != '-') throw InvalidConfig("scm_coord_m: sign pattern accepts only '+' and '-'");
    s(m) = c == '+' ? 1.0 : -1.0;
  }
  return s;
}

VectorXd direction_for(const std::optional<int>& axis, Eigen::Index r) {
  if (!axis) return VectorXd::Ones(r) / std::sqrt(static_cast<double>(r));
  if (*axis < 0 || *axis >= r) throw InvalidConfig("attack: axis outside the model dimension");
  return VectorXd::Unit(r, *axis);
}

const MEstimator* target_m_estimator(const AttackContext& ctx) {
  return ctx.target ? std::get_if<MEstimator>(&ctx.target->kind) : nullptr;
}

PsiSpec psi_or_target(const std::optional<PsiSpec>& psi, const AttackContext& ctx, const char* who) {
  if (psi) return *psi;
  if (const MEstimator* m = target_m_estimator(ctx)) return m->psi;
  throw InvalidConfig(std::string(who) + ": no psi given and the target is not an M-estimator");
}

}  // namespace

VectorXd attack_lv(const AttackContext& ctx, LvVariant variant, double gamma) {
  check_context(ctx);
  const Eigen::Index r = ctx.honest.rows();
  switch (variant) {
    case LvVariant::Own:
    case LvVariant::HonestPos: return gamma * honest_mean(ctx);
    case LvVariant::HonestNeg: return -gamma * honest_mean(ctx);
    case LvVariant::Ones: return VectorXd::Constant(r, gamma);
    case LvVariant::Random: {
      if (ctx.rng == nullptr) throw InvalidConfig("lv_random: requires a random stream");
      VectorXd g = ctx.rng->normal_vector(r);
      while (!(g.norm() > 0.0)) g = ctx.rng->normal_vector(r);
      return (gamma * std::sqrt(static_cast<double>(r)) / g.norm()) * g;
    }
  }
  throw InvalidConfig("lv: unknown variant");
}

VectorXd attack_gaussian(const AttackContext& ctx, double sigma) {
  check_context(ctx);
  if (ctx.rng == nullptr) throw InvalidConfig("gaussian: requires a random stream");
  if (sigma == 0.0) return VectorXd::Zero(ctx.honest.rows());
  return ctx.rng->normal_vector(ctx.honest.rows(), sigma);
}

VectorXd attack_signflip(const AttackContext& ctx) {
  check_context(ctx);
  return -ctx.honest.col(ctx.self);
}

VectorXd attack_alie(const AttackContext& ctx) {
  check_context(ctx);
  const int n = ctx.total();
  const int b = ctx.byz_count;
  if (n <= b) throw DegenerateAttack("alie: neighborhood has no honest member");
  const int s = n / 2 + 1 - b;
  const double p = static_cast<double>(n - b - s) / static_cast<double>(n - b);
  if (!(p > 0.0 && p < 1.0))
    throw DegenerateAttack("alie: quantile level " + format_number(p) + " outside (0, 1) for |N|=" +
                           std::to_string(n) + ", |B|=" + std::to_string(b));
  const double z_max = std_normal_inv_cdf(p);
  const VectorXd mu = honest_mean(ctx);
  const VectorXd sigma = ((ctx.honest.colwise() - mu).array().square().rowwise().mean()).sqrt();
  return mu - z_max * sigma;
}

VectorXd attack_rop(const AttackContext& ctx, double theta, double gamma, RopReference reference) {
  check_context(ctx);
  const Eigen::Index r = ctx.honest.rows();
  VectorXd ref;
  if (reference == RopReference::Self) {
    ref = ctx.honest.col(ctx.self);
  } else {
    if (ctx.prev_weight.size() != r) throw InvalidInput("rop: previous iterate unavailable");
    ref = ctx.prev_weight;
  }
  const VectorXd delta = honest_mean(ctx) - ref;
  const double dn2 = delta.squaredNorm();
  if (!(dn2 > 0.0)) throw UndefinedDirection("rop: honest mean coincides with the reference point");

  VectorXd p = VectorXd::Ones(r) - (delta.sum() / dn2) * delta;
  if (!(p.norm() > 1e-12 * std::sqrt(static_cast<double>(r)))) {
    Eigen::Index m = 0;
    delta.cwiseAbs().minCoeff(&m);
    p = VectorXd::Unit(r, m) - (delta(m) / dn2) * delta;
  }
  // re-orthogonalize once against rounding
  p -= (p.dot(delta) / dn2) * delta;
  const double pn = p.norm();
  if (!(pn > 0.0)) throw UndefinedDirection("rop: no direction orthogonal to the honest update");
  return gamma * (std::sin(theta) * p / pn + std::cos(theta) * delta / std::sqrt(dn2)) + ref;
}

double z0_for(const PsiKind& kind) {
  validate(kind);
  return std::visit(overloaded{
                        [](const StudentT& k) { return std::sqrt(k.nu); },
                        [](const Huber& k) { return std::sqrt(k.c2); },
                        [](const Tukey& k) { return k.c / std::sqrt(5.0); },
                        [](const Talwar& k) { return k.c; },
                    },
                    kind);
}

double z0_by_search(const PsiKind& kind, int grid) {
  validate(kind);
  if (grid < 3) throw InvalidConfig("z0_by_search: grid too small");
  const double t_hi = std::visit(overloaded{
                                     [](const StudentT& k) { return 100.0 * k.nu; },
                                     [](const Huber& k) { return 4.0 * k.c2; },
                                     [](const Tukey& k) { return 4.0 * k.c * k.c; },
                                     [](const Talwar& k) { return 4.0 * k.c * k.c; },
                                 },
                                 kind);
  auto f = [&](double t) { return std::abs(std::sqrt(t) * psi(kind, t)); };
  const double h = t_hi / (grid - 1);
  int best = 0;
  double best_val = -1.0;
  for (int i = 0; i < grid; ++i) {
    const double v = f(h * i);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = h * std::max(best - 1, 0);
  double b = h * std::min(best + 1, grid - 1);
  double best_t = h * best;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 60; ++it) {
    if (fc > best_val) best_val = fc, best_t = c;
    if (fd > best_val) best_val = fd, best_t = d;
    if (fc > fd) {
      b = d, d = c, fd = fc;
      c = b - phi * (b - a), fc = f(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + phi * (b - a), fd = f(d);
    }
  }
  return std::sqrt(best_t);
}

VectorXd attack_scm_coord_m(const AttackContext& ctx, const PsiSpec& psi, const std::string& sign, FlagSet* flags) {
  check_context(ctx);
  const VectorXd s = sign_vector(sign, ctx.honest.rows());
  const double z0 = z0_for(psi.resolve(1));
  const int copies = copies_of(ctx);
  const VectorXd z_init = coordinate_median(ctx.honest) + z0 * s.cwiseProduct(robust_scales(ctx.honest, flags));
  const SamplesXd augmented = with_copies(ctx.honest, z_init, copies);
  return coordinate_median(augmented) + z0 * s.cwiseProduct(robust_scales(augmented, flags));
}

VectorXd attack_scm_multi_m(const AttackContext& ctx, const PsiSpec& psi, const VectorXd& direction,
                            FlagSet* flags) {
  check_context(ctx);
  const Eigen::Index r = ctx.honest.rows();
  if (direction.size() != r) throw InvalidInput("scm_multi_m: direction dimension mismatch");
  if (std::abs(direction.norm() - 1.0) > 1e-9) throw InvalidInput("scm_multi_m: direction must be a unit vector");
  const double z0 = z0_for(psi.resolve(static_cast<int>(r)));
  const int copies = copies_of(ctx);
  const VectorXd z_init = coordinate_median(ctx.honest) + z0 * robust_scales(ctx.honest, flags).cwiseProduct(direction);
  const SamplesXd augmented = with_copies(ctx.honest, z_init, copies);
  return coordinate_median(augmented) + z0 * robust_scales(augmented, flags).cwiseProduct(direction);
}

VectorXd attack_scm_ios(const AttackContext& ctx, const VectorXd& direction) {
  check_context(ctx);
  if (ctx.byz_count < 1) throw DegenerateAttack("scm_ios: needs at least one byzantine neighbor");
  if (direction.size() != ctx.honest.rows()) throw InvalidInput("scm_ios: direction dimension mismatch");
  const SamplesXd augmented = with_copies(ctx.honest, honest_mean(ctx), ctx.byz_count);
  const VectorXd uniform = VectorXd::Constant(augmented.cols(), 1.0 / augmented.cols());
  const IosTrace<double> trace = ios_trace(augmented, uniform, ctx.self, ctx.byz_count);
  return trace.averages.back() + trace.discard_distance.back() * direction;
}

AttackOutput attack_sascm_generic(const AttackContext& ctx, const AggregatorConfig& agg, const SearchBox& box,
                                  double delta) {
  check_context(ctx);
  const int copies = copies_of(ctx);
  SearchResult res = ctx.prev_sc
                         ? sascm_maximize(agg, ctx.honest, copies, box, *ctx.prev_sc, delta, ctx.self, ctx.sc_options)
                         : scm_maximize(agg, ctx.honest, copies, box, ctx.self, ctx.sc_options);
  return AttackOutput{std::move(res.z), std::move(res.sc), res.flags};
}

AttackOutput craft(const AttackConfig& cfg, const AttackContext& ctx) {
  AttackOutput out;
  out.z = std::visit(
      overloaded{
          [&](const NoAttack&) -> VectorXd {
            check_context(ctx);
            return ctx.honest.col(ctx.self);
          },
          [&](const LargeValue& a) -> VectorXd { return attack_lv(ctx, a.variant, a.gamma); },
          [&](const Gaussian& a) -> VectorXd { return attack_gaussian(ctx, a.sigma); },
          [&](const SignFlip&) -> VectorXd { return attack_signflip(ctx); },
          [&](const Alie&) -> VectorXd { return attack_alie(ctx); },
          [&](const Rop& a) -> VectorXd { return attack_rop(ctx, a.theta, a.gamma, a.reference); },
          [&](const ScmCoordM& a) -> VectorXd {
            return attack_scm_coord_m(ctx, psi_or_target(a.psi, ctx, "scm_coord_m"), a.sign, &out.flags);
          },
          [&](const ScmMultiM& a) -> VectorXd {
            return attack_scm_multi_m(ctx, psi_or_target(a.psi, ctx, "scm_multi_m"),
                                      direction_for(a.axis, ctx.honest.rows()), &out.flags);
          },
          [&](const ScmIos& a) -> VectorXd {
            return attack_scm_ios(ctx, direction_for(a.axis, ctx.honest.rows()));
          },
          [&](const Sascm& a) -> VectorXd {
            if (ctx.target == nullptr) throw InvalidConfig("sascm: the target aggregator is unknown");
            const Eigen::Index r = ctx.honest.rows();
            if (!a.generic) {
              if (const MEstimator* m = target_m_estimator(ctx)) {
                return m->coordinate_wise ? attack_scm_coord_m(ctx, m->psi, "+", &out.flags)
                                          : attack_scm_multi_m(ctx, m->psi, direction_for({}, r), &out.flags);
              }
              if (std::holds_alternative<Ios>(ctx.target->kind) || std::holds_alternative<Faba>(ctx.target->kind))
                return attack_scm_ios(ctx, direction_for({}, r));
            }
            if (!a.half_width)
              throw InvalidConfig("sascm: target '" + aggregator_name(*ctx.target) +
                                  "' has no closed-form outlier; a bounded search box (half_width) is required");
            check_context(ctx);
            const SearchBox box =
                SearchBox::centered(coordinate_median(ctx.honest), *a.half_width, a.resolution, a.refine_iters);
            AttackOutput res = attack_sascm_generic(ctx, *ctx.target, box, a.delta);
            out.sc = std::move(res.sc);
            out.flags.merge(res.flags);
            return std::move(res.z);
          },
      },
      cfg.kind);
  if (!out.z.allFinite()) throw NumericError("attack " + attack_name(cfg) + ": non-finite output");
  return out;
}

// ---------------------------------------------------------------------------
// Canonical spellings

const std::vector<std::string>& attack_names() {
  static const std::vector<std::string> names = {
      "none", "lv_own", "lv_honest_pos", "lv_honest_neg", "lv_ones",     "lv_random",   "gaussian",
      "signflip", "alie", "rop",          "sascm",         "scm_coord_m", "scm_multi_m", "scm_ios"};
  return names;
}

void validate(const AttackConfig& cfg) {
  std::visit(overloaded{
                 [](const LargeValue& a) {
                   if (!(a.gamma > 0.0) || !std::isfinite(a.gamma)) throw InvalidConfig("lv: gamma must be > 0");
                 },
                 [](const Gaussian& a) {
                   if (!(a.sigma > 0.0) || !std::isfinite(a.sigma)) throw InvalidConfig("gaussian: sigma must be > 0");
                 },
                 [](const Rop& a) {
                   if (!(a.gamma > 0.0) || !std::isfinite(a.gamma)) throw InvalidConfig("rop: gamma must be > 0");
                   if (!(a.theta >= 0.0 && a.theta < 2.0 * std::numbers::pi))
                     throw InvalidConfig("rop: theta must lie in [0, 2pi)");
                 },
                 [](const ScmCoordM& a) {
                   for (char c : a.sign)
                     if (c != '+' && c != '-') throw InvalidConfig("scm_coord_m: sign pattern accepts only '+' and '-'");
                   if (a.sign.empty()) throw InvalidConfig("scm_coord_m: empty sign pattern");
                 },
                 [](const ScmMultiM& a) {
                   if (a.axis && *a.axis < 0) throw InvalidConfig("scm_multi_m: axis must be >= 0");
                 },
                 [](const ScmIos& a) {
                   if (a.axis && *a.axis < 0) throw InvalidConfig("scm_ios: axis must be >= 0");
                 },
                 [](const Sascm& a) {
                   if (!(a.delta > 0.0 && a.delta <= 1.0)) throw InvalidConfig("sascm: delta must lie in (0, 1]");
                   if (a.half_width && !(*a.half_width > 0.0)) throw InvalidConfig("sascm: half_width must be > 0");
                   if (a.resolution < 2) throw InvalidConfig("sascm: res must be >= 2");
                   if (a.refine_iters < 0) throw InvalidConfig("sascm: refine must be >= 0");
                 },
                 [](const auto&) {},
             },
             cfg.kind);
}

std::string attack_name(const AttackConfig& cfg) {
  return std::visit(overloaded{
                        [](const NoAttack&) -> std::string { return "none"; },
                        [](const LargeValue& a) -> std::string {
                          switch (a.variant) {
                            case LvVariant::Own: return "lv_own";
                            case LvVariant::HonestPos: return "lv_honest_pos";
                            case LvVariant::HonestNeg: return "lv_honest_neg";
                            case LvVariant::Ones: return "lv_ones";
                            case LvVariant::Random: return "lv_random";
                          }
                          return "lv_ones";
                        },
                        [](const Gaussian&) -> std::string { return "gaussian"; },
                        [](const SignFlip&) -> std::string { return "signflip"; },
                        [](const Alie&) -> std::string { return "alie"; },
                        [](const Rop&) -> std::string { return "rop"; },
                        [](const ScmCoordM&) -> std::string { return "scm_coord_m"; },
                        [](const ScmMultiM&) -> std::string { return "scm_multi_m"; },
                        [](const ScmIos&) -> std::string { return "scm_ios"; },
                        [](const Sascm&) -> std::string { return "sascm"; },
                    },
                    cfg.kind);
}

namespace {

void write_optional_psi(const std::optional<PsiSpec>& psi, ParamMap& out) {
  if (!psi) return;
  out["psi"] = psi_family_name(psi->family);
  write_psi_params(*psi, out);
}

std::optional<PsiSpec> parse_optional_psi(const ParamMap& p) {
  const auto it = p.find("psi");
  if (it == p.end()) {
    for (const char* k : {"q", "c", "nu"})
      if (p.count(k)) throw InvalidConfig(std::string("attack: parameter '") + k + "' requires psi=<family>");
    return std::nullopt;
  }
  return parse_psi_spec(parse_psi_family(it->second), p);
}

}  // namespace

ParamMap attack_params(const AttackConfig& cfg) {
  ParamMap out;
  std::visit(overloaded{
                 [&](const LargeValue& a) { out["gamma"] = format_number(a.gamma); },
                 [&](const Gaussian& a) { out["sigma"] = format_number(a.sigma); },
                 [&](const Rop& a) {
                   out["theta"] = format_number(a.theta);
                   out["gamma"] = format_number(a.gamma);
                   out["reference"] = a.reference == RopReference::Self ? "self" : "prev";
                 },
                 [&](const ScmCoordM& a) {
                   write_optional_psi(a.psi, out);
                   out["sign"] = a.sign;
                 },
                 [&](const ScmMultiM& a) {
                   write_optional_psi(a.psi, out);
                   if (a.axis) out["axis"] = std::to_string(*a.axis);
                 },
                 [&](const ScmIos& a) {
                   if (a.axis) out["axis"] = std::to_string(*a.axis);
                 },
                 [&](const Sascm& a) {
                   if (a.half_width) out["half_width"] = format_number(*a.half_width);
                   out["res"] = std::to_string(a.resolution);
                   out["refine"] = std::to_string(a.refine_iters);
                   out["delta"] = format_number(a.delta);
                   out["mode"] = a.generic ? "generic" : "auto";
                 },
                 [](const auto&) {},
             },
             cfg.kind);
  return out;
}

std::string to_spec_string(const AttackConfig& cfg) {
  std::string out = attack_name(cfg);
  char sep = ':';
  for (const auto& [k, v] : attack_params(cfg)) {
    out += sep + k + "=" + v;
    sep = ',';
  }
  return out;
}

AttackConfig make_attack(const std::string& name, const ParamMap& p) {
  AttackConfig cfg;
  const std::string owner = "attack " + name;
  auto lv = [&](LvVariant v) {
    reject_unknown(p, {"gamma"}, owner);
    return AttackConfig{LargeValue{v, param_double(p, "gamma", 1000.0)}};
  };
  if (name == "none") {
    reject_unknown(p, {}, owner);
    cfg.kind = NoAttack{};
  } else if (name == "lv_own") {
    cfg = lv(LvVariant::Own);
  } else if (name == "lv_honest_pos") {
    cfg = lv(LvVariant::HonestPos);
  } else if (name == "lv_honest_neg") {
    cfg = lv(LvVariant::HonestNeg);
  } else if (name == "lv_ones") {
    cfg = lv(LvVariant::Ones);
  } else if (name == "lv_random") {
    cfg = lv(LvVariant::Random);
  } else if (name == "gaussian") {
    reject_unknown(p, {"sigma"}, owner);
    cfg.kind = Gaussian{param_double(p, "sigma", 1.0)};
  } else if (name == "signflip") {
    reject_unknown(p, {}, owner);
    cfg.kind = SignFlip{};
  } else if (name == "alie") {
    reject_unknown(p, {}, owner);
    cfg.kind = Alie{};
  } else if (name == "rop") {
    reject_unknown(p, {"theta", "gamma", "reference"}, owner);
    Rop r;
    r.theta = param_double(p, "theta", r.theta);
    r.gamma = param_double(p, "gamma", r.gamma);
    if (const auto it = p.find("reference"); it != p.end()) {
      if (it->second == "self")
        r.reference = RopReference::Self;
      else if (it->second == "prev")
        r.reference = RopReference::PrevWeight;
      else
        throw InvalidConfig("rop: reference must be 'self' or 'prev'");
    }
    cfg.kind = r;
  } else if (name == "scm_coord_m") {
    reject_unknown(p, {"psi", "q", "c", "nu", "sign"}, owner);
    ScmCoordM a;
    a.psi = parse_optional_psi(p);
    if (const auto it = p.find("sign"); it != p.end()) a.sign = it->second;
    cfg.kind = a;
  } else if (name == "scm_multi_m") {
    reject_unknown(p, {"psi", "q", "c", "nu", "axis"}, owner);
    cfg.kind = ScmMultiM{parse_optional_psi(p), param_optional_int(p, "axis")};
  } else if (name == "scm_ios") {
    reject_unknown(p, {"axis"}, owner);
    cfg.kind = ScmIos{param_optional_int(p, "axis")};
  } else if (name == "sascm") {
    reject_unknown(p, {"half_width", "res", "refine", "delta", "mode"}, owner);
    Sascm a;
    a.half_width = param_optional_double(p, "half_width");
    a.resolution = param_optional_int(p, "res").value_or(a.resolution);
    a.refine_iters = param_optional_int(p, "refine").value_or(a.refine_iters);
    a.delta = param_double(p, "delta", a.delta);
    if (const auto it = p.find("mode"); it != p.end()) {
      if (it->second != "auto" && it->second != "generic") throw InvalidConfig("sascm: mode must be 'auto' or 'generic'");
      a.generic = it->second == "generic";
    }
    cfg.kind = a;
  } else {
    std::string known;
    for (const auto& n : attack_names()) known += (known.empty() ? "" : ", ") + n;
    throw InvalidConfig("unknown attack '" + name + "' (known: " + known + ")");
  }
  validate(cfg);
  return cfg;
}

AttackConfig parse_attack_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  return make_attack(spec.substr(0, colon), parse_params(colon == std::string::npos ? "" : spec.substr(colon + 1)));
}

}  // namespace byzlab
