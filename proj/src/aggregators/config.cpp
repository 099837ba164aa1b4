#include "byzlab/aggregators/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace byzlab {

namespace {

constexpr double kTukeyC = 4.685;
constexpr double kTalwarC = 2.7955;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

VectorXd context_weights(const AggregationContext& ctx, Eigen::Index n, CombinationRule rule) {
  if (rule == CombinationRule::Uniform || ctx.weights.size() == 0) return VectorXd::Constant(n, 1.0 / n);
  if (ctx.weights.size() != n) throw InvalidInput("aggregate: weight count does not match sample count");
  return ctx.weights;
}

int byz_or_context(const std::optional<int>& fixed, const AggregationContext& ctx) {
  return fixed ? *fixed : ctx.byz_count;
}

}  // namespace

PsiKind PsiSpec::resolve(int dim) const {
  switch (family) {
    case PsiFamily::StudentT: return StudentT{nu, dim};
    case PsiFamily::Huber: return c ? PsiKind{make_huber_from_cutoff(*c, dim)} : PsiKind{make_huber(q, dim)};
    case PsiFamily::Tukey: return Tukey{c.value_or(kTukeyC)};
    case PsiFamily::Talwar: return Talwar{c.value_or(kTalwarC)};
  }
  throw InvalidConfig("unknown psi family");
}

double PsiSpec::tuning() const {
  switch (family) {
    case PsiFamily::StudentT: return nu;
    case PsiFamily::Huber: return c.value_or(q);
    case PsiFamily::Tukey: return c.value_or(kTukeyC);
    case PsiFamily::Talwar: return c.value_or(kTalwarC);
  }
  return 0.0;
}

void validate(const AggregatorConfig& cfg) {
  std::visit(overloaded{
                 [](const TrimmedMean& t) {
                   if (!(t.alpha >= 0.0 && t.alpha < 0.5))
                     throw InvalidConfig("trimmed_mean: alpha must lie in [0, 0.5)");
                 },
                 [](const MEstimator& m) {
                   if (m.psi.family == PsiFamily::StudentT && !(m.psi.nu > 0.0))
                     throw InvalidConfig("m_t: nu must be > 0");
                   if (m.psi.family == PsiFamily::Huber && !m.psi.c && !(m.psi.q > 0.0 && m.psi.q < 1.0))
                     throw InvalidConfig("m_huber: q must lie in (0, 1)");
                   if (m.psi.c && !(*m.psi.c > 0.0)) throw InvalidConfig("m-estimator: c must be > 0");
                   if (!(m.fixed_point.tol > 0.0) || m.fixed_point.max_iter < 1)
                     throw InvalidConfig("m-estimator: tol > 0 and max_iter >= 1 required");
                 },
                 [](const GeometricMedian& g) {
                   if (!(g.fixed_point.tol > 0.0) || g.fixed_point.max_iter < 1)
                     throw InvalidConfig("geomedian: tol > 0 and max_iter >= 1 required");
                 },
                 [](const Scc& s) {
                   if (s.tau && !(*s.tau > 0.0)) throw InvalidConfig("scc: tau must be > 0");
                   if (s.eps_hat && !(*s.eps_hat >= 0.0 && *s.eps_hat < 1.0))
                     throw InvalidConfig("scc: eps_hat must lie in [0, 1)");
                 },
                 [](const MultiKrum& k) {
                   if (k.m && *k.m < 1) throw InvalidConfig("multikrum: m must be >= 1");
                   if (k.byz && *k.byz < 0) throw InvalidConfig("multikrum: byz must be >= 0");
                 },
                 [](const Ios& i) {
                   if (i.byz && *i.byz < 0) throw InvalidConfig("ios: byz must be >= 0");
                 },
                 [](const Faba& f) {
                   if (f.byz && *f.byz < 0) throw InvalidConfig("faba: byz must be >= 0");
                 },
                 [](const MixTailor& mt) {
                   if (mt.menu.empty()) throw InvalidConfig("mixtailor: menu must be non-empty");
                   for (const auto& sub : mt.menu) validate(sub);
                 },
                 [](const auto&) {},
             },
             cfg.kind);
}

VectorXd aggregate(const AggregatorConfig& cfg, const SamplesXd& samples, const AggregationContext& ctx,
                   FlagSet* flags) {
  require_nonempty(samples, "aggregate");
  require_finite(samples, "aggregate");
  const Eigen::Index n = samples.cols();
  return std::visit(
      overloaded{
          [&](const Mean&) -> VectorXd { return agg_mean(samples); },
          [&](const TrimmedMean& t) -> VectorXd { return agg_trimmed_mean(samples, t.alpha); },
          [&](const Median&) -> VectorXd { return agg_median(samples); },
          [&](const MEstimator& m) -> VectorXd {
            const int dim = m.coordinate_wise ? 1 : static_cast<int>(samples.rows());
            return agg_m_estimator(samples, m.psi.resolve(dim), m.coordinate_wise, m.fixed_point, flags);
          },
          [&](const GeometricMedian& g) -> VectorXd { return agg_geometric_median(samples, g.fixed_point, flags); },
          [&](const Scc& s) -> VectorXd {
            const VectorXd w = context_weights(ctx, n, s.rule);
            double tau = 0.0;
            if (s.tau) {
              tau = *s.tau;
            } else {
              const double eps_hat = s.eps_hat ? *s.eps_hat : static_cast<double>(ctx.byz_count) / n;
              tau = scc_adaptive_tau(samples, ctx.self, eps_hat);
            }
            return agg_scc(samples, w, ctx.self, tau);
          },
          [&](const MultiKrum& k) -> VectorXd {
            const int byz = byz_or_context(k.byz, ctx);
            const int m = k.m ? std::min<int>(*k.m, static_cast<int>(n)) : static_cast<int>(n) - byz;
            return agg_multi_krum(samples, byz, m);
          },
          [&](const Ios& i) -> VectorXd {
            return agg_ios(samples, context_weights(ctx, n, i.rule), ctx.self, byz_or_context(i.byz, ctx));
          },
          [&](const Faba& f) -> VectorXd { return agg_faba(samples, ctx.self, byz_or_context(f.byz, ctx)); },
          [&](const MixTailor& mt) -> VectorXd {
            if (mt.menu.empty()) throw InvalidConfig("mixtailor: menu must be non-empty");
            if (ctx.rng == nullptr) throw InvalidConfig("mixtailor: requires a random stream");
            const std::size_t pick = ctx.rng->index(mt.menu.size());
            return aggregate(mt.menu[pick], samples, ctx, flags);
          },
      },
      cfg.kind);
}

// ---------------------------------------------------------------------------
// Canonical spellings

const std::vector<std::string>& aggregator_names() {
  static const std::vector<std::string> names = {"mean",     "trimmed_mean", "median", "m_huber",  "m_tukey",
                                                 "m_talwar", "m_t",          "geomedian", "scc", "multikrum",
                                                 "ios",      "faba",         "mixtailor"};
  return names;
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

ParamMap parse_params(const std::string& text) {
  ParamMap out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidConfig("malformed parameter '" + item + "' (expected key=value)");
    const std::string key = item.substr(0, eq);
    if (out.count(key)) throw InvalidConfig("duplicate parameter '" + key + "'");
    out[key] = item.substr(eq + 1);
  }
  return out;
}

std::optional<double> param_optional_double(const ParamMap& p, const std::string& key) {
  const auto it = p.find(key);
  if (it == p.end()) return std::nullopt;
  const std::string& s = it->second;
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InvalidConfig("parameter '" + key + "' is not a number: '" + s + "'");
  return v;
}

double param_double(const ParamMap& p, const std::string& key, double fallback) {
  return param_optional_double(p, key).value_or(fallback);
}

std::optional<int> param_optional_int(const ParamMap& p, const std::string& key) {
  const auto it = p.find(key);
  if (it == p.end()) return std::nullopt;
  const std::string& s = it->second;
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InvalidConfig("parameter '" + key + "' is not an integer: '" + s + "'");
  return v;
}

bool param_bool(const ParamMap& p, const std::string& key, bool fallback) {
  const auto it = p.find(key);
  if (it == p.end()) return fallback;
  const std::string& s = it->second;
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw InvalidConfig("parameter '" + key + "' is not a boolean: '" + s + "'");
}

void reject_unknown(const ParamMap& p, const std::vector<std::string>& allowed, const std::string& owner) {
  for (const auto& [key, value] : p) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw InvalidConfig(owner + ": unknown parameter '" + key + "'");
  }
}

std::string psi_family_name(PsiFamily f) {
  switch (f) {
    case PsiFamily::StudentT: return "t";
    case PsiFamily::Huber: return "huber";
    case PsiFamily::Tukey: return "tukey";
    case PsiFamily::Talwar: return "talwar";
  }
  return "?";
}

PsiFamily parse_psi_family(const std::string& name) {
  if (name == "t") return PsiFamily::StudentT;
  if (name == "huber") return PsiFamily::Huber;
  if (name == "tukey") return PsiFamily::Tukey;
  if (name == "talwar") return PsiFamily::Talwar;
  throw InvalidConfig("unknown psi family '" + name + "' (expected t, huber, tukey, talwar)");
}

PsiSpec parse_psi_spec(PsiFamily family, const ParamMap& p) {
  PsiSpec spec;
  spec.family = family;
  switch (family) {
    case PsiFamily::StudentT: spec.nu = param_double(p, "nu", 3.0); break;
    case PsiFamily::Huber:
      spec.q = param_double(p, "q", 0.8);
      spec.c = param_optional_double(p, "c");
      break;
    case PsiFamily::Tukey: spec.c = param_double(p, "c", kTukeyC); break;
    case PsiFamily::Talwar: spec.c = param_double(p, "c", kTalwarC); break;
  }
  return spec;
}

void write_psi_params(const PsiSpec& spec, ParamMap& out) {
  switch (spec.family) {
    case PsiFamily::StudentT: out["nu"] = format_number(spec.nu); break;
    case PsiFamily::Huber:
      if (spec.c)
        out["c"] = format_number(*spec.c);
      else
        out["q"] = format_number(spec.q);
      break;
    case PsiFamily::Tukey:
    case PsiFamily::Talwar: out["c"] = format_number(spec.tuning()); break;
  }
}

namespace {

std::string rule_name(CombinationRule r) { return r == CombinationRule::Uniform ? "uniform" : "context"; }

CombinationRule parse_rule(const ParamMap& p) {
  const auto it = p.find("rule");
  if (it == p.end() || it->second == "context") return CombinationRule::Context;
  if (it->second == "uniform") return CombinationRule::Uniform;
  throw InvalidConfig("unknown combination rule '" + it->second + "' (expected context or uniform)");
}

FixedPointOptions parse_fixed_point(const ParamMap& p) {
  FixedPointOptions fp;
  fp.tol = param_double(p, "tol", fp.tol);
  fp.max_iter = param_optional_int(p, "max_iter").value_or(fp.max_iter);
  return fp;
}

void write_fixed_point(const FixedPointOptions& fp, ParamMap& out) {
  out["tol"] = format_number(fp.tol);
  out["max_iter"] = std::to_string(fp.max_iter);
}

}  // namespace

AggregatorConfig make_aggregator(const std::string& name, const ParamMap& p) {
  AggregatorConfig cfg;
  if (name == "mean") {
    reject_unknown(p, {}, name);
    cfg.kind = Mean{};
  } else if (name == "trimmed_mean") {
    reject_unknown(p, {"alpha"}, name);
    cfg.kind = TrimmedMean{param_double(p, "alpha", 0.0688)};
  } else if (name == "median") {
    reject_unknown(p, {}, name);
    cfg.kind = Median{};
  } else if (name == "m_huber" || name == "m_tukey" || name == "m_talwar" || name == "m_t") {
    const PsiFamily family = name == "m_huber"   ? PsiFamily::Huber
                             : name == "m_tukey" ? PsiFamily::Tukey
                             : name == "m_talwar" ? PsiFamily::Talwar
                                                  : PsiFamily::StudentT;
    std::vector<std::string> allowed = {"coord", "tol", "max_iter"};
    if (family == PsiFamily::StudentT) allowed.push_back("nu");
    if (family == PsiFamily::Huber) allowed.push_back("q");
    if (family != PsiFamily::StudentT) allowed.push_back("c");
    reject_unknown(p, allowed, name);
    cfg.kind = MEstimator{parse_psi_spec(family, p), param_bool(p, "coord", true), parse_fixed_point(p)};
  } else if (name == "geomedian") {
    reject_unknown(p, {"tol", "max_iter"}, name);
    cfg.kind = GeometricMedian{parse_fixed_point(p)};
  } else if (name == "scc") {
    reject_unknown(p, {"tau", "eps_hat", "rule"}, name);
    Scc s;
    s.tau = param_optional_double(p, "tau");
    s.eps_hat = param_optional_double(p, "eps_hat");
    s.rule = parse_rule(p);
    cfg.kind = s;
  } else if (name == "multikrum") {
    reject_unknown(p, {"m", "byz"}, name);
    cfg.kind = MultiKrum{param_optional_int(p, "m"), param_optional_int(p, "byz")};
  } else if (name == "ios") {
    reject_unknown(p, {"byz", "rule"}, name);
    cfg.kind = Ios{param_optional_int(p, "byz"), parse_rule(p)};
  } else if (name == "faba") {
    reject_unknown(p, {"byz"}, name);
    cfg.kind = Faba{param_optional_int(p, "byz")};
  } else if (name == "mixtailor") {
    throw InvalidConfig("mixtailor: build the menu with parse_aggregator_spec or a config menu");
  } else {
    std::string known;
    for (const auto& n : aggregator_names()) known += (known.empty() ? "" : ", ") + n;
    throw InvalidConfig("unknown aggregator '" + name + "' (known: " + known + ")");
  }
  validate(cfg);
  return cfg;
}

AggregatorConfig parse_aggregator_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? std::string() : spec.substr(colon + 1);
  if (name == "mixtailor") {
    MixTailor mt;
    if (rest.empty()) {
      mt.menu.push_back(AggregatorConfig{Median{}});
      mt.menu.push_back(make_aggregator("m_tukey", {}));
    } else {
      std::stringstream ss(rest);
      std::string item;
      while (std::getline(ss, item, '|')) mt.menu.push_back(parse_aggregator_spec(item));
    }
    AggregatorConfig cfg{mt};
    validate(cfg);
    return cfg;
  }
  return make_aggregator(name, parse_params(rest));
}

std::string aggregator_name(const AggregatorConfig& cfg) {
  return std::visit(overloaded{
                        [](const Mean&) -> std::string { return "mean"; },
                        [](const TrimmedMean&) -> std::string { return "trimmed_mean"; },
                        [](const Median&) -> std::string { return "median"; },
                        [](const MEstimator& m) -> std::string {
                          switch (m.psi.family) {
                            case PsiFamily::StudentT: return "m_t";
                            case PsiFamily::Huber: return "m_huber";
                            case PsiFamily::Tukey: return "m_tukey";
                            case PsiFamily::Talwar: return "m_talwar";
                          }
                          return "m_huber";
                        },
                        [](const GeometricMedian&) -> std::string { return "geomedian"; },
                        [](const Scc&) -> std::string { return "scc"; },
                        [](const MultiKrum&) -> std::string { return "multikrum"; },
                        [](const Ios&) -> std::string { return "ios"; },
                        [](const Faba&) -> std::string { return "faba"; },
                        [](const MixTailor&) -> std::string { return "mixtailor"; },
                    },
                    cfg.kind);
}

ParamMap aggregator_params(const AggregatorConfig& cfg) {
  ParamMap out;
  std::visit(overloaded{
                 [&](const TrimmedMean& t) { out["alpha"] = format_number(t.alpha); },
                 [&](const MEstimator& m) {
                   write_psi_params(m.psi, out);
                   out["coord"] = m.coordinate_wise ? "1" : "0";
                   write_fixed_point(m.fixed_point, out);
                 },
                 [&](const GeometricMedian& g) { write_fixed_point(g.fixed_point, out); },
                 [&](const Scc& s) {
                   if (s.tau) out["tau"] = format_number(*s.tau);
                   if (s.eps_hat) out["eps_hat"] = format_number(*s.eps_hat);
                   out["rule"] = rule_name(s.rule);
                 },
                 [&](const MultiKrum& k) {
                   if (k.m) out["m"] = std::to_string(*k.m);
                   if (k.byz) out["byz"] = std::to_string(*k.byz);
                 },
                 [&](const Ios& i) {
                   if (i.byz) out["byz"] = std::to_string(*i.byz);
                   out["rule"] = rule_name(i.rule);
                 },
                 [&](const Faba& f) {
                   if (f.byz) out["byz"] = std::to_string(*f.byz);
                 },
                 [](const auto&) {},
             },
             cfg.kind);
  return out;
}

std::string to_spec_string(const AggregatorConfig& cfg) {
  if (const auto* mt = std::get_if<MixTailor>(&cfg.kind)) {
    std::string out = "mixtailor:";
    for (std::size_t i = 0; i < mt->menu.size(); ++i) out += (i ? "|" : "") + to_spec_string(mt->menu[i]);
    return out;
  }
  std::string out = aggregator_name(cfg);
  const ParamMap params = aggregator_params(cfg);
  char sep = ':';
  for (const auto& [k, v] : params) {
    out += sep + k + "=" + v;
    sep = ',';
  }
  return out;
}

}  // namespace byzlab
