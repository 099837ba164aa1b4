// Acceptance suite: one line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "byzlab/attacks/attacks.hpp"
#include "byzlab/core/stats.hpp"
#include "byzlab/io/csv.hpp"
#include "byzlab/simulator/atc.hpp"

using namespace byzlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

SamplesXd normal_samples(RngStream& rng, Eigen::Index r, Eigen::Index n, double scale = 1.0) {
  SamplesXd s(r, n);
  for (Eigen::Index j = 0; j < n; ++j) s.col(j) = rng.normal_vector(r, scale);
  return s;
}

ExperimentConfig reference_setup(const std::string& agg, const std::string& attack, double epsilon, double cap) {
  ExperimentConfig cfg;
  cfg.topology.agents = 30;
  cfg.topology.edge_prob = 0.7;
  cfg.topology.epsilon = epsilon;
  cfg.topology.max_local_epsilon = cap;
  cfg.topology.seed = 7;
  cfg.task.dim = 10;
  cfg.task.mu = 0.05;
  cfg.task.sigma_v2 = 0.01;
  cfg.task.iterations = 2000;
  cfg.aggregator = parse_aggregator_spec(agg);
  cfg.attack = parse_attack_spec(attack);
  return cfg;
}

// Diverged runs count as unbounded error.
double final_error(const RunTrace& t) {
  if (t.diverged || t.mean_dist_sq.empty()) return std::numeric_limits<double>::infinity();
  return t.mean_dist_sq.back();
}

double tail_mean(const std::vector<double>& v, std::size_t n) {
  n = std::min(n, v.size());
  double s = 0.0;
  for (std::size_t i = v.size() - n; i < v.size(); ++i) s += v[i];
  return s / static_cast<double>(n);
}

int first_hit(const std::vector<double>& v, double threshold) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] <= threshold) return static_cast<int>(i) + 1;
  return std::numeric_limits<int>::max();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + BYZLAB_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---------------------------------------------------------------------------

Outcome baseline_convergence() {
  const std::vector<std::string> specs = {"mean",     "trimmed_mean:alpha=0.0688", "median",
                                          "m_huber",  "m_tukey:c=4.685,coord=1",   "m_talwar:c=2.7955,coord=1",
                                          "geomedian", "scc",                      "multikrum",
                                          "ios"};
  Outcome out{true, ""};
  std::vector<double> mean_trace, median_trace;
  double slowest = 0.0;
  for (const auto& spec : specs) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunTrace t = run_atc(reference_setup(spec, "none", 0.0, 0.5));
    slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    const double err = final_error(t);
    if (!(err <= 0.05)) {
      out.pass = false;
      out.detail += spec + " final=" + num(err) + " ";
    }
    if (spec == "mean") mean_trace = t.mean_dist_sq;
    if (spec == "median") median_trace = t.mean_dist_sq;
  }
  if (slowest >= 60.0) out.pass = false;

  // thresholds across the transient, down to twice the higher steady-state level
  const double hi = 0.5 * mean_trace.front();
  const double lo = 2.0 * std::max(tail_mean(mean_trace, 200), tail_mean(median_trace, 200));
  int violations = 0;
  const int levels = 25;
  for (int i = 0; i < levels; ++i) {
    const double thr = hi * std::pow(lo / hi, static_cast<double>(i) / (levels - 1));
    if (first_hit(mean_trace, thr) > first_hit(median_trace, thr)) ++violations;
  }
  if (violations > 0) out.pass = false;
  out.detail += "10 aggregators, max run " + num(slowest) + " s, ordering violations " + std::to_string(violations) +
                "/" + std::to_string(levels) + ", mean final " + num(mean_trace.back()) + ", median final " +
                num(median_trace.back());
  return out;
}

Outcome mean_closed_form() {
  RngStream rng(101, 0);
  const AggregatorConfig mean = parse_aggregator_spec("mean");
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index r = 1 + static_cast<Eigen::Index>(rng.index(5));
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.index(20));
    const SamplesXd y = normal_samples(rng, r, n, 3.0);
    const VectorXd z = rng.normal_vector(r, 30.0);
    const VectorXd expect = z - y.rowwise().mean();
    worst = std::max(worst, (sc(mean, SCQuery{y, z, 1, 0}) - expect).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-10, "max abs error " + num(worst) + " over 100 cases"};
}

Outcome trimmed_breakdown() {
  RngStream rng(202, 0);
  const AggregatorConfig tm = parse_aggregator_spec("trimmed_mean:alpha=0.2");
  const double z = 1e6;
  const int n_total = 15;

  const SamplesXd y2 = normal_samples(rng, 1, n_total - 2);
  const double boundary = std::abs(sc(tm, SCQuery{y2, VectorXd::Constant(1, y2.maxCoeff()), 2, 0})(0));
  const double bounded = std::abs(sc(tm, SCQuery{y2, VectorXd::Constant(1, z), 2, 0})(0));

  const SamplesXd y4 = normal_samples(rng, 1, n_total - 4);
  const double broken = std::abs(sc(tm, SCQuery{y4, VectorXd::Constant(1, z), 4, 0})(0));

  const bool pass = bounded <= 1.01 * boundary && broken >= 0.1 * n_total * z;
  return {pass, "P=2 |sc|=" + num(bounded) + " (boundary " + num(boundary) + "), P=4 |sc|=" + num(broken)};
}

Outcome z0_consistency() {
  const std::vector<std::pair<std::string, PsiKind>> kinds = {
      {"tukey", Tukey{4.685}},
      {"talwar", Talwar{2.7955}},
      {"t(nu=3)", StudentT{3.0, 1}},
      {"t(nu=3,r=10)", StudentT{3.0, 10}},
      {"huber(r=1)", PsiSpec{PsiFamily::Huber}.resolve(1)},
      {"huber(r=10)", PsiSpec{PsiFamily::Huber}.resolve(10)},
  };
  double worst = 0.0;
  std::string detail;
  for (const auto& [name, kind] : kinds) {
    const double closed = z0_for(kind);
    const double found = z0_by_search(kind);
    const double rel = std::abs(found - closed) / closed;
    worst = std::max(worst, rel);
    detail += name + " " + num(rel) + " ";
  }
  return {worst <= 1e-3, "relative errors: " + detail};
}

Outcome scm_vs_numeric() {
  Outcome out{true, ""};
  for (const std::string spec : {"m_tukey", "m_talwar", "m_huber"}) {
    const AggregatorConfig agg = parse_aggregator_spec(spec);
    const PsiSpec psi = std::get<MEstimator>(agg.kind).psi;
    double worst = std::numeric_limits<double>::infinity();
    int below = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      RngStream rng(300 + s, 0);
      AttackContext ctx;
      ctx.honest = normal_samples(rng, 1, 30);
      ctx.byz_count = 1;
      // the sign pattern is the attacker's choice
      double closed = 0.0;
      for (const char* sign : {"+", "-"})
        closed = std::max(closed, sc(agg, SCQuery{ctx.honest, attack_scm_coord_m(ctx, psi, sign), 1, 0}).norm());
      const double scale = coordinate_mad(ctx.honest)(0);
      const SearchResult best = scm_maximize(
          agg, ctx.honest, 1, SearchBox::centered(coordinate_median(ctx.honest), 10.0 * scale, 401, 3));
      worst = std::min(worst, closed / best.sc.norm());
      if (closed < 0.95 * best.sc.norm()) ++below;
    }
    if (!(worst >= 0.95)) out.pass = false;
    out.detail += spec + " min ratio " + num(worst) + " (" + std::to_string(below) + "/20 below 0.95) ";
  }
  return out;
}

Outcome attack_ordering() {
  Outcome out{true, ""};
  for (const std::string target : {"m_huber", "ios"}) {
    double none = 0, sascm = 0, alie = 0, lv = 0;
    for (const std::string attack : {"none", "sascm", "alie", "lv_ones"}) {
      const double err = final_error(run_atc(reference_setup(target, attack, 0.2, 0.31)));
      (attack == "none" ? none : attack == "sascm" ? sascm : attack == "alie" ? alie : lv) = err;
    }
    const bool ok = sascm >= 10.0 * none && sascm >= alie && sascm >= lv;
    if (!ok) out.pass = false;
    out.detail += target + ": none " + num(none) + " sascm " + num(sascm) + " alie " + num(alie) + " lv_ones " +
                  num(lv) + "; ";
  }
  return out;
}

Outcome alignment_matters() {
  const double fixed = final_error(run_atc(reference_setup("median", "lv_ones", 0.2, 0.31)));
  const double random = final_error(run_atc(reference_setup("median", "lv_random", 0.2, 0.31)));
  return {random < fixed, "median: lv_random " + num(random) + " lv_ones " + num(fixed)};
}

Outcome rop_scc() {
  RngStream rng(808, 0);
  double worst_orth = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    AttackContext ctx;
    ctx.honest = normal_samples(rng, 1 + static_cast<Eigen::Index>(rng.index(8)) + 1, 6);
    const VectorXd delta = ctx.honest.rowwise().mean() - ctx.honest.col(0);
    const VectorXd z = attack_rop(ctx, std::numbers::pi / 2, 10.0, RopReference::Self) - ctx.honest.col(0);
    worst_orth = std::max(worst_orth, std::abs(z.dot(delta)) / (z.norm() * delta.norm()));
  }

  const double tau = 1.0, gamma = 10.0;
  const AggregatorConfig scc = parse_aggregator_spec("scc:tau=1");
  int wins = 0;
  const int cases = 20;
  for (int c = 0; c < cases; ++c) {
    AttackContext ctx;
    ctx.honest = normal_samples(rng, 5, 10);
    const VectorXd z = attack_rop(ctx, std::numbers::pi, gamma, RopReference::Self);
    const double realized = sc(scc, SCQuery{ctx.honest, z, 1, 0}).norm();
    std::vector<double> probes;
    for (int p = 0; p < 100; ++p) {
      const VectorXd u = rng.normal_vector(5).normalized();
      probes.push_back(sc(scc, SCQuery{ctx.honest, ctx.honest.col(0) + gamma * u, 1, 0}).norm());
    }
    if (realized >= median(probes)) ++wins;
  }
  const bool pass = worst_orth <= 1e-9 && wins == cases && gamma >= tau;
  return {pass, "orthogonality residual " + num(worst_orth) + ", scc contexts beating the probe median " +
                    std::to_string(wins) + "/" + std::to_string(cases)};
}

Outcome thread_determinism() {
  const fs::path dir = fs::temp_directory_path() / "byzlab_acceptance_threads";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "cfg.json") << R"({
    "topology": {"K": 30, "edge_prob": 0.7, "epsilon": 0.2, "max_local_epsilon": 0.31, "seed": 11},
    "task": {"r": 10, "iterations": 300},
    "aggregator": {"name": "mixtailor", "menu": [{"name": "median"}, {"name": "m_huber"}, {"name": "geomedian"}, {"name": "ios"}]},
    "attack": {"name": "alie"},
    "output": {"per_agent": true}
  })";
  const std::string cfg = "\"" + (dir / "cfg.json").string() + "\"";
  const int a = run_cli("simulate " + cfg + " --threads 1 --out-dir \"" + (dir / "t1").string() + "\"");
  const int b = run_cli("simulate " + cfg + " --threads 3 --out-dir \"" + (dir / "t3").string() + "\"");
  if (a != 0 || b != 0) return {false, "cli exit codes " + std::to_string(a) + ", " + std::to_string(b)};
  const std::string t1 = read_file(dir / "t1" / "trace.csv");
  const std::string t3 = read_file(dir / "t3" / "trace.csv");
  return {t1 == t3 && !t1.empty(), "trace.csv " + std::to_string(t1.size()) + " bytes, identical: " +
                                       (t1 == t3 ? "yes" : "no")};
}

VectorXd brute_force_krum(const SamplesXd& s, int byz, int m) {
  const int n = static_cast<int>(s.cols());
  const int k = n - byz - 2;
  std::vector<double> score(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (int l = 0; l < n; ++l)
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      if ((mask >> l) & 1u || std::popcount(mask) != k) continue;
      double total = 0.0;
      for (int j = 0; j < n; ++j)
        if ((mask >> j) & 1u) total += (s.col(l) - s.col(j)).squaredNorm();
      score[static_cast<std::size_t>(l)] = std::min(score[static_cast<std::size_t>(l)], total);
    }
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  VectorXd out = VectorXd::Zero(s.rows());
  for (int pick = 0; pick < m; ++pick) {
    int best = -1;
    for (int l = 0; l < n; ++l)
      if (!used[static_cast<std::size_t>(l)] && (best < 0 || score[static_cast<std::size_t>(l)] <
                                                                 score[static_cast<std::size_t>(best)]))
        best = l;
    used[static_cast<std::size_t>(best)] = true;
    out += s.col(best);
  }
  return out / m;
}

Outcome brute_force_oracles() {
  RngStream rng(1010, 0);
  double krum_err = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(rng.index(5));
    const int byz = static_cast<int>(rng.index(static_cast<std::size_t>(n - 2)));
    const int m = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(n)));
    const SamplesXd s = normal_samples(rng, 1 + static_cast<Eigen::Index>(rng.index(4)), n);
    const VectorXd got = aggregate(parse_aggregator_spec("multikrum:byz=" + std::to_string(byz) +
                                                         ",m=" + std::to_string(m)),
                                   s, AggregationContext{});
    krum_err = std::max(krum_err, (got - brute_force_krum(s, byz, m)).cwiseAbs().maxCoeff());
  }

  double stoch_err = 0.0;
  for (int g = 0; g < 50; ++g) {
    const int n = 2 + static_cast<int>(rng.index(39));
    const double p = 0.05 + 0.9 * rng.uniform();
    Adjacency a = Adjacency::Constant(n, n, false);
    for (int i = 0; i < n; ++i) {
      a(i, i) = true;
      for (int j = i + 1; j < n; ++j) a(i, j) = a(j, i) = rng.uniform() < p;
    }
    const Eigen::MatrixXd w = combination_weights(a, WeightRule::Metropolis);
    stoch_err = std::max({stoch_err, (w.colwise().sum().array() - 1.0).abs().maxCoeff(),
                          (w.rowwise().sum().array() - 1.0).abs().maxCoeff()});
    if ((w.array() < 0.0).any()) stoch_err = std::numeric_limits<double>::infinity();
  }
  return {krum_err <= 1e-12 && stoch_err <= 1e-12,
          "multikrum max error " + num(krum_err) + " over 200 sets, metropolis stochasticity error " +
              num(stoch_err) + " over 50 graphs"};
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, baseline_convergence}, {2, mean_closed_form},    {3, trimmed_breakdown}, {4, z0_consistency},
      {5, scm_vs_numeric},       {6, attack_ordering},     {7, alignment_matters}, {8, rop_scc},
      {9, thread_determinism},   {10, brute_force_oracles},
  };
  int failures = 0;
  for (const auto& [id, check] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("criterion %d: %s (%.1f s) %s\n", id, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
