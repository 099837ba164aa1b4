// byzlab: sensitivity curves, attack probes and diffusion experiments.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "byzlab/attacks/attacks.hpp"
#include "byzlab/core/stats.hpp"
#include "byzlab/io/config.hpp"
#include "byzlab/io/csv.hpp"
#include "byzlab/sensitivity/sensitivity.hpp"
#include "byzlab/simulator/atc.hpp"

namespace fs = std::filesystem;
using namespace byzlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumeric = 4;

constexpr std::uint64_t kSampleStream = 0x5a;
constexpr std::uint64_t kProbeAttackStream = 0x5b;

struct Common {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  int threads = 1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Master seed");
  cmd->add_option("--out-dir", c.out_dir, "Output directory (overrides BYZLAB_OUT_DIR)");
  cmd->add_option("--threads", c.threads, "Worker threads; results do not depend on it")->check(CLI::PositiveNumber);
}

fs::path resolve_out_dir(const Common& c, const std::string& fallback) {
  if (c.out_dir) return *c.out_dir;
  if (const char* env = std::getenv("BYZLAB_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return fallback;
}

struct SampleSpec {
  int count = 20;
  int dim = 1;
  std::optional<std::string> csv;
};

void add_samples(CLI::App* cmd, SampleSpec& s) {
  cmd->add_option("--samples", s.count, "Number of synthetic standard-normal samples")->check(CLI::PositiveNumber);
  cmd->add_option("--samples-csv", s.csv, "CSV of samples, one per row")->check(CLI::ExistingFile);
}

SamplesXd load_samples(const SampleSpec& s, std::uint64_t seed, std::uint64_t round) {
  if (s.csv) {
    SamplesXd y = samples_from_table(parse_csv_strict(read_file(*s.csv)));
    if (y.rows() != s.dim)
      throw InvalidConfig("samples: CSV has " + std::to_string(y.rows()) + " columns, expected " +
                          std::to_string(s.dim));
    return y;
  }
  RngStream rng = RngStream(seed, kSampleStream).split(round);
  SamplesXd y(s.dim, s.count);
  for (Eigen::Index j = 0; j < y.cols(); ++j) y.col(j) = rng.normal_vector(s.dim);
  return y;
}

std::vector<double> to_std(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// ---------------------------------------------------------------------------

struct ScArgs {
  Common common;
  SampleSpec samples;
  std::string agg;
  int copies = 1;
  double lo = -10.0;
  double hi = 10.0;
  std::optional<int> steps;
  std::optional<double> clip;
};

int run_sc(const ScArgs& a) {
  const AggregatorConfig agg = parse_aggregator_spec(a.agg);
  if (a.samples.dim != 1 && a.samples.dim != 2) throw InvalidConfig("sc: --dim must be 1 or 2");
  if (a.clip && !(*a.clip > 0.0)) throw InvalidConfig("sc: --clip must be > 0");
  const std::uint64_t seed = a.common.seed.value_or(1);
  const SamplesXd y = load_samples(a.samples, seed, 0);
  SCOptions opt;
  opt.mixtailor_seed = seed;
  opt.threads = a.common.threads;
  const fs::path dir = resolve_out_dir(a.common, "out");

  if (a.samples.dim == 1) {
    const SCCurve1D curve = sc_curve_1d(agg, y, a.lo, a.hi, a.steps.value_or(401), a.copies, opt);
    write_file_atomic(dir / "sc_curve.csv", format_csv(curve_table(curve, a.clip)));
    std::cout << "sc_curve " << (dir / "sc_curve.csv").string() << " ges_estimate=" << format_number(curve.ges_estimate)
              << " rejection_point="
              << (curve.rejection_point ? format_number(*curve.rejection_point) : std::string("none")) << "\n";
  } else {
    if (!(a.hi > a.lo)) throw InvalidConfig("sc: empty z range");
    const int steps = a.steps.value_or(81);
    if (steps < 2) throw InvalidConfig("sc: at least two grid steps required");
    const VectorXd axis = VectorXd::LinSpaced(steps, a.lo, a.hi);
    const SCGrid2D grid = sc_grid_2d(agg, y, axis, axis, a.copies, opt);
    write_file_atomic(dir / "sc_grid.csv", format_csv(grid_table(grid, a.clip)));
    std::cout << "sc_grid " << (dir / "sc_grid.csv").string() << " max_norm=" << format_number(grid.values.maxCoeff())
              << "\n";
  }
  write_file_atomic(dir / "samples.csv", format_csv(samples_table(y)));
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimArgs {
  Common common;
  std::string config;
};

int run_simulate(const SimArgs& a, bool baseline) {
  RunConfig cfg = load_run_config(a.config);
  if (a.common.seed) cfg.experiment.topology.seed = *a.common.seed;
  if (baseline) cfg.experiment.attack = AttackConfig{NoAttack{}};
  const fs::path dir = resolve_out_dir(a.common, cfg.output.dir);
  cfg.output.dir = dir.string();

  const RunTrace trace = run_atc(cfg.experiment, a.common.threads);
  write_file_atomic(dir / "trace.csv", format_csv(trace_table(trace)));
  write_file_atomic(dir / "metadata.json", metadata_json(cfg, trace));
  std::cout << (baseline ? "baseline" : "simulate") << " " << (dir / "trace.csv").string()
            << " iterations=" << trace.mean_dist_sq.size() << " final_mean_dist_sq="
            << (trace.mean_dist_sq.empty() ? std::string("nan") : format_number(trace.mean_dist_sq.back()))
            << (trace.diverged ? " diverged_at=" + std::to_string(trace.diverged_at) : std::string()) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ProbeArgs {
  Common common;
  SampleSpec samples;
  std::string agg;
  std::string attack;
  int copies = 1;
  int rounds = 1;
  std::optional<double> half_width;
  int resolution = 21;
  int refine = 3;
};

int run_attack_probe(const ProbeArgs& a) {
  const AggregatorConfig agg = parse_aggregator_spec(a.agg);
  const AttackConfig attack = parse_attack_spec(a.attack);
  if (a.rounds < 1) throw InvalidConfig("attack-probe: --rounds must be >= 1");
  if (a.copies < 1) throw InvalidConfig("attack-probe: --copies must be >= 1");
  const std::uint64_t seed = a.common.seed.value_or(1);
  SCOptions opt;
  opt.mixtailor_seed = seed;
  opt.threads = a.common.threads;

  nlohmann::json report;
  report["aggregator"] = to_spec_string(agg);
  report["attack"] = to_spec_string(attack);
  report["copies"] = a.copies;
  report["seed"] = seed;
  report["rounds"] = nlohmann::json::array();

  std::optional<VectorXd> prev_sc;
  for (int t = 0; t < a.rounds; ++t) {
    const SamplesXd y = load_samples(a.samples, seed, static_cast<std::uint64_t>(t));
    RngStream rng = RngStream(seed, kProbeAttackStream).split(static_cast<std::uint64_t>(t));
    AttackContext ctx;
    ctx.honest = y;
    ctx.prev_weight = VectorXd::Zero(y.rows());
    ctx.prev_sc = prev_sc;
    ctx.byz_count = a.copies;
    ctx.rng = &rng;
    ctx.target = &agg;
    ctx.sc_options = opt;
    const AttackOutput out = craft(attack, ctx);

    FlagSet flags = out.flags;
    const VectorXd realized = sc(agg, SCQuery{y, out.z, a.copies, 0}, opt, &flags);
    const VectorXd scale = robust_scales(y, nullptr);
    const double hw = a.half_width.value_or(10.0 * std::max(scale.maxCoeff(), 1.0));
    const SearchResult best =
        scm_maximize(agg, y, a.copies, SearchBox::centered(coordinate_median(y), hw, a.resolution, a.refine), 0, opt);
    const double best_norm = best.sc.norm();

    nlohmann::json row;
    row["round"] = t + 1;
    row["z"] = to_std(out.z);
    row["sc"] = to_std(realized);
    row["sc_norm"] = realized.norm();
    row["optimizer_sc_norm"] = best_norm;
    row["optimizer_z"] = to_std(best.z);
    row["ratio"] = best_norm > 0.0 ? nlohmann::json(realized.norm() / best_norm) : nlohmann::json(nullptr);
    row["box_half_width"] = hw;
    if (prev_sc) row["cosine_prev"] = cosine_or_zero(realized, *prev_sc);
    nlohmann::json fl = nlohmann::json::array();
    for (Flag f : {Flag::NonConverged, Flag::DegenerateAggregation, Flag::ZeroScale, Flag::ConstraintInfeasible})
      if (flags.has(f)) fl.push_back(flag_name(f));
    row["flags"] = fl;
    report["rounds"].push_back(row);

    std::cout << "round " << t + 1 << " sc_norm=" << format_number(realized.norm())
              << " optimizer_sc_norm=" << format_number(best_norm);
    if (prev_sc) std::cout << " cosine_prev=" << format_number(cosine_or_zero(realized, *prev_sc));
    std::cout << "\n";
    prev_sc = out.sc ? *out.sc : realized;
  }

  const fs::path dir = resolve_out_dir(a.common, "out");
  write_file_atomic(dir / "probe.json", report.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"byzlab: robust aggregation, sensitivity curves and byzantine attacks"};
  app.set_version_flag("--version", std::string(BYZLAB_VERSION));
  app.require_subcommand(1);

  ScArgs sc_args;
  CLI::App* sc_cmd = app.add_subcommand("sc", "Sensitivity curve (1D) or SC norm grid (2D) of an aggregator");
  sc_cmd->add_option("--agg", sc_args.agg, "Aggregator spec, e.g. m_tukey:c=4.685")->required();
  sc_cmd->add_option("--dim", sc_args.samples.dim, "Sample dimension (1 or 2)");
  add_samples(sc_cmd, sc_args.samples);
  sc_cmd->add_option("--copies", sc_args.copies, "Outlier copies P")->check(CLI::PositiveNumber);
  sc_cmd->add_option("--lo", sc_args.lo, "Smallest grid coordinate");
  sc_cmd->add_option("--hi", sc_args.hi, "Largest grid coordinate");
  sc_cmd->add_option("--steps", sc_args.steps, "Grid points per axis");
  sc_cmd->add_option("--clip", sc_args.clip, "Clip emitted values at this magnitude");
  add_common(sc_cmd, sc_args.common);

  SimArgs sim_args;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Run a diffusion experiment from a JSON config");
  sim_cmd->add_option("config", sim_args.config, "Config file")->required()->check(CLI::ExistingFile);
  add_common(sim_cmd, sim_args.common);

  SimArgs base_args;
  CLI::App* base_cmd = app.add_subcommand("baseline", "simulate with the attack replaced by none");
  base_cmd->add_option("config", base_args.config, "Config file")->required()->check(CLI::ExistingFile);
  add_common(base_cmd, base_args.common);

  ProbeArgs probe_args;
  CLI::App* probe_cmd = app.add_subcommand("attack-probe", "Craft one outlier per round and report its SC");
  probe_cmd->add_option("--agg", probe_args.agg, "Target aggregator spec")->required();
  probe_cmd->add_option("--attack", probe_args.attack, "Attack spec, e.g. sascm:half_width=5")->required();
  probe_cmd->add_option("--dim", probe_args.samples.dim, "Sample dimension")->check(CLI::PositiveNumber);
  add_samples(probe_cmd, probe_args.samples);
  probe_cmd->add_option("--copies", probe_args.copies, "Outlier copies P (byzantine count)");
  probe_cmd->add_option("--rounds", probe_args.rounds, "Rounds, each with a fresh synthetic sample");
  probe_cmd->add_option("--box-half-width", probe_args.half_width, "Half width of the comparison search box");
  probe_cmd->add_option("--res", probe_args.resolution, "Comparison grid points per dimension");
  probe_cmd->add_option("--refine", probe_args.refine, "Comparison refinement sweeps");
  add_common(probe_cmd, probe_args.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sc_cmd) return run_sc(sc_args);
    if (*sim_cmd) return run_simulate(sim_args, false);
    if (*base_cmd) return run_simulate(base_args, true);
    if (*probe_cmd) return run_attack_probe(probe_args);
  } catch (const InfeasibleTopology& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const InvalidConfig& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DegenerateAttack& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}
