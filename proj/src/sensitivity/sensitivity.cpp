#include "byzlab/sensitivity/sensitivity.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "byzlab/core/parallel.hpp"
#include "byzlab/core/stats.hpp"

namespace byzlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kGoldenIters = 30;

void check_query(const SCQuery& q) {
  require_nonempty(q.honest, "sc");
  if (q.copies < 1) throw InvalidInput("sc: at least one outlier copy required");
  if (q.outlier.size() != q.honest.rows()) throw InvalidInput("sc: outlier dimension mismatch");
  if (q.self < 0 || q.self >= q.honest.cols()) throw InvalidInput("sc: self index outside the honest sample");
  require_finite(q.outlier, "sc outlier");
}

VectorXd sc_at(const AggregatorConfig& agg, const SamplesXd& honest, const VectorXd& z, int copies, Eigen::Index self,
               const SCOptions& opt, FlagSet* flags) {
  return sc(agg, SCQuery{honest, z, copies, self}, opt, flags);
}

using Objective = std::function<double(const VectorXd&)>;

SearchResult search(const AggregatorConfig& agg, const SamplesXd& honest, int copies, const SearchBox& box,
                    Eigen::Index self, const SCOptions& opt, const Objective& objective,
                    const std::vector<VectorXd>& extra_dirs) {
  box.validate();
  if (box.lower.size() != honest.rows()) throw InvalidConfig("search box dimension does not match the sample");

  const std::vector<VectorXd> pool = candidate_pool(box, extra_dirs);
  std::vector<VectorXd> scs(pool.size());
  std::vector<FlagSet> pool_flags(pool.size());
  parallel_for(pool.size(), opt.threads,
               [&](std::size_t i) { scs[i] = sc_at(agg, honest, pool[i], copies, self, opt, &pool_flags[i]); });

  SearchResult res;
  res.pool_size = pool.size();
  std::size_t best = 0;
  double best_val = kNegInf;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    res.flags.merge(pool_flags[i]);
    const double v = objective(scs[i]);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  res.z = pool[best];
  res.sc = scs[best];
  res.objective = best_val;
  if (best_val == kNegInf) return res;

  VectorXd spacing = (box.upper - box.lower) / static_cast<double>(box.resolution - 1);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < box.refine_iters; ++it) {
    for (Eigen::Index m = 0; m < res.z.size(); ++m) {
      double a = std::max(box.lower(m), res.z(m) - spacing(m));
      double b = std::min(box.upper(m), res.z(m) + spacing(m));
      VectorXd probe = res.z;
      auto eval = [&](double x) {
        probe(m) = x;
        VectorXd s = sc_at(agg, honest, probe, copies, self, opt, &res.flags);
        const double v = objective(s);
        if (v > res.objective) {
          res.objective = v;
          res.z = probe;
          res.sc = std::move(s);
        }
        return v;
      };
      double c = b - phi * (b - a);
      double d = a + phi * (b - a);
      double fc = eval(c);
      double fd = eval(d);
      for (int g = 0; g < kGoldenIters; ++g) {
        if (fc > fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - phi * (b - a);
          fc = eval(c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + phi * (b - a);
          fd = eval(d);
        }
      }
    }
    spacing *= 0.5;
  }
  return res;
}

}  // namespace

VectorXd sc(const AggregatorConfig& agg, const SCQuery& q, const SCOptions& opt, FlagSet* flags) {
  check_query(q);
  const Eigen::Index n_honest = q.honest.cols();
  const Eigen::Index n = n_honest + q.copies;
  SamplesXd contaminated(q.honest.rows(), n);
  contaminated.leftCols(n_honest) = q.honest;
  contaminated.rightCols(q.copies) = q.outlier.replicate(1, q.copies);

  RngStream rng_honest(opt.mixtailor_seed, 0);
  RngStream rng_contaminated(opt.mixtailor_seed, 0);
  AggregationContext ctx_honest{q.self, VectorXd(), q.copies, &rng_honest};
  AggregationContext ctx_contaminated{q.self, VectorXd(), q.copies, &rng_contaminated};

  const VectorXd clean = aggregate(agg, q.honest, ctx_honest, flags);
  const VectorXd attacked = aggregate(agg, contaminated, ctx_contaminated, flags);
  return static_cast<double>(n) * (attacked - clean);
}

double default_rejection_tolerance(const SamplesXd& honest, int copies) {
  const double scale = coordinate_mad(honest).maxCoeff();
  return 1e-6 * static_cast<double>(honest.cols() + copies) * (scale > 0.0 ? scale : 1.0);
}

SCCurve1D sc_curve_1d(const AggregatorConfig& agg, const SamplesXd& honest, double z_lo, double z_hi, int steps,
                      int copies, const SCOptions& opt, std::optional<double> rejection_tolerance) {
  if (honest.rows() != 1) throw InvalidInput("sc_curve_1d: one-dimensional sample required");
  if (steps < 2) throw InvalidConfig("sc_curve_1d: at least two grid steps required");
  if (!(z_hi > z_lo)) throw InvalidConfig("sc_curve_1d: empty z range");

  SCCurve1D curve;
  curve.z.resize(static_cast<std::size_t>(steps));
  curve.value.resize(curve.z.size());
  for (int k = 0; k < steps; ++k)
    curve.z[static_cast<std::size_t>(k)] = z_lo + (z_hi - z_lo) * k / (steps - 1);
  parallel_for(curve.z.size(), opt.threads, [&](std::size_t k) {
    curve.value[k] = sc_at(agg, honest, VectorXd::Constant(1, curve.z[k]), copies, 0, opt, nullptr)(0);
  });

  curve.rejection_tolerance = rejection_tolerance.value_or(default_rejection_tolerance(honest, copies));
  const double med = coordinate_median(honest)(0);
  double worst = -1.0;  // farthest distance from the median with |sc| above tolerance
  for (std::size_t k = 0; k < curve.z.size(); ++k) {
    curve.ges_estimate = std::max(curve.ges_estimate, std::abs(curve.value[k]));
    if (std::abs(curve.value[k]) > curve.rejection_tolerance) worst = std::max(worst, std::abs(curve.z[k] - med));
  }
  for (double zk : curve.z) {
    const double d = std::abs(zk - med);
    if (d > worst && (!curve.rejection_point || d < *curve.rejection_point)) curve.rejection_point = d;
  }
  return curve;
}

SCGrid2D sc_grid_2d(const AggregatorConfig& agg, const SamplesXd& honest, const VectorXd& x_axis,
                    const VectorXd& y_axis, int copies, const SCOptions& opt) {
  if (honest.rows() != 2) throw InvalidInput("sc_grid_2d: two-dimensional sample required");
  for (Eigen::Index i = 1; i < x_axis.size(); ++i)
    if (!(x_axis(i) > x_axis(i - 1))) throw InvalidConfig("sc_grid_2d: x axis must be strictly increasing");
  for (Eigen::Index j = 1; j < y_axis.size(); ++j)
    if (!(y_axis(j) > y_axis(j - 1))) throw InvalidConfig("sc_grid_2d: y axis must be strictly increasing");

  SCGrid2D grid{x_axis, y_axis, Eigen::MatrixXd(x_axis.size(), y_axis.size())};
  const auto nx = static_cast<std::size_t>(x_axis.size());
  const auto ny = static_cast<std::size_t>(y_axis.size());
  parallel_for(nx * ny, opt.threads, [&](std::size_t idx) {
    const auto i = static_cast<Eigen::Index>(idx / ny);
    const auto j = static_cast<Eigen::Index>(idx % ny);
    const VectorXd z = (VectorXd(2) << x_axis(i), y_axis(j)).finished();
    grid.values(i, j) = sc_at(agg, honest, z, copies, 0, opt, nullptr).norm();
  });
  return grid;
}

void SearchBox::validate() const {
  if (lower.size() == 0 || lower.size() != upper.size()) throw InvalidConfig("search box: bounds dimension mismatch");
  if (!lower.allFinite() || !upper.allFinite()) throw InvalidConfig("search box: bounds must be finite");
  if (!(lower.array() < upper.array()).all()) throw InvalidConfig("search box: lower < upper required");
  if (resolution < 2) throw InvalidConfig("search box: resolution must be >= 2");
  if (refine_iters < 0) throw InvalidConfig("search box: refine_iters must be >= 0");
}

SearchBox SearchBox::centered(const VectorXd& center, double half_width, int resolution, int refine_iters) {
  SearchBox box;
  box.lower = center.array() - half_width;
  box.upper = center.array() + half_width;
  box.resolution = resolution;
  box.refine_iters = refine_iters;
  return box;
}

std::vector<VectorXd> candidate_pool(const SearchBox& box, const std::vector<VectorXd>& extra_directions) {
  box.validate();
  const Eigen::Index r = box.lower.size();
  const VectorXd spacing = (box.upper - box.lower) / static_cast<double>(box.resolution - 1);
  const double total = std::pow(static_cast<double>(box.resolution), static_cast<double>(r));

  std::vector<VectorXd> pool;
  if (total <= static_cast<double>(box.max_grid_points)) {
    const auto count = static_cast<std::size_t>(total);
    pool.reserve(count);
    std::vector<int> digit(static_cast<std::size_t>(r), 0);
    for (std::size_t idx = 0; idx < count; ++idx) {
      VectorXd z(r);
      for (Eigen::Index m = 0; m < r; ++m) z(m) = box.lower(m) + digit[static_cast<std::size_t>(m)] * spacing(m);
      pool.push_back(std::move(z));
      for (Eigen::Index m = r - 1; m >= 0; --m) {
        if (++digit[static_cast<std::size_t>(m)] < box.resolution) break;
        digit[static_cast<std::size_t>(m)] = 0;
      }
    }
    return pool;
  }

  const VectorXd center = 0.5 * (box.lower + box.upper);
  const VectorXd half = 0.5 * (box.upper - box.lower);
  std::vector<VectorXd> dirs;
  for (Eigen::Index m = 0; m < r; ++m) {
    dirs.push_back(VectorXd::Unit(r, m));
    dirs.push_back(-VectorXd::Unit(r, m));
  }
  const VectorXd diag = VectorXd::Ones(r) / std::sqrt(static_cast<double>(r));
  dirs.push_back(diag);
  dirs.push_back(-diag);
  for (const VectorXd& d : extra_directions) {
    const double n = d.norm();
    if (!(n > 0.0) || d.size() != r) continue;
    dirs.push_back(d / n);
    dirs.push_back(-d / n);
  }

  pool.push_back(center);
  for (const VectorXd& u : dirs) {
    double t_max = std::numeric_limits<double>::infinity();
    for (Eigen::Index m = 0; m < r; ++m)
      if (std::abs(u(m)) > 0.0) t_max = std::min(t_max, half(m) / std::abs(u(m)));
    for (int k = 1; k < box.resolution; ++k) pool.push_back(center + (t_max * k / (box.resolution - 1)) * u);
  }
  return pool;
}

SearchResult scm_maximize(const AggregatorConfig& agg, const SamplesXd& honest, int copies,
                          const std::optional<SearchBox>& box, Eigen::Index self, const SCOptions& opt) {
  if (!box) throw InvalidConfig("scm_maximize: a bounded search box is required");
  return search(agg, honest, copies, *box, self, opt, [](const VectorXd& s) { return s.squaredNorm(); }, {});
}

double ascm_objective(const VectorXd& sc_prev, const VectorXd& sc_cur) {
  return sc_cur.squaredNorm() + 2.0 * sc_prev.norm() * sc_cur.norm() * cosine_or_zero(sc_prev, sc_cur);
}

SearchResult sascm_maximize(const AggregatorConfig& agg, const SamplesXd& honest, int copies,
                            const std::optional<SearchBox>& box, const VectorXd& sc_prev, double delta,
                            Eigen::Index self, const SCOptions& opt) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidConfig("sascm: delta must lie in (0, 1]");
  if (!box) throw InvalidConfig("sascm_maximize: a bounded search box is required");
  if (sc_prev.size() != honest.rows()) throw InvalidInput("sascm: previous SC dimension mismatch");

  const std::vector<VectorXd> extra = {sc_prev};
  const auto constrained = [&](const VectorXd& s) {
    return cosine_or_zero(s, sc_prev) >= delta ? s.squaredNorm() : kNegInf;
  };
  SearchResult res = search(agg, honest, copies, *box, self, opt, constrained, extra);
  if (res.objective != kNegInf) return res;

  FlagSet carried = res.flags;
  res = search(agg, honest, copies, *box, self, opt,
               [&](const VectorXd& s) { return ascm_objective(sc_prev, s); }, extra);
  res.flags.merge(carried);
  res.flags.raise(Flag::ConstraintInfeasible);
  return res;
}

}  // namespace byzlab
