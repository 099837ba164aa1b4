#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "byzlab/aggregators/config.hpp"
#include "byzlab/core/types.hpp"

namespace byzlab {

/// Honest sample Y plus P identical copies of the outlier z.
struct SCQuery {
  SamplesXd honest;
  VectorXd outlier;
  int copies = 1;
  Eigen::Index self = 0;  // column of Y used as the aggregating agent's own vector
};

/// Evaluation settings shared by all SC routines.
struct SCOptions {
  std::uint64_t mixtailor_seed = 0;  // both evaluations of one SC replay the same draw
  int threads = 1;                    // grid evaluations; never changes results
};

/// N (agg(Y u Z) - agg(Y)) with N = |Y| + P. Both evaluations share one
/// context; the outliers take fresh trailing indices and every sample gets
/// the uniform combination weight of its set.
VectorXd sc(const AggregatorConfig& agg, const SCQuery& q, const SCOptions& opt = {}, FlagSet* flags = nullptr);

struct SCCurve1D {
  std::vector<double> z;
  std::vector<double> value;
  double ges_estimate = 0.0;             // max |sc| over the grid: a lower bound on the GES
  std::optional<double> rejection_point; // distance from median(Y)
  double rejection_tolerance = 0.0;
};

/// Default rejection tolerance 1e-6 * N * scale(Y), scale being the scaled MAD (1 if zero).
double default_rejection_tolerance(const SamplesXd& honest, int copies);

SCCurve1D sc_curve_1d(const AggregatorConfig& agg, const SamplesXd& honest, double z_lo, double z_hi, int steps,
                      int copies, const SCOptions& opt = {}, std::optional<double> rejection_tolerance = {});

struct SCGrid2D {
  VectorXd x;
  VectorXd y;
  Eigen::MatrixXd values;  // values(i, j) = ||sc((x_i, y_j))||, unclipped
};

SCGrid2D sc_grid_2d(const AggregatorConfig& agg, const SamplesXd& honest, const VectorXd& x_axis,
                    const VectorXd& y_axis, int copies, const SCOptions& opt = {});

/// Axis-aligned box explored by the SC maximizers.
struct SearchBox {
  VectorXd lower;
  VectorXd upper;
  int resolution = 21;                    // grid points per dimension
  int refine_iters = 3;                   // golden-section sweeps over all coordinates
  std::size_t max_grid_points = 100000;   // beyond this a directional pool replaces the full grid

  void validate() const;
  static SearchBox centered(const VectorXd& center, double half_width, int resolution = 21, int refine_iters = 3);
};

struct SearchResult {
  VectorXd z;
  VectorXd sc;
  double objective = 0.0;
  std::size_t pool_size = 0;
  FlagSet flags;
};

/// Candidate pool for a box: the full Cartesian grid when it fits within
/// max_grid_points, otherwise the center plus radial points along the
/// coordinate axes, the diagonal and any extra directions.
std::vector<VectorXd> candidate_pool(const SearchBox& box, const std::vector<VectorXd>& extra_directions = {});

/// argmax ||sc||^2 over the box: pool search, then per-coordinate golden-section refinement.
SearchResult scm_maximize(const AggregatorConfig& agg, const SamplesXd& honest, int copies,
                          const std::optional<SearchBox>& box, Eigen::Index self = 0, const SCOptions& opt = {});

/// ||sc_cur||^2 + 2 ||sc_prev|| ||sc_cur|| cos(sc_prev, sc_cur), cos := 0 for zero vectors.
double ascm_objective(const VectorXd& sc_prev, const VectorXd& sc_cur);

/// argmax ||sc||^2 subject to cos(sc, sc_prev) >= delta. Falls back to the
/// ascm objective, raising ConstraintInfeasible, when no candidate is feasible.
SearchResult sascm_maximize(const AggregatorConfig& agg, const SamplesXd& honest, int copies,
                            const std::optional<SearchBox>& box, const VectorXd& sc_prev, double delta,
                            Eigen::Index self = 0, const SCOptions& opt = {});

}  // namespace byzlab
