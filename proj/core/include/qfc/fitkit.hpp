#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qfc::fit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ResidualFn = std::function<Vector(const Vector&)>;

struct Tolerances {
  /// Accepted step norm relative to parameter norm.
  double step = 1e-12;
  /// Largest cosine between the residual and any Jacobian column.
  double gradient = 1e-12;
  /// Relative cost decrease (actual and predicted) of an accepted step.
  double cost = 1e-14;
};

/// Weighted least-squares problem: minimize sum_i w_i r_i(p)^2 subject to
/// lower <= p <= upper. Empty bound/weight vectors mean unbounded / unit.
struct FitProblem {
  ResidualFn residuals;
  Vector initial;
  Vector lower;
  Vector upper;
  Vector weights;
  /// Parameters held at their initial value.
  std::vector<bool> fixed;
  std::vector<std::string> names;
  int max_iterations = 500;
  Tolerances tolerances;
  /// Failure once damping exceeds this multiple of max diag(J^T W J).
  double damping_cap = 1e16;
  /// Use residual variance cost/(m - n) as the noise scale for covariance
  /// and profile thresholds (for data without per-point uncertainties).
  bool scale_by_residual_variance = false;
  bool record_trace = false;

  std::size_t size() const noexcept { return static_cast<std::size_t>(initial.size()); }
  Vector lower_bounds() const;
  Vector upper_bounds() const;
  bool is_fixed(std::size_t i) const noexcept { return i < fixed.size() && fixed[i]; }
  std::size_t free_count() const noexcept;
  void validate() const;
};

enum class FitStatus {
  kStepTolerance,
  kGradientTolerance,
  kCostTolerance,
  kZeroResidual,
  kMaxIterations,
};

const char* to_string(FitStatus status) noexcept;

/// Confidence interval. A side that reaches a parameter bound is flagged
/// `*_at_bound` and reported at the bound; a side whose profile never
/// crosses the threshold is flagged `*_open` and reported as +/-infinity.
struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool lower_at_bound = false;
  bool upper_at_bound = false;
  bool lower_open = false;
  bool upper_open = false;

  bool one_sided() const noexcept { return lower_at_bound || upper_at_bound || lower_open || upper_open; }
  bool contains(double x) const noexcept { return x >= lower && x <= upper; }
  double width() const noexcept { return upper - lower; }
};

struct TracePoint {
  int iteration;
  double cost;
  double damping;
  Vector params;
};

struct FitResult {
  Vector params;
  double cost = 0.0;
  Matrix covariance;
  /// Filled by attach_profile_intervals; empty after lm_fit alone.
  std::vector<Interval> intervals;
  FitStatus status = FitStatus::kMaxIterations;
  int iterations = 0;
  int evaluations = 0;
  std::size_t residual_count = 0;
  std::size_t free_parameters = 0;
  std::vector<std::string> names;
  std::vector<TracePoint> trace;

  bool converged() const noexcept { return status != FitStatus::kMaxIterations; }
  double sigma(std::size_t i) const;
  /// cost / (m - n_free), or NaN when m == n_free.
  double residual_variance() const noexcept;
  double correlation(std::size_t i, std::size_t j) const;
  std::size_t index_of(const std::string& name) const;
};

/// Bounded Levenberg-Marquardt. Damping starts at 1e-3 max diag(J^T W J)
/// and is divided by 10 on accepted steps, multiplied by 10 on rejected
/// ones. Parameters are clamped to bounds; those at a bound whose gradient
/// points outward are frozen for the step. Deterministic.
FitResult lm_fit(const FitProblem& problem);

/// Profile-likelihood interval for one parameter: the set where the
/// re-optimized cost rises by less than the chi-square(1) quantile.
Interval profile_ci(const FitProblem& problem, const FitResult& fit, std::size_t index, double level = 0.95);

/// Fills fit.intervals for every parameter (fixed ones get a point interval).
void attach_profile_intervals(const FitProblem& problem, FitResult& fit, double level = 0.95);

/// Covariance-based symmetric interval estimate +/- z sigma.
Interval wald_interval(const FitResult& fit, std::size_t index, double level = 0.95);

/// Central-difference Jacobian with step max(1e-6 |p|, 1e-9); second-order
/// one-sided differences where a central step would leave the bounds.
/// Columns of masked (fixed) parameters are zero.
Matrix numeric_jacobian(const ResidualFn& fn, const Vector& params, const Vector& lower, const Vector& upper,
                        const std::vector<bool>& fixed = {});

/// Quantile of the chi-square distribution with one degree of freedom.
double chi_square_quantile_1dof(double level);

/// Standard normal quantile.
double normal_quantile(double p);

/// Best of `starts` fits from seeded random initial points (the first start
/// is problem.initial). Off unless called explicitly.
FitResult lm_fit_multistart(const FitProblem& problem, int starts, std::uint64_t seed);

void write_trace_csv(std::ostream& out, const FitResult& fit);

}  // namespace qfc::fit
