#include "qfc/fitkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "qfc/errors.hpp"

namespace qfc::fit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector weighted_sqrt(const Vector& weights, Eigen::Index m) {
  if (weights.size() == 0) return Vector::Ones(m);
  return weights.cwiseSqrt();
}

Vector clamp(const Vector& p, const Vector& lo, const Vector& hi) { return p.cwiseMax(lo).cwiseMin(hi); }

bool all_finite(const Vector& v) { return v.allFinite(); }

struct Evaluator {
  const FitProblem& problem;
  Vector sqrt_w;
  int evaluations = 0;

  Vector weighted(const Vector& p) {
    ++evaluations;
    Vector r = problem.residuals(p);
    if (sqrt_w.size() == 0) sqrt_w = weighted_sqrt(problem.weights, r.size());
    if (r.size() != sqrt_w.size()) {
      throw FitError(fmt::format("residual length changed from {} to {}", sqrt_w.size(), r.size()), kInf);
    }
    return r.cwiseProduct(sqrt_w);
  }
};

}  // namespace

Vector FitProblem::lower_bounds() const {
  return lower.size() == 0 ? Vector::Constant(initial.size(), -kInf) : lower;
}

Vector FitProblem::upper_bounds() const {
  return upper.size() == 0 ? Vector::Constant(initial.size(), kInf) : upper;
}

std::size_t FitProblem::free_count() const noexcept {
  std::size_t n = 0;
  for (std::size_t i = 0; i < size(); ++i) n += is_fixed(i) ? 0 : 1;
  return n;
}

void FitProblem::validate() const {
  if (!residuals) throw DomainError("fit problem has no residual function");
  if (initial.size() == 0) throw DomainError("fit problem has no parameters");
  const auto n = initial.size();
  if (lower.size() != 0 && lower.size() != n) throw DomainError("lower bound length differs from parameter count");
  if (upper.size() != 0 && upper.size() != n) throw DomainError("upper bound length differs from parameter count");
  if (!fixed.empty() && static_cast<Eigen::Index>(fixed.size()) != n) {
    throw DomainError("fixed mask length differs from parameter count");
  }
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != n) {
    throw DomainError("name list length differs from parameter count");
  }
  const Vector lo = lower_bounds();
  const Vector hi = upper_bounds();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(lo[i] <= hi[i])) throw DomainError(fmt::format("bounds of parameter {} are not ordered", i));
    if (!(initial[i] >= lo[i] && initial[i] <= hi[i])) {
      throw DomainError(fmt::format("initial value {} of parameter {} lies outside [{}, {}]", initial[i], i, lo[i],
                                    hi[i]));
    }
  }
  if (weights.size() != 0 && (weights.array() < 0.0).any()) throw DomainError("weights must be non-negative");
  if (max_iterations < 1) throw DomainError("max_iterations must be positive");
}

const char* to_string(FitStatus status) noexcept {
  switch (status) {
    case FitStatus::kStepTolerance: return "step-tolerance";
    case FitStatus::kGradientTolerance: return "gradient-tolerance";
    case FitStatus::kCostTolerance: return "cost-tolerance";
    case FitStatus::kZeroResidual: return "zero-residual";
    case FitStatus::kMaxIterations: return "max-iterations";
  }
  return "unknown";
}

double FitResult::sigma(std::size_t i) const {
  const double v = covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
  return v > 0.0 ? std::sqrt(v) : 0.0;
}

double FitResult::residual_variance() const noexcept {
  if (residual_count <= free_parameters) return std::numeric_limits<double>::quiet_NaN();
  return cost / static_cast<double>(residual_count - free_parameters);
}

double FitResult::correlation(std::size_t i, std::size_t j) const {
  const double si = sigma(i);
  const double sj = sigma(j);
  if (si == 0.0 || sj == 0.0) return 0.0;
  return covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / (si * sj);
}

std::size_t FitResult::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw DomainError(fmt::format("no fit parameter named '{}'", name));
  return static_cast<std::size_t>(it - names.begin());
}

Matrix numeric_jacobian(const ResidualFn& fn, const Vector& params, const Vector& lower, const Vector& upper,
                        const std::vector<bool>& fixed) {
  const Vector r0 = fn(params);
  Matrix jac = Matrix::Zero(r0.size(), params.size());
  for (Eigen::Index j = 0; j < params.size(); ++j) {
    if (static_cast<std::size_t>(j) < fixed.size() && fixed[static_cast<std::size_t>(j)]) continue;
    const double h = std::max(1e-6 * std::abs(params[j]), 1e-9);
    Vector p = params;
    const bool room_up = params[j] + 2.0 * h <= upper[j];
    const bool room_down = params[j] - 2.0 * h >= lower[j];
    if (params[j] + h <= upper[j] && params[j] - h >= lower[j]) {
      p[j] = params[j] + h;
      const Vector up = fn(p);
      p[j] = params[j] - h;
      const Vector down = fn(p);
      jac.col(j) = (up - down) / (2.0 * h);
    } else if (room_up) {
      p[j] = params[j] + h;
      const Vector r1 = fn(p);
      p[j] = params[j] + 2.0 * h;
      const Vector r2 = fn(p);
      jac.col(j) = (-3.0 * r0 + 4.0 * r1 - r2) / (2.0 * h);
    } else if (room_down) {
      p[j] = params[j] - h;
      const Vector r1 = fn(p);
      p[j] = params[j] - 2.0 * h;
      const Vector r2 = fn(p);
      jac.col(j) = (3.0 * r0 - 4.0 * r1 + r2) / (2.0 * h);
    }
    // Bounds narrower than 2h: the parameter is effectively pinned.
  }
  return jac;
}

FitResult lm_fit(const FitProblem& problem) {
  problem.validate();
  const Eigen::Index n = problem.initial.size();
  const Vector lo = problem.lower_bounds();
  const Vector hi = problem.upper_bounds();
  const auto& tol = problem.tolerances;

  Evaluator eval{problem, {}, 0};
  auto weighted_fn = [&](const Vector& p) { return eval.weighted(p); };

  Vector p = problem.initial;
  Vector r = eval.weighted(p);
  if (!all_finite(r)) throw FitError("non-finite residuals at the initial point", kInf);
  if (static_cast<std::size_t>(r.size()) < problem.free_count()) {
    throw DomainError(fmt::format("{} residuals cannot constrain {} free parameters", r.size(), problem.free_count()));
  }
  double cost = r.squaredNorm();

  FitResult result;
  result.names = problem.names;
  result.residual_count = static_cast<std::size_t>(r.size());
  result.free_parameters = problem.free_count();
  if (problem.record_trace) result.trace.push_back({0, cost, 0.0, p});

  double damping = -1.0;
  FitStatus status = FitStatus::kMaxIterations;
  int iteration = 0;
  bool done = false;
  while (!done && iteration < problem.max_iterations) {
    ++iteration;
    if (cost == 0.0) {
      status = FitStatus::kZeroResidual;
      break;
    }
    const Matrix jac = numeric_jacobian(weighted_fn, p, lo, hi, problem.fixed);
    const Vector grad = jac.transpose() * r;
    const Matrix normal = jac.transpose() * jac;

    std::vector<Eigen::Index> active;
    double max_cosine = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (problem.is_fixed(static_cast<std::size_t>(i))) continue;
      if (p[i] <= lo[i] && grad[i] > 0.0) continue;
      if (p[i] >= hi[i] && grad[i] < 0.0) continue;
      active.push_back(i);
      const double denom = std::sqrt(normal(i, i) * cost);
      if (denom > 0.0) max_cosine = std::max(max_cosine, std::abs(grad[i]) / denom);
    }
    if (active.empty() || max_cosine <= tol.gradient) {
      status = FitStatus::kGradientTolerance;
      break;
    }
    const auto k = static_cast<Eigen::Index>(active.size());
    Matrix a(k, k);
    Vector g(k);
    double max_diag = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      g[i] = grad[active[i]];
      for (Eigen::Index j = 0; j < k; ++j) a(i, j) = normal(active[i], active[j]);
      max_diag = std::max(max_diag, a(i, i));
    }
    if (max_diag <= 0.0) max_diag = 1.0;
    if (damping < 0.0) damping = 1e-3 * max_diag;

    while (true) {
      Matrix damped = a;
      damped.diagonal().array() += damping;
      const Vector delta = damped.ldlt().solve(-g);
      if (!all_finite(delta)) {
        damping *= 10.0;
        if (damping > problem.damping_cap * max_diag) {
          throw FitError("normal equations stayed singular up to the damping cap", cost);
        }
        continue;
      }
      Vector trial = p;
      for (Eigen::Index i = 0; i < k; ++i) trial[active[i]] += delta[i];
      trial = clamp(trial, lo, hi);
      const Vector step = trial - p;
      const double step_norm = step.norm();
      const double step_limit = tol.step * (p.norm() + tol.step);

      Vector step_active(k);
      for (Eigen::Index i = 0; i < k; ++i) step_active[i] = step[active[i]];
      const double predicted = -(2.0 * g.dot(step_active) + step_active.dot(a * step_active));

      const Vector r_trial = eval.weighted(trial);
      if (!all_finite(r_trial)) {
        throw FitError(fmt::format("non-finite residuals during iteration {}; last good cost {:.6g}", iteration, cost),
                       cost);
      }
      const double trial_cost = r_trial.squaredNorm();
      if (trial_cost < cost) {
        const double reduction = (cost - trial_cost) / cost;
        const double predicted_reduction = predicted / cost;
        p = trial;
        r = r_trial;
        cost = trial_cost;
        damping = std::max(damping / 10.0, 1e-300);
        if (problem.record_trace) result.trace.push_back({iteration, cost, damping, p});
        if (cost == 0.0) {
          status = FitStatus::kZeroResidual;
          done = true;
        } else if (step_norm <= step_limit) {
          status = FitStatus::kStepTolerance;
          done = true;
        } else if (reduction <= tol.cost && std::abs(predicted_reduction) <= tol.cost) {
          status = FitStatus::kCostTolerance;
          done = true;
        }
        break;
      }
      if (step_norm <= step_limit) {
        // A negligible step that does not improve: minimum up to round-off.
        status = FitStatus::kStepTolerance;
        done = true;
        break;
      }
      damping *= 10.0;
      if (damping > problem.damping_cap * max_diag) {
        if (max_cosine < 1e-6) {
          status = FitStatus::kGradientTolerance;
          done = true;
          break;
        }
        throw FitError(fmt::format("damping exceeded cap after {} iterations (cost {:.6g})", iteration, cost), cost);
      }
    }
  }

  result.params = p;
  result.cost = cost;
  result.status = status;
  result.iterations = iteration;

  // Covariance from (J^T W J)^+ over the free parameters.
  const Matrix jac = numeric_jacobian(weighted_fn, p, lo, hi, problem.fixed);
  const Matrix normal = jac.transpose() * jac;
  Matrix cov = Eigen::CompleteOrthogonalDecomposition<Matrix>(normal).pseudoInverse();
  cov = Matrix(0.5 * (cov + cov.transpose()));
  if (problem.scale_by_residual_variance) {
    const double s2 = result.residual_variance();
    cov *= std::isfinite(s2) ? s2 : 0.0;
  }
  result.covariance = cov;
  result.evaluations = eval.evaluations;
  return result;
}

double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) throw DomainError(fmt::format("normal quantile needs p in (0, 1), got {}", prob));
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    (cdf < prob ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double chi_square_quantile_1dof(double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError(fmt::format("confidence level must be in (0, 1), got {}", level));
  const double z = normal_quantile(0.5 * (1.0 + level));
  return z * z;
}

Interval wald_interval(const FitResult& fit, std::size_t index, double level) {
  const double z = normal_quantile(0.5 * (1.0 + level));
  const double est = fit.params[static_cast<Eigen::Index>(index)];
  const double s = fit.sigma(index);
  return {est - z * s, est + z * s};
}

Interval profile_ci(const FitProblem& problem, const FitResult& fit, std::size_t index, double level) {
  if (!fit.converged()) throw FitError("profile interval requested for a fit that did not converge", fit.cost);
  const auto i = static_cast<Eigen::Index>(index);
  if (i >= fit.params.size()) throw DomainError(fmt::format("parameter index {} out of range", index));
  const double est = fit.params[i];
  if (problem.is_fixed(index)) return {est, est};

  double threshold = chi_square_quantile_1dof(level);
  if (problem.scale_by_residual_variance) {
    const double s2 = fit.residual_variance();
    threshold *= std::isfinite(s2) ? s2 : 0.0;
  }
  if (!(threshold > 0.0)) return {est, est};

  const Vector lo = problem.lower_bounds();
  const Vector hi = problem.upper_bounds();
  FitProblem inner = problem;
  inner.fixed.assign(problem.size(), false);
  for (std::size_t j = 0; j < problem.size(); ++j) inner.fixed[j] = problem.is_fixed(j);
  inner.fixed[index] = true;
  inner.record_trace = false;
  const bool others_free = inner.free_count() > 0;

  Vector warm = fit.params;
  auto profile_rise = [&](double value) {
    Vector start = warm;
    start[i] = value;
    inner.initial = clamp(start, lo, hi);
    double c;
    if (others_free) {
      FitResult f = lm_fit(inner);
      warm = f.params;
      c = f.cost;
    } else {
      Vector r = problem.residuals(inner.initial);
      if (problem.weights.size() != 0) r = r.cwiseProduct(problem.weights.cwiseSqrt());
      c = r.squaredNorm();
    }
    return c - fit.cost;
  };

  double scale = fit.sigma(index);
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1e-3 * std::max(1.0, std::abs(est));

  Interval out;
  for (const int side : {-1, +1}) {
    const double bound = side < 0 ? lo[i] : hi[i];
    bool& at_bound = side < 0 ? out.lower_at_bound : out.upper_at_bound;
    bool& open = side < 0 ? out.lower_open : out.upper_open;
    double& edge = side < 0 ? out.lower : out.upper;
    warm = fit.params;

    if (std::abs(est - bound) <= 1e-12 * std::max(1.0, std::abs(est))) {
      edge = bound;
      at_bound = true;
      continue;
    }
    double inside = est;
    double outside = est;
    double step = scale;
    bool bracketed = false;
    for (int k = 0; k < 60; ++k) {
      double x = est + side * step;
      const bool hits_bound = side < 0 ? x <= bound : x >= bound;
      if (hits_bound) x = bound;
      if (profile_rise(x) >= threshold) {
        outside = x;
        bracketed = true;
        break;
      }
      inside = x;
      if (hits_bound) break;
      step *= 2.0;
    }
    if (!bracketed) {
      if (std::isfinite(bound) && inside == bound) {
        edge = bound;
        at_bound = true;
      } else {
        edge = side * kInf;
        open = true;
      }
      continue;
    }
    const double resolution = 1e-3 * scale;
    Vector warm_inside = warm;
    for (int k = 0; k < 100 && std::abs(outside - inside) > resolution; ++k) {
      const double mid = 0.5 * (inside + outside);
      if (profile_rise(mid) >= threshold) {
        outside = mid;
      } else {
        inside = mid;
        warm_inside = warm;
      }
      warm = warm_inside;
    }
    edge = 0.5 * (inside + outside);
  }
  return out;
}

void attach_profile_intervals(const FitProblem& problem, FitResult& fit, double level) {
  fit.intervals.clear();
  for (Eigen::Index i = 0; i < fit.params.size(); ++i) {
    fit.intervals.push_back(profile_ci(problem, fit, static_cast<std::size_t>(i), level));
  }
}

FitResult lm_fit_multistart(const FitProblem& problem, int starts, std::uint64_t seed) {
  if (starts < 1) throw DomainError("multistart needs at least one start");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Vector lo = problem.lower_bounds();
  const Vector hi = problem.upper_bounds();

  FitResult best;
  bool have_best = false;
  FitProblem trial = problem;
  for (int s = 0; s < starts; ++s) {
    if (s > 0) {
      for (Eigen::Index j = 0; j < problem.initial.size(); ++j) {
        if (problem.is_fixed(static_cast<std::size_t>(j))) continue;
        if (std::isfinite(lo[j]) && std::isfinite(hi[j])) {
          trial.initial[j] = lo[j] + (hi[j] - lo[j]) * unit(rng);
        } else {
          const double base = problem.initial[j];
          trial.initial[j] = std::clamp(base + std::max(1.0, std::abs(base)) * gauss(rng), lo[j], hi[j]);
        }
      }
    }
    try {
      FitResult r = lm_fit(trial);
      if (r.converged() && (!have_best || r.cost < best.cost)) {
        best = std::move(r);
        have_best = true;
      }
    } catch (const FitError&) {
      // A failed start does not invalidate the others.
    }
  }
  if (!have_best) throw FitError(fmt::format("none of {} starts converged", starts), kInf);
  return best;
}

void write_trace_csv(std::ostream& out, const FitResult& fit) {
  out << "iteration,cost,damping";
  for (Eigen::Index j = 0; j < fit.params.size(); ++j) {
    const auto idx = static_cast<std::size_t>(j);
    out << ',' << (idx < fit.names.size() ? fit.names[idx] : fmt::format("p{}", j));
  }
  out << '\n';
  for (const auto& t : fit.trace) {
    out << fmt::format("{},{:.17g},{:.17g}", t.iteration, t.cost, t.damping);
    for (Eigen::Index j = 0; j < t.params.size(); ++j) out << fmt::format(",{:.17g}", t.params[j]);
    out << '\n';
  }
}

}  // namespace qfc::fit
