#include "qfc/conversion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "qfc/csv.hpp"
#include "qfc/errors.hpp"

namespace qfc {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

double efficiency(double pump_w, double eta_max, double kappa_norm, double length_cm) {
  const double s = std::sin(std::sqrt(kappa_norm * pump_w) * length_cm);
  return eta_max * s * s;
}

}  // namespace

DepletionCurve::DepletionCurve(std::vector<DepletionPoint> points) : points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& pt = points_[i];
    if (!(pt.pump_power_w >= 0.0) || !std::isfinite(pt.pump_power_w)) {
      throw DomainError(fmt::format("depletion point {}: pump power must be non-negative, got {}", i, pt.pump_power_w));
    }
    if (i > 0 && !(pt.pump_power_w > points_[i - 1].pump_power_w)) {
      throw DomainError(fmt::format("depletion point {}: pump powers must be strictly increasing", i));
    }
    if (!(pt.depletion >= 0.0 && pt.depletion <= 1.0)) {
      throw DomainError(fmt::format("depletion point {}: depletion {} outside [0, 1]", i, pt.depletion));
    }
    if (!(pt.sigma >= 0.0) || !std::isfinite(pt.sigma)) {
      throw DomainError(fmt::format("depletion point {}: sigma must be non-negative", i));
    }
  }
}

bool DepletionCurve::has_sigma() const noexcept {
  return !points_.empty() &&
         std::all_of(points_.begin(), points_.end(), [](const DepletionPoint& p) { return p.sigma > 0.0; });
}

DepletionCurve DepletionCurve::parse_csv(std::string_view text, std::string origin) {
  const auto table = io::parse_csv(text, std::move(origin));
  const int power = table.require_column("pump_power_w");
  const int depletion = table.require_column("depletion");
  const int sigma = table.column("sigma");
  std::vector<DepletionPoint> points;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    DepletionPoint pt{table.number(r, power), table.number(r, depletion)};
    if (sigma >= 0 && !table.rows[r][static_cast<std::size_t>(sigma)].empty()) pt.sigma = table.number(r, sigma);
    points.push_back(pt);
  }
  return DepletionCurve(std::move(points));
}

DepletionCurve DepletionCurve::load_csv(const std::filesystem::path& path) {
  return parse_csv(io::read_text_file(path), path.string());
}

double internal_efficiency(double pump_power_w, const StageSpec& stage) {
  if (!(pump_power_w >= 0.0)) throw DomainError(fmt::format("pump power must be non-negative, got {}", pump_power_w));
  return efficiency(pump_power_w, stage.eta_max, stage.kappa_norm, stage.length_cm);
}

double peak_pump_power(const StageSpec& stage) {
  if (!(stage.kappa_norm > 0.0)) throw DomainError("peak pump power is undefined for kappa_norm = 0");
  return kHalfPi * kHalfPi / (stage.kappa_norm * stage.length_cm * stage.length_cm);
}

double required_pump_power(double target_eta, const StageSpec& stage) {
  if (!(target_eta >= 0.0)) throw DomainError(fmt::format("target efficiency must be non-negative, got {}", target_eta));
  if (target_eta == 0.0) return 0.0;
  if (target_eta > stage.eta_max) {
    throw InfeasibleError(
        fmt::format("target efficiency {} exceeds the stage maximum eta_max = {}", target_eta, stage.eta_max),
        stage.eta_max);
  }
  if (!(stage.kappa_norm > 0.0)) {
    throw InfeasibleError("stage with kappa_norm = 0 converts nothing", 0.0);
  }
  const double angle = std::asin(std::sqrt(std::min(1.0, target_eta / stage.eta_max)));
  const double root = angle / stage.length_cm;
  return root * root / stage.kappa_norm;
}

fit::FitResult fit_depletion(const DepletionCurve& curve, double length_cm, const DepletionFitOptions& options) {
  if (!(length_cm > 0.0)) throw DomainError(fmt::format("crystal length must be positive, got {} cm", length_cm));
  const auto& pts = curve.points();
  if (pts.size() < 4) throw DomainError(fmt::format("depletion fit needs at least 4 points, got {}", pts.size()));
  const double max_depletion =
      std::max_element(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.depletion < b.depletion; })->depletion;
  if (max_depletion <= 0.0) throw DomainError("degenerate depletion curve: every depletion is zero");
  const auto near_peak = std::count_if(pts.begin(), pts.end(),
                                       [&](const DepletionPoint& p) { return p.depletion >= 0.5 * max_depletion; });
  if (near_peak < 2) {
    throw DomainError("depletion curve needs at least two points beyond half of its apparent peak");
  }

  // Small-angle start: eta ~ kappa P L^2 at the first informative point.
  const auto first = std::find_if(pts.begin(), pts.end(),
                                  [](const DepletionPoint& p) { return p.pump_power_w > 0.0 && p.depletion > 0.0; });
  const double eta0 = std::min(max_depletion, 1.0);
  const double kappa0 = first->depletion / (first->pump_power_w * length_cm * length_cm);

  const auto m = static_cast<Eigen::Index>(pts.size());
  fit::FitProblem problem;
  problem.names = {"eta_max", "kappa_norm"};
  problem.initial = fit::Vector{{eta0, kappa0}};
  problem.lower = fit::Vector{{0.0, 0.0}};
  problem.upper = fit::Vector{{1.0, std::numeric_limits<double>::infinity()}};
  problem.residuals = [&pts, m, length_cm](const fit::Vector& p) {
    fit::Vector r(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& pt = pts[static_cast<std::size_t>(i)];
      r[i] = efficiency(pt.pump_power_w, p[0], p[1], length_cm) - pt.depletion;
    }
    return r;
  };
  if (curve.has_sigma()) {
    problem.weights.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double s = pts[static_cast<std::size_t>(i)].sigma;
      problem.weights[i] = 1.0 / (s * s);
    }
  } else {
    problem.scale_by_residual_variance = true;
  }

  problem.record_trace = options.record_trace;
  fit::FitResult result = fit::lm_fit(problem);
  if (!result.converged()) {
    throw FitError(fmt::format("depletion fit did not converge in {} iterations (cost {:.6g})", result.iterations,
                               result.cost),
                   result.cost);
  }
  if (options.profile_intervals) fit::attach_profile_intervals(problem, result, options.level);
  return result;
}

double cascade_internal(double eta1, double eta2) {
  if (!(eta1 >= 0.0 && eta1 <= 1.0) || !(eta2 >= 0.0 && eta2 <= 1.0)) {
    throw DomainError(fmt::format("stage efficiencies must lie in [0, 1], got {} and {}", eta1, eta2));
  }
  return eta1 * eta2;
}

}  // namespace qfc
