#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "qfc/fitkit.hpp"
#include "qfc/stage.hpp"

namespace qfc {

struct DepletionPoint {
  double pump_power_w;
  double depletion;
  /// Absolute uncertainty of the depletion; 0 when not measured.
  double sigma = 0.0;
};

/// Signal depletion versus in-waveguide pump power. Powers strictly
/// increasing and non-negative, depletion in [0, 1].
class DepletionCurve {
 public:
  explicit DepletionCurve(std::vector<DepletionPoint> points);

  /// CSV with header `pump_power_w, depletion[, sigma]`.
  static DepletionCurve parse_csv(std::string_view text, std::string origin = "<string>");
  static DepletionCurve load_csv(const std::filesystem::path& path);

  const std::vector<DepletionPoint>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  /// True when every point carries a positive sigma.
  bool has_sigma() const noexcept;

 private:
  std::vector<DepletionPoint> points_;
};

/// eta_max sin^2(sqrt(kappa_norm P) L).
double internal_efficiency(double pump_power_w, const StageSpec& stage);

/// Pump power of the first efficiency maximum, (pi/2)^2 / (kappa_norm L^2).
double peak_pump_power(const StageSpec& stage);

/// Smallest P >= 0 reaching `target_eta`. Throws InfeasibleError (carrying
/// eta_max) when the target exceeds eta_max.
double required_pump_power(double target_eta, const StageSpec& stage);

struct DepletionFitOptions {
  double level = 0.95;
  bool profile_intervals = true;
  /// Keep the iterate history in fit.trace.
  bool record_trace = false;
};

/// Weighted least-squares fit of (eta_max, kappa_norm) to a depletion curve.
/// Weights are 1/sigma^2 when every point has a sigma, unit otherwise (then
/// uncertainties are scaled by the residual variance). Parameter order:
/// eta_max, kappa_norm [W^-1 cm^-2].
fit::FitResult fit_depletion(const DepletionCurve& curve, double length_cm, const DepletionFitOptions& options = {});

/// Product of two stage efficiencies.
double cascade_internal(double eta1, double eta2);

}  // namespace qfc
