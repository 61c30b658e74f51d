#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include "qfc/spectral.hpp"
#include "qfc/stage.hpp"

namespace qfc {

struct ValidityRange {
  double lambda_min_um;
  double lambda_max_um;
  double t_min_c;
  double t_max_c;
};

/// Temperature-dependent extraordinary-index model of the form
///
///   n^2 = a1 + b1 f + (a2 + b2 f) / (L^2 - (a3 + b3 f)^2)
///            + (a4 + b4 f) / (L^2 - a5^2) - a6 L^2,
///   f = (T - t_ref) (T + t_offset),
///
/// with L in micrometres and T in degrees Celsius. Evaluation outside the
/// validity range throws ValidityError.
class SellmeierModel {
 public:
  struct Coefficients {
    double a1 = 0, a2 = 0, a3 = 0, a4 = 0, a5 = 0, a6 = 0;
    double b1 = 0, b2 = 0, b3 = 0, b4 = 0;
    double t_ref_c = 0, t_offset_c = 0;
  };

  SellmeierModel(std::string name, Coefficients coefficients, ValidityRange validity);

  /// Dispersion-free model with n = n0 everywhere inside `validity`.
  static SellmeierModel constant(double n0, ValidityRange validity = {0.2, 10.0, -50.0, 300.0});

  /// Parses the versioned key-value format (format = qfc-sellmeier/1).
  static SellmeierModel parse(std::string_view text, std::string origin = "<string>");
  static SellmeierModel load(const std::filesystem::path& path);

  double index(Wavelength lambda, double temperature_c) const;

  const std::string& name() const noexcept { return name_; }
  const Coefficients& coefficients() const noexcept { return c_; }
  const ValidityRange& validity() const noexcept { return validity_; }

 private:
  std::string name_;
  Coefficients c_;
  ValidityRange validity_;
};

/// $QFC_SELLMEIER_PATH if set, else the bundled MgO:CLN coefficient file.
std::filesystem::path default_sellmeier_path();
SellmeierModel default_sellmeier();

struct QpmGrating {
  double poling_period_um;
  double length_cm;
  double temperature_c;
  /// Scale the period with LiNbO3 thermal expansion about 25 degC.
  bool thermal_expansion = false;

  double period_at_um(double temperature_c) const;
  void validate() const;
};

struct TemperatureBracket {
  double lo_c;
  double hi_c;
};

double refractive_index(Wavelength lambda, double temperature_c, const SellmeierModel& model);

/// k_in - k_pump - k_out at the given temperature, rad/m (type-0, all
/// fields extraordinary).
double bulk_mismatch(const StageSpec& stage, double temperature_c, const SellmeierModel& model);

/// bulk_mismatch - 2 pi / Lambda at the grating temperature, rad/m.
double qpm_mismatch(const StageSpec& stage, const QpmGrating& grating, const SellmeierModel& model);

/// First-order poling period that phase-matches the stage at T, in um.
double qpm_period_for(const StageSpec& stage, double temperature_c, const SellmeierModel& model);

/// Bisection root of qpm_mismatch in temperature, 0.01 degC tolerance.
double phasematch_temperature(const StageSpec& stage, const QpmGrating& grating, const SellmeierModel& model,
                              TemperatureBracket bracket);

/// FWHM of sinc^2(dk L / 2) versus input detuning at fixed pump.
SpectralWidth acceptance_bandwidth(const StageSpec& stage, const QpmGrating& grating, const SellmeierModel& model);

/// Largest |dk L / 2| at which a grating still counts as phase-matched.
inline constexpr double kPhaseMatchedPhaseTolerance = 0.1;

struct HalfMaxCrossings {
  double lower;
  double upper;
  double width() const noexcept { return upper - lower; }
};

/// Half-maximum crossings of a unit-peak response around x = 0. Scans
/// outward geometrically from `initial_step` up to `max_extent`, then bisects
/// each bracket. Throws DomainError when a side never drops below 1/2.
HalfMaxCrossings half_max_crossings(const std::function<double(double)>& response, double initial_step,
                                    double max_extent);

}  // namespace qfc
