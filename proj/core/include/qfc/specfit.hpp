#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qfc/fitkit.hpp"

namespace qfc {

/// A exp(-((x - c) / w)^order), order an even integer >= 2.
struct SuperGaussian {
  double amplitude = 0.0;
  double center_nm = 0.0;
  double width_nm = 1.0;
  int order = 4;
};

/// Lorentzian with peak-height amplitude convention.
struct Lorentzian {
  double amplitude = 0.0;
  double center_nm = 0.0;
  double fwhm_nm = 1.0;
};

struct SpectrumModel {
  SuperGaussian background;
  std::vector<Lorentzian> peaks;

  void validate() const;
  double background_at(double wavelength_nm) const;
  double peaks_at(double wavelength_nm) const;

  /// Human-readable key-value form (format = qfc-spectrum-model/1).
  std::string serialize() const;
  static SpectrumModel parse(std::string_view text, std::string origin = "<string>");
};

double spectrum_eval(const SpectrumModel& model, double wavelength_nm);

/// Adaptive Simpson integral of f over [a, b] to the given relative
/// tolerance.
double adaptive_integrate(const std::function<double(double)>& f, double a, double b, double rel_tol);

/// 10 log10(integral of peaks / integral of background) over the window.
double sbr_from_spectrum(const SpectrumModel& model, double window_lo_nm, double window_hi_nm,
                         double rel_tol = 1e-4);

struct SpectrumPoint {
  double wavelength_nm;
  double intensity;
  /// 0 when unknown.
  double sigma = 0.0;
};

/// CSV `wavelength_nm, intensity[, sigma]`.
std::vector<SpectrumPoint> parse_spectrum_csv(std::string_view text, std::string origin = "<string>");
std::vector<SpectrumPoint> load_spectrum_csv(const std::filesystem::path& path);

struct SpectrumFitOptions {
  int order = 4;
  /// Starting model; derived from the data by peak picking when absent.
  std::optional<SpectrumModel> init;
  double level = 0.95;
  bool profile_intervals = true;
  /// Keep the iterate history in fit.trace.
  bool record_trace = false;
};

struct SpectrumFit {
  fit::FitResult fit;
  SpectrumModel model;
};

/// Least-squares fit of background + n_peaks Lorentzians. Parameter order:
/// bg_amplitude, bg_center_nm, bg_width_nm, then (amplitude, center_nm,
/// fwhm_nm) per peak. Peak centers are bounded to the data range.
SpectrumFit fit_spectrum(std::span<const SpectrumPoint> data, int n_peaks, const SpectrumFitOptions& options = {});

}  // namespace qfc
