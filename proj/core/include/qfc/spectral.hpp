#pragma once

#include <optional>
#include <string>

namespace qfc {

/// Speed of light in vacuum, m/s (exact).
inline constexpr double kSpeedOfLight = 299'792'458.0;

/// Vacuum wavelength. Stored canonically as optical frequency so that
/// energy-conservation arithmetic is plain addition.
class Wavelength {
 public:
  static Wavelength from_nm(double nm);
  static Wavelength from_um(double um) { return from_nm(um * 1e3); }
  static Wavelength from_thz(double thz);

  double thz() const noexcept { return thz_; }
  double hz() const noexcept { return thz_ * 1e12; }
  double nm() const noexcept;
  double um() const noexcept { return nm() * 1e-3; }
  double m() const noexcept { return nm() * 1e-9; }
  /// Vacuum wavenumber 1/lambda in cm^-1.
  double wavenumber_per_cm() const noexcept;

  /// Orders by wavelength (not frequency): a < b means a is bluer.
  friend bool operator<(Wavelength a, Wavelength b) noexcept { return a.thz_ > b.thz_; }
  friend bool operator==(Wavelength a, Wavelength b) noexcept = default;

 private:
  explicit Wavelength(double thz) : thz_(thz) {}
  double thz_;
};

enum class WidthUnit { kNanometers, kGigahertz };

/// A spectral width held in one representation, convertible to the other at
/// a carrier wavelength via d(nu) = c d(lambda) / lambda^2.
class SpectralWidth {
 public:
  static SpectralWidth nanometers(double value, std::optional<Wavelength> carrier = std::nullopt);
  static SpectralWidth gigahertz(double value, std::optional<Wavelength> carrier = std::nullopt);

  double value() const noexcept { return value_; }
  WidthUnit unit() const noexcept { return unit_; }
  const std::optional<Wavelength>& carrier() const noexcept { return carrier_; }

  /// Value in GHz; converts through the carrier when stored in nm.
  double ghz() const;
  double nm() const;

 private:
  SpectralWidth(double value, WidthUnit unit, std::optional<Wavelength> carrier);
  double value_;
  WidthUnit unit_;
  std::optional<Wavelength> carrier_;
};

/// Idler of a difference-frequency process: nu_out = nu_in - nu_pump.
/// Throws DomainError when the input is not bluer than the pump.
Wavelength dfg_output(Wavelength input, Wavelength pump);

SpectralWidth width_convert(const SpectralWidth& width, WidthUnit target);

/// |1/a - 1/b| in cm^-1.
double spectral_gap_wavenumbers(Wavelength a, Wavelength b);

/// Human-readable "1549.00 nm" (0.01 nm resolution).
std::string format_nm(Wavelength w);

}  // namespace qfc
