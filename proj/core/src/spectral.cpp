#include "qfc/spectral.hpp"

#include <cmath>

#include <fmt/format.h>

#include "qfc/errors.hpp"

namespace qfc {

namespace {

// nm * THz product for c: lambda[nm] = c[m/s] / nu[THz] * 1e-3.
constexpr double kNmThz = kSpeedOfLight * 1e-3;

}  // namespace

Wavelength Wavelength::from_nm(double nm) {
  if (!std::isfinite(nm) || nm <= 0.0) {
    throw DomainError(fmt::format("wavelength must be positive and finite, got {} nm", nm));
  }
  return Wavelength(kNmThz / nm);
}

Wavelength Wavelength::from_thz(double thz) {
  if (!std::isfinite(thz) || thz <= 0.0) {
    throw DomainError(fmt::format("frequency must be positive and finite, got {} THz", thz));
  }
  return Wavelength(thz);
}

double Wavelength::nm() const noexcept { return kNmThz / thz_; }

double Wavelength::wavenumber_per_cm() const noexcept { return 1e7 / nm(); }

SpectralWidth::SpectralWidth(double value, WidthUnit unit, std::optional<Wavelength> carrier)
    : value_(value), unit_(unit), carrier_(carrier) {
  if (!std::isfinite(value) || value < 0.0) {
    throw DomainError(fmt::format("spectral width must be non-negative and finite, got {}", value));
  }
}

SpectralWidth SpectralWidth::nanometers(double value, std::optional<Wavelength> carrier) {
  return SpectralWidth(value, WidthUnit::kNanometers, carrier);
}

SpectralWidth SpectralWidth::gigahertz(double value, std::optional<Wavelength> carrier) {
  return SpectralWidth(value, WidthUnit::kGigahertz, carrier);
}

double SpectralWidth::ghz() const {
  return unit_ == WidthUnit::kGigahertz ? value_ : width_convert(*this, WidthUnit::kGigahertz).value();
}

double SpectralWidth::nm() const {
  return unit_ == WidthUnit::kNanometers ? value_ : width_convert(*this, WidthUnit::kNanometers).value();
}

Wavelength dfg_output(Wavelength input, Wavelength pump) {
  const double out = input.thz() - pump.thz();
  if (!(out > 0.0)) {
    throw DomainError(fmt::format("non-positive output frequency: input {:.4f} nm is not bluer than pump {:.4f} nm",
                                  input.nm(), pump.nm()));
  }
  return Wavelength::from_thz(out);
}

SpectralWidth width_convert(const SpectralWidth& width, WidthUnit target) {
  if (width.unit() == target) return width;
  if (!width.carrier()) {
    throw DomainError("spectral width conversion needs a carrier wavelength");
  }
  const Wavelength carrier = *width.carrier();
  const double lambda_m = carrier.m();
  if (target == WidthUnit::kNanometers) {
    const double dlambda_m = width.value() * 1e9 * lambda_m * lambda_m / kSpeedOfLight;
    return SpectralWidth::nanometers(dlambda_m * 1e9, carrier);
  }
  const double dnu_hz = kSpeedOfLight * (width.value() * 1e-9) / (lambda_m * lambda_m);
  return SpectralWidth::gigahertz(dnu_hz * 1e-9, carrier);
}

double spectral_gap_wavenumbers(Wavelength a, Wavelength b) {
  return std::abs(a.wavenumber_per_cm() - b.wavenumber_per_cm());
}

std::string format_nm(Wavelength w) { return fmt::format("{:.2f} nm", w.nm()); }

}  // namespace qfc
