#pragma once

#include "qfc/spectral.hpp"

namespace qfc {

/// One difference-frequency stage of the cascade.
struct StageSpec {
  Wavelength input;
  Wavelength pump;
  Wavelength output;
  double length_cm = 4.0;
  /// Maximum internal efficiency, in [0, 1].
  double eta_max = 1.0;
  /// Normalized efficiency, W^-1 cm^-2.
  double kappa_norm = 0.0;
  double operating_temperature_c = 25.0;

  /// Builds a stage whose output is the exact difference frequency.
  static StageSpec from_input_and_pump(Wavelength input, Wavelength pump, double length_cm = 4.0);

  /// Throws ConsistencyError when output violates energy conservation by more
  /// than 1 ppm of the input frequency, DomainError for out-of-range numbers.
  void validate() const;
};

}  // namespace qfc
