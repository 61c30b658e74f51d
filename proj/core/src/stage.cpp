#include "qfc/stage.hpp"

#include <cmath>

#include <fmt/format.h>

#include "qfc/errors.hpp"

namespace qfc {

StageSpec StageSpec::from_input_and_pump(Wavelength input, Wavelength pump, double length_cm) {
  StageSpec stage{input, pump, dfg_output(input, pump), length_cm};
  stage.validate();
  return stage;
}

void StageSpec::validate() const {
  const double residual = input.thz() - pump.thz() - output.thz();
  if (std::abs(residual) > 1e-6 * input.thz()) {
    throw ConsistencyError(fmt::format(
        "stage violates energy conservation: {:.4f} - {:.4f} - {:.4f} THz = {:.3e} THz", input.thz(), pump.thz(),
        output.thz(), residual));
  }
  if (!(length_cm > 0.0) || !std::isfinite(length_cm)) {
    throw DomainError(fmt::format("stage length must be positive, got {} cm", length_cm));
  }
  if (!(eta_max >= 0.0 && eta_max <= 1.0)) {
    throw DomainError(fmt::format("eta_max must lie in [0, 1], got {}", eta_max));
  }
  if (!(kappa_norm >= 0.0) || !std::isfinite(kappa_norm)) {
    throw DomainError(fmt::format("kappa_norm must be non-negative, got {}", kappa_norm));
  }
}

}  // namespace qfc
