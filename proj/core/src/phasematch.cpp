#include "qfc/phasematch.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>

#include <fmt/format.h>

#include "qfc/data.hpp"
#include "qfc/errors.hpp"
#include "qfc/keyvalue.hpp"

namespace qfc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// First- and second-order thermal expansion of congruent LiNbO3 along the
// crystal axis, referenced to 25 degC (Jundt 1997).
constexpr double kExpansionAlpha = 1.54e-5;
constexpr double kExpansionBeta = 5.3e-9;

double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

}  // namespace

SellmeierModel::SellmeierModel(std::string name, Coefficients coefficients, ValidityRange validity)
    : name_(std::move(name)), c_(coefficients), validity_(validity) {
  if (!(validity_.lambda_min_um > 0.0 && validity_.lambda_min_um < validity_.lambda_max_um &&
        validity_.t_min_c < validity_.t_max_c)) {
    throw DomainError(fmt::format("Sellmeier model '{}' has an empty or invalid validity range", name_));
  }
}

SellmeierModel SellmeierModel::constant(double n0, ValidityRange validity) {
  if (!(n0 > 1.0)) throw DomainError(fmt::format("constant index must exceed 1, got {}", n0));
  Coefficients c;
  c.a1 = n0 * n0;
  return SellmeierModel(fmt::format("constant_n{}", n0), c, validity);
}

SellmeierModel SellmeierModel::parse(std::string_view text, std::string origin) {
  const auto doc = io::KeyValueDoc::parse(text, std::move(origin));
  if (doc.require("format") != "qfc-sellmeier/1") {
    throw ParseError(fmt::format("{}: unsupported format '{}'", doc.origin(), doc.require("format")));
  }
  Coefficients c;
  c.a1 = doc.number("a1");
  c.a2 = doc.number("a2");
  c.a3 = doc.number("a3");
  c.a4 = doc.number("a4");
  c.a5 = doc.number("a5");
  c.a6 = doc.number("a6");
  c.b1 = doc.number("b1");
  c.b2 = doc.number("b2");
  c.b3 = doc.number("b3");
  c.b4 = doc.number("b4");
  c.t_ref_c = doc.number("t_ref_c");
  c.t_offset_c = doc.number("t_offset_c");
  const ValidityRange validity{doc.number("lambda_min_um"), doc.number("lambda_max_um"), doc.number("t_min_c"),
                               doc.number("t_max_c")};
  return SellmeierModel(doc.require("name"), c, validity);
}

SellmeierModel SellmeierModel::load(const std::filesystem::path& path) {
  const auto doc = io::KeyValueDoc::read(path);
  return parse(doc.to_string(), path.string());
}

double SellmeierModel::index(Wavelength lambda, double temperature_c) const {
  const double um = lambda.um();
  if (um < validity_.lambda_min_um) {
    throw ValidityError(fmt::format("{}: wavelength {:.6g} um below validity minimum lambda_min_um = {} um", name_,
                                    um, validity_.lambda_min_um));
  }
  if (um > validity_.lambda_max_um) {
    throw ValidityError(fmt::format("{}: wavelength {:.6g} um above validity maximum lambda_max_um = {} um", name_,
                                    um, validity_.lambda_max_um));
  }
  if (!(temperature_c >= validity_.t_min_c)) {
    throw ValidityError(fmt::format("{}: temperature {:.6g} degC below validity minimum t_min_c = {} degC", name_,
                                    temperature_c, validity_.t_min_c));
  }
  if (!(temperature_c <= validity_.t_max_c)) {
    throw ValidityError(fmt::format("{}: temperature {:.6g} degC above validity maximum t_max_c = {} degC", name_,
                                    temperature_c, validity_.t_max_c));
  }
  const double f = (temperature_c - c_.t_ref_c) * (temperature_c + c_.t_offset_c);
  const double l2 = um * um;
  const double uv_pole = c_.a3 + c_.b3 * f;
  double n2 = c_.a1 + c_.b1 * f - c_.a6 * l2;
  if (c_.a2 != 0.0 || c_.b2 != 0.0) n2 += (c_.a2 + c_.b2 * f) / (l2 - uv_pole * uv_pole);
  if (c_.a4 != 0.0 || c_.b4 != 0.0) n2 += (c_.a4 + c_.b4 * f) / (l2 - c_.a5 * c_.a5);
  if (!(n2 > 1.0)) {
    throw ValidityError(fmt::format("{}: model yields n^2 = {} <= 1 at {:.6g} um, {:.6g} degC", name_, n2, um,
                                    temperature_c));
  }
  return std::sqrt(n2);
}

std::filesystem::path default_sellmeier_path() {
  if (const char* env = std::getenv("QFC_SELLMEIER_PATH"); env != nullptr && *env != '\0') {
    return env;
  }
  return bundled_data_path("mgo_cln_e_gayer2008.sellmeier");
}

SellmeierModel default_sellmeier() { return SellmeierModel::load(default_sellmeier_path()); }

double QpmGrating::period_at_um(double temperature_c) const {
  if (!thermal_expansion) return poling_period_um;
  const double dt = temperature_c - 25.0;
  return poling_period_um * (1.0 + kExpansionAlpha * dt + kExpansionBeta * dt * dt);
}

void QpmGrating::validate() const {
  if (!(poling_period_um > 0.0)) {
    throw DomainError(fmt::format("poling period must be positive, got {} um", poling_period_um));
  }
  if (!(length_cm > 0.0) || !std::isfinite(length_cm)) {
    throw DomainError(fmt::format("grating length must be positive, got {} cm", length_cm));
  }
}

double refractive_index(Wavelength lambda, double temperature_c, const SellmeierModel& model) {
  return model.index(lambda, temperature_c);
}

double bulk_mismatch(const StageSpec& stage, double temperature_c, const SellmeierModel& model) {
  stage.validate();
  const auto k = [&](Wavelength w) { return model.index(w, temperature_c) / w.m(); };
  return kTwoPi * (k(stage.input) - k(stage.pump) - k(stage.output));
}

double qpm_mismatch(const StageSpec& stage, const QpmGrating& grating, const SellmeierModel& model) {
  grating.validate();
  const double period_m = grating.period_at_um(grating.temperature_c) * 1e-6;
  return bulk_mismatch(stage, grating.temperature_c, model) - kTwoPi / period_m;
}

double qpm_period_for(const StageSpec& stage, double temperature_c, const SellmeierModel& model) {
  const double dk = bulk_mismatch(stage, temperature_c, model);
  if (!(dk > 0.0)) {
    throw DomainError(fmt::format("no first-order QPM solution: bulk mismatch {:.6g} rad/m is not positive", dk));
  }
  return kTwoPi / dk * 1e6;
}

double phasematch_temperature(const StageSpec& stage, const QpmGrating& grating, const SellmeierModel& model,
                              TemperatureBracket bracket) {
  if (!(bracket.lo_c < bracket.hi_c)) {
    throw BracketError(fmt::format("empty temperature bracket [{}, {}] degC", bracket.lo_c, bracket.hi_c));
  }
  auto mismatch_at = [&](double t) {
    QpmGrating g = grating;
    g.temperature_c = t;
    return qpm_mismatch(stage, g, model);
  };
  double lo = bracket.lo_c;
  double hi = bracket.hi_c;
  double f_lo = mismatch_at(lo);
  const double f_hi = mismatch_at(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0.0) == (f_hi > 0.0)) {
    throw BracketError(fmt::format("phase mismatch does not change sign over [{}, {}] degC ({:.4g} -> {:.4g} rad/m)",
                                   lo, hi, f_lo, f_hi));
  }
  constexpr double kTolerance = 0.01;
  while (hi - lo > kTolerance) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = mismatch_at(mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

HalfMaxCrossings half_max_crossings(const std::function<double(double)>& response, double initial_step,
                                    double max_extent) {
  auto crossing = [&](double direction) {
    double inside = 0.0;
    double step = initial_step;
    double outside = 0.0;
    bool found = false;
    while (std::abs(inside) < max_extent) {
      outside = direction * std::min(std::abs(inside) + step, max_extent);
      if (response(outside) < 0.5) {
        found = true;
        break;
      }
      if (std::abs(outside) >= max_extent) break;
      inside = outside;
      step *= 1.5;
    }
    if (!found) {
      throw DomainError(fmt::format("response stays above half maximum out to {:.6g}", direction * max_extent));
    }
    for (int i = 0; i < 200 && std::abs(outside - inside) > 1e-12 * std::max(1.0, std::abs(outside)); ++i) {
      const double mid = 0.5 * (inside + outside);
      (response(mid) >= 0.5 ? inside : outside) = mid;
    }
    return 0.5 * (inside + outside);
  };
  if (!(response(0.0) >= 0.5)) throw DomainError("response at the origin is below half maximum");
  return {crossing(-1.0), crossing(+1.0)};
}

SpectralWidth acceptance_bandwidth(const StageSpec& stage, const QpmGrating& grating, const SellmeierModel& model) {
  const double length_m = grating.length_cm * 1e-2;
  const double dk0 = qpm_mismatch(stage, grating, model);
  if (std::abs(dk0) * length_m / 2.0 > kPhaseMatchedPhaseTolerance) {
    throw DomainError(fmt::format(
        "stage is not phase-matched at {:.3f} degC (dk L/2 = {:.3g} rad); solve the phase-matching temperature first",
        grating.temperature_c, dk0 * length_m / 2.0));
  }
  const double period_m = grating.period_at_um(grating.temperature_c) * 1e-6;
  // Detuning in GHz of the input; the pump is fixed and the output follows.
  auto response = [&](double detuning_ghz) {
    const auto input = Wavelength::from_thz(stage.input.thz() + detuning_ghz * 1e-3);
    StageSpec detuned = stage;
    detuned.input = input;
    detuned.output = dfg_output(input, stage.pump);
    const double dk = bulk_mismatch(detuned, grating.temperature_c, model) - kTwoPi / period_m;
    const double s = sinc(dk * length_m / 2.0);
    return s * s;
  };
  // Keep the scan inside the model's wavelength range on both sides.
  const auto& v = model.validity();
  const double max_detuning_thz =
      std::min({stage.input.thz() - Wavelength::from_um(v.lambda_max_um).thz(),
                Wavelength::from_um(v.lambda_min_um).thz() - stage.input.thz(),
                stage.input.thz() - stage.pump.thz() - Wavelength::from_um(v.lambda_max_um).thz()});
  const double max_extent_ghz = 0.999 * max_detuning_thz * 1e3;
  const auto crossings = half_max_crossings(response, 0.1, max_extent_ghz);
  return SpectralWidth::gigahertz(crossings.width(), stage.input);
}

}  // namespace qfc
