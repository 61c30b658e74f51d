#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "qfc/errors.hpp"
#include "qfc/spectral.hpp"
#include "qfc/stage.hpp"

using namespace qfc;
using doctest::Approx;

TEST_CASE("dfg_output reproduces the cascade wavelengths") {
  const auto pump = Wavelength::from_nm(2812.6);
  const auto mid = dfg_output(Wavelength::from_nm(737.1), pump);
  CHECK(mid.nm() == Approx(998.876155).epsilon(1e-9));
  CHECK(std::abs(mid.nm() - 998.9) < 0.05);
  const auto out = dfg_output(mid, pump);
  CHECK(out.nm() == Approx(1548.989435).epsilon(1e-9));
  CHECK(std::abs(out.nm() - 1549.0) < 0.05);
  // From the rounded intermediate.
  CHECK(dfg_output(Wavelength::from_nm(998.9), pump).nm() == Approx(1549.0468).epsilon(1e-7));
}

TEST_CASE("dfg_output of (lambda, 2 lambda) is 2 lambda") {
  for (double l : {500.0, 737.1, 1549.0}) {
    CHECK(dfg_output(Wavelength::from_nm(l), Wavelength::from_nm(2 * l)).nm() == Approx(2 * l).epsilon(1e-14));
  }
}

TEST_CASE("dfg_output rejects input not bluer than pump") {
  CHECK_THROWS_AS(dfg_output(Wavelength::from_nm(2000), Wavelength::from_nm(1000)), DomainError);
  CHECK_THROWS_WITH(dfg_output(Wavelength::from_nm(1000), Wavelength::from_nm(1000)),
                    doctest::Contains("non-positive output frequency"));
}

TEST_CASE("wavelength constructors reject non-physical values") {
  CHECK_THROWS_AS(Wavelength::from_nm(0.0), DomainError);
  CHECK_THROWS_AS(Wavelength::from_nm(-5.0), DomainError);
  CHECK_THROWS_AS(Wavelength::from_nm(NAN), DomainError);
  CHECK_THROWS_AS(Wavelength::from_thz(INFINITY), DomainError);
}

TEST_CASE("unit views agree") {
  const auto w = Wavelength::from_nm(1549.0);
  CHECK(w.um() == Approx(1.549));
  CHECK(w.m() == Approx(1.549e-6));
  CHECK(w.thz() == Approx(kSpeedOfLight / 1549e-9 / 1e12));
  CHECK(Wavelength::from_thz(w.thz()).nm() == Approx(1549.0).epsilon(1e-14));
  CHECK(Wavelength::from_nm(737.1) < Wavelength::from_nm(998.9));
  CHECK(format_nm(Wavelength::from_nm(1548.989435)) == "1548.99 nm");
}

TEST_CASE("width conversion") {
  const auto c1549 = Wavelength::from_nm(1549.0);
  CHECK(width_convert(SpectralWidth::gigahertz(25.0, c1549), WidthUnit::kNanometers).value() ==
        Approx(0.2000885).epsilon(1e-6));
  CHECK(width_convert(SpectralWidth::gigahertz(77.0, Wavelength::from_nm(737.12)), WidthUnit::kNanometers).value() ==
        Approx(0.1395553).epsilon(1e-6));
  CHECK(width_convert(SpectralWidth::gigahertz(0.0, c1549), WidthUnit::kNanometers).value() == 0.0);
  CHECK_THROWS_AS(width_convert(SpectralWidth::gigahertz(25.0), WidthUnit::kNanometers), DomainError);
  CHECK_THROWS_AS(SpectralWidth::gigahertz(-1.0), DomainError);
}

TEST_CASE("spectral gap") {
  CHECK(spectral_gap_wavenumbers(Wavelength::from_nm(1549), Wavelength::from_nm(2812.6)) ==
        Approx(2900.3488).epsilon(1e-7));
  CHECK(std::abs(spectral_gap_wavenumbers(Wavelength::from_nm(1549), Wavelength::from_nm(2812.6)) - 2900) < 1);
  CHECK(spectral_gap_wavenumbers(Wavelength::from_nm(800), Wavelength::from_nm(800)) == 0.0);
}

TEST_CASE("stage validation") {
  const auto s = StageSpec::from_input_and_pump(Wavelength::from_nm(737.1), Wavelength::from_nm(2812.6));
  CHECK_NOTHROW(s.validate());
  StageSpec bad = s;
  bad.output = Wavelength::from_nm(999.5);
  CHECK_THROWS_AS(bad.validate(), ConsistencyError);
  bad = s;
  bad.eta_max = 1.2;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = s;
  bad.length_cm = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("property: dfg_output monotone in input wavelength") {
  testing::for_all(200, 11, [](testing::Gen& g, int) {
    const double pump = g.uniform(1500, 4000);
    const double a = g.uniform(400, 0.9 * pump);
    const double b = a + g.uniform(1e-3, 0.95 * pump - a);
    const auto p = Wavelength::from_nm(pump);
    CHECK(dfg_output(Wavelength::from_nm(a), p).nm() < dfg_output(Wavelength::from_nm(b), p).nm());
  });
}

TEST_CASE("property: two steps with one pump equal one doubled shift") {
  testing::for_all(200, 12, [](testing::Gen& g, int) {
    const double pump = g.uniform(2000, 5000);
    const double in = g.uniform(400, 0.45 * pump);
    const auto p = Wavelength::from_nm(pump);
    const auto twice = dfg_output(dfg_output(Wavelength::from_nm(in), p), p);
    const double expected_inv = 1.0 / in - 2.0 / pump;
    CHECK(std::abs(twice.nm() * expected_inv - 1.0) < 1e-6);
  });
}

TEST_CASE("property: width conversion round trip within 1 ppm") {
  testing::for_all(300, 13, [](testing::Gen& g, int) {
    const auto carrier = Wavelength::from_nm(g.uniform(400, 3000));
    const double ghz = g.uniform(0, 0.01) * carrier.thz() * 1e3;
    const auto nm = width_convert(SpectralWidth::gigahertz(ghz, carrier), WidthUnit::kNanometers);
    const auto back = width_convert(nm, WidthUnit::kGigahertz);
    CHECK(back.value() == Approx(ghz).epsilon(1e-6));
  });
}

TEST_CASE("property: spectral gap symmetric") {
  testing::for_all(100, 14, [](testing::Gen& g, int) {
    const auto a = Wavelength::from_nm(g.uniform(300, 5000));
    const auto b = Wavelength::from_nm(g.uniform(300, 5000));
    CHECK(spectral_gap_wavenumbers(a, b) == spectral_gap_wavenumbers(b, a));
  });
}
