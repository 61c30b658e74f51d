// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "gen.hpp"
#include "qfc/budget.hpp"
#include "qfc/conversion.hpp"
#include "qfc/correlation.hpp"
#include "qfc/data.hpp"
#include "qfc/fitkit.hpp"
#include "qfc/phasematch.hpp"
#include "qfc/specfit.hpp"
#include "qfc/spectral.hpp"

using namespace qfc;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool near(double x, double target, double tol) { return std::abs(x - target) <= tol; }

Outcome wavelengths() {
  const auto out1 = dfg_output(Wavelength::from_nm(737.1), Wavelength::from_nm(2812.6));
  const auto out2 = dfg_output(out1, Wavelength::from_nm(2812.6));
  return {near(out1.nm(), 998.9, 0.05) && near(out2.nm(), 1549.0, 0.05),
          fmt::format("{:.3f} nm, {:.3f} nm", out1.nm(), out2.nm())};
}

Outcome ledger_total() {
  const auto ledger = EfficiencyLedger::load_csv(bundled_data_path("external_efficiency.csv"));
  const auto p = ledger_product(ledger, ProductMode::kRoundedEntries);
  const auto printed = fmt::format("{:.1f}", 100 * p.value);
  return {near(p.value, 0.3437, 0.002) && near(p.sigma, 0.008, 0.001) && (printed == "34.4" || printed == "34.5"),
          fmt::format("{:.4f} +/- {:.4f} ({} %)", p.value, p.sigma, printed)};
}

Outcome cascade() {
  const double eta = cascade_internal(0.964, 0.758);
  return {near(100 * eta, 73.1, 0.05), fmt::format("{:.3f} %", 100 * eta)};
}

Outcome noise() {
  const double a = rate_per_bandwidth(10.4, SpectralWidth::gigahertz(25));
  const double b = rate_per_bandwidth(2000, SpectralWidth::gigahertz(95));
  NoiseMeasurement m{{17.4, 0.0}, {12.1, 0.0}, EfficiencyLedger({{"detector", 0.72}, {"transmission", 0.89}}),
                     SpectralWidth::gigahertz(25)};
  const auto c = corrected_noise_rate(m);
  const auto note = compare_to_reported(c, {10.4, 0.5});
  const bool ok = near(a, 0.416, 1e-9) && fmt::format("{:.1f}", a) == "0.4" && fmt::format("{:.0f}", b) == "21" &&
                  near(c.rate, 8.27, 0.05) && note.has_value();
  return {ok, fmt::format("{:.3f} /s/GHz, {:.1f} /s/GHz, corrected {:.3f} cps, note {}", a, b, c.rate,
                          note ? "emitted" : "missing")};
}

Outcome rate_chain() {
  const auto r = rate_chain_output({550e3, {{"a", 0.4}, {"b", 0.61}, {"c", 0.29}, {"d", 0.35 / 0.6}}});
  return {near(r.output, 22700, 100), fmt::format("{:.0f} cps", r.output)};
}

Outcome depletion_roundtrip() {
  const auto t0 = Clock::now();
  constexpr double kLength = 4.0;
  int good = 0;
  for (int run = 0; run < 50; ++run) {
    testing::Gen g(1000 + run);
    StageSpec s = StageSpec::from_input_and_pump(Wavelength::from_nm(737.1), Wavelength::from_nm(2812.6), kLength);
    s.eta_max = run % 2 == 0 ? 0.964 : 0.758;
    const double p_peak = run % 2 == 0 ? 1.0 : 2.5;
    s.kappa_norm = std::numbers::pi * std::numbers::pi / 4.0 / (p_peak * kLength * kLength);
    std::vector<DepletionPoint> pts;
    for (int i = 1; i <= 15; ++i) {
      const double p = 1.3 * p_peak * i / 15;
      const double eta = internal_efficiency(p, s);
      const double sigma = 0.02 * eta;
      pts.push_back({p, std::clamp(eta + g.normal(0, sigma), 0.0, 1.0), sigma});
    }
    const auto f = fit_depletion(DepletionCurve(pts), kLength);
    const bool within = std::abs(f.params[0] / s.eta_max - 1) < 0.02 && std::abs(f.params[1] / s.kappa_norm - 1) < 0.02;
    const bool covered = f.intervals[0].contains(s.eta_max) && f.intervals[1].contains(s.kappa_norm);
    good += within && covered;
  }
  const double dt = seconds_since(t0);
  return {good >= 45 && dt < 10, fmt::format("{}/50 runs, {:.2f} s", good, dt)};
}

Outcome g2_floor() {
  const double rho = sbr_db_to_rho(7.5);
  G2Params p;
  p.rho = rho;
  const double g0 = g2_zero(p);
  bool increasing = true;
  double prev = g0;
  for (int i = 1; i <= 10; ++i) {
    p.jitter_fwhm_ps = 100.0 * i;
    const double g = g2_zero(p);
    increasing = increasing && g > prev;
    prev = g;
  }
  return {near(rho, 0.8490, 0.0005) && near(g0, 0.2792, 0.001) && increasing,
          fmt::format("rho {:.4f}, g2(0) {:.4f}, monotone {}", rho, g0, increasing)};
}

Outcome simulator_agreement() {
  const auto t0 = Clock::now();
  G2Params p;
  p.rho = sbr_db_to_rho(7.5);
  p.jitter_fwhm_ps = 550;
  HbtSimulation sim;
  sim.total_rate_cps = 1e7;
  sim.duration_s = 1.25;
  sim.seed = 8;
  const auto h = simulate_hbt(p, sim);
  const double level = h.uncorrelated_level();
  double chi2 = 0;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    const double e = level * g2_bin_average(h.edges()[i], h.edges()[i + 1], p);
    const double d = static_cast<double>(h.counts()[i]) - e;
    chi2 += d * d / e;
  }
  const double reduced = chi2 / static_cast<double>(h.bins());

  G2Params flat;
  flat.rho = 0.0;
  sim.seed = 9;
  const auto b = simulate_hbt(flat, sim);
  const double bl = b.uncorrelated_level();
  std::size_t outliers = 0;
  for (auto n : b.counts()) outliers += std::abs(static_cast<double>(n) - bl) > 4 * std::sqrt(bl);
  const double dt = seconds_since(t0);
  return {h.total() >= 1000000 && reduced >= 0.8 && reduced <= 1.25 && outliers == 0 && dt < 60,
          fmt::format("{} coincidences, reduced chi2 {:.3f}, {} background bins beyond 4 sigma, {:.1f} s", h.total(),
                      reduced, outliers, dt)};
}

Outcome fitter_calibration() {
  const auto t0 = Clock::now();
  G2Params truth;
  truth.rho = sbr_db_to_rho(7.5);
  truth.jitter_fwhm_ps = 550;
  int covered = 0;
  double width_sum = 0;
  for (int run = 0; run < 50; ++run) {
    HbtSimulation sim;
    sim.total_rate_cps = 2e6;
    sim.seed = 5000 + run;
    const auto f = fit_g2(simulate_hbt(truth, sim), 550.0);
    covered += f.fit.intervals[0].contains(7.5);
    width_sum += f.fit.intervals[0].width();
  }
  const double dt = seconds_since(t0);
  return {covered >= 45 && dt < 300,
          fmt::format("{}/50 intervals cover 7.5 dB, mean width {:.2f} dB, {:.1f} s", covered, width_sum / 50, dt)};
}

Outcome fitkit() {
  fit::FitProblem rosen;
  rosen.residuals = [](const fit::Vector& q) { return fit::Vector{{1.0 - q[0], 10.0 * (q[1] - q[0] * q[0])}}; };
  rosen.initial = fit::Vector{{-1.2, 1.0}};
  const auto r = fit::lm_fit(rosen);
  const bool rosen_ok = std::abs(r.params[0] - 1) < 1e-6 && std::abs(r.params[1] - 1) < 1e-6;

  testing::Gen g(5);
  const fit::Vector x = fit::Vector::LinSpaced(40, 0, 10);
  fit::Vector y(40);
  for (int i = 0; i < 40; ++i) y[i] = 0.7 * x[i] + 3.0 + g.normal(0, 0.5);
  fit::FitProblem lin;
  lin.residuals = [x, y](const fit::Vector& q) -> fit::Vector { return (q[0] * x.array() + q[1] - y.array()).matrix(); };
  lin.initial = fit::Vector{{0.0, 0.0}};
  lin.weights = fit::Vector::Constant(40, 4.0);
  auto lf = fit::lm_fit(lin);
  fit::attach_profile_intervals(lin, lf);
  double worst_ci = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    const double half = 1.959964 * lf.sigma(i);
    worst_ci = std::max({worst_ci, std::abs((lf.intervals[i].upper - lf.params[i]) / half - 1),
                         std::abs((lf.params[i] - lf.intervals[i].lower) / half - 1)});
  }

  const fit::Vector xs = fit::Vector::LinSpaced(10, -1, 1);
  const fit::Vector q{{1.3, 0.4, 2.0}};
  auto fn = [xs](const fit::Vector& p) -> fit::Vector {
    return (p[0] * (p[1] * xs.array()).sin() + p[2] * xs.array().square()).matrix();
  };
  fit::Matrix exact(10, 3);
  exact.col(0) = (q[1] * xs.array()).sin().matrix();
  exact.col(1) = (q[0] * xs.array() * (q[1] * xs.array()).cos()).matrix();
  exact.col(2) = xs.array().square().matrix();
  const fit::Vector inf = fit::Vector::Constant(3, INFINITY);
  const double jac_err = (fit::numeric_jacobian(fn, q, -inf, inf) - exact).norm() / exact.norm();

  return {rosen_ok && worst_ci < 0.01 && jac_err < 1e-6,
          fmt::format("Rosenbrock ({:.9f}, {:.9f}), CI deviation {:.2e}, Jacobian error {:.2e}", r.params[0],
                      r.params[1], worst_ci, jac_err)};
}

Outcome phase_matching() {
  const auto model = default_sellmeier();
  const auto stage = StageSpec::from_input_and_pump(Wavelength::from_nm(737.1), Wavelength::from_nm(2812.6));
  double worst_t = 0;
  for (double t_star : {35.0, 47.3, 90.0, 160.0}) {
    const QpmGrating g{qpm_period_for(stage, t_star, model), 4.0, 25.0};
    worst_t = std::max(worst_t, std::abs(phasematch_temperature(stage, g, model, {20, 200}) - t_star));
  }

  const double period = qpm_period_for(stage, 30.0, model);
  const double w4 = acceptance_bandwidth(stage, {period, 4.0, 30.0}, model).ghz();
  const double w8 = acceptance_bandwidth(stage, {period, 8.0, 30.0}, model).ghz();
  auto phase = [&](double detuning_ghz) {
    auto s = stage;
    s.input = Wavelength::from_thz(s.input.thz() + detuning_ghz * 1e-3);
    s.output = dfg_output(s.input, s.pump);
    return std::abs(bulk_mismatch(s, 30.0, model) - 2 * std::numbers::pi / (period * 1e-6)) * 0.04 / 2;
  };
  // Locate the upper crossing inside the reported width: both edges sit at the half-max phase.
  auto sinc2 = [&](double d) {
    const double x = phase(d);
    const double s = x == 0 ? 1.0 : std::sin(x) / x;
    return s * s;
  };
  const auto c = half_max_crossings(sinc2, 0.1, 1e4);
  const double x_half = 0.5 * (phase(c.upper) + phase(c.lower));
  const bool width_consistent = std::abs(c.width() / w4 - 1) < 1e-9;
  const bool soft = w4 > 77.0 / 2 && w4 < 77.0 * 2;
  return {worst_t <= 0.01 && std::abs(x_half - 1.39156) < 1e-4 && width_consistent && std::abs(w4 / w8 / 2 - 1) < 0.01,
          fmt::format("round trip {:.4f} C, half-max phase {:.6f}, L scaling {:.4f}, {:.1f} GHz vs measured 77 GHz ({})",
                      worst_t, x_half, w4 / w8, w4, soft ? "within factor 2" : "outside factor 2, informational")};
}

Outcome spectrum_sbr() {
  SpectrumModel m;
  m.background = {40.0, 735.0, 4.0, 2};
  m.peaks = {{1.0, 736.2, 0.15}, {1.0, 737.0, 0.2}};
  const double lo = 729.5, hi = 740.5;
  const double bg = 40.0 * 4.0 * std::sqrt(std::numbers::pi) / 2 * (std::erf((hi - 735) / 4) - std::erf((lo - 735) / 4));
  double unit = 0;
  for (const auto& p : m.peaks) {
    const double h = p.fwhm_nm / 2;
    unit += h * (std::atan((hi - p.center_nm) / h) - std::atan((lo - p.center_nm) / h));
  }
  for (auto& p : m.peaks) p.amplitude = 7.08 * bg / unit;
  const double db = sbr_from_spectrum(m, lo, hi);
  SpectrumModel scaled = m;
  scaled.background.amplitude *= 1e4;
  for (auto& p : scaled.peaks) p.amplitude *= 1e4;
  const double shift = std::abs(sbr_from_spectrum(scaled, lo, hi) - db);
  return {near(db, 8.50, 0.01) && shift < 1e-9, fmt::format("{:.4f} dB, scale shift {:.1e} dB", db, shift)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"wavelength bookkeeping", wavelengths},
      {"external efficiency product", ledger_total},
      {"cascade internal efficiency", cascade},
      {"noise normalization", noise},
      {"rate chain", rate_chain},
      {"depletion fit round trip", depletion_roundtrip},
      {"g2 floor arithmetic", g2_floor},
      {"simulator/model agreement", simulator_agreement},
      {"fitter calibration", fitter_calibration},
      {"fitkit correctness", fitkit},
      {"phase matching", phase_matching},
      {"SBR from spectrum", spectrum_sbr},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    failures += !o.pass;
    fmt::print("{} {:2d} {}: {}\n", o.pass ? "PASS" : "FAIL", index, name, o.detail);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
