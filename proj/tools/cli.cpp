#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qfc/budget.hpp"
#include "qfc/conversion.hpp"
#include "qfc/correlation.hpp"
#include "qfc/csv.hpp"
#include "qfc/data.hpp"
#include "qfc/errors.hpp"
#include "qfc/phasematch.hpp"
#include "qfc/specfit.hpp"
#include "qfc/spectral.hpp"
#include "report.hpp"

namespace qfc::cli {

namespace {

struct OutputOptions {
  std::string format = "human";
  std::string out_path;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError(fmt::format("cannot write '{}'", path));
  f << content;
  if (!f) throw ParseError(fmt::format("error writing '{}'", path));
}

void emit(const Report& report, const OutputOptions& o, std::ostream& out) {
  out << (o.format == "machine" ? report.machine() : report.human());
  if (!o.out_path.empty()) write_file(o.out_path, report.machine());
}

SellmeierModel load_model(const std::string& path) {
  return path.empty() ? default_sellmeier() : SellmeierModel::load(path);
}

/// "1.5", "0.35/0.6".
double parse_ratio(const std::string& text, const std::string& context) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) return io::parse_number(text, context);
  const double num = io::parse_number(text.substr(0, slash), context);
  const double den = io::parse_number(text.substr(slash + 1), context);
  if (den == 0.0) throw DomainError(fmt::format("{}: division by zero in '{}'", context, text));
  return num / den;
}

/// "[label=]value[:sigma]".
LedgerEntry parse_entry(const std::string& text, const std::string& default_label) {
  LedgerEntry e{default_label, 0.0, 0.0};
  std::string rest = text;
  if (const auto eq = rest.find('='); eq != std::string::npos) {
    e.label = rest.substr(0, eq);
    rest = rest.substr(eq + 1);
  }
  if (const auto colon = rest.find(':'); colon != std::string::npos) {
    e.sigma = io::parse_number(rest.substr(colon + 1), "--correction sigma");
    rest = rest.substr(0, colon);
  }
  e.value = parse_ratio(rest, "--correction");
  return e;
}

void add_interval(Report& r, const std::string& key, const fit::FitResult& f, std::size_t i) {
  r.value(key, f.params[static_cast<Eigen::Index>(i)]);
  r.value(key + "_sigma", f.sigma(i));
  if (i < f.intervals.size()) {
    const auto& ci = f.intervals[i];
    r.value(key + "_ci_lower", ci.lower);
    r.value(key + "_ci_upper", ci.upper);
    if (ci.lower_at_bound || ci.lower_open) r.text(key + "_ci_lower_kind", ci.lower_open ? "open" : "bound");
    if (ci.upper_at_bound || ci.upper_open) r.text(key + "_ci_upper_kind", ci.upper_open ? "open" : "bound");
  }
}

void add_fit_summary(Report& r, const fit::FitResult& f) {
  r.text("status", fit::to_string(f.status));
  r.value("iterations", f.iterations);
  r.value("cost", f.cost);
  r.value("dof", static_cast<double>(f.residual_count) - static_cast<double>(f.free_parameters));
  r.value("reduced_cost", f.residual_variance());
}

void write_trace(const std::string& path, const fit::FitResult& f) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(fmt::format("cannot write '{}'", path));
  fit::write_trace_csv(out, f);
}

// --- design ------------------------------------------------------------------

struct DesignOptions {
  double input_nm = 737.1;
  double pump_nm = 2812.6;
  std::optional<double> pump2_nm;
  int stages = 2;
  double length_cm = 4.0;
  double temperature_c = 25.0;
  std::string sellmeier;
};

Report design(const DesignOptions& o) {
  if (o.stages < 1) throw DomainError("--stages must be at least 1");
  const auto model = load_model(o.sellmeier);
  Report r("design");
  r.text("sellmeier", model.name());
  r.value("length_cm", o.length_cm);
  r.value("temperature_c", o.temperature_c);
  auto& t = r.table("stages", {"stage", "input_nm", "pump_nm", "output_nm", "period_um", "acceptance_ghz",
                               "acceptance_nm"},
                    {"{:.0f}", "{:.1f}", "{:.1f}", "{:.1f}", "{:.3f}", "{:.1f}", "{:.4f}"});
  Wavelength input = Wavelength::from_nm(o.input_nm);
  std::string chain = format_nm(input);
  for (int s = 1; s <= o.stages; ++s) {
    const auto pump = Wavelength::from_nm(s >= 2 && o.pump2_nm ? *o.pump2_nm : o.pump_nm);
    const auto stage = StageSpec::from_input_and_pump(input, pump, o.length_cm);
    const double period = qpm_period_for(stage, o.temperature_c, model);
    const QpmGrating grating{period, o.length_cm, o.temperature_c};
    const auto bw = acceptance_bandwidth(stage, grating, model);
    t.add({static_cast<double>(s), input.nm(), pump.nm(), stage.output.nm(), period, bw.ghz(),
           width_convert(bw, WidthUnit::kNanometers).value()});
    input = stage.output;
    chain += fmt::format(" -> {:.1f} nm", input.nm());
  }
  r.value("output_nm", input.nm(), "{:.2f}");
  r.value("gap_cm1", spectral_gap_wavenumbers(Wavelength::from_nm(o.input_nm), input), "{:.1f}");
  r.note(fmt::format("{:.1f} nm{}", o.input_nm, chain.substr(chain.find(" nm") + 3)));
  return r;
}

// --- fit-depletion -------------------------------------------------------------

struct DepletionOptions {
  std::string data;
  double length_cm = 4.0;
  double level = 0.95;
  std::string curve;
  std::string trace;
};

Report fit_depletion_cmd(const DepletionOptions& o) {
  const auto curve = DepletionCurve::load_csv(o.data);
  DepletionFitOptions fo;
  fo.level = o.level;
  fo.record_trace = !o.trace.empty();
  const auto f = fit_depletion(curve, o.length_cm, fo);
  Report r("fit-depletion");
  r.value("points", static_cast<double>(curve.size()));
  r.text("weights", curve.has_sigma() ? "sigma" : "unit (residual-variance scaled)");
  r.value("level", o.level);
  add_interval(r, "eta_max", f, 0);
  add_interval(r, "kappa_norm", f, 1);
  add_fit_summary(r, f);
  StageSpec stage = StageSpec::from_input_and_pump(Wavelength::from_nm(737.1), Wavelength::from_nm(2812.6),
                                                   o.length_cm);
  stage.eta_max = f.params[0];
  stage.kappa_norm = f.params[1];
  if (stage.kappa_norm > 0.0) r.value("peak_pump_power_w", peak_pump_power(stage));
  if (!o.curve.empty()) {
    const double p_max = 1.2 * curve.points().back().pump_power_w;
    std::string csv = "pump_power_w,efficiency\n";
    constexpr int kSamples = 201;
    for (int i = 0; i < kSamples; ++i) {
      const double p = p_max * i / (kSamples - 1);
      csv += fmt::format("{:.17g},{:.17g}\n", p, internal_efficiency(p, stage));
    }
    write_file(o.curve, csv);
  }
  write_trace(o.trace, f);
  return r;
}

// --- budget ----------------------------------------------------------------

struct BudgetOptions {
  std::string ledger;
  std::string mode = "rounded";
};

Report budget(const BudgetOptions& o) {
  const auto path = o.ledger.empty() ? bundled_data_path("external_efficiency.csv")
                                     : std::filesystem::path(o.ledger);
  const auto ledger = EfficiencyLedger::load_csv(path);
  const auto mode = o.mode == "stored" ? ProductMode::kStored : ProductMode::kRoundedEntries;
  const auto product = ledger_product(ledger, mode);
  Report r("budget");
  r.text("mode", o.mode);
  r.value("entries", static_cast<double>(ledger.entries().size()));
  r.value("product", product.value, "{:.4f}");
  r.value("sigma", product.sigma, "{:.4f}");
  r.value("product_percent", 100.0 * product.value, "{:.2f}");
  r.value("sigma_percent", 100.0 * product.sigma, "{:.2f}");
  r.value("relative_sigma", product.value > 0.0 ? product.sigma / product.value : 0.0, "{:.4f}");
  auto& t = r.table("factors", {"label", "value", "sigma", "value_percent", "sigma_percent"},
                    {"", "{:.3f}", "{:.3f}", "{:.1f}", "{:.1f}"});
  for (const auto& e : ledger.entries()) t.add({e.label, e.value, e.sigma, 100.0 * e.value, 100.0 * e.sigma});
  r.note(fmt::format("product: {:.3f} ± {:.3f} ({:.1f} %)", product.value, product.sigma, 100.0 * product.value));
  return r;
}

// --- noise -----------------------------------------------------------------

struct NoiseOptions {
  double measured = 0.0;
  double measured_sigma = 0.0;
  double dark = 0.0;
  double dark_sigma = 0.0;
  std::vector<std::string> corrections;
  std::string corrections_ledger;
  std::optional<double> bandwidth_ghz;
  std::optional<double> bandwidth_nm;
  std::optional<double> carrier_nm;
  std::optional<double> reported;
  double reported_sigma = 0.0;
};

Report noise(const NoiseOptions& o) {
  NoiseMeasurement m{{o.measured, o.measured_sigma}, {o.dark, o.dark_sigma}, {}, SpectralWidth::gigahertz(0.0)};
  if (!o.corrections_ledger.empty()) m.corrections = EfficiencyLedger::load_csv(o.corrections_ledger);
  for (std::size_t i = 0; i < o.corrections.size(); ++i) {
    m.corrections.add(parse_entry(o.corrections[i], fmt::format("correction{}", i + 1)));
  }
  const auto c = corrected_noise_rate(m);
  Report r("noise");
  r.value("measured_cps", o.measured);
  r.value("dark_cps", o.dark);
  const auto prod = ledger_product(m.corrections);
  r.value("correction_product", prod.value, "{:.4f}");
  r.value("rate_cps", c.rate, "{:.3f}");
  r.value("rate_sigma_cps", c.sigma, "{:.3f}");
  r.flag("consistent_with_zero", c.consistent_with_zero);

  std::optional<SpectralWidth> bw;
  if (o.bandwidth_ghz && o.bandwidth_nm) throw DomainError("give either --bandwidth-ghz or --bandwidth-nm, not both");
  if (o.bandwidth_ghz) bw = SpectralWidth::gigahertz(*o.bandwidth_ghz);
  if (o.bandwidth_nm) {
    std::optional<Wavelength> carrier;
    if (o.carrier_nm) carrier = Wavelength::from_nm(*o.carrier_nm);
    bw = SpectralWidth::nanometers(*o.bandwidth_nm, carrier);
  }
  if (bw) {
    r.value("bandwidth_ghz", bw->ghz(), "{:.3f}");
    r.value("rate_per_ghz", rate_per_bandwidth(c.rate, *bw), "{:.3f}");
  }
  if (o.reported) {
    r.value("reported_cps", *o.reported);
    if (bw) r.value("reported_per_ghz", rate_per_bandwidth(*o.reported, *bw), "{:.3f}");
    if (const auto note = compare_to_reported(c, {*o.reported, o.reported_sigma})) {
      r.value("tension_sigma", note->tension_sigma, "{:.2f}");
      r.value("implied_factor", note->implied_factor, "{:.4f}");
      r.note(note->text);
    }
  }
  if (c.consistent_with_zero) r.note("dark-subtracted rate is not positive; result is consistent with zero");
  return r;
}

// --- rate-chain --------------------------------------------------------------

struct RateChainOptions {
  double input_rate = 0.0;
  std::vector<std::string> factors;
};

Report rate_chain(const RateChainOptions& o) {
  RateChain chain{o.input_rate, {}};
  for (std::size_t i = 0; i < o.factors.size(); ++i) {
    std::string label = fmt::format("factor{}", i + 1);
    std::string expr = o.factors[i];
    if (const auto eq = expr.find('='); eq != std::string::npos) {
      label = expr.substr(0, eq);
      expr = expr.substr(eq + 1);
    }
    chain.factors.push_back({label, parse_ratio(expr, "--factor")});
  }
  const auto res = rate_chain_output(chain);
  Report r("rate-chain");
  r.value("input_cps", o.input_rate, "{:.1f}");
  r.value("output_cps", res.output, "{:.1f}");
  auto& t = r.table("steps", {"step", "label", "factor", "rate_cps"}, {"{:.0f}", "", "{:.4f}", "{:.1f}"});
  for (std::size_t i = 0; i < chain.factors.size(); ++i) {
    t.add({static_cast<double>(i + 1), chain.factors[i].label, chain.factors[i].factor, res.intermediate[i]});
  }
  return r;
}

// --- g2-sim / g2-fit -------------------------------------------------------

struct G2SimOptions {
  double sbr_db = 7.5;
  double tau1_ps = 1700.0;
  double jitter_ps = 0.0;
  HbtSimulation sim;
  std::optional<std::uint64_t> seed;
  std::string histogram;
};

Report g2_sim(G2SimOptions o) {
  if (!o.seed) throw DomainError("--seed is required for simulation");
  o.sim.seed = *o.seed;
  G2Params p;
  p.rho = sbr_db_to_rho(o.sbr_db);
  p.tau1_ps = o.tau1_ps;
  p.jitter_fwhm_ps = o.jitter_ps;
  const auto h = simulate_hbt(p, o.sim);
  h.save(o.histogram);
  Report r("g2-sim");
  r.text("histogram", o.histogram);
  r.value("seed", static_cast<double>(o.sim.seed));
  r.value("rho", p.rho);
  r.value("g2_zero_model", g2_zero(p), "{:.4f}");
  r.value("bins", static_cast<double>(h.bins()));
  r.value("coincidences", static_cast<double>(h.total()));
  r.value("uncorrelated_per_bin", h.uncorrelated_level(), "{:.3f}");
  return r;
}

struct G2FitCmdOptions {
  std::string histogram;
  double jitter_ps = 0.0;
  bool bunching = false;
  std::optional<double> tau1_guess_ps;
  double sbr_min = -20.0;
  double sbr_max = 30.0;
  double level = 0.95;
  std::string curve;
  std::string trace;
};

Report g2_fit_cmd(const G2FitCmdOptions& o) {
  const auto h = CoincidenceHistogram::load(o.histogram);
  G2FitOptions fo;
  fo.bunching = o.bunching;
  fo.tau1_guess_ps = o.tau1_guess_ps;
  fo.sbr_db_lower = o.sbr_min;
  fo.sbr_db_upper = o.sbr_max;
  fo.level = o.level;
  fo.record_trace = !o.trace.empty();
  const auto f = fit_g2(h, o.jitter_ps, fo);
  Report r("g2-fit");
  r.value("bins", static_cast<double>(h.bins()));
  r.value("coincidences", static_cast<double>(h.total()));
  r.value("jitter_fwhm_ps", o.jitter_ps);
  r.value("level", o.level);
  for (std::size_t i = 0; i < f.fit.names.size(); ++i) add_interval(r, f.fit.names[i], f.fit, i);
  r.value("rho", f.params.rho, "{:.4f}");
  r.value("g2_zero", f.g2_zero, "{:.4f}");
  r.value("g2_zero_ci_lower", f.g2_zero_interval.lower, "{:.4f}");
  r.value("g2_zero_ci_upper", f.g2_zero_interval.upper, "{:.4f}");
  r.value("g2_zero_intrinsic", f.g2_zero_intrinsic, "{:.4f}");
  add_fit_summary(r, f.fit);
  if (!o.curve.empty()) {
    const auto model = g2_fit_curve(h, f);
    std::string csv = "tau_ps,counts,model\n";
    for (std::size_t i = 0; i < h.bins(); ++i) {
      csv += fmt::format("{:.17g},{},{:.17g}\n", h.center(i), h.counts()[i], model[i]);
    }
    write_file(o.curve, csv);
  }
  write_trace(o.trace, f.fit);
  const auto& sbr_ci = f.fit.intervals.empty() ? fit::Interval{} : f.fit.intervals[0];
  r.note(fmt::format("SBR {:.2f} dB [{:.2f}, {:.2f}], g2(0) = {:.3f}", f.sbr_db, sbr_ci.lower, sbr_ci.upper,
                     f.g2_zero));
  return r;
}

// --- spectrum-fit ------------------------------------------------------------

struct SpectrumOptions {
  std::string data;
  int peaks = 0;
  int order = 4;
  double window_lo = 729.5;
  double window_hi = 740.5;
  double level = 0.95;
  std::string model_out;
  std::string curve;
  std::string trace;
};

Report spectrum_fit_cmd(const SpectrumOptions& o) {
  const auto data = load_spectrum_csv(o.data);
  SpectrumFitOptions fo;
  fo.order = o.order;
  fo.level = o.level;
  fo.record_trace = !o.trace.empty();
  const auto f = fit_spectrum(data, o.peaks, fo);
  Report r("spectrum-fit");
  r.value("points", static_cast<double>(data.size()));
  r.value("order", o.order);
  for (std::size_t i = 0; i < f.fit.names.size(); ++i) add_interval(r, f.fit.names[i], f.fit, i);
  add_fit_summary(r, f.fit);
  r.value("window_lo_nm", o.window_lo);
  r.value("window_hi_nm", o.window_hi);
  r.value("sbr_db", sbr_from_spectrum(f.model, o.window_lo, o.window_hi), "{:.2f}");
  if (!o.model_out.empty()) write_file(o.model_out, f.model.serialize());
  if (!o.curve.empty()) {
    std::string csv = "wavelength_nm,intensity,model,background\n";
    for (const auto& p : data) {
      csv += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", p.wavelength_nm, p.intensity,
                         spectrum_eval(f.model, p.wavelength_nm), f.model.background_at(p.wavelength_nm));
    }
    write_file(o.curve, csv);
  }
  write_trace(o.trace, f.fit);
  return r;
}

// --- qpm -------------------------------------------------------------------

struct QpmOptions {
  std::string sellmeier;
  double wavelength_nm = 1549.0;
  double input_nm = 737.1;
  double pump_nm = 2812.6;
  double temperature_c = 25.0;
  std::optional<double> period_um;
  double length_cm = 4.0;
  double t_min = 20.0;
  double t_max = 200.0;
  bool thermal_expansion = false;
};

StageSpec qpm_stage(const QpmOptions& o) {
  return StageSpec::from_input_and_pump(Wavelength::from_nm(o.input_nm), Wavelength::from_nm(o.pump_nm),
                                        o.length_cm);
}

Report qpm_index(const QpmOptions& o) {
  const auto model = load_model(o.sellmeier);
  Report r("qpm index");
  r.text("sellmeier", model.name());
  r.value("wavelength_nm", o.wavelength_nm);
  r.value("temperature_c", o.temperature_c);
  r.value("index", model.index(Wavelength::from_nm(o.wavelength_nm), o.temperature_c), "{:.6f}");
  return r;
}

Report qpm_period(const QpmOptions& o) {
  const auto model = load_model(o.sellmeier);
  const auto stage = qpm_stage(o);
  Report r("qpm period");
  r.text("sellmeier", model.name());
  r.value("input_nm", o.input_nm);
  r.value("pump_nm", o.pump_nm);
  r.value("output_nm", stage.output.nm(), "{:.3f}");
  r.value("temperature_c", o.temperature_c);
  r.value("bulk_mismatch_per_m", bulk_mismatch(stage, o.temperature_c, model));
  r.value("period_um", qpm_period_for(stage, o.temperature_c, model), "{:.4f}");
  return r;
}

Report qpm_temperature(const QpmOptions& o) {
  if (!o.period_um) throw DomainError("--period is required");
  const auto model = load_model(o.sellmeier);
  const auto stage = qpm_stage(o);
  const QpmGrating grating{*o.period_um, o.length_cm, o.t_min, o.thermal_expansion};
  const double t = phasematch_temperature(stage, grating, model, {o.t_min, o.t_max});
  Report r("qpm temperature");
  r.text("sellmeier", model.name());
  r.value("period_um", *o.period_um);
  r.value("output_nm", stage.output.nm(), "{:.3f}");
  r.value("temperature_c", t, "{:.2f}");
  return r;
}

Report qpm_bandwidth(const QpmOptions& o) {
  const auto model = load_model(o.sellmeier);
  const auto stage = qpm_stage(o);
  const double period = o.period_um ? *o.period_um : qpm_period_for(stage, o.temperature_c, model);
  const QpmGrating grating{period, o.length_cm, o.temperature_c, o.thermal_expansion};
  const auto bw = acceptance_bandwidth(stage, grating, model);
  Report r("qpm bandwidth");
  r.text("sellmeier", model.name());
  r.value("period_um", period, "{:.4f}");
  r.value("length_cm", o.length_cm);
  r.value("temperature_c", o.temperature_c);
  r.value("fwhm_ghz", bw.ghz(), "{:.2f}");
  r.value("fwhm_nm", width_convert(bw, WidthUnit::kNanometers).value(), "{:.4f}");
  return r;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cascaded quantum frequency converter design and analysis", "qfc"};
  app.require_subcommand(1);
  app.fallthrough();
  OutputOptions output;
  app.add_option("--format", output.format, "Output on stdout: human or machine")
      ->check(CLI::IsMember({"human", "machine"}))
      ->capture_default_str();
  app.add_option("--out", output.out_path, "Also write the machine-readable report to this file");

  std::function<Report()> action;

  DesignOptions design_o;
  auto* design_cmd = app.add_subcommand("design", "Wavelengths, poling periods and acceptance of a DFG cascade");
  design_cmd->add_option("--input", design_o.input_nm, "Input wavelength, nm")->capture_default_str();
  design_cmd->add_option("--pump", design_o.pump_nm, "Pump wavelength, nm")->capture_default_str();
  design_cmd->add_option("--pump2", design_o.pump2_nm, "Pump of stages 2+, nm (default: --pump)");
  design_cmd->add_option("--stages", design_o.stages, "Number of stages")->capture_default_str();
  design_cmd->add_option("--length", design_o.length_cm, "Crystal length, cm")->capture_default_str();
  design_cmd->add_option("--temperature", design_o.temperature_c, "Design temperature, degC")->capture_default_str();
  design_cmd->add_option("--sellmeier", design_o.sellmeier, "Sellmeier data file (default: bundled)");
  design_cmd->callback([&] { action = [&] { return design(design_o); }; });

  DepletionOptions dep_o;
  auto* dep_cmd = app.add_subcommand("fit-depletion", "Fit eta_max and kappa_norm to a signal depletion curve");
  dep_cmd->add_option("--data", dep_o.data, "CSV: pump_power_w, depletion[, sigma]")->required()->check(CLI::ExistingFile);
  dep_cmd->add_option("--length", dep_o.length_cm, "Crystal length, cm")->capture_default_str();
  dep_cmd->add_option("--level", dep_o.level, "Confidence level")->capture_default_str();
  dep_cmd->add_option("--curve", dep_o.curve, "Write fitted efficiency curve CSV");
  dep_cmd->add_option("--trace", dep_o.trace, "Write optimizer iterate trace CSV");
  dep_cmd->callback([&] { action = [&] { return fit_depletion_cmd(dep_o); }; });

  BudgetOptions budget_o;
  auto* budget_cmd = app.add_subcommand("budget", "Product of an efficiency ledger with propagated uncertainty");
  budget_cmd->add_option("--ledger", budget_o.ledger,
                         "CSV: label, value_percent, sigma_percent (default: bundled device ledger)");
  budget_cmd->add_option("--mode", budget_o.mode, "rounded (entries at 0.1 pp) or stored")
      ->check(CLI::IsMember({"rounded", "stored"}))
      ->capture_default_str();
  budget_cmd->callback([&] { action = [&] { return budget(budget_o); }; });

  NoiseOptions noise_o;
  auto* noise_cmd = app.add_subcommand("noise", "Dark-subtracted, efficiency-corrected noise rate");
  noise_cmd->add_option("--measured", noise_o.measured, "Measured count rate, cps")->required();
  noise_cmd->add_option("--measured-sigma", noise_o.measured_sigma, "Its uncertainty, cps");
  noise_cmd->add_option("--dark", noise_o.dark, "Dark count rate, cps")->required();
  noise_cmd->add_option("--dark-sigma", noise_o.dark_sigma, "Its uncertainty, cps");
  noise_cmd->add_option("--correction", noise_o.corrections, "Correction factor [label=]value[:sigma], repeatable");
  noise_cmd->add_option("--corrections-ledger", noise_o.corrections_ledger, "Correction factors as a ledger CSV");
  noise_cmd->add_option("--bandwidth-ghz", noise_o.bandwidth_ghz, "Filter bandwidth, GHz");
  noise_cmd->add_option("--bandwidth-nm", noise_o.bandwidth_nm, "Filter bandwidth, nm (needs --carrier-nm)");
  noise_cmd->add_option("--carrier-nm", noise_o.carrier_nm, "Carrier wavelength for nm bandwidths");
  noise_cmd->add_option("--reported", noise_o.reported, "Externally reported corrected rate to compare, cps");
  noise_cmd->add_option("--reported-sigma", noise_o.reported_sigma, "Its uncertainty, cps");
  noise_cmd->callback([&] { action = [&] { return noise(noise_o); }; });

  RateChainOptions chain_o;
  auto* chain_cmd = app.add_subcommand("rate-chain", "Propagate a count rate through multiplicative factors");
  chain_cmd->add_option("--input-rate", chain_o.input_rate, "Input rate, cps")->required();
  chain_cmd->add_option("--factor", chain_o.factors, "Factor [label=]value or a/b, repeatable, in order");
  chain_cmd->callback([&] { action = [&] { return rate_chain(chain_o); }; });

  G2SimOptions sim_o;
  auto* sim_cmd = app.add_subcommand("g2-sim", "Monte Carlo HBT coincidence histogram");
  sim_cmd->add_option("--sbr-db", sim_o.sbr_db, "Signal-to-background ratio, dB")->capture_default_str();
  sim_cmd->add_option("--tau1", sim_o.tau1_ps, "Antibunching time, ps")->capture_default_str();
  sim_cmd->add_option("--jitter", sim_o.jitter_ps, "Combined timing jitter FWHM, ps")->capture_default_str();
  sim_cmd->add_option("--rate", sim_o.sim.total_rate_cps, "Total detected rate, cps")->capture_default_str();
  sim_cmd->add_option("--duration", sim_o.sim.duration_s, "Integration time, s")->capture_default_str();
  sim_cmd->add_option("--bin-width", sim_o.sim.bin_width_ps, "Histogram bin width, ps")->capture_default_str();
  sim_cmd->add_option("--window", sim_o.sim.window_ps, "Histogram half-range, ps")->capture_default_str();
  sim_cmd->add_option("--max-events", sim_o.sim.max_events, "Cap on generated photons")->capture_default_str();
  sim_cmd->add_option("--seed", sim_o.seed, "Random seed")->required();
  sim_cmd->add_option("--histogram", sim_o.histogram, "Output histogram CSV (metadata goes to <path>.meta)")
      ->required();
  sim_cmd->callback([&] { action = [&] { return g2_sim(sim_o); }; });

  G2FitCmdOptions fit_o;
  auto* fit_cmd = app.add_subcommand("g2-fit", "Fit SBR and antibunching time to a coincidence histogram");
  fit_cmd->add_option("--histogram", fit_o.histogram, "Histogram CSV: tau_ps, counts")
      ->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--jitter", fit_o.jitter_ps, "Fixed combined jitter FWHM, ps")->capture_default_str();
  fit_cmd->add_flag("--bunching", fit_o.bunching, "Add a bunching term (amplitude, tau2)");
  fit_cmd->add_option("--tau1-guess", fit_o.tau1_guess_ps, "Starting antibunching time, ps");
  fit_cmd->add_option("--sbr-min", fit_o.sbr_min, "Lower SBR bound, dB")->capture_default_str();
  fit_cmd->add_option("--sbr-max", fit_o.sbr_max, "Upper SBR bound, dB")->capture_default_str();
  fit_cmd->add_option("--level", fit_o.level, "Confidence level")->capture_default_str();
  fit_cmd->add_option("--curve", fit_o.curve, "Write data/model overlay CSV");
  fit_cmd->add_option("--trace", fit_o.trace, "Write optimizer iterate trace CSV");
  fit_cmd->callback([&] { action = [&] { return g2_fit_cmd(fit_o); }; });

  SpectrumOptions spec_o;
  auto* spec_cmd = app.add_subcommand("spectrum-fit", "Super-Gaussian plus Lorentzian fit and in-window SBR");
  spec_cmd->add_option("--data", spec_o.data, "CSV: wavelength_nm, intensity[, sigma]")
      ->required()
      ->check(CLI::ExistingFile);
  spec_cmd->add_option("--peaks", spec_o.peaks, "Number of Lorentzian peaks")->required();
  spec_cmd->add_option("--order", spec_o.order, "Super-Gaussian order (even)")->capture_default_str();
  spec_cmd->add_option("--window-lo", spec_o.window_lo, "SBR window start, nm")->capture_default_str();
  spec_cmd->add_option("--window-hi", spec_o.window_hi, "SBR window end, nm")->capture_default_str();
  spec_cmd->add_option("--level", spec_o.level, "Confidence level")->capture_default_str();
  spec_cmd->add_option("--model", spec_o.model_out, "Write the fitted model (key-value)");
  spec_cmd->add_option("--curve", spec_o.curve, "Write data/model overlay CSV");
  spec_cmd->add_option("--trace", spec_o.trace, "Write optimizer iterate trace CSV");
  spec_cmd->callback([&] { action = [&] { return spectrum_fit_cmd(spec_o); }; });

  QpmOptions qpm_o;
  auto* qpm_cmd = app.add_subcommand("qpm", "Refractive index and quasi-phase-matching calculations");
  qpm_cmd->require_subcommand(1);
  auto add_common = [&](CLI::App* c) {
    c->add_option("--sellmeier", qpm_o.sellmeier, "Sellmeier data file (default: bundled or $QFC_SELLMEIER_PATH)");
  };
  auto add_stage = [&](CLI::App* c) {
    c->add_option("--input", qpm_o.input_nm, "Input wavelength, nm")->capture_default_str();
    c->add_option("--pump", qpm_o.pump_nm, "Pump wavelength, nm")->capture_default_str();
  };
  auto* idx = qpm_cmd->add_subcommand("index", "Extraordinary refractive index");
  add_common(idx);
  idx->add_option("--wavelength", qpm_o.wavelength_nm, "Wavelength, nm")->capture_default_str();
  idx->add_option("--temperature", qpm_o.temperature_c, "Temperature, degC")->capture_default_str();
  idx->callback([&] { action = [&] { return qpm_index(qpm_o); }; });
  auto* per = qpm_cmd->add_subcommand("period", "First-order poling period at a temperature");
  add_common(per);
  add_stage(per);
  per->add_option("--temperature", qpm_o.temperature_c, "Temperature, degC")->capture_default_str();
  per->callback([&] { action = [&] { return qpm_period(qpm_o); }; });
  auto* tmp = qpm_cmd->add_subcommand("temperature", "Phase-matching temperature of a grating");
  add_common(tmp);
  add_stage(tmp);
  tmp->add_option("--period", qpm_o.period_um, "Poling period, um")->required();
  tmp->add_option("--length", qpm_o.length_cm, "Crystal length, cm")->capture_default_str();
  tmp->add_option("--t-min", qpm_o.t_min, "Search bracket start, degC")->capture_default_str();
  tmp->add_option("--t-max", qpm_o.t_max, "Search bracket end, degC")->capture_default_str();
  tmp->add_flag("--thermal-expansion", qpm_o.thermal_expansion, "Scale the period with thermal expansion");
  tmp->callback([&] { action = [&] { return qpm_temperature(qpm_o); }; });
  auto* bwc = qpm_cmd->add_subcommand("bandwidth", "Acceptance bandwidth (FWHM in input detuning)");
  add_common(bwc);
  add_stage(bwc);
  bwc->add_option("--temperature", qpm_o.temperature_c, "Temperature, degC")->capture_default_str();
  bwc->add_option("--period", qpm_o.period_um, "Poling period, um (default: phase-matched at --temperature)");
  bwc->add_option("--length", qpm_o.length_cm, "Crystal length, cm")->capture_default_str();
  bwc->add_flag("--thermal-expansion", qpm_o.thermal_expansion, "Scale the period with thermal expansion");
  bwc->callback([&] { action = [&] { return qpm_bandwidth(qpm_o); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    // Help on a subcommand reaches here as CallForHelp from the subcommand.
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "usage error: " << e.what() << '\n';
    return 2;
  }
  if (!action) {
    err << "usage error: no command\n";
    return 2;
  }
  try {
    emit(action(), output, out);
  } catch (const qfc::Error& e) {
    err << "error (" << e.category() << "): " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error (internal): " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace qfc::cli
