#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qfc/fitkit.hpp"

namespace qfc {

/// Emitter plus uncorrelated-background model for g2(tau). Times in ps.
struct G2Params {
  /// Signal fraction S / (S + B).
  double rho = 1.0;
  /// Antibunching time constant.
  double tau1_ps = 1700.0;
  /// Bunching amplitude; 0 selects the two-level form.
  double bunching_amplitude = 0.0;
  /// Bunching time constant, used only when bunching_amplitude > 0.
  double tau2_ps = 0.0;
  /// Combined (two-detector) Gaussian IRF FWHM.
  double jitter_fwhm_ps = 0.0;

  void validate() const;
};

/// rho = S / (S + B) with S/B = 10^(dB/10).
double sbr_db_to_rho(double sbr_db);
double rho_to_sbr_db(double rho);

/// Per-detector jitter FWHM to the combined pair IRF FWHM (sqrt 2 larger).
double combined_jitter_fwhm(double single_detector_fwhm_ps);

/// Measured g2(tau) = 1 + rho^2 (g2_emitter - 1) with
/// g2_emitter = 1 - (1 + a) e^{-|t|/tau1} + a e^{-|t|/tau2}, convolved with
/// a Gaussian IRF in closed form (exponentially modified Gaussian).
double g2_model(double tau_ps, const G2Params& p);

/// Mean of g2_model over [lo, hi], Gauss-Legendre with a split at tau = 0.
double g2_bin_average(double lo_ps, double hi_ps, const G2Params& p);

double g2_zero(const G2Params& p);

/// e^{-|t|/tau} convolved with a unit-area Gaussian of standard deviation
/// sigma, evaluated at t. Exposed for testing.
double convolved_two_sided_exponential(double t, double tau, double sigma);

/// exp(x^2) erfc(x), stable for large x.
double erfcx(double x);

struct HistogramMetadata {
  double rate1_cps = 0.0;
  double rate2_cps = 0.0;
  double duration_s = 0.0;
  std::uint64_t seed = 0;
  /// Free-form generator description lines (key, value).
  std::vector<std::pair<std::string, std::string>> extra;
};

/// Start-stop-free coincidence histogram with uniform bins.
class CoincidenceHistogram {
 public:
  CoincidenceHistogram(std::vector<double> bin_edges_ps, std::vector<std::uint64_t> counts,
                       std::optional<HistogramMetadata> metadata = std::nullopt);

  const std::vector<double>& edges() const noexcept { return edges_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  const std::optional<HistogramMetadata>& metadata() const noexcept { return metadata_; }
  std::size_t bins() const noexcept { return counts_.size(); }
  double bin_width() const noexcept { return edges_[1] - edges_[0]; }
  double center(std::size_t i) const noexcept { return 0.5 * (edges_[i] + edges_[i + 1]); }
  std::uint64_t total() const noexcept;

  /// Expected uncorrelated counts per bin, r1 r2 bin duration; needs metadata.
  double uncorrelated_level() const;

  /// CSV `tau_ps, counts` with tau at bin centers.
  std::string to_csv() const;
  static CoincidenceHistogram parse_csv(std::string_view text, std::string origin = "<string>");
  /// Reads `path` and, when present, its `.meta` sidecar.
  static CoincidenceHistogram load(const std::filesystem::path& path);
  /// Writes `path` and, when metadata is present, `path.meta`.
  void save(const std::filesystem::path& path) const;
  std::string metadata_text() const;

 private:
  std::vector<double> edges_;
  std::vector<std::uint64_t> counts_;
  std::optional<HistogramMetadata> metadata_;
};

std::filesystem::path sidecar_path(const std::filesystem::path& histogram_path);

struct G2FitOptions {
  bool bunching = false;
  /// Overrides the data-driven antibunching guess.
  std::optional<double> tau1_guess_ps;
  double sbr_db_lower = -20.0;
  double sbr_db_upper = 30.0;
  double level = 0.95;
  bool profile_intervals = true;
  /// Keep the iterate history in fit.trace.
  bool record_trace = false;
};

struct G2Fit {
  fit::FitResult fit;
  /// Fitted model with the fixed jitter.
  G2Params params;
  double sbr_db;
  /// Jitter-convolved g2(0) and its delta-method interval.
  double g2_zero;
  fit::Interval g2_zero_interval;
  /// g2(0) of the same fit with the jitter removed.
  double g2_zero_intrinsic;
};

/// Bin-integrated Poisson-weighted (sigma = sqrt(max(n, 1))) fit of
/// N * g2 to raw coincidence counts with the IRF fixed. Parameter order:
/// sbr_db, tau1_ps, normalization [, bunching_amplitude, tau2_ps].
G2Fit fit_g2(const CoincidenceHistogram& histogram, double fixed_jitter_fwhm_ps, const G2FitOptions& options = {});

/// Model counts per bin for a fitted parameter vector, for overlays.
std::vector<double> g2_fit_curve(const CoincidenceHistogram& histogram, const G2Fit& fit);

struct HbtSimulation {
  /// Total detected rate at both detectors; signal = rho * total.
  double total_rate_cps = 1e6;
  double duration_s = 1.0;
  double bin_width_ps = 100.0;
  /// Histogram spans [-window, +window).
  double window_ps = 20000.0;
  std::uint64_t seed = 1;
  /// Upper limit on generated photons.
  double max_events = 2e8;
};

/// Monte Carlo HBT experiment: two-level emitter photons (renewal process
/// with excitation and decay rates summing to 1/tau1), Poisson background,
/// 50/50 splitter, independent Gaussian jitter of FWHM jitter/sqrt(2) per
/// detector (truncated at 10 sigma), all-pairs coincidences. Deterministic
/// for a fixed seed. Bunching is not simulated.
CoincidenceHistogram simulate_hbt(const G2Params& params, const HbtSimulation& sim);

}  // namespace qfc
