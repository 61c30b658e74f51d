#include "qfc/correlation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "qfc/csv.hpp"
#include "qfc/errors.hpp"
#include "qfc/keyvalue.hpp"

namespace qfc {

namespace {

constexpr double kFwhmPerSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

// 8-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 4> kGlNodes = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                            0.9602898564975363};
constexpr std::array<double, 4> kGlWeights = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                              0.1012285362903763};

template <class F>
double gauss_legendre(F&& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
    sum += kGlWeights[i] * (f(mid - half * kGlNodes[i]) + f(mid + half * kGlNodes[i]));
  }
  return sum * half;
}

// One-sided EMG piece: exp(s^2/(2 tau^2) - t/tau) erfc((s^2/tau - t)/(s sqrt 2)).
double emg_side(double t, double tau, double sigma) {
  const double u = (sigma / tau - t / sigma) / std::numbers::sqrt2;
  if (u >= 0.0) return std::exp(-t * t / (2.0 * sigma * sigma)) * erfcx(u);
  return std::exp(sigma * sigma / (2.0 * tau * tau) - t / tau) * std::erfc(u);
}

double smallest_time_scale(const G2Params& p) {
  double scale = p.tau1_ps;
  if (p.bunching_amplitude > 0.0) scale = std::min(scale, p.tau2_ps);
  if (p.jitter_fwhm_ps > 0.0) scale = std::min(scale, p.jitter_fwhm_ps / kFwhmPerSigma);
  return scale;
}

}  // namespace

void G2Params::validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError(fmt::format("rho must lie in [0, 1], got {}", rho));
  if (!(tau1_ps > 0.0) || !std::isfinite(tau1_ps)) throw DomainError(fmt::format("tau1 must be positive, got {}", tau1_ps));
  if (!(jitter_fwhm_ps >= 0.0) || !std::isfinite(jitter_fwhm_ps)) {
    throw DomainError(fmt::format("jitter FWHM must be non-negative, got {}", jitter_fwhm_ps));
  }
  if (!(bunching_amplitude >= 0.0)) {
    throw DomainError(fmt::format("bunching amplitude must be non-negative, got {}", bunching_amplitude));
  }
  if (bunching_amplitude > 0.0 && !(tau2_ps > 0.0)) {
    throw DomainError("tau2 must be positive when the bunching amplitude is non-zero");
  }
}

double sbr_db_to_rho(double sbr_db) {
  if (std::isnan(sbr_db)) throw DomainError("SBR is NaN");
  return 1.0 / (1.0 + std::pow(10.0, -sbr_db / 10.0));
}

double rho_to_sbr_db(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError(fmt::format("rho must lie in (0, 1) for a finite SBR, got {}", rho));
  return 10.0 * std::log10(rho / (1.0 - rho));
}

double combined_jitter_fwhm(double single_detector_fwhm_ps) { return std::numbers::sqrt2 * single_detector_fwhm_ps; }

double erfcx(double x) {
  if (x < 25.0) return std::exp(x * x) * std::erfc(x);
  // Asymptotic series; relative error below 1e-10 for x >= 25.
  const double inv2 = 1.0 / (x * x);
  const double series = 1.0 - 0.5 * inv2 * (1.0 - 1.5 * inv2 * (1.0 - 2.5 * inv2 * (1.0 - 3.5 * inv2)));
  return series / (x * std::sqrt(std::numbers::pi));
}

double convolved_two_sided_exponential(double t, double tau, double sigma) {
  if (sigma <= 0.0) return std::exp(-std::abs(t) / tau);
  return 0.5 * (emg_side(t, tau, sigma) + emg_side(-t, tau, sigma));
}

double g2_model(double tau_ps, const G2Params& p) {
  const double sigma = p.jitter_fwhm_ps / kFwhmPerSigma;
  const double rho2 = p.rho * p.rho;
  double value = 1.0 - rho2 * (1.0 + p.bunching_amplitude) * convolved_two_sided_exponential(tau_ps, p.tau1_ps, sigma);
  if (p.bunching_amplitude > 0.0) {
    value += rho2 * p.bunching_amplitude * convolved_two_sided_exponential(tau_ps, p.tau2_ps, sigma);
  }
  return value;
}

double g2_bin_average(double lo_ps, double hi_ps, const G2Params& p) {
  if (!(hi_ps > lo_ps)) throw DomainError("bin must have positive width");
  const double scale = smallest_time_scale(p);
  auto integrate = [&](double a, double b) {
    const int pieces = std::clamp(static_cast<int>(std::ceil((b - a) / (2.0 * scale))), 1, 256);
    const double h = (b - a) / pieces;
    double sum = 0.0;
    for (int k = 0; k < pieces; ++k) {
      sum += gauss_legendre([&](double t) { return g2_model(t, p); }, a + k * h, a + (k + 1) * h);
    }
    return sum;
  };
  const double total = (lo_ps < 0.0 && hi_ps > 0.0) ? integrate(lo_ps, 0.0) + integrate(0.0, hi_ps)
                                                     : integrate(lo_ps, hi_ps);
  return total / (hi_ps - lo_ps);
}

double g2_zero(const G2Params& p) { return g2_model(0.0, p); }

// --- histogram -------------------------------------------------------------

CoincidenceHistogram::CoincidenceHistogram(std::vector<double> bin_edges_ps, std::vector<std::uint64_t> counts,
                                           std::optional<HistogramMetadata> metadata)
    : edges_(std::move(bin_edges_ps)), counts_(std::move(counts)), metadata_(std::move(metadata)) {
  if (edges_.size() < 2) throw DomainError("histogram needs at least one bin");
  if (counts_.size() + 1 != edges_.size()) {
    throw DomainError(fmt::format("histogram has {} edges but {} counts", edges_.size(), counts_.size()));
  }
  const double width = edges_[1] - edges_[0];
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    const double w = edges_[i] - edges_[i - 1];
    if (!(w > 0.0)) throw DomainError("histogram edges must be strictly increasing");
    if (std::abs(w - width) > 1e-6 * width) throw DomainError("histogram bins must be uniform");
  }
}

std::uint64_t CoincidenceHistogram::total() const noexcept {
  std::uint64_t sum = 0;
  for (auto c : counts_) sum += c;
  return sum;
}

double CoincidenceHistogram::uncorrelated_level() const {
  if (!metadata_) throw DomainError("histogram has no singles-rate metadata");
  return metadata_->rate1_cps * metadata_->rate2_cps * bin_width() * 1e-12 * metadata_->duration_s;
}

std::string CoincidenceHistogram::to_csv() const {
  std::string out = "tau_ps,counts\n";
  for (std::size_t i = 0; i < counts_.size(); ++i) out += fmt::format("{},{}\n", center(i), counts_[i]);
  return out;
}

std::string CoincidenceHistogram::metadata_text() const {
  if (!metadata_) return {};
  io::KeyValueDoc doc;
  doc.set("format", "qfc-histogram-meta/1");
  doc.set("rate1_cps", fmt::format("{}", metadata_->rate1_cps));
  doc.set("rate2_cps", fmt::format("{}", metadata_->rate2_cps));
  doc.set("duration_s", fmt::format("{}", metadata_->duration_s));
  doc.set("seed", fmt::format("{}", metadata_->seed));
  doc.set("bin_width_ps", fmt::format("{}", bin_width()));
  for (const auto& [k, v] : metadata_->extra) doc.set(k, v);
  return doc.to_string();
}

CoincidenceHistogram CoincidenceHistogram::parse_csv(std::string_view text, std::string origin) {
  const auto table = io::parse_csv(text, std::move(origin));
  const int tau = table.require_column("tau_ps");
  const int counts = table.require_column("counts");
  if (table.rows.size() < 2) throw ParseError(fmt::format("{}: histogram needs at least two bins", table.origin));
  std::vector<double> centers;
  std::vector<std::uint64_t> values;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    centers.push_back(table.number(r, tau));
    const double c = table.number(r, counts);
    if (!(c >= 0.0) || c != std::floor(c)) {
      throw ParseError(fmt::format("{}:{}: counts must be a non-negative integer", table.origin, table.line_numbers[r]));
    }
    values.push_back(static_cast<std::uint64_t>(c));
  }
  const double width = centers[1] - centers[0];
  std::vector<double> edges;
  for (std::size_t i = 0; i <= centers.size(); ++i) {
    edges.push_back(centers[0] - 0.5 * width + static_cast<double>(i) * width);
  }
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (std::abs(centers[i] - 0.5 * (edges[i] + edges[i + 1])) > 1e-6 * std::abs(width)) {
      throw ParseError(fmt::format("{}: bin centers are not uniformly spaced", table.origin));
    }
  }
  try {
    return CoincidenceHistogram(std::move(edges), std::move(values));
  } catch (const DomainError& e) {
    throw ParseError(fmt::format("{}: {}", table.origin, e.what()));
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& histogram_path) {
  return std::filesystem::path(histogram_path.string() + ".meta");
}

CoincidenceHistogram CoincidenceHistogram::load(const std::filesystem::path& path) {
  auto hist = parse_csv(io::read_text_file(path), path.string());
  const auto meta_path = sidecar_path(path);
  if (std::filesystem::exists(meta_path)) {
    const auto doc = io::KeyValueDoc::read(meta_path);
    HistogramMetadata meta;
    meta.rate1_cps = doc.number("rate1_cps");
    meta.rate2_cps = doc.number("rate2_cps");
    meta.duration_s = doc.number("duration_s");
    meta.seed = static_cast<std::uint64_t>(doc.number("seed"));
    for (const auto& [k, v] : doc.entries()) {
      if (k != "format" && k != "rate1_cps" && k != "rate2_cps" && k != "duration_s" && k != "seed" &&
          k != "bin_width_ps") {
        meta.extra.emplace_back(k, v);
      }
    }
    hist.metadata_ = std::move(meta);
  }
  return hist;
}

void CoincidenceHistogram::save(const std::filesystem::path& path) const {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(fmt::format("cannot write '{}'", path.string()));
    out << to_csv();
  }
  if (metadata_) {
    std::ofstream meta(sidecar_path(path), std::ios::binary);
    if (!meta) throw ParseError(fmt::format("cannot write '{}'", sidecar_path(path).string()));
    meta << metadata_text();
  }
}

// --- fitting ---------------------------------------------------------------

namespace {

G2Params params_from_vector(const fit::Vector& v, bool bunching, double jitter) {
  G2Params p;
  p.rho = sbr_db_to_rho(v[0]);
  p.tau1_ps = v[1];
  p.jitter_fwhm_ps = jitter;
  if (bunching) {
    p.bunching_amplitude = v[3];
    p.tau2_ps = v[4];
  }
  return p;
}

std::vector<double> model_counts(const CoincidenceHistogram& h, const G2Params& p, double normalization) {
  std::vector<double> out(h.bins());
  for (std::size_t i = 0; i < h.bins(); ++i) {
    out[i] = normalization * g2_bin_average(h.edges()[i], h.edges()[i + 1], p);
  }
  return out;
}

}  // namespace

G2Fit fit_g2(const CoincidenceHistogram& histogram, double fixed_jitter_fwhm_ps, const G2FitOptions& options) {
  const auto& h = histogram;
  const std::size_t n = h.bins();
  if (n < 20) throw DomainError(fmt::format("g2 fit needs at least 20 bins, got {}", n));
  if (h.total() == 0) throw DomainError("g2 fit on an all-zero histogram");
  if (!(fixed_jitter_fwhm_ps >= 0.0)) throw DomainError("jitter FWHM must be non-negative");
  if (!(options.sbr_db_lower < options.sbr_db_upper)) throw DomainError("SBR bounds are not ordered");

  const double left = h.edges().front();
  const double right = h.edges().back();
  const double reach = std::min(-left, right);
  const double width = h.bin_width();

  // Data-driven start: far-wing level, dip depth near zero, dip area.
  double wing_sum = 0.0;
  int wing_n = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(h.center(i)) >= 0.7 * reach) {
      wing_sum += static_cast<double>(h.counts()[i]);
      ++wing_n;
    }
  }
  const double norm0 = std::max(wing_n > 0 ? wing_sum / wing_n : static_cast<double>(h.total()) / n, 1e-3);
  std::size_t zero_bin = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(h.center(i)) < std::abs(h.center(zero_bin))) zero_bin = i;
  }
  double centre_sum = 0.0;
  int centre_n = 0;
  for (std::size_t i = zero_bin > 0 ? zero_bin - 1 : 0; i <= std::min(zero_bin + 1, n - 1); ++i) {
    centre_sum += static_cast<double>(h.counts()[i]);
    ++centre_n;
  }
  const double depth = 1.0 - centre_sum / centre_n / norm0;
  double area = 0.0;
  for (std::size_t i = 0; i < n; ++i) area += (1.0 - static_cast<double>(h.counts()[i]) / norm0) * width;
  const double rho2_0 = std::clamp(depth, 0.05, 0.98);
  double tau1_0 = options.tau1_guess_ps.value_or(area / (2.0 * rho2_0));
  if (!(tau1_0 > 0.0) || !std::isfinite(tau1_0)) tau1_0 = 2.0 * width;
  tau1_0 = std::max(tau1_0, width);
  if (-left < 5.0 * tau1_0 || right < 5.0 * tau1_0) {
    throw DomainError(fmt::format(
        "histogram window [{:.0f}, {:.0f}] ps does not cover 5 tau1 = {:.0f} ps on both sides (tau1 guess {:.0f} ps)",
        left, right, 5.0 * tau1_0, tau1_0));
  }
  const double rho0 = std::sqrt(rho2_0);
  const double sbr0 = std::clamp(rho_to_sbr_db(rho0), options.sbr_db_lower, options.sbr_db_upper);

  const bool bunching = options.bunching;
  const Eigen::Index np = bunching ? 5 : 3;
  fit::FitProblem problem;
  problem.names = {"sbr_db", "tau1_ps", "normalization"};
  problem.initial.resize(np);
  problem.lower.resize(np);
  problem.upper.resize(np);
  const double inf = std::numeric_limits<double>::infinity();
  problem.initial.head(3) << sbr0, tau1_0, norm0;
  problem.lower.head(3) << options.sbr_db_lower, 1.0, 0.0;
  problem.upper.head(3) << options.sbr_db_upper, 10.0 * reach, inf;
  if (bunching) {
    problem.names.insert(problem.names.end(), {"bunching_amplitude", "tau2_ps"});
    problem.initial.tail(2) << 0.5, std::min(10.0 * tau1_0, 5.0 * reach);
    problem.lower.tail(2) << 0.0, 1.0;
    problem.upper.tail(2) << 20.0, 100.0 * reach;
  }
  problem.weights.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    problem.weights[static_cast<Eigen::Index>(i)] = 1.0 / std::max<double>(static_cast<double>(h.counts()[i]), 1.0);
  }
  problem.residuals = [&h, bunching, fixed_jitter_fwhm_ps, n](const fit::Vector& v) {
    const G2Params p = params_from_vector(v, bunching, fixed_jitter_fwhm_ps);
    fit::Vector r(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      r[static_cast<Eigen::Index>(i)] =
          v[2] * g2_bin_average(h.edges()[i], h.edges()[i + 1], p) - static_cast<double>(h.counts()[i]);
    }
    return r;
  };

  problem.record_trace = options.record_trace;
  fit::FitResult result = fit::lm_fit(problem);
  if (!result.converged()) {
    throw FitError(fmt::format("g2 fit did not converge in {} iterations (cost {:.6g})", result.iterations,
                               result.cost),
                   result.cost);
  }
  if (options.profile_intervals) fit::attach_profile_intervals(problem, result, options.level);

  G2Fit out;
  out.params = params_from_vector(result.params, bunching, fixed_jitter_fwhm_ps);
  out.sbr_db = result.params[0];
  out.g2_zero = g2_zero(out.params);
  G2Params intrinsic = out.params;
  intrinsic.jitter_fwhm_ps = 0.0;
  out.g2_zero_intrinsic = g2_zero(intrinsic);

  // Delta method through the shape parameters (normalization does not enter).
  fit::Vector grad = fit::Vector::Zero(np);
  for (Eigen::Index j = 0; j < np; ++j) {
    if (j == 2) continue;
    const double step = std::max(1e-6 * std::abs(result.params[j]), 1e-6);
    fit::Vector up = result.params;
    fit::Vector down = result.params;
    up[j] = std::min(up[j] + step, problem.upper[j]);
    down[j] = std::max(down[j] - step, problem.lower[j]);
    grad[j] = (g2_zero(params_from_vector(up, bunching, fixed_jitter_fwhm_ps)) -
               g2_zero(params_from_vector(down, bunching, fixed_jitter_fwhm_ps))) /
              (up[j] - down[j]);
  }
  const double g2_sigma = std::sqrt(std::max(0.0, grad.dot(result.covariance * grad)));
  const double z = fit::normal_quantile(0.5 * (1.0 + options.level));
  out.g2_zero_interval = {std::max(0.0, out.g2_zero - z * g2_sigma), out.g2_zero + z * g2_sigma};
  out.fit = std::move(result);
  return out;
}

std::vector<double> g2_fit_curve(const CoincidenceHistogram& histogram, const G2Fit& fit) {
  return model_counts(histogram, fit.params, fit.fit.params[2]);
}

}  // namespace qfc
