#include "qfc/specfit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <fmt/format.h>

#include "qfc/csv.hpp"
#include "qfc/errors.hpp"
#include "qfc/keyvalue.hpp"

namespace qfc {

void SpectrumModel::validate() const {
  const auto& bg = background;
  if (bg.order < 2 || bg.order % 2 != 0) {
    throw DomainError(fmt::format("super-Gaussian order must be an even integer >= 2, got {}", bg.order));
  }
  if (!(bg.width_nm > 0.0)) throw DomainError("super-Gaussian width must be positive");
  if (!(bg.amplitude >= 0.0)) throw DomainError("background amplitude must be non-negative");
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    if (!(peaks[i].fwhm_nm > 0.0)) throw DomainError(fmt::format("peak {} FWHM must be positive", i));
    if (!(peaks[i].amplitude >= 0.0)) throw DomainError(fmt::format("peak {} amplitude must be non-negative", i));
  }
}

double SpectrumModel::background_at(double x) const {
  const double u = (x - background.center_nm) / background.width_nm;
  return background.amplitude * std::exp(-std::pow(u, background.order));
}

double SpectrumModel::peaks_at(double x) const {
  double sum = 0.0;
  for (const auto& p : peaks) {
    const double hw = 0.5 * p.fwhm_nm;
    const double d = x - p.center_nm;
    sum += p.amplitude * hw * hw / (d * d + hw * hw);
  }
  return sum;
}

double spectrum_eval(const SpectrumModel& model, double wavelength_nm) {
  return model.background_at(wavelength_nm) + model.peaks_at(wavelength_nm);
}

std::string SpectrumModel::serialize() const {
  io::KeyValueDoc doc;
  doc.set("format", "qfc-spectrum-model/1");
  doc.set("background.amplitude", fmt::format("{}", background.amplitude));
  doc.set("background.center_nm", fmt::format("{}", background.center_nm));
  doc.set("background.width_nm", fmt::format("{}", background.width_nm));
  doc.set("background.order", fmt::format("{}", background.order));
  doc.set("peaks", fmt::format("{}", peaks.size()));
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    doc.set(fmt::format("peak{}.amplitude", i), fmt::format("{}", peaks[i].amplitude));
    doc.set(fmt::format("peak{}.center_nm", i), fmt::format("{}", peaks[i].center_nm));
    doc.set(fmt::format("peak{}.fwhm_nm", i), fmt::format("{}", peaks[i].fwhm_nm));
  }
  return doc.to_string();
}

SpectrumModel SpectrumModel::parse(std::string_view text, std::string origin) {
  const auto doc = io::KeyValueDoc::parse(text, std::move(origin));
  if (doc.require("format") != "qfc-spectrum-model/1") {
    throw ParseError(fmt::format("{}: unsupported format '{}'", doc.origin(), doc.require("format")));
  }
  SpectrumModel m;
  m.background.amplitude = doc.number("background.amplitude");
  m.background.center_nm = doc.number("background.center_nm");
  m.background.width_nm = doc.number("background.width_nm");
  m.background.order = static_cast<int>(doc.number("background.order"));
  const auto n = static_cast<std::size_t>(doc.number("peaks"));
  for (std::size_t i = 0; i < n; ++i) {
    m.peaks.push_back({doc.number(fmt::format("peak{}.amplitude", i)), doc.number(fmt::format("peak{}.center_nm", i)),
                       doc.number(fmt::format("peak{}.fwhm_nm", i))});
  }
  m.validate();
  return m;
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double fa, double b, double fb, double m,
                    double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  if (!(b > a)) throw DomainError("integration interval must have positive length");
  // A coarse panel estimate sets the absolute tolerance scale.
  constexpr int kPanels = 64;
  const double h = (b - a) / kPanels;
  double coarse = 0.0;
  for (int i = 0; i < kPanels; ++i) {
    const double x0 = a + i * h;
    coarse += h / 6.0 * (f(x0) + 4.0 * f(x0 + 0.5 * h) + f(x0 + h));
  }
  const double tol = rel_tol * std::max(std::abs(coarse), std::numeric_limits<double>::min());
  double total = 0.0;
  for (int i = 0; i < kPanels; ++i) {
    const double x0 = a + i * h;
    const double x1 = x0 + h;
    const double xm = 0.5 * (x0 + x1);
    const double f0 = f(x0);
    const double f1 = f(x1);
    const double fm = f(xm);
    const double whole = h / 6.0 * (f0 + 4.0 * fm + f1);
    total += simpson_step(f, x0, f0, x1, f1, xm, fm, whole, tol / kPanels, 40);
  }
  return total;
}

double sbr_from_spectrum(const SpectrumModel& model, double window_lo_nm, double window_hi_nm, double rel_tol) {
  model.validate();
  if (!(window_hi_nm > window_lo_nm) || !std::isfinite(window_lo_nm) || !std::isfinite(window_hi_nm)) {
    throw DomainError(fmt::format("invalid spectral window [{}, {}] nm", window_lo_nm, window_hi_nm));
  }
  const double bg =
      adaptive_integrate([&](double x) { return model.background_at(x); }, window_lo_nm, window_hi_nm, rel_tol);
  if (!(bg > 0.0)) throw DomainError("infinite SBR: background integrates to zero inside the window");
  const double peaks =
      adaptive_integrate([&](double x) { return model.peaks_at(x); }, window_lo_nm, window_hi_nm, rel_tol);
  return 10.0 * std::log10(peaks / bg);
}

std::vector<SpectrumPoint> parse_spectrum_csv(std::string_view text, std::string origin) {
  const auto table = io::parse_csv(text, std::move(origin));
  const int wl = table.require_column("wavelength_nm");
  const int in = table.require_column("intensity");
  const int sg = table.column("sigma");
  std::vector<SpectrumPoint> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    SpectrumPoint p{table.number(r, wl), table.number(r, in)};
    if (sg >= 0 && !table.rows[r][static_cast<std::size_t>(sg)].empty()) p.sigma = table.number(r, sg);
    out.push_back(p);
  }
  return out;
}

std::vector<SpectrumPoint> load_spectrum_csv(const std::filesystem::path& path) {
  return parse_spectrum_csv(io::read_text_file(path), path.string());
}

namespace {

SpectrumModel model_from_vector(const fit::Vector& v, int order) {
  SpectrumModel m;
  m.background = {v[0], v[1], v[2], order};
  for (Eigen::Index k = 3; k + 2 < v.size(); k += 3) m.peaks.push_back({v[k], v[k + 1], v[k + 2]});
  return m;
}

// Greedy start: background from the median level and spread, then the
// tallest residual maxima as peaks with widths from their half-maximum.
SpectrumModel initial_guess(std::span<const SpectrumPoint> data, int n_peaks, int order) {
  std::vector<double> intensities;
  for (const auto& p : data) intensities.push_back(p.intensity);
  std::vector<double> sorted = intensities;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];

  double weight = 0.0;
  double first = 0.0;
  for (const auto& p : data) {
    const double w = std::min(p.intensity, median * 2.0);
    weight += std::max(w, 0.0);
    first += std::max(w, 0.0) * p.wavelength_nm;
  }
  const double lo = data.front().wavelength_nm;
  const double hi = data.back().wavelength_nm;
  SpectrumModel m;
  m.background = {std::max(median, 0.0), weight > 0.0 ? first / weight : 0.5 * (lo + hi), 0.35 * (hi - lo), order};

  std::vector<double> residual(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) residual[i] = data[i].intensity - m.background_at(data[i].wavelength_nm);
  const double spacing = (hi - lo) / static_cast<double>(data.size() - 1);
  for (int k = 0; k < n_peaks; ++k) {
    const auto top = static_cast<std::size_t>(std::max_element(residual.begin(), residual.end()) - residual.begin());
    const double amp = std::max(residual[top], 0.0);
    std::size_t l = top;
    std::size_t r = top;
    while (l > 0 && residual[l] > 0.5 * amp) --l;
    while (r + 1 < residual.size() && residual[r] > 0.5 * amp) ++r;
    const double fwhm = std::max(data[r].wavelength_nm - data[l].wavelength_nm, 2.0 * spacing);
    const Lorentzian peak{amp, data[top].wavelength_nm, fwhm};
    m.peaks.push_back(peak);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double hw = 0.5 * peak.fwhm_nm;
      const double d = data[i].wavelength_nm - peak.center_nm;
      residual[i] -= peak.amplitude * hw * hw / (d * d + hw * hw);
    }
  }
  std::sort(m.peaks.begin(), m.peaks.end(), [](auto& a, auto& b) { return a.center_nm < b.center_nm; });
  return m;
}

}  // namespace

SpectrumFit fit_spectrum(std::span<const SpectrumPoint> data, int n_peaks, const SpectrumFitOptions& options) {
  if (n_peaks < 1) throw DomainError(fmt::format("spectrum fit needs at least one peak, got {}", n_peaks));
  if (options.order < 2 || options.order % 2 != 0) {
    throw DomainError(fmt::format("super-Gaussian order must be an even integer >= 2, got {}", options.order));
  }
  const auto n_params = static_cast<std::size_t>(3 + 3 * n_peaks);
  if (data.size() < 5 * n_params) {
    throw DomainError(fmt::format("spectrum fit with {} parameters needs at least {} points, got {}", n_params,
                                  5 * n_params, data.size()));
  }
  for (std::size_t i = 1; i < data.size(); ++i) {
    if (!(data[i].wavelength_nm > data[i - 1].wavelength_nm)) {
      throw DomainError("spectrum wavelengths must be strictly increasing");
    }
  }
  const double lo = data.front().wavelength_nm;
  const double hi = data.back().wavelength_nm;
  const double span = hi - lo;

  SpectrumModel start = options.init ? *options.init : initial_guess(data, n_peaks, options.order);
  if (static_cast<int>(start.peaks.size()) != n_peaks) {
    throw DomainError(fmt::format("initial model has {} peaks, expected {}", start.peaks.size(), n_peaks));
  }
  start.background.order = options.order;
  start.validate();

  const double inf = std::numeric_limits<double>::infinity();
  const auto np = static_cast<Eigen::Index>(n_params);
  fit::FitProblem problem;
  problem.initial.resize(np);
  problem.lower.resize(np);
  problem.upper.resize(np);
  problem.initial.head(3) << start.background.amplitude, start.background.center_nm, start.background.width_nm;
  problem.lower.head(3) << 0.0, lo - span, 1e-6 * span;
  problem.upper.head(3) << inf, hi + span, 100.0 * span;
  problem.names = {"bg_amplitude", "bg_center_nm", "bg_width_nm"};
  for (int k = 0; k < n_peaks; ++k) {
    const auto& p = start.peaks[static_cast<std::size_t>(k)];
    const Eigen::Index j = 3 + 3 * k;
    problem.initial.segment(j, 3) << p.amplitude, std::clamp(p.center_nm, lo, hi), p.fwhm_nm;
    problem.lower.segment(j, 3) << 0.0, lo, 1e-6 * span;
    problem.upper.segment(j, 3) << inf, hi, 10.0 * span;
    problem.names.push_back(fmt::format("peak{}_amplitude", k));
    problem.names.push_back(fmt::format("peak{}_center_nm", k));
    problem.names.push_back(fmt::format("peak{}_fwhm_nm", k));
  }
  problem.initial = problem.initial.cwiseMax(problem.lower).cwiseMin(problem.upper);

  const int order = options.order;
  const auto m = static_cast<Eigen::Index>(data.size());
  problem.residuals = [data, order, m](const fit::Vector& v) {
    const SpectrumModel model = model_from_vector(v, order);
    fit::Vector r(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& p = data[static_cast<std::size_t>(i)];
      r[i] = spectrum_eval(model, p.wavelength_nm) - p.intensity;
    }
    return r;
  };
  const bool have_sigma =
      std::all_of(data.begin(), data.end(), [](const SpectrumPoint& p) { return p.sigma > 0.0; });
  if (have_sigma) {
    problem.weights.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double s = data[static_cast<std::size_t>(i)].sigma;
      problem.weights[i] = 1.0 / (s * s);
    }
  } else {
    problem.scale_by_residual_variance = true;
  }

  problem.record_trace = options.record_trace;
  fit::FitResult result = fit::lm_fit(problem);
  if (!result.converged()) {
    throw FitError(fmt::format("spectrum fit did not converge in {} iterations (cost {:.6g})", result.iterations,
                               result.cost),
                   result.cost);
  }
  if (options.profile_intervals) fit::attach_profile_intervals(problem, result, options.level);
  SpectrumFit out{std::move(result), {}};
  out.model = model_from_vector(out.fit.params, order);
  return out;
}

}  // namespace qfc
