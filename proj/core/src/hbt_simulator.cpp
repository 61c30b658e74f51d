#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <fmt/format.h>

#include "qfc/correlation.hpp"
#include "qfc/errors.hpp"

namespace qfc {

namespace {

constexpr double kFwhmPerSigma = 2.3548200450309493;
constexpr double kJitterTruncation = 10.0;

// Time-ordered stream of jittered detection times that become final once no
// later-generated event can land before them.
struct DetectorStream {
  std::vector<double> pending;
  std::vector<double> final_times;
  std::size_t head = 0;

  void finalize_before(double frontier) {
    auto split = std::partition(pending.begin(), pending.end(), [frontier](double t) { return t < frontier; });
    std::vector<double> ready(pending.begin(), split);
    pending.erase(pending.begin(), split);
    std::sort(ready.begin(), ready.end());
    final_times.insert(final_times.end(), ready.begin(), ready.end());
  }

  void compact() {
    if (head > 4096 && head > final_times.size() / 2) {
      final_times.erase(final_times.begin(), final_times.begin() + static_cast<std::ptrdiff_t>(head));
      head = 0;
    }
  }
};

}  // namespace

CoincidenceHistogram simulate_hbt(const G2Params& params, const HbtSimulation& sim) {
  params.validate();
  if (params.bunching_amplitude > 0.0) throw DomainError("the HBT simulator models two-level emitters only");
  if (!(sim.total_rate_cps > 0.0) || !(sim.duration_s > 0.0)) {
    throw DomainError("simulation rate and duration must be positive");
  }
  if (!(sim.bin_width_ps > 0.0) || !(sim.window_ps > 0.0)) throw DomainError("bin width and window must be positive");
  const double bins_real = 2.0 * sim.window_ps / sim.bin_width_ps;
  const auto bins = static_cast<std::size_t>(std::llround(bins_real));
  if (bins < 1 || std::abs(bins_real - static_cast<double>(bins)) > 1e-9 * bins_real) {
    throw DomainError(fmt::format("window 2 x {} ps is not a whole number of {} ps bins", sim.window_ps,
                                  sim.bin_width_ps));
  }
  // Rates in events per ps.
  const double signal_rate = params.rho * sim.total_rate_cps * 1e-12;
  const double background_rate = (1.0 - params.rho) * sim.total_rate_cps * 1e-12;
  // Renewal emitter: excitation r and decay g with r + g = 1/tau1 and
  // stationary rate r g / (r + g) equal to the signal rate.
  double excitation = 0.0;
  double decay = 0.0;
  if (signal_rate > 0.0) {
    const double disc = 1.0 - 4.0 * signal_rate * params.tau1_ps;
    if (!(disc > 0.0)) {
      throw DomainError(fmt::format("signal rate {:.3g} cps exceeds the emitter limit 1/(4 tau1) = {:.3g} cps",
                                    signal_rate * 1e12, 0.25e12 / params.tau1_ps));
    }
    excitation = (1.0 - std::sqrt(disc)) / (2.0 * params.tau1_ps);
    decay = 1.0 / params.tau1_ps - excitation;
  }
  const double expected_events = sim.total_rate_cps * sim.duration_s;
  if (expected_events > sim.max_events) {
    throw ResourceError(fmt::format("simulation would generate ~{:.3g} photons, above the cap of {:.3g}",
                                    expected_events, sim.max_events));
  }

  const double detector_sigma = params.jitter_fwhm_ps / kFwhmPerSigma / std::sqrt(2.0);
  const double jitter_cap = kJitterTruncation * detector_sigma;

  std::mt19937_64 rng(sim.seed);
  std::normal_distribution<double> jitter(0.0, detector_sigma > 0.0 ? detector_sigma : 1.0);
  std::bernoulli_distribution splitter(0.5);
  auto exponential = [&rng](double rate) { return std::exponential_distribution<double>(rate)(rng); };

  const double duration_ps = sim.duration_s * 1e12;
  const double block_ps = std::max(1e6 / (sim.total_rate_cps * 1e-12), 100.0 * (sim.window_ps + jitter_cap));
  const double window = sim.window_ps;
  const double width = sim.bin_width_ps;

  DetectorStream d1;
  DetectorStream d2;
  std::vector<std::uint64_t> counts(bins, 0);
  std::uint64_t singles1 = 0;
  std::uint64_t singles2 = 0;

  auto detect = [&](double t) {
    double jittered = t;
    if (detector_sigma > 0.0) jittered += std::clamp(jitter(rng), -jitter_cap, jitter_cap);
    if (splitter(rng)) {
      d1.pending.push_back(jittered);
      ++singles1;
    } else {
      d2.pending.push_back(jittered);
      ++singles2;
    }
  };

  auto correlate_until = [&](double frontier) {
    d1.finalize_before(frontier);
    d2.finalize_before(frontier);
    auto& starts = d1.final_times;
    auto& stops = d2.final_times;
    while (d1.head < starts.size() && starts[d1.head] + window <= frontier) {
      const double t = starts[d1.head++];
      while (d2.head < stops.size() && stops[d2.head] < t - window) ++d2.head;
      for (std::size_t j = d2.head; j < stops.size() && stops[j] < t + window; ++j) {
        const auto idx = static_cast<std::ptrdiff_t>(std::floor((stops[j] - t + window) / width));
        if (idx >= 0 && static_cast<std::size_t>(idx) < bins) ++counts[static_cast<std::size_t>(idx)];
      }
    }
    d1.compact();
    d2.compact();
  };

  double next_signal = signal_rate > 0.0 ? exponential(excitation) + exponential(decay) : duration_ps;
  double next_background = background_rate > 0.0 ? exponential(background_rate) : duration_ps;
  for (double block_start = 0.0; block_start < duration_ps; block_start += block_ps) {
    const double block_end = std::min(block_start + block_ps, duration_ps);
    while (next_signal < block_end) {
      detect(next_signal);
      next_signal += exponential(excitation) + exponential(decay);
    }
    while (next_background < block_end) {
      detect(next_background);
      next_background += exponential(background_rate);
    }
    correlate_until(block_end >= duration_ps ? std::numeric_limits<double>::infinity() : block_end - jitter_cap);
  }

  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) edges[i] = -window + static_cast<double>(i) * width;
  HistogramMetadata meta;
  meta.rate1_cps = static_cast<double>(singles1) / sim.duration_s;
  meta.rate2_cps = static_cast<double>(singles2) / sim.duration_s;
  meta.duration_s = sim.duration_s;
  meta.seed = sim.seed;
  meta.extra = {
      {"generator", "qfc simulate_hbt two-level"},
      {"rho", fmt::format("{}", params.rho)},
      {"tau1_ps", fmt::format("{}", params.tau1_ps)},
      {"jitter_fwhm_ps", fmt::format("{}", params.jitter_fwhm_ps)},
      {"total_rate_cps", fmt::format("{}", sim.total_rate_cps)},
      {"window_ps", fmt::format("{}", sim.window_ps)},
  };
  return CoincidenceHistogram(std::move(edges), std::move(counts), std::move(meta));
}

}  // namespace qfc
