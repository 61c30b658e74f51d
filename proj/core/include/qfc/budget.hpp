#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qfc/spectral.hpp"

namespace qfc {

/// A value with an absolute one-sigma uncertainty.
struct Measured {
  double value = 0.0;
  double sigma = 0.0;
};

struct LedgerEntry {
  std::string label;
  /// Fraction in (0, 1].
  double value;
  /// Absolute uncertainty, 0 <= sigma < value.
  double sigma = 0.0;
};

/// Ordered multiplicative efficiency factors with unique labels.
class EfficiencyLedger {
 public:
  EfficiencyLedger() = default;
  explicit EfficiencyLedger(std::vector<LedgerEntry> entries);

  /// CSV with header `label, value_percent, sigma_percent`.
  static EfficiencyLedger parse_csv(std::string_view text, std::string origin = "<string>");
  static EfficiencyLedger load_csv(const std::filesystem::path& path);

  void add(LedgerEntry entry);
  const std::vector<LedgerEntry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

 private:
  static void check(const LedgerEntry& entry);
  std::vector<LedgerEntry> entries_;
};

enum class ProductMode {
  /// Multiply the values exactly as stored.
  kStored,
  /// Round each entry to 0.1 percentage points first, as a printed table would.
  kRoundedEntries,
};

/// Product of the entries with first-order propagation: relative
/// uncertainties of uncorrelated factors add in quadrature. Empty ledger
/// gives (1, 0).
Measured ledger_product(const EfficiencyLedger& ledger, ProductMode mode = ProductMode::kStored);

struct NoiseMeasurement {
  Measured measured_rate;
  Measured dark_rate;
  EfficiencyLedger corrections;
  SpectralWidth filter_bandwidth = SpectralWidth::gigahertz(0.0);
};

struct CorrectedRate {
  double rate;
  double sigma;
  /// Set when the dark-subtracted numerator is <= 0.
  bool consistent_with_zero;
};

/// (measured - dark) / prod(corrections). Negative results are kept, not
/// clamped, and flagged.
CorrectedRate corrected_noise_rate(const NoiseMeasurement& m);

/// Comparison of a computed rate with an externally reported one.
struct DiscrepancyNote {
  double computed;
  double computed_sigma;
  double reported;
  double reported_sigma;
  /// |computed - reported| / combined sigma.
  double tension_sigma;
  /// Extra multiplicative correction that would turn computed into reported.
  double implied_factor;
  std::string text;
};

/// Returns a note when the two disagree by more than `threshold_sigma`.
std::optional<DiscrepancyNote> compare_to_reported(const CorrectedRate& computed, Measured reported,
                                                   double threshold_sigma = 2.0);

/// rate / bandwidth in photons/s/GHz. Bandwidths given in nm need a carrier.
double rate_per_bandwidth(double rate, const SpectralWidth& bandwidth);

struct RateFactor {
  std::string label;
  double factor;
};

struct RateChain {
  double input_rate;
  std::vector<RateFactor> factors;
};

struct RateChainResult {
  /// Rate after each factor, in order.
  std::vector<double> intermediate;
  double output;
};

RateChainResult rate_chain_output(const RateChain& chain);

}  // namespace qfc
