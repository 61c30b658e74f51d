#include "qfc/budget.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "qfc/csv.hpp"
#include "qfc/errors.hpp"

namespace qfc {

EfficiencyLedger::EfficiencyLedger(std::vector<LedgerEntry> entries) {
  for (auto& e : entries) add(std::move(e));
}

void EfficiencyLedger::check(const LedgerEntry& e) {
  if (!(e.value > 0.0 && e.value <= 1.0)) {
    throw DomainError(fmt::format("ledger entry '{}': value {} outside (0, 1]", e.label, e.value));
  }
  if (!(e.sigma >= 0.0 && e.sigma < e.value)) {
    throw DomainError(fmt::format("ledger entry '{}': sigma {} must satisfy 0 <= sigma < value", e.label, e.sigma));
  }
}

void EfficiencyLedger::add(LedgerEntry entry) {
  check(entry);
  const bool duplicate =
      std::any_of(entries_.begin(), entries_.end(), [&](const LedgerEntry& e) { return e.label == entry.label; });
  if (duplicate) throw DomainError(fmt::format("duplicate ledger label '{}'", entry.label));
  entries_.push_back(std::move(entry));
}

EfficiencyLedger EfficiencyLedger::parse_csv(std::string_view text, std::string origin) {
  const auto table = io::parse_csv(text, std::move(origin));
  const int label = table.require_column("label");
  const int value = table.require_column("value_percent");
  const int sigma = table.require_column("sigma_percent");
  EfficiencyLedger ledger;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    ledger.add({table.rows[r][static_cast<std::size_t>(label)], table.number(r, value) / 100.0,
                table.number(r, sigma) / 100.0});
  }
  return ledger;
}

EfficiencyLedger EfficiencyLedger::load_csv(const std::filesystem::path& path) {
  return parse_csv(io::read_text_file(path), path.string());
}

Measured ledger_product(const EfficiencyLedger& ledger, ProductMode mode) {
  double product = 1.0;
  double rel_var = 0.0;
  for (const auto& e : ledger.entries()) {
    const double v = mode == ProductMode::kRoundedEntries ? std::round(e.value * 1000.0) / 1000.0 : e.value;
    product *= v;
    const double rel = e.sigma / v;
    rel_var += rel * rel;
  }
  return {product, product * std::sqrt(rel_var)};
}

CorrectedRate corrected_noise_rate(const NoiseMeasurement& m) {
  if (m.measured_rate.value < 0.0 || m.dark_rate.value < 0.0) throw DomainError("count rates must be non-negative");
  const Measured correction = ledger_product(m.corrections);
  if (!(correction.value > 0.0)) throw DomainError("correction product is zero");
  const double diff = m.measured_rate.value - m.dark_rate.value;
  const double diff_var = m.measured_rate.sigma * m.measured_rate.sigma + m.dark_rate.sigma * m.dark_rate.sigma;
  const double rate = diff / correction.value;
  const double rel_corr = correction.sigma / correction.value;
  // Absolute form stays finite when the numerator is zero.
  const double sigma = std::sqrt(diff_var / (correction.value * correction.value) + rate * rate * rel_corr * rel_corr);
  return {rate, sigma, diff <= 0.0};
}

std::optional<DiscrepancyNote> compare_to_reported(const CorrectedRate& computed, Measured reported,
                                                   double threshold_sigma) {
  const double combined = std::hypot(computed.sigma, reported.sigma);
  const double gap = std::abs(computed.rate - reported.value);
  const double tension = combined > 0.0 ? gap / combined : (gap > 0.0 ? INFINITY : 0.0);
  if (!(tension > threshold_sigma)) return std::nullopt;
  DiscrepancyNote note{computed.rate, computed.sigma, reported.value, reported.sigma, tension,
                       reported.value != 0.0 ? computed.rate / reported.value : NAN, {}};
  note.text = fmt::format(
      "computed {:.2f} +/- {:.2f} from the stated factors differs from reported {:.2f} +/- {:.2f} "
      "({:.1f} sigma); the reported value implies an additional unstated factor of {:.3f}",
      note.computed, note.computed_sigma, note.reported, note.reported_sigma, note.tension_sigma, note.implied_factor);
  return note;
}

double rate_per_bandwidth(double rate, const SpectralWidth& bandwidth) {
  const double ghz = bandwidth.ghz();
  if (!(ghz > 0.0)) throw DomainError("bandwidth must be positive to normalize a rate");
  return rate / ghz;
}

RateChainResult rate_chain_output(const RateChain& chain) {
  if (!(chain.input_rate >= 0.0)) throw DomainError("input rate must be non-negative");
  RateChainResult out{{}, chain.input_rate};
  for (const auto& f : chain.factors) {
    if (!(f.factor > 0.0) || !std::isfinite(f.factor)) {
      throw DomainError(fmt::format("rate factor '{}' must be positive and finite, got {}", f.label, f.factor));
    }
    out.output *= f.factor;
    out.intermediate.push_back(out.output);
  }
  return out;
}

}  // namespace qfc
