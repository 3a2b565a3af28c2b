#pragma once

#include <cstdint>
#include <set>
#include <string>

#include "dgrel/netmodel.hpp"

namespace dgrel {

/// Non-negative fraction kept in lowest terms.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational of(std::int64_t n, std::int64_t d);
  [[nodiscard]] double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  /// Nearest whole percent, halves rounded up.
  [[nodiscard]] std::int64_t rounded_percent() const;
  [[nodiscard]] std::string str() const;
  bool operator==(const Rational&) const = default;
};

struct ReliabilityReport {
  int customers_total = 0;
  int customers_interrupted = 0;
  std::set<std::string> interrupted_buses;
  std::set<std::string> permanently_open_devices;
  Rational saifi;  // interrupted / total, unreduced counts kept above
};

/// Customers whose bus has no path to a grid source in the final state.
/// The DG never counts as a supply for this purpose.
ReliabilityReport reliability_report(const Network& net, const SwitchState& final_state);

enum class Impact { neutral, negative, positive };

const char* to_string(Impact impact);

struct ImpactClassification {
  Impact label = Impact::neutral;
  std::set<std::string> additional_devices;
  std::set<std::string> missing_devices;
};

ImpactClassification classify_impact(const ReliabilityReport& baseline, const ReliabilityReport& with_dg);

}  // namespace dgrel
