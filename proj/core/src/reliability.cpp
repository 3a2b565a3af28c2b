#include "dgrel/reliability.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace dgrel {

Rational Rational::of(std::int64_t n, std::int64_t d) {
  if (d <= 0 || n < 0) throw std::invalid_argument("rational needs n >= 0 and d > 0");
  const auto g = std::gcd(n, d);
  return g ? Rational{n / g, d / g} : Rational{0, 1};
}

std::int64_t Rational::rounded_percent() const { return (200 * num + den) / (2 * den); }

std::string Rational::str() const { return std::to_string(num) + "/" + std::to_string(den); }

const char* to_string(Impact impact) {
  switch (impact) {
    case Impact::neutral: return "neutral";
    case Impact::negative: return "negative";
    case Impact::positive: return "positive";
  }
  return "?";
}

ReliabilityReport reliability_report(const Network& net, const SwitchState& final_state) {
  ReliabilityReport r;
  const auto live = energized_buses(net, final_state, false);
  for (const auto& l : net.loads) {
    r.customers_total += l.customers;
    if (!live.count(l.bus)) {
      r.customers_interrupted += l.customers;
      r.interrupted_buses.insert(l.bus);
    }
  }
  for (std::size_t d = 0; d < net.devices.size(); ++d)
    if (d < final_state.device_open.size() && final_state.device_open[d])
      r.permanently_open_devices.insert(net.devices[d].id);
  r.saifi = r.customers_total > 0 ? Rational::of(r.customers_interrupted, r.customers_total) : Rational{};
  return r;
}

ImpactClassification classify_impact(const ReliabilityReport& baseline, const ReliabilityReport& with_dg) {
  if (baseline.customers_total != with_dg.customers_total)
    throw std::invalid_argument("reports come from different networks");
  ImpactClassification c;
  const auto& b = baseline.permanently_open_devices;
  const auto& w = with_dg.permanently_open_devices;
  std::set_difference(w.begin(), w.end(), b.begin(), b.end(),
                      std::inserter(c.additional_devices, c.additional_devices.end()));
  std::set_difference(b.begin(), b.end(), w.begin(), w.end(),
                      std::inserter(c.missing_devices, c.missing_devices.end()));
  if (!c.additional_devices.empty()) c.label = Impact::negative;
  else if (!c.missing_devices.empty()) c.label = Impact::positive;
  return c;
}

}  // namespace dgrel
