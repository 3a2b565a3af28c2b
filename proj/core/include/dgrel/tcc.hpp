#pragma once

#include <optional>
#include <string>
#include <vector>

namespace dgrel {

struct TccPoint {
  double multiple = 0.0;  // current as a multiple of pickup
  double time_s = 0.0;
  bool operator==(const TccPoint&) const = default;
};

/// Inverse-time characteristic, piecewise linear in log-log space.
///
/// Below the first multiple the device does not operate; beyond the last
/// multiple the time is clamped to the last point.
struct TccCurve {
  std::vector<TccPoint> points;
  bool operator==(const TccCurve&) const = default;

  /// Empty string when well formed, otherwise the first broken rule.
  [[nodiscard]] std::string check() const;
  [[nodiscard]] double fastest_time() const { return points.back().time_s; }
  [[nodiscard]] double slowest_time() const { return points.front().time_s; }
};

/// Curve time for `current_a` against `pickup_a`, or nullopt for no operation.
std::optional<double> operate_time(const TccCurve& curve, double pickup_a, double current_a);

}  // namespace dgrel
