#include "dgrel/tcc.hpp"

#include <cmath>
#include <string>

namespace dgrel {

std::string TccCurve::check() const {
  if (points.size() < 2) return "curve needs at least two points";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(p.time_s > 0.0)) return "curve times must be positive";
    if (!(p.multiple >= 1.0)) return "curve multiples must be at least 1";
    if (i > 0) {
      if (!(p.multiple > points[i - 1].multiple)) return "curve multiples must be strictly increasing";
      if (!(p.time_s < points[i - 1].time_s)) return "curve times must be strictly decreasing";
    }
  }
  return {};
}

std::optional<double> operate_time(const TccCurve& curve, double pickup_a, double current_a) {
  if (curve.points.empty() || !(pickup_a > 0.0) || !(current_a > pickup_a)) return std::nullopt;
  const double m = current_a / pickup_a;
  const auto& pts = curve.points;
  if (m < pts.front().multiple) return std::nullopt;
  if (m >= pts.back().multiple) return pts.back().time_s;
  std::size_t hi = 1;
  while (pts[hi].multiple <= m) ++hi;
  const auto& a = pts[hi - 1];
  const auto& b = pts[hi];
  const double u = (std::log(m) - std::log(a.multiple)) / (std::log(b.multiple) - std::log(a.multiple));
  return std::exp(std::log(a.time_s) + u * (std::log(b.time_s) - std::log(a.time_s)));
}

}  // namespace dgrel
