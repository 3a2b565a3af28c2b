#include "dgrel/report.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace dgrel {

namespace {

std::string join(const std::set<std::string>& items, const char* sep) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : sep) + s;
  return out;
}

std::string direction(const DeviceCurrent& c) {
  if (c.amps == 0.0) return "none";
  return c.forward ? "forward" : "reverse";
}

}  // namespace

std::string format_number(double v) {
  if (v == 0.0 || std::abs(v) < 5e-7) v = 0.0;  // no "-0.000000"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string format_saifi(const Rational& saifi) {
  if (saifi.num == 0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", saifi.value());
  return saifi.str() + " (" + buf + ")";
}

std::string render_timeline_csv(const Timeline& timeline) {
  std::string out = "time_s,kind,subject\n";
  for (const auto& e : timeline.events)
    out += format_number(e.time_s) + "," + to_string(e.kind) + "," + e.subject + "\n";
  return out;
}

std::string render_interval_csv(const Network& net, const Timeline& timeline) {
  std::string out = "interval_start,interval_end,element,amps,direction\n";
  for (const auto& iv : timeline.intervals) {
    const auto prefix = format_number(iv.start_s) + "," + format_number(iv.end_s) + ",";
    const auto& sol = iv.solution;
    for (std::size_t d = 0; d < net.devices.size() && d < sol.i_device.size(); ++d)
      out += prefix + net.devices[d].id + "," + format_number(sol.i_device[d].amps) + "," +
             direction(sol.i_device[d]) + "\n";
    if (net.dg && net.dg->bus)
      out += prefix + net.dg->id + "," + format_number(std::abs(sol.i_dg)) + "," +
             (std::abs(sol.i_dg) > 0.0 ? "injecting" : "none") + "\n";
  }
  return out;
}

std::string render_solution_csv(const Network& net, const PhasorSolution& sol) {
  std::string out = "element,amps,angle_deg,direction\n";
  auto row = [&out](const std::string& id, Complex i, const std::string& dir) {
    const double deg = std::abs(i) > 0.0 ? std::arg(i) * 180.0 / std::numbers::pi : 0.0;
    out += id + "," + format_number(std::abs(i)) + "," + format_number(deg) + "," + dir + "\n";
  };
  for (std::size_t b = 0; b < net.branches.size(); ++b) row(net.branches[b].id, sol.i_branch[b], "from-to");
  for (std::size_t s = 0; s < net.sources.size(); ++s) row(net.sources[s].id, sol.i_source[s], "injecting");
  for (std::size_t d = 0; d < net.devices.size(); ++d)
    row(net.devices[d].id, sol.i_device[d].phasor, direction(sol.i_device[d]));
  if (net.dg && net.dg->bus) row(net.dg->id, sol.i_dg, "injecting");
  if (sol.fault_applied) row("fault", sol.i_fault, "to-ground");
  return out;
}

std::string render_curve_csv(const DeviceSpec& device, int samples) {
  std::string out = "multiple,time_s\n";
  const auto& pts = device.curve.points;
  if (pts.empty() || samples < 2) return out;
  const double lo = std::log(pts.front().multiple);
  const double hi = std::log(pts.back().multiple * 1.5);  // show the flat tail
  for (int k = 0; k < samples; ++k) {
    const double m = std::exp(lo + (hi - lo) * k / (samples - 1));
    const auto t = operate_time(device.curve, 1.0, m);
    if (!t) continue;
    out += format_number(m) + "," + format_number(*t + device.interrupt_delay_s) + "\n";
  }
  return out;
}

std::string render_run_markdown(const RunSummaryInput& in) {
  std::string out = "# Scenario: fault in " + in.fault_area + ", DG " +
                    (in.dg_area ? "in " + *in.dg_area : std::string("absent")) + " (" + to_string(in.mode) + ")\n\n";
  out += "| time_s | event | subject |\n|---|---|---|\n";
  for (const auto& e : in.run->timeline.events)
    out += "| " + format_number(e.time_s) + " | " + to_string(e.kind) + " | " + e.subject + " |\n";
  const auto& fs = in.run->final_state;
  std::set<std::string> locked;
  for (const auto& d : fs.devices)
    if (d.lockout) locked.insert(d.spec->id);
  out += "\nlocked out: " + (locked.empty() ? std::string("none") : join(locked, ", ")) + "\n";
  if (in.dg_area) out += std::string("DG: ") + (fs.dg_online ? "online" : "tripped") + "\n";
  out += "interrupted: " + std::to_string(in.report.customers_interrupted) + ", SAIFI: " +
         format_saifi(in.report.saifi) + "\n";
  return out;
}

std::string render_run_csv(const RunSummaryInput& in) {
  std::string out = "key,value\n";
  out += "fault_area," + in.fault_area + "\n";
  out += "dg_area," + (in.dg_area ? *in.dg_area : std::string("none")) + "\n";
  out += std::string("mode,") + to_string(in.mode) + "\n";
  out += "permanently_open," + join(in.report.permanently_open_devices, ";") + "\n";
  if (in.dg_area) out += std::string("dg_online,") + (in.run->final_state.dg_online ? "true" : "false") + "\n";
  out += "customers_interrupted," + std::to_string(in.report.customers_interrupted) + "\n";
  out += "customers_total," + std::to_string(in.report.customers_total) + "\n";
  out += "saifi," + std::to_string(in.report.customers_interrupted) + "/" +
         std::to_string(in.report.customers_total) + "\n";
  return out;
}

}  // namespace dgrel
