#pragma once

#include <optional>
#include <string>

#include "dgrel/engine.hpp"
#include "dgrel/reliability.hpp"
#include "dgrel/solver.hpp"

namespace dgrel {

/// Fixed six-decimal rendering used by every CSV writer.
std::string format_number(double v);

/// "0" for zero, otherwise the reduced fraction followed by its decimal value.
std::string format_saifi(const Rational& saifi);

/// time_s,kind,subject
std::string render_timeline_csv(const Timeline& timeline);

/// interval_start,interval_end,element,amps,direction for every device and the DG.
std::string render_interval_csv(const Network& net, const Timeline& timeline);

/// element,amps,angle_deg,direction for branches, sources, devices and the DG.
std::string render_solution_csv(const Network& net, const PhasorSolution& sol);

/// multiple,time_s of a device's effective curve (interrupting delay included).
std::string render_curve_csv(const DeviceSpec& device, int samples = 41);

struct RunSummaryInput {
  std::string fault_area;
  std::optional<std::string> dg_area;
  DeviceMode mode = DeviceMode::asbuilt;
  const Network* net = nullptr;  // network the scenario ran on (DG placed)
  const ScenarioRun* run = nullptr;
  ReliabilityReport report;
};

/// Markdown summary of one scenario: events, final switch state and SAIFI.
std::string render_run_markdown(const RunSummaryInput& in);

/// key,value rows carrying the same summary.
std::string render_run_csv(const RunSummaryInput& in);

}  // namespace dgrel
