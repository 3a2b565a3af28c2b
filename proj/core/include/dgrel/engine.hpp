#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dgrel/netmodel.hpp"
#include "dgrel/protection.hpp"
#include "dgrel/solver.hpp"

namespace dgrel {

enum class EventKind { fault_on, fault_off, device_open, device_reclose, device_lockout, dg_trip, quiescent };

const char* to_string(EventKind kind);

struct Event {
  double time_s = 0.0;
  EventKind kind = EventKind::quiescent;
  std::string subject;
  bool operator==(const Event&) const = default;
};

/// Phasors in force between two consecutive event times.
struct IntervalRecord {
  double start_s = 0.0;
  double end_s = 0.0;
  bool fault_active = false;
  PhasorSolution solution;
};

struct Timeline {
  std::vector<Event> events;
  std::vector<IntervalRecord> intervals;
};

/// Evolving switching state of one scenario.
struct TopologyState {
  std::vector<DeviceRuntime> devices;  // network order
  bool dg_online = false;
  bool fault_active = false;
  double t_now = 0.0;
  DgProtectionState dg_protection;
  std::optional<Complex> dg_emf;  // held through faults and islanding

  static TopologyState initial(const Network& net);
  [[nodiscard]] SwitchState switches() const;
  /// Ids of devices that are open at this instant.
  [[nodiscard]] std::vector<std::string> open_devices() const;
};

struct EngineOptions {
  double horizon_s = 300.0;
  std::size_t event_cap = 10000;
  bool keep_intervals = true;
};

struct ScenarioRun {
  Timeline timeline;
  TopologyState final_state;
};

/// Runs one fault scenario on `net` (DG, when placed in `net`, starts online).
/// Throws EngineError (carrying the event time) on solver failure, on
/// exceeding the event cap, or when the horizon passes without quiescence.
ScenarioRun run_scenario(const Network& net, const FaultSpec& fault, const EngineOptions& options = {});

/// Solution for the current state: fault solve while the fault is active,
/// steady state otherwise. The DG is an EMF source while faulted or islanded.
PhasorSolution interval_currents(const Network& net, const TopologyState& state, const FaultSpec& fault);

struct IntervalOutcome {
  double time_s = 0.0;                  // end of the interval
  std::vector<std::size_t> operating;   // devices reaching damage 1, ascending id
};

/// Finds the earliest device operation in (t_now, until_s] given `solution`,
/// and accumulates damage on every closed device up to that instant.
IntervalOutcome advance_interval(const Network& net, TopologyState& state, const PhasorSolution& solution,
                                 double until_s);

}  // namespace dgrel
