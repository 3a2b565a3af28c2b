#pragma once

#include <optional>

#include "dgrel/netmodel.hpp"
#include "dgrel/solver.hpp"
#include "dgrel/tcc.hpp"

namespace dgrel {

/// Scenario-local state of one protective device.
struct DeviceRuntime {
  const DeviceSpec* spec = nullptr;
  bool is_open = false;
  double damage = 0.0;     // fraction of the way to operating
  int reclose_index = 0;   // openings so far
  bool lockout = false;
  std::optional<double> scheduled_reclose_at;

  explicit DeviceRuntime(const DeviceSpec& s) : spec(&s) {}
};

/// Curve time plus the mechanism delay, or nullopt below the curve.
std::optional<double> device_operate_time(const DeviceSpec& spec, double current_a);

/// Adds dt / operate_time(current). Relays (breaker, recloser, directional
/// relay) reset to zero on any interval below their curve; fuses never reset.
void accumulate_damage(DeviceRuntime& rt, double current_a, double dt_s);

/// Seconds until damage reaches 1 at a constant current, nullopt below the curve.
std::optional<double> time_to_trip(const DeviceRuntime& rt, double current_a);

/// Opens the device. Reclosing kinds schedule the next attempt after the
/// programmed wait plus the reclose dead time; once the program is exhausted,
/// and always for fuses and relays without a program, the device locks out.
/// Throws std::logic_error when the device is already open.
void on_open(DeviceRuntime& rt, double now_s);

/// Executes a scheduled reclose. Throws std::logic_error on a locked-out or closed device.
void on_reclose(DeviceRuntime& rt);

/// True when a directional relay sees forward current. Other kinds always permit.
bool directional_permits(const DeviceSpec& spec, const DeviceCurrent& current);

struct DgProtectionState {
  bool online = true;
  std::optional<double> islanded_since;
  std::optional<double> overcurrent_since;
};

struct DgTripDecision {
  bool trip = false;
  std::optional<double> trip_at;  // pending timer expiry while conditions persist
};

/// Updates the islanding and overcurrent timers for the condition that holds
/// from `now_s` onward and reports whether the DG trips at `now_s`.
DgTripDecision dg_protection_step(const DgProtectionSettings& settings, DgProtectionState& state, bool is_islanded,
                                  double current_multiple, double now_s);

}  // namespace dgrel
