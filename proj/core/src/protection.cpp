#include "dgrel/protection.hpp"

#include <algorithm>
#include <stdexcept>

namespace dgrel {

namespace {

bool resets(DeviceKind kind) { return kind != DeviceKind::fuse; }

// Tolerance on timer expiry so that an event scheduled at t fires at t.
constexpr double kTimeEps = 1e-9;

}  // namespace

std::optional<double> device_operate_time(const DeviceSpec& spec, double current_a) {
  auto t = operate_time(spec.curve, spec.pickup_a, current_a);
  if (!t) return std::nullopt;
  return *t + spec.interrupt_delay_s;
}

void accumulate_damage(DeviceRuntime& rt, double current_a, double dt_s) {
  if (rt.is_open || dt_s < 0.0) return;
  const auto t = device_operate_time(*rt.spec, current_a);
  if (!t) {
    if (resets(rt.spec->kind)) rt.damage = 0.0;
    return;
  }
  rt.damage += dt_s / *t;
}

std::optional<double> time_to_trip(const DeviceRuntime& rt, double current_a) {
  if (rt.is_open) return std::nullopt;
  const auto t = device_operate_time(*rt.spec, current_a);
  if (!t) return std::nullopt;
  return std::max(0.0, 1.0 - rt.damage) * *t;
}

void on_open(DeviceRuntime& rt, double now_s) {
  if (rt.is_open) throw std::logic_error("device " + rt.spec->id + " is already open");
  rt.is_open = true;
  rt.reclose_index += 1;
  rt.scheduled_reclose_at.reset();
  const auto& program = rt.spec->reclose_program;
  if (rt.spec->kind == DeviceKind::fuse || rt.reclose_index > static_cast<int>(program.size())) {
    rt.lockout = true;
    return;
  }
  // programmed wait, then the mechanism's own closing delay
  rt.scheduled_reclose_at = now_s + program[rt.reclose_index - 1] + rt.spec->reclose_dead_time_s;
}

void on_reclose(DeviceRuntime& rt) {
  if (!rt.is_open || rt.lockout) throw std::logic_error("device " + rt.spec->id + " cannot reclose");
  rt.is_open = false;
  rt.scheduled_reclose_at.reset();
}

bool directional_permits(const DeviceSpec& spec, const DeviceCurrent& current) {
  if (spec.kind != DeviceKind::directional_relay) return true;
  return current.amps > 0.0 && current.forward;
}

DgTripDecision dg_protection_step(const DgProtectionSettings& settings, DgProtectionState& state, bool is_islanded,
                                  double current_multiple, double now_s) {
  DgTripDecision out;
  if (!state.online) return out;
  if (is_islanded) {
    if (!state.islanded_since) state.islanded_since = now_s;
  } else {
    state.islanded_since.reset();
  }
  if (current_multiple >= settings.overcurrent_pickup_multiple) {
    if (!state.overcurrent_since) state.overcurrent_since = now_s;
  } else {
    state.overcurrent_since.reset();
  }
  std::optional<double> due;
  if (state.islanded_since) due = *state.islanded_since + settings.islanding_trip_delay_s;
  if (state.overcurrent_since) {
    const double t = *state.overcurrent_since + settings.overcurrent_delay_s;
    due = due ? std::min(*due, t) : t;
  }
  if (due && *due <= now_s + kTimeEps) {
    out.trip = true;
    state.online = false;
    state.islanded_since.reset();
    state.overcurrent_since.reset();
    return out;
  }
  out.trip_at = due;
  return out;
}

}  // namespace dgrel
