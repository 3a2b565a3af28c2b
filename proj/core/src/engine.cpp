#include "dgrel/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dgrel/errors.hpp"

namespace dgrel {

namespace {

constexpr double kTieEps = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> id_order(const Network& net) {
  std::vector<std::size_t> order(net.devices.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return net.devices[a].id < net.devices[b].id; });
  return order;
}

// Current a device responds to; blocked directional elements see nothing.
double effective_current(const DeviceRuntime& rt, const DeviceCurrent& c) {
  return directional_permits(*rt.spec, c) ? c.amps : 0.0;
}

bool dg_islanded(const Network& net, const TopologyState& state) {
  if (!state.dg_online || !net.dg || !net.dg->bus) return false;
  return energized_buses(net, state.switches(), false).count(*net.dg->bus) == 0;
}

double dg_multiple(const Network& net, const PhasorSolution& sol) {
  if (!net.dg || !net.dg->bus) return 0.0;
  const double kv = net.buses[*net.bus_index(*net.dg->bus)].nominal_kv;
  return std::abs(sol.i_dg) / net.dg->rated_current_a(kv);
}

}  // namespace

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::fault_on: return "fault_on";
    case EventKind::fault_off: return "fault_off";
    case EventKind::device_open: return "device_open";
    case EventKind::device_reclose: return "device_reclose";
    case EventKind::device_lockout: return "device_lockout";
    case EventKind::dg_trip: return "dg_trip";
    case EventKind::quiescent: return "quiescent";
  }
  return "?";
}

TopologyState TopologyState::initial(const Network& net) {
  TopologyState s;
  s.devices.reserve(net.devices.size());
  for (const auto& d : net.devices) s.devices.emplace_back(d);
  s.dg_online = net.dg && net.dg->bus;
  return s;
}

SwitchState TopologyState::switches() const {
  SwitchState sw;
  sw.device_open.reserve(devices.size());
  for (const auto& d : devices) sw.device_open.push_back(d.is_open);
  sw.dg_online = dg_online;
  return sw;
}

std::vector<std::string> TopologyState::open_devices() const {
  std::vector<std::string> ids;
  for (const auto& d : devices)
    if (d.is_open) ids.push_back(d.spec->id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

PhasorSolution interval_currents(const Network& net, const TopologyState& state, const FaultSpec& fault) {
  const auto sw = state.switches();
  const bool held = state.dg_online && state.dg_emf && (state.fault_active || dg_islanded(net, state));
  const auto emf = held ? state.dg_emf : std::nullopt;
  if (state.fault_active) return solve_fault(net, sw, fault, emf);
  return solve_steady_state(net, sw, emf);
}

IntervalOutcome advance_interval(const Network& net, TopologyState& state, const PhasorSolution& solution,
                                 double until_s) {
  IntervalOutcome out;
  std::vector<double> ttt(state.devices.size(), kInf);
  double earliest = until_s;
  for (std::size_t d = 0; d < state.devices.size(); ++d) {
    const auto& rt = state.devices[d];
    if (rt.is_open) continue;
    if (auto t = time_to_trip(rt, effective_current(rt, solution.i_device[d]))) {
      ttt[d] = state.t_now + *t;
      earliest = std::min(earliest, ttt[d]);
    }
  }
  const double dt = earliest - state.t_now;
  for (std::size_t d = 0; d < state.devices.size(); ++d) {
    auto& rt = state.devices[d];
    if (rt.is_open) continue;
    accumulate_damage(rt, effective_current(rt, solution.i_device[d]), dt);
  }
  for (std::size_t d : id_order(net)) {
    if (ttt[d] <= earliest + kTieEps) {
      state.devices[d].damage = std::max(state.devices[d].damage, 1.0);
      out.operating.push_back(d);
    }
  }
  out.time_s = earliest;
  state.t_now = earliest;
  return out;
}

ScenarioRun run_scenario(const Network& net, const FaultSpec& fault, const EngineOptions& options) {
  if (!(fault.t_off > fault.t_on && fault.t_on >= 0.0)) throw EngineError("fault needs t_off > t_on >= 0", 0.0);
  ScenarioRun run;
  auto& st = run.final_state;
  st = TopologyState::initial(net);
  auto& events = run.timeline.events;
  const auto order = id_order(net);
  const DgProtectionSettings dg_settings = net.dg ? net.dg->protection : DgProtectionSettings{};
  bool fault_started = false;
  bool fault_done = false;

  auto push = [&](EventKind k, const std::string& subject) {
    events.push_back({st.t_now, k, subject});
    if (events.size() > options.event_cap) throw EngineError("event cap exceeded", st.t_now);
  };

  while (true) {
    PhasorSolution sol;
    try {
      sol = interval_currents(net, st, fault);
    } catch (const SolverError& e) {
      throw EngineError(e.what(), st.t_now);
    }
    if (st.dg_online && !st.fault_active && !dg_islanded(net, st)) st.dg_emf = sol.dg_emf;

    std::optional<double> dg_due;
    if (st.dg_online) {
      const auto decision = dg_protection_step(dg_settings, st.dg_protection, dg_islanded(net, st),
                                               dg_multiple(net, sol), st.t_now);
      if (decision.trip) {
        st.dg_online = false;
        push(EventKind::dg_trip, net.dg->id);
        continue;
      }
      dg_due = decision.trip_at;
    }

    double next = kInf;
    if (!fault_started) next = std::min(next, fault.t_on);
    else if (!fault_done) next = std::min(next, fault.t_off);
    for (const auto& rt : st.devices)
      if (rt.scheduled_reclose_at) next = std::min(next, *rt.scheduled_reclose_at);
    if (dg_due) next = std::min(next, *dg_due);

    bool would_operate = false;
    for (std::size_t d = 0; d < st.devices.size() && !would_operate; ++d)
      would_operate = time_to_trip(st.devices[d], effective_current(st.devices[d], sol.i_device[d])).has_value();
    if (next == kInf && !would_operate) {
      if (options.keep_intervals) run.timeline.intervals.push_back({st.t_now, st.t_now, false, std::move(sol)});
      push(EventKind::quiescent, "");
      break;
    }
    const double until = std::min(next, options.horizon_s);
    const double start = st.t_now;
    const auto outcome = advance_interval(net, st, sol, until);
    if (options.keep_intervals) run.timeline.intervals.push_back({start, st.t_now, st.fault_active, std::move(sol)});
    if (outcome.operating.empty() && st.t_now >= options.horizon_s && next > options.horizon_s)
      throw EngineError("horizon reached before quiescence", st.t_now);

    const double now = st.t_now;
    if (!fault_started && now >= fault.t_on - kTieEps) {
      fault_started = true;
      st.fault_active = true;
      push(EventKind::fault_on, fault.bus);
    } else if (fault_started && !fault_done && now >= fault.t_off - kTieEps) {
      fault_done = true;
      st.fault_active = false;
      push(EventKind::fault_off, fault.bus);
    }
    std::vector<bool> opening(st.devices.size(), false);
    for (std::size_t d : outcome.operating) opening[d] = true;
    for (std::size_t d : order) {
      auto& rt = st.devices[d];
      if (opening[d]) {
        on_open(rt, now);
        push(EventKind::device_open, rt.spec->id);
        if (rt.lockout) push(EventKind::device_lockout, rt.spec->id);
      } else if (rt.scheduled_reclose_at && *rt.scheduled_reclose_at <= now + kTieEps) {
        on_reclose(rt);
        push(EventKind::device_reclose, rt.spec->id);
      }
    }
  }
  return run;
}

}  // namespace dgrel
