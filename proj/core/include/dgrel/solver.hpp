#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dgrel/netmodel.hpp"

namespace dgrel {

enum class FaultType { slg, three_phase };

struct FaultSpec {
  std::string bus;
  FaultType type = FaultType::slg;
  Complex z_fault{0.0, 0.0};
  double t_on = 0.2;
  double t_off = 0.5;
};

enum class Sequence { zero = 0, positive = 1, negative = 2 };

struct DeviceCurrent {
  double amps = 0.0;
  bool forward = false;  // true when flowing away from forward_from
  Complex phasor;        // phase A, oriented away from forward_from
};

/// Phase-A phasors for one topology. Vectors follow network declaration order.
struct PhasorSolution {
  std::vector<std::array<Complex, 3>> v_seq;  // zero, positive, negative
  std::vector<Complex> v_polarizing;          // positive-sequence voltage without the fault
  std::vector<Complex> v_bus;
  std::vector<Complex> i_branch;  // from_bus -> to_bus
  std::vector<Complex> i_source;  // source -> bus
  std::vector<DeviceCurrent> i_device;
  std::vector<bool> energized;
  Complex i_dg;     // DG -> bus
  Complex dg_emf;   // internal EMF used (or implied) for the DG
  Complex i_fault;  // bus -> ground, faulted phase
  bool fault_applied = false;
  bool fault_on_dead_bus = false;
  int dg_iterations = 0;
  double kcl_residual = 0.0;   // largest nodal mismatch, amps
  double max_injection = 0.0;  // largest nodal injection, amps

  [[nodiscard]] bool kcl_ok() const { return kcl_residual <= 1e-6 * std::max(max_injection, 1.0); }
};

/// Balanced steady state. An online DG is a constant-power injection
/// (fixed point, 1e-6 pu, 100 iterations) unless `dg_emf` is given, in which
/// case it is an EMF behind subtransient reactance.
PhasorSolution solve_steady_state(const Network& net, const SwitchState& state,
                                  std::optional<Complex> dg_emf = std::nullopt);

/// Fault solution by superposing sequence-network contributions on the
/// pre-fault state. When `dg_emf` is absent it is taken from a constant-power
/// steady state of the same topology.
PhasorSolution solve_fault(const Network& net, const SwitchState& state, const FaultSpec& fault,
                           std::optional<Complex> dg_emf = std::nullopt);

/// Driving-point impedance of one sequence network at `bus`.
Complex thevenin_at(const Network& net, const SwitchState& state, const std::string& bus, Sequence seq);

/// Reverse steady-state current through every fuse with the DG at `dg_bus`
/// and all devices closed. Zero for forward flow.
std::map<std::string, double> backfeed_currents(const Network& net, const std::string& dg_bus);

/// Forward test used for device direction: current within the half plane
/// centred 45 degrees behind the polarizing voltage.
bool is_forward(Complex current, Complex polarizing);

/// DG impedance in ohms for the given sequence, nullopt when there is no path.
std::optional<Complex> dg_impedance(const Network& net, Sequence seq);

/// Per-phase constant impedance admittance of a load at nominal voltage.
Complex load_admittance(const Network& net, const Load& load);

}  // namespace dgrel
