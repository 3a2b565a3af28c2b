#pragma once

#include <complex>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dgrel/tcc.hpp"

namespace dgrel {

using Complex = std::complex<double>;

struct Bus {
  std::string id;
  double nominal_kv = 4.0;  // line-to-line
  bool operator==(const Bus&) const = default;

  [[nodiscard]] double phase_volts() const;
};

struct Branch {
  std::string id;
  std::string from_bus;
  std::string to_bus;
  Complex z1;  // ohms, positive (= negative) sequence
  Complex z0;  // ohms, zero sequence
  bool operator==(const Branch&) const = default;
};

/// Thevenin equivalent of the upstream system referred to the feeder bus.
struct GridSource {
  std::string id;
  std::string bus;
  double e_pu = 1.0;
  double angle_deg = 0.0;
  Complex z1_th;
  Complex z0_th;
  bool operator==(const GridSource&) const = default;
};

struct Load {
  std::string id;
  std::string bus;
  double s_kva = 0.0;
  double pf = 1.0;  // lagging
  int customers = 0;
  bool operator==(const Load&) const = default;
};

struct DgProtectionSettings {
  double islanding_trip_delay_s = 0.16;
  double overcurrent_pickup_multiple = 3.0;  // of machine rated current
  double overcurrent_delay_s = 1.0;
  bool operator==(const DgProtectionSettings&) const = default;
};

enum class ReactiveMode { supplying, absorbing };

struct DgUnit {
  std::string id = "DG";
  std::optional<std::string> bus;  // placement; set per scenario
  double p_mw = 1.2;
  double pf = 0.8;
  ReactiveMode reactive = ReactiveMode::supplying;
  double xd_2prime_pu = 0.27;  // machine base
  double mva_base = 1.5;
  std::optional<double> x0_pu;  // grounded neutral when set; otherwise no zero-sequence path
  DgProtectionSettings protection;
  bool operator==(const DgUnit&) const = default;

  [[nodiscard]] double q_mvar() const;
  [[nodiscard]] double rated_current_a(double kv_ll) const;
};

enum class DeviceKind { breaker, recloser, fuse, directional_relay };

const char* to_string(DeviceKind kind);
std::optional<DeviceKind> device_kind_from_string(const std::string& s);

/// Replacement settings applied when the network is run in directional mode.
struct DeviceUpgrade {
  DeviceKind kind = DeviceKind::directional_relay;
  double pickup_a = 0.0;
  TccCurve curve;
  double interrupt_delay_s = 0.0;
  bool operator==(const DeviceUpgrade&) const = default;
};

struct DeviceSpec {
  std::string id;
  std::string branch;  // branch id, or a source id for source breakers
  DeviceKind kind = DeviceKind::fuse;
  double pickup_a = 0.0;
  TccCurve curve;
  std::vector<double> reclose_program;  // wait times, seconds
  double interrupt_delay_s = 0.0;
  double reclose_dead_time_s = 0.4;
  std::string forward_from;  // bus on the source side of the device
  std::optional<DeviceUpgrade> directional_upgrade;
  bool operator==(const DeviceSpec&) const = default;

  [[nodiscard]] bool recloses() const { return !reclose_program.empty(); }
};

struct Network {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<GridSource> sources;
  std::vector<Load> loads;
  std::vector<DeviceSpec> devices;
  std::optional<DgUnit> dg;
  double base_mva = 10.0;
  double frequency_hz = 60.0;
  std::map<std::string, std::string> area_aliases;  // alias -> member bus
  bool operator==(const Network&) const = default;

  [[nodiscard]] std::optional<std::size_t> bus_index(const std::string& id) const;
  [[nodiscard]] std::optional<std::size_t> branch_index(const std::string& id) const;
  [[nodiscard]] std::optional<std::size_t> source_index(const std::string& id) const;
  [[nodiscard]] std::optional<std::size_t> device_index(const std::string& id) const;
  [[nodiscard]] int total_customers() const;
};

enum class DeviceMode { asbuilt, directional };

const char* to_string(DeviceMode mode);

/// Copy of `net` with every device that carries an upgrade replaced by it.
Network apply_device_mode(const Network& net, DeviceMode mode);

/// Copy of `net` with the DG placed at `bus` (or removed when nullopt).
Network with_dg_at(const Network& net, const std::optional<std::string>& bus);

/// Open/closed flag per device (network order) plus DG availability.
struct SwitchState {
  std::vector<bool> device_open;
  bool dg_online = false;

  static SwitchState all_closed(const Network& net, bool dg_online = false);
  bool operator==(const SwitchState&) const = default;
};

struct Violation {
  std::string entity;
  std::string message;
};

std::vector<Violation> validate(const Network& net);

struct AreaMap {
  std::map<std::string, std::string> area_of_bus;
  std::vector<std::string> labels;  // sorted

  [[nodiscard]] std::vector<std::string> buses_in(const std::string& label) const;
  [[nodiscard]] std::size_t size() const { return labels.size(); }
};

AreaMap partition_areas(const Network& net);

/// Buses connected to an online source through closed devices.
/// `include_dg` lets the DG act as a source when it is online.
std::set<std::string> energized_buses(const Network& net, const SwitchState& state, bool include_dg = true);

/// Island membership: component id per bus index (closed elements only).
std::vector<int> bus_components(const Network& net, const SwitchState& state);

/// Head-of-area bus (electrically closest to a grid source) and the DG
/// installation bus (electrically farthest) for every area.
struct AreaSites {
  std::string fault_bus;
  std::string dg_bus;
};
std::map<std::string, AreaSites> area_sites(const Network& net, const AreaMap& areas);

}  // namespace dgrel
