#include "dgrel/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>

namespace dgrel {

double Bus::phase_volts() const { return nominal_kv * 1000.0 / std::sqrt(3.0); }

double DgUnit::q_mvar() const {
  const double q = p_mw * std::tan(std::acos(pf));
  return reactive == ReactiveMode::supplying ? q : -q;
}

double DgUnit::rated_current_a(double kv_ll) const { return mva_base * 1000.0 / (std::sqrt(3.0) * kv_ll); }

const char* to_string(DeviceKind kind) {
  switch (kind) {
    case DeviceKind::breaker: return "breaker";
    case DeviceKind::recloser: return "recloser";
    case DeviceKind::fuse: return "fuse";
    case DeviceKind::directional_relay: return "directional_relay";
  }
  return "?";
}

std::optional<DeviceKind> device_kind_from_string(const std::string& s) {
  if (s == "breaker") return DeviceKind::breaker;
  if (s == "recloser") return DeviceKind::recloser;
  if (s == "fuse") return DeviceKind::fuse;
  if (s == "directional_relay") return DeviceKind::directional_relay;
  return std::nullopt;
}

const char* to_string(DeviceMode mode) { return mode == DeviceMode::asbuilt ? "asbuilt" : "directional"; }

namespace {

template <class T>
std::optional<std::size_t> find_id(const std::vector<T>& items, const std::string& id) {
  for (std::size_t i = 0; i < items.size(); ++i)
    if (items[i].id == id) return i;
  return std::nullopt;
}

// Small union-find over bus indices.
struct Dsu {
  std::vector<int> parent;
  explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::optional<std::size_t> Network::bus_index(const std::string& id) const { return find_id(buses, id); }
std::optional<std::size_t> Network::branch_index(const std::string& id) const { return find_id(branches, id); }
std::optional<std::size_t> Network::source_index(const std::string& id) const { return find_id(sources, id); }
std::optional<std::size_t> Network::device_index(const std::string& id) const { return find_id(devices, id); }

int Network::total_customers() const {
  int n = 0;
  for (const auto& l : loads) n += l.customers;
  return n;
}

Network apply_device_mode(const Network& net, DeviceMode mode) {
  Network out = net;
  if (mode == DeviceMode::asbuilt) return out;
  for (auto& d : out.devices) {
    if (!d.directional_upgrade) continue;
    const DeviceUpgrade up = *d.directional_upgrade;
    d.kind = up.kind;
    d.pickup_a = up.pickup_a;
    d.curve = up.curve;
    d.interrupt_delay_s = up.interrupt_delay_s;
    d.reclose_program.clear();
    d.directional_upgrade.reset();
  }
  return out;
}

Network with_dg_at(const Network& net, const std::optional<std::string>& bus) {
  Network out = net;
  if (out.dg) out.dg->bus = bus;
  return out;
}

SwitchState SwitchState::all_closed(const Network& net, bool dg_online) {
  return SwitchState{std::vector<bool>(net.devices.size(), false), dg_online};
}

namespace {

// Elements interrupted by an open device.
struct OpenElements {
  std::vector<bool> branch_open;
  std::vector<bool> source_open;
};

OpenElements open_elements(const Network& net, const SwitchState& state) {
  OpenElements o{std::vector<bool>(net.branches.size(), false), std::vector<bool>(net.sources.size(), false)};
  for (std::size_t d = 0; d < net.devices.size(); ++d) {
    if (d >= state.device_open.size() || !state.device_open[d]) continue;
    if (auto b = net.branch_index(net.devices[d].branch)) o.branch_open[*b] = true;
    else if (auto s = net.source_index(net.devices[d].branch)) o.source_open[*s] = true;
  }
  return o;
}

}  // namespace

std::vector<int> bus_components(const Network& net, const SwitchState& state) {
  const auto open = open_elements(net, state);
  Dsu dsu(net.buses.size());
  for (std::size_t i = 0; i < net.branches.size(); ++i) {
    if (open.branch_open[i]) continue;
    auto a = net.bus_index(net.branches[i].from_bus);
    auto b = net.bus_index(net.branches[i].to_bus);
    if (a && b) dsu.unite(static_cast<int>(*a), static_cast<int>(*b));
  }
  std::vector<int> comp(net.buses.size());
  for (std::size_t i = 0; i < comp.size(); ++i) comp[i] = dsu.find(static_cast<int>(i));
  return comp;
}

std::set<std::string> energized_buses(const Network& net, const SwitchState& state, bool include_dg) {
  const auto open = open_elements(net, state);
  const auto comp = bus_components(net, state);
  std::set<int> live;
  for (std::size_t s = 0; s < net.sources.size(); ++s) {
    if (open.source_open[s]) continue;
    if (auto b = net.bus_index(net.sources[s].bus)) live.insert(comp[*b]);
  }
  if (include_dg && state.dg_online && net.dg && net.dg->bus) {
    if (auto b = net.bus_index(*net.dg->bus)) live.insert(comp[*b]);
  }
  std::set<std::string> out;
  for (std::size_t i = 0; i < net.buses.size(); ++i)
    if (live.count(comp[i])) out.insert(net.buses[i].id);
  return out;
}

std::vector<Violation> validate(const Network& net) {
  std::vector<Violation> v;
  auto dup_check = [&v](const auto& items, const char* kind) {
    std::set<std::string> seen;
    for (const auto& it : items)
      if (!seen.insert(it.id).second) v.push_back({it.id, std::string("duplicate ") + kind + " id"});
  };
  dup_check(net.buses, "bus");
  dup_check(net.branches, "branch");
  dup_check(net.sources, "source");
  dup_check(net.loads, "load");
  dup_check(net.devices, "device");

  for (const auto& b : net.buses)
    if (!(b.nominal_kv > 0.0)) v.push_back({b.id, "nominal_kv must be positive"});

  for (const auto& br : net.branches) {
    if (!net.bus_index(br.from_bus)) v.push_back({br.id, "unknown from_bus '" + br.from_bus + "'"});
    if (!net.bus_index(br.to_bus)) v.push_back({br.id, "unknown to_bus '" + br.to_bus + "'"});
    if (br.from_bus == br.to_bus) v.push_back({br.id, "branch connects a bus to itself"});
    if (br.z1.real() < 0.0 || br.z0.real() < 0.0) v.push_back({br.id, "negative resistance"});
    if (!(std::abs(br.z1) > 0.0)) v.push_back({br.id, "|z1| must be positive"});
  }
  for (const auto& s : net.sources) {
    if (!net.bus_index(s.bus)) v.push_back({s.id, "unknown bus '" + s.bus + "'"});
    if (!(std::abs(s.z1_th) > 0.0)) v.push_back({s.id, "|z1_th| must be positive"});
    if (!(std::abs(s.z0_th) > 0.0)) v.push_back({s.id, "|z0_th| must be positive"});
    if (!(s.e_pu > 0.0)) v.push_back({s.id, "e_pu must be positive"});
  }
  for (const auto& l : net.loads) {
    if (!net.bus_index(l.bus)) v.push_back({l.id, "unknown bus '" + l.bus + "'"});
    if (l.s_kva < 0.0) v.push_back({l.id, "s_kva must be non-negative"});
    if (!(l.pf > 0.0 && l.pf <= 1.0)) v.push_back({l.id, "pf must be in (0, 1]"});
    if (l.customers < 0) v.push_back({l.id, "customers must be non-negative"});
  }
  std::set<std::string> guarded;
  for (const auto& d : net.devices) {
    const bool on_branch = net.branch_index(d.branch).has_value();
    const bool on_source = net.source_index(d.branch).has_value();
    if (!on_branch && !on_source) v.push_back({d.id, "unknown branch '" + d.branch + "'"});
    else if (!guarded.insert(d.branch).second) v.push_back({d.id, "element '" + d.branch + "' already has a device"});
    if (!(d.pickup_a > 0.0)) v.push_back({d.id, "pickup_a must be positive"});
    if (auto msg = d.curve.check(); !msg.empty()) v.push_back({d.id, msg});
    if (!d.recloses() && d.kind != DeviceKind::fuse && d.kind != DeviceKind::directional_relay)
      v.push_back({d.id, "empty reclose program requires a fuse or directional relay"});
    if (d.kind == DeviceKind::fuse && d.recloses()) v.push_back({d.id, "fuses cannot reclose"});
    for (double w : d.reclose_program)
      if (!(w > 0.0)) v.push_back({d.id, "reclose waits must be positive"});
    if (d.interrupt_delay_s < 0.0) v.push_back({d.id, "interrupt_delay_s must be non-negative"});
    if (on_branch) {
      const auto& br = net.branches[*net.branch_index(d.branch)];
      if (d.forward_from != br.from_bus && d.forward_from != br.to_bus)
        v.push_back({d.id, "forward_from must be an end of branch '" + br.id + "'"});
    }
    if (d.directional_upgrade) {
      if (!(d.directional_upgrade->pickup_a > 0.0)) v.push_back({d.id, "upgrade pickup_a must be positive"});
      if (auto msg = d.directional_upgrade->curve.check(); !msg.empty()) v.push_back({d.id, "upgrade " + msg});
    }
  }
  if (net.dg) {
    const auto& g = *net.dg;
    if (!(g.p_mw > 0.0)) v.push_back({g.id, "p_mw must be positive"});
    if (!(g.pf > 0.0 && g.pf <= 1.0)) v.push_back({g.id, "pf must be in (0, 1]"});
    if (!(g.xd_2prime_pu > 0.0)) v.push_back({g.id, "xd_2prime_pu must be positive"});
    if (!(g.mva_base > 0.0)) v.push_back({g.id, "mva_base must be positive"});
    if (g.bus && !net.bus_index(*g.bus)) v.push_back({g.id, "unknown bus '" + *g.bus + "'"});
    const auto& p = g.protection;
    if (!(p.islanding_trip_delay_s > 0.0 && p.overcurrent_delay_s > 0.0))
      v.push_back({g.id, "protection delays must be positive"});
  }
  for (const auto& [alias, bus] : net.area_aliases)
    if (!net.bus_index(bus)) v.push_back({alias, "area alias names unknown bus '" + bus + "'"});

  if (!net.buses.empty()) {
    const auto comp = bus_components(net, SwitchState::all_closed(net));
    for (std::size_t i = 0; i < net.buses.size(); ++i)
      if (comp[i] != comp[0]) v.push_back({net.buses[i].id, "bus is not connected to the network"});
  }
  if (net.sources.empty()) v.push_back({"network", "at least one grid source is required"});
  return v;
}

std::vector<std::string> AreaMap::buses_in(const std::string& label) const {
  std::vector<std::string> out;
  for (const auto& [bus, area] : area_of_bus)
    if (area == label) out.push_back(bus);
  return out;
}

AreaMap partition_areas(const Network& net) {
  std::set<std::string> device_branches;
  for (const auto& d : net.devices) device_branches.insert(d.branch);
  Dsu dsu(net.buses.size());
  for (const auto& br : net.branches) {
    if (device_branches.count(br.id)) continue;
    auto a = net.bus_index(br.from_bus);
    auto b = net.bus_index(br.to_bus);
    if (a && b) dsu.unite(static_cast<int>(*a), static_cast<int>(*b));
  }
  std::map<int, std::string> smallest;
  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    const int r = dsu.find(static_cast<int>(i));
    auto it = smallest.find(r);
    if (it == smallest.end() || net.buses[i].id < it->second) smallest[r] = net.buses[i].id;
  }
  std::map<int, std::string> label;
  for (const auto& [r, id] : smallest) label[r] = id;
  for (const auto& [alias, bus] : net.area_aliases)
    if (auto b = net.bus_index(bus)) label[dsu.find(static_cast<int>(*b))] = alias;

  AreaMap out;
  for (std::size_t i = 0; i < net.buses.size(); ++i)
    out.area_of_bus[net.buses[i].id] = label[dsu.find(static_cast<int>(i))];
  for (const auto& [r, l] : label) out.labels.push_back(l);
  std::sort(out.labels.begin(), out.labels.end());
  return out;
}

std::map<std::string, AreaSites> area_sites(const Network& net, const AreaMap& areas) {
  const std::size_t n = net.buses.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (const auto& s : net.sources) {
    if (auto b = net.bus_index(s.bus)) {
      dist[*b] = 0.0;
      pq.push({0.0, *b});
    }
  }
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (const auto& br : net.branches) {
    auto a = net.bus_index(br.from_bus);
    auto b = net.bus_index(br.to_bus);
    if (!a || !b) continue;
    adj[*a].push_back({*b, std::abs(br.z1)});
    adj[*b].push_back({*a, std::abs(br.z1)});
  }
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (auto [w, len] : adj[u]) {
      if (d + len < dist[w]) {
        dist[w] = d + len;
        pq.push({dist[w], w});
      }
    }
  }
  std::map<std::string, AreaSites> out;
  std::map<std::string, std::pair<double, double>> best;  // label -> (min, max)
  for (std::size_t i = 0; i < n; ++i) {
    const auto& id = net.buses[i].id;
    const auto& label = areas.area_of_bus.at(id);
    auto [it, fresh] = best.try_emplace(label, dist[i], dist[i]);
    auto& sites = out[label];
    if (fresh) {
      sites = {id, id};
      continue;
    }
    // Ties go to the lexicographically smallest bus id.
    if (dist[i] < it->second.first || (dist[i] == it->second.first && id < sites.fault_bus)) {
      it->second.first = dist[i];
      sites.fault_bus = id;
    }
    if (dist[i] > it->second.second || (dist[i] == it->second.second && id < sites.dg_bus)) {
      it->second.second = dist[i];
      sites.dg_bus = id;
    }
  }
  return out;
}

}  // namespace dgrel
