#include "dgrel/network_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include "dgrel/errors.hpp"
#include "json.hpp"

namespace dgrel {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ParseError(path + ": " + msg); }

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "/" + key, "missing required field");
  return *it;
}

double get_number(const json& obj, const char* key, const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_number()) fail(path + "/" + key, "expected a number");
  return v.get<double>();
}

double get_number_or(const json& obj, const char* key, double fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  return get_number(obj, key, path);
}

std::string get_string(const json& obj, const char* key, const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_string()) fail(path + "/" + key, "expected a string");
  return v.get<std::string>();
}

const json& get_array(const json& obj, const char* key, const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_array()) fail(path + "/" + key, "expected an array");
  return v;
}

Complex get_complex(const json& obj, const char* key, const std::string& path) {
  const auto& v = require(obj, key, path);
  const std::string p = path + "/" + key;
  return {get_number(v, "r", p), get_number(v, "x", p)};
}

TccCurve get_curve(const json& obj, const char* key, const std::string& path) {
  const auto& arr = get_array(obj, key, path);
  TccCurve c;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = path + "/" + key + "/" + std::to_string(i);
    c.points.push_back({get_number(arr[i], "multiple", p), get_number(arr[i], "time_s", p)});
  }
  return c;
}

DeviceKind get_kind(const json& obj, const std::string& path) {
  const auto s = get_string(obj, "kind", path);
  auto k = device_kind_from_string(s);
  if (!k) fail(path + "/kind", "unknown device kind '" + s + "'");
  return *k;
}

json complex_json(Complex z) { return json{{"r", z.real()}, {"x", z.imag()}}; }

json curve_json(const TccCurve& c) {
  json arr = json::array();
  for (const auto& p : c.points) arr.push_back({{"multiple", p.multiple}, {"time_s", p.time_s}});
  return arr;
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

// Referential integrity and uniqueness; other invariants are reported by validate().
void check_references(const Network& net) {
  for (const auto& v : validate(net)) {
    const auto& m = v.message;
    if (m.rfind("duplicate", 0) == 0 || m.find("unknown") != std::string::npos)
      throw ParseError(v.entity + ": " + m);
  }
}

}  // namespace

Network parse_network(const std::string& document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError("syntax error at line " + std::to_string(line_of(document, e.byte)) + ": " + e.what());
  }
  if (!doc.is_object()) fail("", "document must be a JSON object");

  Network net;
  net.base_mva = get_number_or(doc, "base_mva", 10.0, "");
  net.frequency_hz = get_number_or(doc, "frequency_hz", 60.0, "");

  const auto& buses = get_array(doc, "buses", "");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string p = "/buses/" + std::to_string(i);
    net.buses.push_back({get_string(buses[i], "id", p), get_number_or(buses[i], "nominal_kv", 4.0, p)});
  }
  const auto& branches = get_array(doc, "branches", "");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const std::string p = "/branches/" + std::to_string(i);
    const auto& b = branches[i];
    net.branches.push_back({get_string(b, "id", p), get_string(b, "from", p), get_string(b, "to", p),
                            get_complex(b, "z1", p), get_complex(b, "z0", p)});
  }
  const auto& sources = get_array(doc, "sources", "");
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const std::string p = "/sources/" + std::to_string(i);
    const auto& s = sources[i];
    net.sources.push_back({get_string(s, "id", p), get_string(s, "bus", p), get_number_or(s, "e_pu", 1.0, p),
                           get_number_or(s, "angle_deg", 0.0, p), get_complex(s, "z1_th", p),
                           get_complex(s, "z0_th", p)});
  }
  const auto& loads = get_array(doc, "loads", "");
  for (std::size_t i = 0; i < loads.size(); ++i) {
    const std::string p = "/loads/" + std::to_string(i);
    const auto& l = loads[i];
    const double customers = get_number_or(l, "customers", 1.0, p);
    if (customers != static_cast<int>(customers)) fail(p + "/customers", "expected an integer");
    net.loads.push_back({get_string(l, "id", p), get_string(l, "bus", p), get_number(l, "s_kva", p),
                         get_number(l, "pf", p), static_cast<int>(customers)});
  }
  const auto& devices = get_array(doc, "devices", "");
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const std::string p = "/devices/" + std::to_string(i);
    const auto& d = devices[i];
    DeviceSpec spec;
    spec.id = get_string(d, "id", p);
    const bool has_branch = d.contains("branch");
    const bool has_source = d.contains("source");
    if (has_branch == has_source) fail(p, "exactly one of 'branch' or 'source' is required");
    spec.branch = get_string(d, has_branch ? "branch" : "source", p);
    spec.kind = get_kind(d, p);
    spec.pickup_a = get_number(d, "pickup_a", p);
    spec.curve = get_curve(d, "curve", p);
    if (d.contains("reclose_program")) {
      const auto& rp = get_array(d, "reclose_program", p);
      for (std::size_t k = 0; k < rp.size(); ++k) {
        if (!rp[k].is_number()) fail(p + "/reclose_program/" + std::to_string(k), "expected a number");
        spec.reclose_program.push_back(rp[k].get<double>());
      }
    }
    spec.interrupt_delay_s = get_number_or(d, "interrupt_delay_s", 0.0, p);
    spec.reclose_dead_time_s = get_number_or(d, "reclose_dead_time_s", 0.4, p);
    if (d.contains("forward_from")) spec.forward_from = get_string(d, "forward_from", p);
    if (d.contains("directional_upgrade") && !d["directional_upgrade"].is_null()) {
      const auto& u = d["directional_upgrade"];
      const std::string up = p + "/directional_upgrade";
      DeviceUpgrade upg;
      upg.kind = u.contains("kind") ? get_kind(u, up) : DeviceKind::directional_relay;
      upg.pickup_a = get_number(u, "pickup_a", up);
      upg.curve = get_curve(u, "curve", up);
      upg.interrupt_delay_s = get_number_or(u, "interrupt_delay_s", 0.0, up);
      spec.directional_upgrade = upg;
    }
    net.devices.push_back(std::move(spec));
  }
  // Source breakers face into the network from the source bus.
  for (auto& d : net.devices) {
    if (auto s = net.source_index(d.branch); s && d.forward_from.empty()) d.forward_from = net.sources[*s].bus;
    if (d.forward_from.empty()) fail("/devices/" + d.id, "forward_from is required for branch devices");
  }

  if (doc.contains("dg") && !doc["dg"].is_null()) {
    const auto& g = doc["dg"];
    const std::string p = "/dg";
    DgUnit dg;
    if (g.contains("id")) dg.id = get_string(g, "id", p);
    if (g.contains("bus") && !g["bus"].is_null()) dg.bus = get_string(g, "bus", p);
    dg.p_mw = get_number(g, "p_mw", p);
    dg.pf = get_number(g, "pf", p);
    if (g.contains("reactive")) {
      const auto r = get_string(g, "reactive", p);
      if (r == "supplying") dg.reactive = ReactiveMode::supplying;
      else if (r == "absorbing") dg.reactive = ReactiveMode::absorbing;
      else fail(p + "/reactive", "expected 'supplying' or 'absorbing'");
    }
    dg.xd_2prime_pu = get_number(g, "xd_2prime_pu", p);
    dg.mva_base = get_number_or(g, "mva_base", dg.p_mw / dg.pf, p);
    if (g.contains("x0_pu") && !g["x0_pu"].is_null()) dg.x0_pu = get_number(g, "x0_pu", p);
    if (g.contains("protection")) {
      const auto& pr = g["protection"];
      const std::string pp = p + "/protection";
      dg.protection.islanding_trip_delay_s = get_number_or(pr, "islanding_trip_delay_s", 0.16, pp);
      dg.protection.overcurrent_pickup_multiple = get_number_or(pr, "overcurrent_pickup_multiple", 3.0, pp);
      dg.protection.overcurrent_delay_s = get_number_or(pr, "overcurrent_delay_s", 1.0, pp);
    }
    net.dg = dg;
  }
  if (doc.contains("area_aliases")) {
    const auto& aa = doc["area_aliases"];
    if (!aa.is_object()) fail("/area_aliases", "expected an object");
    for (const auto& [alias, bus] : aa.items()) {
      if (!bus.is_string()) fail("/area_aliases/" + alias, "expected a bus id");
      net.area_aliases[alias] = bus.get<std::string>();
    }
  }
  check_references(net);
  return net;
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(std::make_error_code(std::errc::no_such_file_or_directory),
                                   "file not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str());
}

std::string serialize_network(const Network& net) {
  json doc = json::object();
  doc["base_mva"] = net.base_mva;
  doc["frequency_hz"] = net.frequency_hz;
  doc["buses"] = json::array();
  for (const auto& b : net.buses) doc["buses"].push_back({{"id", b.id}, {"nominal_kv", b.nominal_kv}});
  doc["branches"] = json::array();
  for (const auto& b : net.branches)
    doc["branches"].push_back(
        {{"id", b.id}, {"from", b.from_bus}, {"to", b.to_bus}, {"z1", complex_json(b.z1)}, {"z0", complex_json(b.z0)}});
  doc["sources"] = json::array();
  for (const auto& s : net.sources)
    doc["sources"].push_back({{"id", s.id},
                              {"bus", s.bus},
                              {"e_pu", s.e_pu},
                              {"angle_deg", s.angle_deg},
                              {"z1_th", complex_json(s.z1_th)},
                              {"z0_th", complex_json(s.z0_th)}});
  doc["loads"] = json::array();
  for (const auto& l : net.loads)
    doc["loads"].push_back(
        {{"id", l.id}, {"bus", l.bus}, {"s_kva", l.s_kva}, {"pf", l.pf}, {"customers", l.customers}});
  doc["devices"] = json::array();
  for (const auto& d : net.devices) {
    json j = {{"id", d.id}};
    j[net.source_index(d.branch) && !net.branch_index(d.branch) ? "source" : "branch"] = d.branch;
    j["kind"] = to_string(d.kind);
    j["pickup_a"] = d.pickup_a;
    j["curve"] = curve_json(d.curve);
    j["reclose_program"] = d.reclose_program;
    j["interrupt_delay_s"] = d.interrupt_delay_s;
    j["reclose_dead_time_s"] = d.reclose_dead_time_s;
    j["forward_from"] = d.forward_from;
    if (d.directional_upgrade) {
      const auto& u = *d.directional_upgrade;
      j["directional_upgrade"] = {{"kind", to_string(u.kind)},
                                  {"pickup_a", u.pickup_a},
                                  {"curve", curve_json(u.curve)},
                                  {"interrupt_delay_s", u.interrupt_delay_s}};
    }
    doc["devices"].push_back(std::move(j));
  }
  if (net.dg) {
    const auto& g = *net.dg;
    json j = {{"id", g.id},
              {"p_mw", g.p_mw},
              {"pf", g.pf},
              {"reactive", g.reactive == ReactiveMode::supplying ? "supplying" : "absorbing"},
              {"xd_2prime_pu", g.xd_2prime_pu},
              {"mva_base", g.mva_base},
              {"protection",
               {{"islanding_trip_delay_s", g.protection.islanding_trip_delay_s},
                {"overcurrent_pickup_multiple", g.protection.overcurrent_pickup_multiple},
                {"overcurrent_delay_s", g.protection.overcurrent_delay_s}}}};
    j["bus"] = g.bus ? json(*g.bus) : json(nullptr);
    j["x0_pu"] = g.x0_pu ? json(*g.x0_pu) : json(nullptr);
    doc["dg"] = std::move(j);
  } else {
    doc["dg"] = nullptr;
  }
  doc["area_aliases"] = json::object();
  for (const auto& [alias, bus] : net.area_aliases) doc["area_aliases"][alias] = bus;
  return doc.dump(2) + "\n";
}

}  // namespace dgrel
