#include <doctest.h>

#include <algorithm>
#include <random>
#include <system_error>

#include "dgrel/errors.hpp"
#include "support.hpp"

using namespace dgrel;
using testsupport::reference;

namespace {

std::set<std::string> buses_of(const AreaMap& m, const std::vector<std::string>& labels) {
  std::set<std::string> out;
  for (const auto& l : labels)
    for (const auto& b : m.buses_in(l)) out.insert(b);
  return out;
}

SwitchState with_open(const Network& net, const std::vector<std::string>& ids, bool dg_online) {
  auto st = SwitchState::all_closed(net, dg_online);
  for (const auto& id : ids) st.device_open[*net.device_index(id)] = true;
  return st;
}

}  // namespace

TEST_SUITE("netmodel") {
  TEST_CASE("reference dataset parses into the loop with eight devices and seven areas") {
    const auto& net = reference();
    CHECK(net.devices.size() == 8);
    CHECK(net.sources.size() == 2);
    CHECK(validate(net).empty());
    const auto areas = partition_areas(net);
    CHECK(areas.labels == std::vector<std::string>{"A", "B", "C", "D", "E", "F", "G"});
    CHECK(net.loads.size() >= 35);
    CHECK(net.loads.size() <= 45);
    CHECK(net.total_customers() == static_cast<int>(net.loads.size()));
  }

  TEST_CASE("area A is bounded by devices 01, 03 and 04") {
    const auto& net = reference();
    const auto areas = partition_areas(net);
    std::set<std::string> bounding;
    for (const auto& d : net.devices) {
      std::vector<std::string> ends;
      if (auto b = net.branch_index(d.branch)) {
        ends = {net.branches[*b].from_bus, net.branches[*b].to_bus};
      } else {
        ends = {net.sources[*net.source_index(d.branch)].bus};
      }
      for (const auto& e : ends)
        if (areas.area_of_bus.at(e) == "A") bounding.insert(d.id);
    }
    CHECK(bounding == std::set<std::string>{"01", "03", "04"});
  }

  TEST_CASE("minimal two-bus document is a valid one-area network") {
    const auto doc = R"({
      "base_mva": 10, "frequency_hz": 60,
      "buses": [{"id": "N1", "nominal_kv": 4.0}, {"id": "N2", "nominal_kv": 4.0}],
      "branches": [{"id": "L1", "from": "N1", "to": "N2", "z1": {"r": 0.1, "x": 0.2}, "z0": {"r": 0.3, "x": 0.6}}],
      "sources": [{"id": "S", "bus": "N1", "z1_th": {"r": 0.01, "x": 0.1}, "z0_th": {"r": 0.01, "x": 0.08}}],
      "loads": [{"id": "LD", "bus": "N2", "s_kva": 100, "pf": 0.9, "customers": 3}],
      "devices": [], "dg": null, "area_aliases": {}
    })";
    const auto net = parse_network(doc);
    CHECK(validate(net).empty());
    CHECK(partition_areas(net).size() == 1);
    CHECK(net.total_customers() == 3);
  }

  TEST_CASE("load on an unknown bus is a dangling reference naming the id") {
    auto text = serialize_network(testsupport::two_bus());
    const auto pos = text.find("\"bus\": \"N2\"");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 11, "\"bus\": \"NX\"");
    try {
      parse_network(text);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("NX") != std::string::npos);
    }
  }

  TEST_CASE("duplicate ids are rejected") {
    auto net = testsupport::two_bus();
    net.buses.push_back(net.buses[0]);
    CHECK_THROWS_AS(parse_network(serialize_network(net)), ParseError);
  }

  TEST_CASE("syntax errors report the line") {
    try {
      parse_network("{\n  \"buses\": [\n    {\"id\": \"N1\",,}\n  ]\n}");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }

  TEST_CASE("missing file reports file not found") {
    try {
      load_network("/nonexistent/net.json");
      FAIL("expected an error");
    } catch (const std::system_error& e) {
      CHECK(std::string(e.what()).find("file not found") != std::string::npos);
    }
  }

  TEST_CASE("disconnected bus gives exactly one connectivity violation") {
    auto net = testsupport::two_bus();
    net.buses.push_back({"N3", 4.0});
    const auto v = validate(net);
    REQUIRE(v.size() == 1);
    CHECK(v[0].entity == "N3");
  }

  TEST_CASE("device on a missing branch gives exactly one violation") {
    auto net = testsupport::two_bus();
    DeviceSpec d;
    d.id = "F1";
    d.branch = "nope";
    d.kind = DeviceKind::fuse;
    d.pickup_a = 100.0;
    d.curve = TccCurve{{{1.0, 1.0}, {10.0, 0.01}}};
    net.devices.push_back(d);
    const auto v = validate(net);
    REQUIRE(v.size() == 1);
    CHECK(v[0].message.find("nope") != std::string::npos);
  }

  TEST_CASE("network without devices is a single area") {
    auto net = reference();
    net.devices.clear();
    CHECK(partition_areas(net).size() == 1);
  }

  TEST_CASE("removing device 06 merges areas D and E") {
    auto net = reference();
    const auto before = partition_areas(net);
    net.devices.erase(net.devices.begin() + static_cast<long>(*net.device_index("06")));
    const auto after = partition_areas(net);
    CHECK(after.size() == 6);
    const auto& merged = after.area_of_bus.at("D1");
    CHECK(after.area_of_bus.at("E1") == merged);
    CHECK(after.buses_in(merged).size() == before.buses_in("D").size() + before.buses_in("E").size());
  }

  TEST_CASE("areas are a partition and do not depend on declaration order") {
    auto net = reference();
    const auto base = partition_areas(net);
    std::size_t total = 0;
    for (const auto& l : base.labels) total += base.buses_in(l).size();
    CHECK(total == net.buses.size());
    std::mt19937_64 rng(3);
    for (int k = 0; k < 5; ++k) {
      std::shuffle(net.buses.begin(), net.buses.end(), rng);
      std::shuffle(net.branches.begin(), net.branches.end(), rng);
      std::shuffle(net.devices.begin(), net.devices.end(), rng);
      CHECK(partition_areas(net).area_of_bus == base.area_of_bus);
    }
  }

  TEST_CASE("energized buses follow the switching state") {
    const auto& net = reference();
    const auto areas = partition_areas(net);
    CHECK(energized_buses(net, SwitchState::all_closed(net)).size() == net.buses.size());

    const auto cde = buses_of(areas, {"C", "D", "E"});
    const auto off = energized_buses(net, with_open(net, {"04"}, false));
    for (const auto& b : cde) CHECK(off.count(b) == 0);
    CHECK(off.size() == net.buses.size() - cde.size());

    const auto sites = area_sites(net, areas);
    const auto placed = with_dg_at(net, sites.at("C").dg_bus);
    const auto island = energized_buses(placed, with_open(placed, {"04"}, true));
    CHECK(island.size() == net.buses.size());
    CHECK(energized_buses(placed, with_open(placed, {"04"}, true), false).size() == off.size());
  }

  TEST_CASE("fault and DG sites follow the reference conventions") {
    const auto& net = reference();
    const auto sites = area_sites(net, partition_areas(net));
    CHECK(sites.at("A").fault_bus == "A1");
    CHECK(sites.at("C").fault_bus == "C1");
    CHECK(sites.at("C").dg_bus == "C3");
    CHECK(sites.at("E").dg_bus == "E2");
  }

  TEST_CASE("serialization round-trips") {
    const auto& net = reference();
    CHECK(parse_network(serialize_network(net)) == net);
    CHECK(serialize_network(parse_network(serialize_network(net))) == serialize_network(net));
    auto with = with_dg_at(net, std::string("C3"));
    with.dg->x0_pu = 0.1;
    CHECK(parse_network(serialize_network(with)) == with);
  }

  TEST_CASE("directional mode swaps every upgraded device") {
    const auto up = apply_device_mode(reference(), DeviceMode::directional);
    for (const auto& d : up.devices) {
      if (d.id == "04" || d.id == "05" || d.id == "06" || d.id == "07" || d.id == "08")
        CHECK(d.kind == DeviceKind::directional_relay);
      else
        CHECK(d.kind != DeviceKind::directional_relay);
    }
  }
}
