#include <doctest.h>

#include <stdexcept>

#include "dgrel/reliability.hpp"
#include "support.hpp"

using namespace dgrel;
using testsupport::reference;

namespace {

ReliabilityReport report_with(std::set<std::string> open, int total = 41) {
  ReliabilityReport r;
  r.customers_total = total;
  r.permanently_open_devices = std::move(open);
  return r;
}

}  // namespace

TEST_SUITE("reliability") {
  TEST_CASE("rationals stay in lowest terms and round half up") {
    CHECK(Rational::of(19, 35).str() == "19/35");
    CHECK(Rational::of(10, 40).str() == "1/4");
    CHECK(Rational::of(0, 7).str() == "0/1");
    CHECK(Rational::of(19, 35).rounded_percent() == 54);
    CHECK(Rational::of(1, 8).rounded_percent() == 13);
    CHECK(Rational::of(1, 200).rounded_percent() == 1);
    CHECK_THROWS_AS(Rational::of(1, 0), std::invalid_argument);
    CHECK_THROWS_AS(Rational::of(-1, 3), std::invalid_argument);
  }

  TEST_CASE("nothing open means nobody is interrupted") {
    const auto& net = reference();
    const auto r = reliability_report(net, SwitchState::all_closed(net));
    CHECK(r.customers_total == 41);
    CHECK(r.customers_interrupted == 0);
    CHECK(r.saifi == Rational{0, 1});
  }

  TEST_CASE("fuse 04 open interrupts C, D and E even with the DG online") {
    const auto& net = with_dg_at(reference(), std::string("C3"));
    auto st = SwitchState::all_closed(net, true);
    st.device_open[*net.device_index("04")] = true;
    const auto r = reliability_report(net, st);
    CHECK(r.customers_interrupted == 11);
    CHECK(r.saifi == Rational::of(11, 41));
    CHECK(r.permanently_open_devices == std::set<std::string>{"04"});
    const auto areas = partition_areas(net);
    for (const auto& l : net.loads)
      if (areas.area_of_bus.at(l.bus) == "D") CHECK(r.interrupted_buses.count(l.bus) == 1);
    CHECK(r.interrupted_buses.count("A1") == 0);
  }

  TEST_CASE("interruptions grow with the set of open devices") {
    const auto& net = reference();
    auto st = SwitchState::all_closed(net);
    int prev = 0;
    for (const auto& id : {"06", "05", "04", "07", "08"}) {
      st.device_open[*net.device_index(id)] = true;
      const int now = reliability_report(net, st).customers_interrupted;
      CHECK(now > prev);
      prev = now;
    }
  }

  TEST_CASE("classification compares permanently open devices") {
    const auto base = report_with({"05"});
    CHECK(classify_impact(base, report_with({"05"})).label == Impact::neutral);
    const auto neg = classify_impact(base, report_with({"04", "05"}));
    CHECK(neg.label == Impact::negative);
    CHECK(neg.additional_devices == std::set<std::string>{"04"});
    const auto pos = classify_impact(base, report_with({}));
    CHECK(pos.label == Impact::positive);
    CHECK(pos.missing_devices == std::set<std::string>{"05"});
    CHECK(classify_impact(base, report_with({"04"})).label == Impact::negative);
    CHECK_THROWS_AS(classify_impact(base, report_with({}, 40)), std::invalid_argument);
  }
}
