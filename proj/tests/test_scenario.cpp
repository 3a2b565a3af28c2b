#include <doctest.h>

#include "dgrel/calibration.hpp"
#include "dgrel/errors.hpp"
#include "dgrel/scenario.hpp"
#include "support.hpp"

using namespace dgrel;
using testsupport::reference;

namespace {

const SweepResult& asbuilt() {
  static const SweepResult r = sweep_all(reference(), DeviceMode::asbuilt);
  return r;
}

const SweepResult& directional() {
  static const SweepResult r = sweep_all(reference(), DeviceMode::directional);
  return r;
}

}  // namespace

TEST_SUITE("scenario") {
  TEST_CASE("DG is legitimate everywhere except D and E") {
    CHECK(legitimate_dg_areas(reference()) == std::set<std::string>{"A", "B", "C", "F", "G"});
  }

  TEST_CASE("illegitimate DG areas and unknown areas are refused") {
    const auto& net = reference();
    CHECK_THROWS_AS(sweep(net, {"A"}, {"D"}, DeviceMode::asbuilt), DomainRefusal);
    CHECK_THROWS_AS((void)Study::of(net).fault_in("Z"), DomainRefusal);
  }

  TEST_CASE("as-built sweep reproduces the reference impact table") {
    const auto& m = asbuilt().matrix;
    for (const auto& want : reference_impact_table()) {
      const auto& row = *std::find_if(m.rows.begin(), m.rows.end(),
                                      [&](const ImpactRow& r) { return r.fault_area == want.fault_area; });
      CAPTURE(want.fault_area);
      CHECK(row.baseline.report.permanently_open_devices == want.baseline);
      for (const auto& [dg, c] : row.with_dg) {
        CAPTURE(dg);
        const auto it = want.additional.find(dg);
        const std::set<std::string> expect = it == want.additional.end() ? std::set<std::string>{} : it->second;
        CHECK(c.impact.additional_devices == expect);
      }
    }
  }

  TEST_CASE("sweep counts") {
    CHECK(asbuilt().summary.possible_scenarios == 35);
    CHECK(asbuilt().summary.negative_scenarios == 19);
    CHECK(asbuilt().summary.percentage.rounded_percent() == 54);
    CHECK(directional().summary.possible_scenarios == 35);
    CHECK(directional().summary.negative_scenarios == 0);
  }

  TEST_CASE("directional devices never add to the as-built negative set") {
    const auto& a = asbuilt().matrix;
    const auto& d = directional().matrix;
    for (const auto& f : a.fault_areas) {
      const auto an = a.negative_dg_areas(f);
      for (const auto& dg : d.negative_dg_areas(f)) CHECK(std::find(an.begin(), an.end(), dg) != an.end());
    }
  }

  TEST_CASE("sequential and parallel sweeps render identically") {
    const auto& net = reference();
    for (auto mode : {DeviceMode::asbuilt, DeviceMode::directional}) {
      const auto one = sweep_all(net, mode, {1});
      const auto many = sweep_all(net, mode, {8});
      CHECK(render_report(one.matrix, one.summary) == render_report(many.matrix, many.summary));
      CHECK(render_sweep_csv(one.matrix) == render_sweep_csv(many.matrix));
    }
  }

  TEST_CASE("report ends with the summary line") {
    const auto text = render_report(asbuilt().matrix, asbuilt().summary);
    CHECK(text.find("| D | 05 | A, B, C, F, G | 04, 04, 04, 04, 04 |") != std::string::npos);
    CHECK(text.find("Percentage of scenarios with worse reliability index: 19/35 (54%)") != std::string::npos);
  }

  TEST_CASE("run_case classifies against the supplied baseline") {
    const auto& net = reference();
    const auto study = Study::of(net);
    const auto base = run_case(net, study, "B", std::nullopt, DeviceMode::asbuilt);
    const auto with = run_case(net, study, "B", "C", DeviceMode::asbuilt, &base.report);
    CHECK(with.impact.label == Impact::negative);
    CHECK(with.impact.additional_devices == std::set<std::string>{"04"});
    CHECK(with.report.customers_interrupted == 11);
  }
}
