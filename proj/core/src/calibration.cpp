#include "dgrel/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "dgrel/engine.hpp"
#include "dgrel/scenario.hpp"
#include "dgrel/solver.hpp"

namespace dgrel {

namespace {

constexpr double kLoadPf = 0.85;

std::string two_digit(int n) { return (n < 10 ? "0" : "") + std::to_string(n); }

TccCurve curve(std::initializer_list<TccPoint> pts) { return TccCurve{std::vector<TccPoint>(pts)}; }

TccCurve shifted(const TccCurve& c, double dt) {
  TccCurve out = c;
  for (auto& p : out.points) p.time_s += dt;
  return out;
}

}  // namespace

Network build_reference_network(const ReferenceParameters& p) {
  Network net;
  net.base_mva = 10.0;
  net.frequency_hz = 60.0;

  const std::map<std::string, int> bus_count = {{"A", 4}, {"B", 4}, {"C", 3}, {"D", 2},
                                                {"E", 2}, {"F", 2}, {"G", 2}};
  for (const auto& [area, n] : bus_count)
    for (int i = 1; i <= n; ++i) net.buses.push_back({area + std::to_string(i), 4.0});

  auto add_branch = [&](const std::string& from, const std::string& to, const std::string& section) {
    const auto& z = p.sections.at(section);
    net.branches.push_back({from + "-" + to, from, to, Complex(z.r, z.x),
                            Complex(z.r * p.line_r0_ratio, z.x * p.line_x0_ratio)});
    return net.branches.back().id;
  };
  add_branch("A1", "A2", "A");
  add_branch("A2", "A3", "A");
  add_branch("A3", "A4", "A");
  add_branch("B1", "B2", "B");
  add_branch("B2", "B3", "B");
  add_branch("B3", "B4", "B");
  const auto tie = add_branch("A4", "B4", "tie");
  const auto feed_c = add_branch("A3", "C1", "C");
  add_branch("C1", "C2", "C");
  add_branch("C2", "C3", "C");
  const auto feed_d = add_branch("C3", "D1", "D");
  add_branch("D1", "D2", "D");
  const auto feed_e = add_branch("D2", "E1", "E");
  add_branch("E1", "E2", "E");
  const auto feed_f = add_branch("B3", "F1", "F");
  add_branch("F1", "F2", "F");
  const auto feed_g = add_branch("B2", "G1", "G");
  add_branch("G1", "G2", "G");

  const Complex zs(p.source_r, p.source_x);
  net.sources.push_back({"S1", "A1", 1.0, 0.0, zs, zs * p.source_z0_ratio});
  net.sources.push_back({"S2", "B1", 1.0, p.source2_angle_deg, zs, zs * p.source_z0_ratio});

  for (const auto& [area, kva] : p.area_kva) {
    const int n = p.area_loads.at(area);
    const int buses = bus_count.at(area);
    for (int i = 0; i < n; ++i)
      net.loads.push_back({"L" + area + two_digit(i + 1), area + std::to_string(i % buses + 1), kva / n, kLoadPf, 1});
  }

  const auto breaker_curve =
      curve({{1.05, 30.0}, {p.breaker_knee_multiple, p.breaker_knee_time_s}, {p.breaker_last_multiple, 0.027}});
  const auto recloser_curve =
      curve({{1.05, 8.0}, {p.recloser_knee_multiple, p.recloser_knee_time_s}, {p.recloser_last_multiple, 0.16}});
  const auto fuse140 =
      curve({{kFuseMeltMultiple, 3.4}, {p.fuse04_knee_multiple, p.fuse04_knee_time_s}, {p.fuse04_last_multiple, 0.01}});
  auto fuse100 = [](double last) { return curve({{kFuseMeltMultiple, 0.64}, {last, 0.01}}); };

  auto breaker = [&](const std::string& id, const std::string& source, const std::string& bus) {
    DeviceSpec d;
    d.id = id;
    d.branch = source;
    d.kind = DeviceKind::breaker;
    d.pickup_a = 720.0;
    d.curve = breaker_curve;
    d.reclose_program = {30.0, 60.0, 90.0};
    d.interrupt_delay_s = 0.02;
    d.forward_from = bus;
    return d;
  };
  net.devices.push_back(breaker("01", "S1", "A1"));
  net.devices.push_back(breaker("02", "S2", "B1"));
  {
    DeviceSpec d;
    d.id = "03";
    d.branch = tie;
    d.kind = DeviceKind::recloser;
    d.pickup_a = 570.0;
    d.curve = recloser_curve;
    d.reclose_program = {100.0};
    d.interrupt_delay_s = 0.02;
    d.forward_from = "A4";
    net.devices.push_back(d);
  }
  auto fuse = [&](int n, const std::string& branch, const std::string& from, double pickup, TccCurve c,
                  int grade_steps) {
    DeviceSpec d;
    d.id = two_digit(n);
    d.branch = branch;
    d.kind = DeviceKind::fuse;
    d.pickup_a = pickup;
    d.curve = c;
    d.forward_from = from;
    d.directional_upgrade = DeviceUpgrade{DeviceKind::directional_relay, pickup, shifted(c, grade_steps * p.relay_grade_s),
                                          0.0};
    return d;
  };
  net.devices.push_back(fuse(4, feed_c, "A3", 140.0, fuse140, 2));
  net.devices.push_back(fuse(5, feed_d, "C3", 100.0, fuse100(p.fuse05_last_multiple), 1));
  net.devices.push_back(fuse(6, feed_e, "D2", 100.0, fuse100(p.fuse06_last_multiple), 0));
  net.devices.push_back(fuse(7, feed_f, "B3", 100.0, fuse100(p.fuse0708_last_multiple), 0));
  net.devices.push_back(fuse(8, feed_g, "B2", 100.0, fuse100(p.fuse0708_last_multiple), 0));

  DgUnit dg;
  dg.xd_2prime_pu = p.xd_2prime_pu;
  net.dg = dg;

  for (const auto& [area, n] : bus_count) net.area_aliases[area] = area + "1";
  return net;
}


// ---------------------------------------------------------------------------
// targets

CalibrationTargets reference_targets() {
  CalibrationTargets t;
  t.values = {
      {"b02_open_s", 0.055, 0.015, true},
      {"b02_peak_ka", 32.0, 0.25},
      {"b01_fault_nodg_ka", 2.6, 0.20},
      {"b01_fault_dg_ka", 2.1, 0.20},
      {"r03_fault_nodg_ka", 2.4, 0.20},
      {"r03_fault_dg_ka", 2.9, 0.20},
      {"f04_dg_contribution_a", 820.0, 0.20},
      {"f04_open_s", 0.325, 0.06, true},
      {"b01_prefault_a", 160.0, 0.10},
      {"b02_prefault_a", 240.0, 0.10},
      {"r03_prefault_a", 100.0, 0.10},
      {"b01_post_a", 200.0, 0.10},
      {"b02_post_a", 260.0, 0.10},
      {"r03_post_a", 80.0, 0.10},
      {"backfeed_D_05_a", 103.0, 0.10},
      {"backfeed_E_06_a", 114.0, 0.10},
  };
  return t;
}

const std::vector<ImpactRowExpectation>& reference_impact_table() {
  static const std::vector<ImpactRowExpectation> table = {
      {"A", {}, {{"C", {"04"}}, {"F", {"07"}}, {"G", {"08"}}}},
      {"B", {}, {{"C", {"04"}}, {"F", {"07"}}, {"G", {"08"}}}},
      {"C", {"04"}, {{"F", {"07"}}}},
      {"D", {"05"}, {{"A", {"04"}}, {"B", {"04"}}, {"C", {"04"}}, {"F", {"04"}}, {"G", {"04"}}}},
      {"E", {"06"}, {{"A", {"05"}}, {"B", {"05"}}, {"C", {"05"}}, {"F", {"05"}}, {"G", {"05"}}}},
      {"F", {"07"}, {{"G", {"08"}}}},
      {"G", {"08"}, {{"F", {"07"}}}},
  };
  return table;
}

// ---------------------------------------------------------------------------
// measurement

namespace {

const std::vector<std::string> kAreas = {"A", "B", "C", "D", "E", "F", "G"};
const std::vector<std::string> kDgAreas = {"", "A", "B", "C", "F", "G"};

// Device currents at fault inception, every device closed.
struct InceptionCurrents {
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> amps;

  double at(const std::string& fault, const std::string& dg, const std::string& device) const {
    return amps.at({fault, dg}).at(device);
  }
};

InceptionCurrents inception_currents(const Network& net, const Study& study) {
  InceptionCurrents out;
  for (const auto& f : kAreas) {
    for (const auto& g : kDgAreas) {
      const auto placed = with_dg_at(net, g.empty() ? std::nullopt : std::optional<std::string>(study.dg_bus(g)));
      const auto sol = solve_fault(placed, SwitchState::all_closed(placed, !g.empty()), study.fault_in(f));
      auto& row = out.amps[{f, g}];
      for (std::size_t d = 0; d < placed.devices.size(); ++d) row[placed.devices[d].id] = sol.i_device[d].amps;
    }
  }
  return out;
}

double peak_factor(const Network& net, const std::string& bus) {
  const auto st = SwitchState::all_closed(net);
  const Complex z = 2.0 * thevenin_at(net, st, bus, Sequence::positive) + thevenin_at(net, st, bus, Sequence::zero);
  return 1.02 + 0.98 * std::exp(-3.0 * z.real() / z.imag());
}

struct FaultWindow {
  std::map<std::string, double> max_amps;  // over fault-active intervals, while closed
  std::map<std::string, double> first_open;
  std::map<std::string, double> prefault;
  std::map<std::string, double> final;
};

FaultWindow observe(const Network& placed, const FaultSpec& fault) {
  const auto run = run_scenario(placed, fault);
  FaultWindow w;
  for (const auto& iv : run.timeline.intervals) {
    for (std::size_t d = 0; d < placed.devices.size(); ++d) {
      const auto& id = placed.devices[d].id;
      if (iv.fault_active) w.max_amps[id] = std::max(w.max_amps[id], iv.solution.i_device[d].amps);
    }
  }
  for (const auto& e : run.timeline.events)
    if (e.kind == EventKind::device_open && !w.first_open.count(e.subject)) w.first_open[e.subject] = e.time_s;
  if (!run.timeline.intervals.empty()) {
    const auto& first = run.timeline.intervals.front().solution;
    const auto& last = run.timeline.intervals.back().solution;
    for (std::size_t d = 0; d < placed.devices.size(); ++d) {
      w.prefault[placed.devices[d].id] = first.i_device[d].amps;
      w.final[placed.devices[d].id] = last.i_device[d].amps;
    }
  }
  return w;
}

double value_or(const std::map<std::string, double>& m, const std::string& k, double fallback) {
  auto it = m.find(k);
  return it == m.end() ? fallback : it->second;
}

}  // namespace

std::map<std::string, double> measure_reference(const Network& net) {
  const auto study = Study::of(net);
  std::map<std::string, double> m;
  const auto fault = study.fault_in("B");
  const double nan = std::numeric_limits<double>::quiet_NaN();

  const auto base = observe(with_dg_at(net, std::nullopt), fault);
  m["b02_open_s"] = value_or(base.first_open, "02", nan) - fault.t_on;
  m["b02_peak_ka"] = value_or(base.max_amps, "02", 0.0) * std::sqrt(2.0) * peak_factor(net, fault.bus) / 1000.0;
  m["b01_fault_nodg_ka"] = value_or(base.max_amps, "01", 0.0) / 1000.0;
  m["r03_fault_nodg_ka"] = value_or(base.max_amps, "03", 0.0) / 1000.0;

  const auto with_dg = observe(with_dg_at(net, study.dg_bus("C")), fault);
  m["f04_open_s"] = value_or(with_dg.first_open, "04", nan);
  m["f04_dg_contribution_a"] = value_or(with_dg.max_amps, "04", 0.0);
  m["b01_fault_dg_ka"] = value_or(with_dg.max_amps, "01", 0.0) / 1000.0;
  m["r03_fault_dg_ka"] = value_or(with_dg.max_amps, "03", 0.0) / 1000.0;
  m["b01_prefault_a"] = value_or(with_dg.prefault, "01", 0.0);
  m["b02_prefault_a"] = value_or(with_dg.prefault, "02", 0.0);
  m["r03_prefault_a"] = value_or(with_dg.prefault, "03", 0.0);
  m["b01_post_a"] = value_or(with_dg.final, "01", 0.0);
  m["b02_post_a"] = value_or(with_dg.final, "02", 0.0);
  m["r03_post_a"] = value_or(with_dg.final, "03", 0.0);

  for (const auto& [area, fuse] : std::vector<std::pair<std::string, std::string>>{
           {"C", "04"}, {"D", "05"}, {"E", "06"}, {"F", "07"}, {"G", "08"}})
    m["backfeed_" + area + "_" + fuse + "_a"] = backfeed_currents(net, study.dg_bus(area)).at(fuse);
  return m;
}

// ---------------------------------------------------------------------------
// thresholds and bands

namespace {

std::vector<Band> steady_bands(const Network& net, const std::map<std::string, double>& m) {
  std::vector<Band> bands = {
      {"DG in C keeps fuse 04 below pickup", m.at("backfeed_C_04_a"), 140.0},
      {"DG in F keeps fuse 07 below pickup", m.at("backfeed_F_07_a"), 100.0},
      {"DG in G keeps fuse 08 below pickup", m.at("backfeed_G_08_a"), 100.0},
      {"DG in D pushes fuse 05 above pickup", 100.0, m.at("backfeed_D_05_a")},
      {"DG in E pushes fuse 06 above pickup", 100.0, m.at("backfeed_E_06_a")},
  };
  // normal load flow must stay clear of every curve
  const auto sol = solve_steady_state(net, SwitchState::all_closed(net));
  for (std::size_t d = 0; d < net.devices.size(); ++d) {
    const auto& dev = net.devices[d];
    bands.push_back({"load current under device " + dev.id + " curve", std::max(sol.i_device[d].amps, 1.0),
                     dev.pickup_a * dev.curve.points.front().multiple});
  }
  return bands;
}

struct ThresholdBands {
  Band f04, f05, f06, f0708;
};

ThresholdBands threshold_bands(const InceptionCurrents& c) {
  ThresholdBands b;
  double lo4 = c.at("D", "", "04"), hi4 = std::numeric_limits<double>::infinity();
  for (const auto& g : kDgAreas) {
    lo4 = std::max(lo4, c.at("E", g, "04"));
    if (!g.empty()) hi4 = std::min(hi4, c.at("D", g, "04"));
  }
  lo4 = std::max({lo4, c.at("F", "C", "04"), c.at("G", "C", "04")});
  b.f04 = {"fuse 04 clamp: fault D with DG above, everything else below", lo4, hi4};

  double hi5 = c.at("D", "", "05");
  for (const auto& g : kDgAreas)
    if (!g.empty()) hi5 = std::min(hi5, c.at("E", g, "05"));
  b.f05 = {"fuse 05 clamp: fault E with DG above, fault E alone below", c.at("E", "", "05"), hi5};

  b.f06 = {"fuse 06 clamp: fault E reaches it", 100.0 * kFuseMeltMultiple * 1.5, c.at("E", "", "06")};

  const double lo78 = std::max({c.at("C", "G", "08"), c.at("D", "F", "07"), c.at("D", "G", "08"),
                                c.at("E", "F", "07"), c.at("E", "G", "08")});
  const double hi78 = std::min({c.at("C", "F", "07"), c.at("F", "G", "08"), c.at("G", "F", "07"),
                                c.at("F", "", "07"), c.at("G", "", "08")});
  b.f0708 = {"fuses 07/08 clamp: nearby DG feed above, distant DG feed below", lo78, hi78};
  return b;
}

}  // namespace

ReferenceParameters place_thresholds(const ReferenceParameters& p, std::vector<Band>* bands) {
  const auto net = build_reference_network(p);
  const auto c = inception_currents(net, Study::of(net));
  const auto b = threshold_bands(c);
  auto mid = [](const Band& band) { return std::sqrt(band.lo * band.hi); };
  ReferenceParameters out = p;
  const double floor100 = kFuseMeltMultiple * 1.2;
  out.fuse04_last_multiple = std::max(mid(b.f04) / 140.0, p.fuse04_knee_multiple * 1.2);
  out.fuse05_last_multiple = std::max(mid(b.f05) / 100.0, floor100);
  out.fuse06_last_multiple = std::max(b.f06.hi * 0.9 / 100.0, floor100);
  out.fuse0708_last_multiple = std::max(mid(b.f0708) / 100.0, floor100);
  if (bands) *bands = {b.f04, b.f05, b.f06, b.f0708};
  return out;
}

// ---------------------------------------------------------------------------
// scoring

bool CalibrationReport::all_met() const {
  if (!infeasible.empty() || !mismatches.empty()) return false;
  for (const auto& o : outcomes)
    if (!o.met) return false;
  for (const auto& b : bands)
    if (!(b.margin() > 0.0)) return false;
  return true;
}

std::string CalibrationReport::text() const {
  std::string out;
  char buf[256];
  out += "target                       wanted      tol    achieved     error  ok\n";
  for (const auto& o : outcomes) {
    std::snprintf(buf, sizeof buf, "%-26s %9.4g %8.3g%s %11.5g %9.4f  %s\n", o.target.name.c_str(), o.target.value,
                  o.target.tolerance, o.target.absolute ? "s" : " ", o.achieved, o.error, o.met ? "yes" : "NO");
    out += buf;
  }
  out += "\nseparation bands (margin = ln(hi/lo), must be positive)\n";
  for (const auto& b : bands) {
    std::snprintf(buf, sizeof buf, "%9.2f %9.2f %8.4f  %s\n", b.lo, b.hi, b.margin(), b.name.c_str());
    out += buf;
  }
  if (!infeasible.empty()) {
    out += "\ninfeasible against the impact table:\n";
    for (const auto& s : infeasible) out += "  " + s + "\n";
  }
  out += "\nimpact table: ";
  if (mismatches.empty()) {
    out += "reproduced\n";
  } else {
    out += std::to_string(mismatches.size()) + " mismatching cells\n";
    for (const auto& s : mismatches) out += "  " + s + "\n";
  }
  std::snprintf(buf, sizeof buf, "\nobjective %.6g after %d evaluations\n", objective, evaluations);
  out += buf;
  return out;
}

namespace {

constexpr double kBandFloor = 0.03;  // wanted log-margin on every band

std::string describe_cell(const std::string& fault, const std::string& dg) {
  return "fault " + fault + ", DG " + (dg.empty() ? std::string("none") : dg);
}

std::vector<std::string> table_mismatches(const Network& net) {
  std::vector<std::string> out;
  SweepResult r;
  try {
    r = sweep_all(net, DeviceMode::asbuilt);
  } catch (const std::exception& e) {
    return {std::string("sweep failed: ") + e.what()};
  }
  std::set<std::string> legit(r.matrix.legitimate_dg_areas.begin(), r.matrix.legitimate_dg_areas.end());
  const std::set<std::string> want_legit = {"A", "B", "C", "F", "G"};
  if (legit != want_legit) out.push_back("legitimate DG areas differ");
  for (const auto& want : reference_impact_table()) {
    auto row = std::find_if(r.matrix.rows.begin(), r.matrix.rows.end(),
                            [&](const ImpactRow& x) { return x.fault_area == want.fault_area; });
    if (row == r.matrix.rows.end()) {
      out.push_back("row " + want.fault_area + " missing");
      continue;
    }
    if (row->baseline.report.permanently_open_devices != want.baseline)
      out.push_back(describe_cell(want.fault_area, "") + ": baseline differs");
    for (const auto& [dg, c] : row->with_dg) {
      auto it = want.additional.find(dg);
      const std::set<std::string> expected = it == want.additional.end() ? std::set<std::string>{} : it->second;
      if (c.impact.additional_devices != expected) {
        std::string got;
        for (const auto& d : c.impact.additional_devices) got += (got.empty() ? "" : "+") + d;
        out.push_back(describe_cell(want.fault_area, dg) + ": additional {" + got + "}");
      }
    }
  }
  return out;
}

std::vector<std::string> infeasible_trips(const CalibrationTargets& targets) {
  std::vector<std::string> out;
  for (const auto& t : targets.trips) {
    auto row = std::find_if(reference_impact_table().begin(), reference_impact_table().end(),
                            [&](const ImpactRowExpectation& r) { return r.fault_area == t.fault_area; });
    if (row == reference_impact_table().end()) {
      out.push_back("fault area " + t.fault_area + " is not in the impact table");
      continue;
    }
    bool opens = row->baseline.count(t.device) > 0;
    if (t.dg_area) {
      auto it = row->additional.find(*t.dg_area);
      if (it != row->additional.end() && it->second.count(t.device)) opens = true;
    }
    if (opens != t.trips)
      out.push_back(describe_cell(t.fault_area, t.dg_area.value_or("")) + ": device " + t.device +
                    (t.trips ? " cannot be required to trip" : " cannot be required to hold"));
  }
  return out;
}

}  // namespace

CalibrationReport evaluate_reference(const ReferenceParameters& p, const CalibrationTargets& targets,
                                     bool verify_table) {
  CalibrationReport rep;
  rep.evaluations = 1;
  rep.infeasible = infeasible_trips(targets);
  try {
    std::vector<Band> threshold;
    rep.parameters = place_thresholds(p, &threshold);
    rep.network = build_reference_network(rep.parameters);
    const auto m = measure_reference(rep.network);
    rep.bands = steady_bands(rep.network, m);
    rep.bands.insert(rep.bands.end(), threshold.begin(), threshold.end());
    for (const auto& t : targets.values) {
      TargetOutcome o{t, m.count(t.name) ? m.at(t.name) : std::numeric_limits<double>::quiet_NaN(), 0.0, false};
      o.error = t.absolute ? o.achieved - t.value : o.achieved / t.value - 1.0;
      o.met = std::isfinite(o.error) && std::abs(o.error) <= t.tolerance;
      // log-ratio keeps over- and undershoot symmetric for relative targets
      const double scaled = t.absolute ? o.error / t.tolerance : std::log(o.achieved / t.value) / std::log1p(t.tolerance);
      rep.objective += std::isfinite(scaled) ? scaled * scaled : 1e6;
      rep.outcomes.push_back(o);
    }
    for (const auto& b : rep.bands) {
      const double margin = b.margin();
      if (!std::isfinite(margin)) {
        rep.objective += 1e6;
      } else if (margin < kBandFloor) {
        const double short_by = (kBandFloor - margin) / kBandFloor;
        rep.objective += 10.0 * short_by * short_by;
      }
    }
    if (verify_table) rep.mismatches = table_mismatches(rep.network);
  } catch (const std::exception& e) {
    rep.objective = 1e9;
    rep.mismatches.push_back(std::string("evaluation failed: ") + e.what());
  }
  return rep;
}

// ---------------------------------------------------------------------------
// search

namespace {

struct Knob {
  std::string name;
  double lo, hi;
  bool log_scale;
};

// Free parameters of the search. Impedances are searched as magnitude and
// X/R so each stays inside a plausible range for its kind of equipment.
std::vector<Knob> knobs() {
  std::vector<Knob> k = {
      {"source_z", 0.05, 1.5, true},
      {"source_xr", 5.0, 30.0, true},
      {"source_z0_ratio", 0.3, 1.5, true},
      {"source2_angle_deg", -6.0, 6.0, false},
      {"line_r0_ratio", 1.0, 4.0, true},
      {"line_x0_ratio", 0.5, 4.0, true},
      {"xd_2prime_pu", 0.12, 0.30, true},
      {"fuse04_knee_time_s", 0.03, 0.5, true},
  };
  for (const char* s : {"A", "B", "C", "D", "E", "F", "G", "tie"}) {
    k.push_back({std::string("section_") + s + "_z", 0.01, 3.0, true});
    k.push_back({std::string("section_") + s + "_xr", 0.5, 4.0, true});
  }
  for (const char* a : {"A", "B", "C", "D", "E", "F", "G"}) k.push_back({std::string("kva_") + a, 20.0, 2500.0, true});
  return k;
}

// to_flat() plus the polar forms the knobs use
std::map<std::string, double> search_space(const ReferenceParameters& p) {
  auto flat = to_flat(p);
  auto polar = [&flat](const std::string& prefix, double r, double x) {
    flat[prefix + "_z"] = std::hypot(r, x);
    flat[prefix + "_xr"] = x / r;
  };
  polar("source", p.source_r, p.source_x);
  for (const auto& [s, z] : p.sections) polar("section_" + s, z.r, z.x);
  return flat;
}

ReferenceParameters from_search_space(std::map<std::string, double> flat) {
  auto rect = [&flat](const std::string& prefix) {
    const double z = flat.at(prefix + "_z"), xr = flat.at(prefix + "_xr");
    const double r = z / std::sqrt(1.0 + xr * xr);
    flat[prefix + "_r"] = r;
    flat[prefix + "_x"] = r * xr;
  };
  rect("source");
  for (const char* s : {"A", "B", "C", "D", "E", "F", "G", "tie"}) rect(std::string("section_") + s);
  return from_flat(flat);
}

std::vector<double> encode(const ReferenceParameters& p, const std::vector<Knob>& ks) {
  const auto flat = search_space(p);
  std::vector<double> x;
  for (const auto& k : ks) {
    const double v = std::clamp(flat.at(k.name), k.lo, k.hi);
    x.push_back(k.log_scale ? std::log(v) : v);
  }
  return x;
}

ReferenceParameters decode(const ReferenceParameters& base, const std::vector<Knob>& ks, const std::vector<double>& x) {
  auto flat = search_space(base);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const auto& k = ks[i];
    const double v = k.log_scale ? std::exp(x[i]) : x[i];
    flat[k.name] = std::clamp(v, k.lo, k.hi);
  }
  return from_search_space(flat);
}

}  // namespace

CalibrationReport calibrate_reference(const CalibrationTargets& targets, const ReferenceParameters& start,
                                      const CalibrationOptions& options) {
  if (targets.empty()) {
    CalibrationReport rep;
    rep.parameters = start;
    rep.network = build_reference_network(start);
    return rep;
  }
  const auto infeasible = infeasible_trips(targets);
  if (!infeasible.empty()) {
    auto rep = evaluate_reference(start, targets, false);
    rep.infeasible = infeasible;
    return rep;
  }

  const auto ks = knobs();
  const std::size_t n = ks.size();
  int evals = 0;
  auto f = [&](const std::vector<double>& x) {
    ++evals;
    return evaluate_reference(decode(start, ks, x), targets, false).objective;
  };

  std::vector<double> best = encode(start, ks);
  double best_f = f(best);
  std::mt19937_64 rng(20240611);
  const int budget = options.max_evaluations / std::max(1, options.restarts);

  for (int restart = 0; restart < options.restarts && best_f > 0.0; ++restart) {
    // simplex around the incumbent, step 10% in log space (or 0.5 deg)
    std::vector<std::vector<double>> simplex(n + 1, best);
    std::vector<double> fv(n + 1, best_f);
    for (std::size_t i = 0; i < n; ++i) {
      const double step = ks[i].log_scale ? 0.1 : 0.5;
      simplex[i + 1][i] += (rng() & 1) ? step : -step;
      fv[i + 1] = f(simplex[i + 1]);
    }
    const int stop_at = evals + budget;
    while (evals < stop_at) {
      std::vector<std::size_t> order(n + 1);
      for (std::size_t i = 0; i <= n; ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
      const auto lo = order.front(), hi = order.back(), second = order[n - 1];
      if (fv[hi] - fv[lo] < 1e-10 * (1.0 + std::abs(fv[lo]))) break;
      std::vector<double> centroid(n, 0.0);
      for (std::size_t i = 0; i <= n; ++i)
        if (i != hi)
          for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
      auto along = [&](double t) {
        std::vector<double> x(n);
        for (std::size_t j = 0; j < n; ++j) x[j] = centroid[j] + t * (simplex[hi][j] - centroid[j]);
        return x;
      };
      auto xr = along(-1.0);
      const double fr = f(xr);
      if (fr < fv[lo]) {
        auto xe = along(-2.0);
        const double fe = f(xe);
        if (fe < fr) {
          simplex[hi] = xe;
          fv[hi] = fe;
        } else {
          simplex[hi] = xr;
          fv[hi] = fr;
        }
      } else if (fr < fv[second]) {
        simplex[hi] = xr;
        fv[hi] = fr;
      } else {
        auto xc = along(fr < fv[hi] ? -0.5 : 0.5);
        const double fc = f(xc);
        if (fc < std::min(fr, fv[hi])) {
          simplex[hi] = xc;
          fv[hi] = fc;
        } else {
          for (std::size_t i = 0; i <= n; ++i) {
            if (i == lo) continue;
            for (std::size_t j = 0; j < n; ++j) simplex[i][j] = simplex[lo][j] + 0.5 * (simplex[i][j] - simplex[lo][j]);
            fv[i] = f(simplex[i]);
          }
        }
      }
      const auto it = std::min_element(fv.begin(), fv.end());
      if (*it < best_f) {
        best_f = *it;
        best = simplex[static_cast<std::size_t>(it - fv.begin())];
      }
      if (options.progress) options.progress(evals, best_f);
    }
  }

  auto rep = evaluate_reference(decode(start, ks, best), targets, options.verify_table);
  rep.evaluations = evals;
  return rep;
}

// ---------------------------------------------------------------------------
// flat form

std::map<std::string, double> to_flat(const ReferenceParameters& p) {
  std::map<std::string, double> f = {
      {"source_r", p.source_r},
      {"source_x", p.source_x},
      {"source_z0_ratio", p.source_z0_ratio},
      {"source2_angle_deg", p.source2_angle_deg},
      {"line_r0_ratio", p.line_r0_ratio},
      {"line_x0_ratio", p.line_x0_ratio},
      {"xd_2prime_pu", p.xd_2prime_pu},
      {"breaker_knee_multiple", p.breaker_knee_multiple},
      {"breaker_knee_time_s", p.breaker_knee_time_s},
      {"breaker_last_multiple", p.breaker_last_multiple},
      {"recloser_knee_multiple", p.recloser_knee_multiple},
      {"recloser_knee_time_s", p.recloser_knee_time_s},
      {"recloser_last_multiple", p.recloser_last_multiple},
      {"fuse04_knee_multiple", p.fuse04_knee_multiple},
      {"fuse04_knee_time_s", p.fuse04_knee_time_s},
      {"fuse04_last_multiple", p.fuse04_last_multiple},
      {"fuse05_last_multiple", p.fuse05_last_multiple},
      {"fuse06_last_multiple", p.fuse06_last_multiple},
      {"fuse0708_last_multiple", p.fuse0708_last_multiple},
      {"relay_grade_s", p.relay_grade_s},
  };
  for (const auto& [s, z] : p.sections) {
    f["section_" + s + "_r"] = z.r;
    f["section_" + s + "_x"] = z.x;
  }
  for (const auto& [a, kva] : p.area_kva) f["kva_" + a] = kva;
  for (const auto& [a, n] : p.area_loads) f["loads_" + a] = n;
  return f;
}

ReferenceParameters from_flat(const std::map<std::string, double>& flat) {
  ReferenceParameters p;
  auto get = [&flat](const std::string& k, double& into) {
    auto it = flat.find(k);
    if (it != flat.end()) into = it->second;
  };
  get("source_r", p.source_r);
  get("source_x", p.source_x);
  get("source_z0_ratio", p.source_z0_ratio);
  get("source2_angle_deg", p.source2_angle_deg);
  get("line_r0_ratio", p.line_r0_ratio);
  get("line_x0_ratio", p.line_x0_ratio);
  get("xd_2prime_pu", p.xd_2prime_pu);
  get("breaker_knee_multiple", p.breaker_knee_multiple);
  get("breaker_knee_time_s", p.breaker_knee_time_s);
  get("breaker_last_multiple", p.breaker_last_multiple);
  get("recloser_knee_multiple", p.recloser_knee_multiple);
  get("recloser_knee_time_s", p.recloser_knee_time_s);
  get("recloser_last_multiple", p.recloser_last_multiple);
  get("fuse04_knee_multiple", p.fuse04_knee_multiple);
  get("fuse04_knee_time_s", p.fuse04_knee_time_s);
  get("fuse04_last_multiple", p.fuse04_last_multiple);
  get("fuse05_last_multiple", p.fuse05_last_multiple);
  get("fuse06_last_multiple", p.fuse06_last_multiple);
  get("fuse0708_last_multiple", p.fuse0708_last_multiple);
  get("relay_grade_s", p.relay_grade_s);
  for (auto& [s, z] : p.sections) {
    get("section_" + s + "_r", z.r);
    get("section_" + s + "_x", z.x);
  }
  for (auto& [a, kva] : p.area_kva) get("kva_" + a, kva);
  for (auto& [a, n] : p.area_loads) {
    double v = n;
    get("loads_" + a, v);
    n = static_cast<int>(std::lround(v));
  }
  return p;
}

}  // namespace dgrel
