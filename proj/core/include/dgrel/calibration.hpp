#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <map>
#include <string>
#include <vector>

#include "dgrel/netmodel.hpp"

namespace dgrel {

/// Impedance of one feeder section; zero sequence is derived from it.
struct SectionZ {
  double r = 0.05;
  double x = 0.08;
};

/// Free parameters of the two-feeder loop used as the reference network.
struct ReferenceParameters {
  // 13 kV system plus substation transformer, referred to 4 kV
  double source_r = 0.04;
  double source_x = 0.2;
  double source_z0_ratio = 0.4;
  double source2_angle_deg = 0.0;
  // feeder sections, ohms per section
  std::map<std::string, SectionZ> sections = {{"A", {}}, {"B", {}}, {"C", {}}, {"D", {}}, {"E", {}},
                                              {"F", {}}, {"G", {}}, {"tie", {}}};
  double line_r0_ratio = 2.0;
  double line_x0_ratio = 1.0;
  // area demand, kVA at pf 0.85, and how many loads share it
  std::map<std::string, double> area_kva = {{"A", 830}, {"B", 550}, {"C", 300}, {"D", 80},
                                            {"E", 710}, {"F", 900}, {"G", 900}};
  std::map<std::string, int> area_loads = {{"A", 8}, {"B", 6}, {"C", 3}, {"D", 1},
                                           {"E", 7}, {"F", 8}, {"G", 8}};
  double xd_2prime_pu = 0.27;
  // curve shapes: times at the extreme multiples are fixed by the device ratings
  double breaker_knee_multiple = 3.6;  // where the breaker needs about one second
  double breaker_knee_time_s = 1.0;
  double breaker_last_multiple = 15.0;
  double recloser_knee_multiple = 4.0;
  double recloser_knee_time_s = 0.8;
  double recloser_last_multiple = 12.0;
  double fuse04_knee_multiple = 5.86;
  double fuse04_knee_time_s = 0.125;
  double fuse04_last_multiple = 18.0;
  double fuse05_last_multiple = 20.0;
  double fuse06_last_multiple = 5.0;
  double fuse0708_last_multiple = 6.0;
  // directional upgrades: time added to each fuse curve so relays grade
  double relay_grade_s = 0.025;
};

/// Curve first point for fuses, in multiples of the rating: a fuse carries its
/// rated current indefinitely and starts melting at twice that.
inline constexpr double kFuseMeltMultiple = 2.0;

/// Network with buses A1..A4, B1..B4, C1..C3, D1..D2, E1..E2, F1..F2, G1..G2,
/// sources at A1 and B1, recloser 03 on the A4-B4 tie and fuses 04..08.
Network build_reference_network(const ReferenceParameters& p);

/// A measured quantity and the value it should reach. Tolerance is relative
/// unless `absolute` is set.
struct CalibrationTarget {
  std::string name;
  double value = 0.0;
  double tolerance = 0.1;
  bool absolute = false;
};

/// Whether `device` ends up permanently open for a given fault/DG pair.
struct TripExpectation {
  std::string fault_area;
  std::optional<std::string> dg_area;
  std::string device;
  bool trips = true;
};

struct CalibrationTargets {
  std::vector<CalibrationTarget> values;
  std::vector<TripExpectation> trips;
  [[nodiscard]] bool empty() const { return values.empty() && trips.empty(); }
};

/// The published currents, times and back-feed values the reference network
/// is fitted to.
CalibrationTargets reference_targets();

/// Expected tripping devices per fault area: baseline set, and the additional
/// devices for each DG area that makes things worse.
struct ImpactRowExpectation {
  std::string fault_area;
  std::set<std::string> baseline;
  std::map<std::string, std::set<std::string>> additional;
};
const std::vector<ImpactRowExpectation>& reference_impact_table();

/// All named quantities the targets refer to.
std::map<std::string, double> measure_reference(const Network& net);

/// A separation that must stay open between two groups of currents for the
/// fuse thresholds to sort the scenarios. margin = ln(hi / lo).
struct Band {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  [[nodiscard]] double margin() const { return std::log(hi / lo); }
};

struct TargetOutcome {
  CalibrationTarget target;
  double achieved = 0.0;
  double error = 0.0;  // relative, or absolute for absolute targets
  bool met = false;
};

struct CalibrationReport {
  ReferenceParameters parameters;
  Network network;
  std::vector<TargetOutcome> outcomes;
  std::vector<Band> bands;
  std::vector<std::string> infeasible;  // requested behaviour the impact table rules out
  std::vector<std::string> mismatches;  // impact-table cells the network does not reproduce
  double objective = 0.0;
  int evaluations = 0;

  [[nodiscard]] bool all_met() const;
  [[nodiscard]] std::string text() const;
};

struct CalibrationOptions {
  int max_evaluations = 4000;
  int restarts = 3;
  bool verify_table = true;  // run the full sweep on the result
  std::function<void(int, double)> progress;
};

/// Fuse thresholds placed at the geometric middle of their bands, computed
/// from the fault currents of `p`.
ReferenceParameters place_thresholds(const ReferenceParameters& p, std::vector<Band>* bands = nullptr);

/// Scores `p` against `targets` without searching.
CalibrationReport evaluate_reference(const ReferenceParameters& p, const CalibrationTargets& targets,
                                     bool verify_table = true);

/// Nelder-Mead search over impedances, loads, source and curve shape
/// parameters starting from `start`. An empty target set returns `start`
/// unchanged. Trip expectations that contradict the impact table are reported
/// as infeasible before any search.
CalibrationReport calibrate_reference(const CalibrationTargets& targets, const ReferenceParameters& start = {},
                                      const CalibrationOptions& options = {});

/// Parameters as flat key/value pairs and back, for the calibration record.
std::map<std::string, double> to_flat(const ReferenceParameters& p);
ReferenceParameters from_flat(const std::map<std::string, double>& flat);

}  // namespace dgrel
