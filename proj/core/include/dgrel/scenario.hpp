#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dgrel/engine.hpp"
#include "dgrel/netmodel.hpp"
#include "dgrel/reliability.hpp"

namespace dgrel {

/// Areas plus the conventional fault and DG sites of each.
struct Study {
  AreaMap areas;
  std::map<std::string, AreaSites> sites;

  static Study of(const Network& net);
  /// Temporary SLG fault at the head of `area`, 0.2 s to 0.5 s.
  [[nodiscard]] FaultSpec fault_in(const std::string& area) const;
  [[nodiscard]] const std::string& dg_bus(const std::string& area) const;
};

/// Areas where the DG's steady-state back-feed keeps every fuse at or below pickup.
std::set<std::string> legitimate_dg_areas(const Network& net);

struct CaseResult {
  std::string fault_area;
  std::optional<std::string> dg_area;
  ReliabilityReport report;
  ImpactClassification impact;  // neutral for baselines
  std::vector<Event> events;
};

/// Runs one fault/DG combination with the devices in `mode`.
CaseResult run_case(const Network& net, const Study& study, const std::string& fault_area,
                    const std::optional<std::string>& dg_area, DeviceMode mode,
                    const ReliabilityReport* baseline = nullptr);

struct ImpactRow {
  std::string fault_area;
  CaseResult baseline;
  std::map<std::string, CaseResult> with_dg;  // keyed by DG area
};

struct ImpactMatrix {
  DeviceMode mode = DeviceMode::asbuilt;
  std::vector<std::string> fault_areas;
  std::vector<std::string> dg_areas;
  std::set<std::string> legitimate_dg_areas;
  std::vector<ImpactRow> rows;  // in fault_areas order

  /// DG areas with a negative classification for one fault area.
  [[nodiscard]] std::vector<std::string> negative_dg_areas(const std::string& fault_area) const;
};

struct SweepSummary {
  int possible_scenarios = 0;
  int negative_scenarios = 0;
  Rational percentage;
};

struct SweepResult {
  ImpactMatrix matrix;
  SweepSummary summary;
};

struct SweepOptions {
  unsigned threads = 0;  // 0: hardware concurrency, 1: sequential
};

/// Baseline per fault area plus every (fault, DG) pair. Throws DomainRefusal
/// for DG areas outside the legitimate set, and std::runtime_error naming the
/// failing pair for scenario failures.
SweepResult sweep(const Network& net, const std::vector<std::string>& fault_areas,
                  const std::vector<std::string>& dg_areas, DeviceMode mode, const SweepOptions& options = {});

/// Full sweep: every area as fault location, every legitimate area for the DG.
SweepResult sweep_all(const Network& net, DeviceMode mode, const SweepOptions& options = {});

/// Markdown with the four-column impact table and the summary block.
std::string render_report(const ImpactMatrix& matrix, const SweepSummary& summary);

/// One row per case: fault_area,dg_area,classification,additional_devices,saifi,customers_interrupted.
std::string render_sweep_csv(const ImpactMatrix& matrix);

}  // namespace dgrel
