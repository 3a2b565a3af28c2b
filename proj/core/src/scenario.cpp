#include "dgrel/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "dgrel/errors.hpp"
#include "dgrel/solver.hpp"

namespace dgrel {

Study Study::of(const Network& net) {
  Study s;
  s.areas = partition_areas(net);
  s.sites = area_sites(net, s.areas);
  return s;
}

FaultSpec Study::fault_in(const std::string& area) const {
  auto it = sites.find(area);
  if (it == sites.end()) throw DomainRefusal("unknown area '" + area + "'");
  FaultSpec f;
  f.bus = it->second.fault_bus;
  return f;
}

const std::string& Study::dg_bus(const std::string& area) const {
  auto it = sites.find(area);
  if (it == sites.end()) throw DomainRefusal("unknown area '" + area + "'");
  return it->second.dg_bus;
}

std::set<std::string> legitimate_dg_areas(const Network& net) {
  const auto study = Study::of(net);
  std::set<std::string> out;
  for (const auto& area : study.areas.labels) {
    if (!net.dg) {
      out.insert(area);
      continue;
    }
    const auto reverse = backfeed_currents(net, study.dg_bus(area));
    bool ok = true;
    for (const auto& [id, amps] : reverse)
      if (amps > net.devices[*net.device_index(id)].pickup_a) ok = false;
    if (ok) out.insert(area);
  }
  return out;
}

CaseResult run_case(const Network& net, const Study& study, const std::string& fault_area,
                    const std::optional<std::string>& dg_area, DeviceMode mode, const ReliabilityReport* baseline) {
  Network placed = apply_device_mode(net, mode);
  placed = with_dg_at(placed, dg_area ? std::optional<std::string>(study.dg_bus(*dg_area)) : std::nullopt);
  EngineOptions opts;
  opts.keep_intervals = false;
  auto run = run_scenario(placed, study.fault_in(fault_area), opts);
  CaseResult r;
  r.fault_area = fault_area;
  r.dg_area = dg_area;
  r.report = reliability_report(placed, run.final_state.switches());
  if (baseline) r.impact = classify_impact(*baseline, r.report);
  r.events = std::move(run.timeline.events);
  return r;
}

std::vector<std::string> ImpactMatrix::negative_dg_areas(const std::string& fault_area) const {
  std::vector<std::string> out;
  for (const auto& row : rows) {
    if (row.fault_area != fault_area) continue;
    for (const auto& [dg, c] : row.with_dg)
      if (c.impact.label == Impact::negative) out.push_back(dg);
  }
  return out;
}

namespace {

// Runs `jobs` on up to `threads` workers; results land in their own slot so
// assembly order never depends on scheduling.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

std::string join(const std::set<std::string>& items, const char* sep) {
  return join(std::vector<std::string>(items.begin(), items.end()), sep);
}

}  // namespace

SweepResult sweep(const Network& net, const std::vector<std::string>& fault_areas,
                  const std::vector<std::string>& dg_areas, DeviceMode mode, const SweepOptions& options) {
  const auto study = Study::of(net);
  SweepResult out;
  auto& m = out.matrix;
  m.mode = mode;
  m.fault_areas = fault_areas;
  m.dg_areas = dg_areas;
  m.legitimate_dg_areas = legitimate_dg_areas(net);
  for (const auto& dg : dg_areas)
    if (!m.legitimate_dg_areas.count(dg)) throw DomainRefusal("area " + dg + " is not a legitimate DG location");

  auto describe = [](const std::string& f, const std::optional<std::string>& g) {
    return "fault " + f + ", DG " + (g ? *g : std::string("none"));
  };
  std::vector<CaseResult> baselines(fault_areas.size());
  parallel_for(fault_areas.size(), options.threads, [&](std::size_t i) {
    try {
      baselines[i] = run_case(net, study, fault_areas[i], std::nullopt, mode);
    } catch (const std::exception& e) {
      throw std::runtime_error(describe(fault_areas[i], std::nullopt) + ": " + e.what());
    }
  });
  const std::size_t per_row = dg_areas.size();
  std::vector<CaseResult> cases(fault_areas.size() * per_row);
  parallel_for(cases.size(), options.threads, [&](std::size_t k) {
    const std::size_t i = k / per_row;
    const auto& dg = dg_areas[k % per_row];
    try {
      cases[k] = run_case(net, study, fault_areas[i], dg, mode, &baselines[i].report);
    } catch (const std::exception& e) {
      throw std::runtime_error(describe(fault_areas[i], dg) + ": " + e.what());
    }
  });
  for (std::size_t i = 0; i < fault_areas.size(); ++i) {
    ImpactRow row{fault_areas[i], std::move(baselines[i]), {}};
    for (std::size_t j = 0; j < per_row; ++j) {
      auto& c = cases[i * per_row + j];
      if (c.impact.label == Impact::negative) ++out.summary.negative_scenarios;
      row.with_dg.emplace(dg_areas[j], std::move(c));
    }
    m.rows.push_back(std::move(row));
  }
  out.summary.possible_scenarios = static_cast<int>(cases.size());
  out.summary.percentage = cases.empty() ? Rational{}
                                         : Rational::of(out.summary.negative_scenarios, out.summary.possible_scenarios);
  return out;
}

SweepResult sweep_all(const Network& net, DeviceMode mode, const SweepOptions& options) {
  const auto areas = partition_areas(net).labels;
  const auto legit = legitimate_dg_areas(net);
  return sweep(net, areas, std::vector<std::string>(legit.begin(), legit.end()), mode, options);
}

std::string render_report(const ImpactMatrix& matrix, const SweepSummary& summary) {
  std::string out;
  out += "# Tripping devices under different DG conditions (" + std::string(to_string(matrix.mode)) + ")\n\n";
  out += "| Fault area | Tripping devices without DG | DG areas with negative effect | Additional tripping devices |\n";
  out += "|---|---|---|---|\n";
  for (const auto& row : matrix.rows) {
    const auto& base = row.baseline.report.permanently_open_devices;
    std::vector<std::string> areas, extra;
    for (const auto& dg : matrix.dg_areas) {
      const auto& c = row.with_dg.at(dg);
      if (c.impact.label != Impact::negative) continue;
      areas.push_back(dg);
      extra.push_back(join(c.impact.additional_devices, "+"));
    }
    out += "| " + row.fault_area + " | " + (base.empty() ? "None" : join(base, ", ")) + " | " +
           (areas.empty() ? "None" : join(areas, ", ")) + " | " + (extra.empty() ? "None" : join(extra, ", ")) +
           " |\n";
  }
  out += "\n## Scenarios with worse reliability index\n\n";
  out += "| Possible scenarios | Scenarios with worse reliability index |\n|---|---|\n";
  out += "| " + std::to_string(summary.possible_scenarios) + " | " + std::to_string(summary.negative_scenarios) +
         " |\n\n";
  out += "Percentage of scenarios with worse reliability index: " + std::to_string(summary.negative_scenarios) + "/" + std::to_string(summary.possible_scenarios) + " (" +
         std::to_string(summary.percentage.rounded_percent()) + "%)\n";
  return out;
}

std::string render_sweep_csv(const ImpactMatrix& matrix) {
  std::string out = "fault_area,dg_area,classification,additional_devices,saifi,customers_interrupted\n";
  auto line = [&out](const CaseResult& c, const std::string& cls) {
    const auto& r = c.report;
    out += c.fault_area + "," + (c.dg_area ? *c.dg_area : "none") + "," + cls + "," +
           join(c.impact.additional_devices, ";") + "," + std::to_string(r.customers_interrupted) + "/" +
           std::to_string(r.customers_total) + "," + std::to_string(r.customers_interrupted) + "\n";
  };
  for (const auto& row : matrix.rows) {
    line(row.baseline, "baseline");
    for (const auto& dg : matrix.dg_areas) {
      const auto& c = row.with_dg.at(dg);
      line(c, to_string(c.impact.label));
    }
  }
  return out;
}

}  // namespace dgrel
