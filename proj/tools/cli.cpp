#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <optional>
#include <system_error>

#include "dgrel/engine.hpp"
#include "dgrel/errors.hpp"
#include "dgrel/network_io.hpp"
#include "dgrel/report.hpp"
#include "dgrel/scenario.hpp"
#include "dgrel/solver.hpp"

namespace dgrel::cli {

namespace {

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Config {
  std::string network_path = "networks/loop4kv.json";
  std::string fault_area;
  std::string dg_area;
  std::string device;
  std::string mode = "asbuilt";
  std::string format = "markdown";
  std::string out_path;
  std::string timeline_out;
  std::string intervals_out;
  unsigned threads = 0;
};

DeviceMode parse_mode(const std::string& s) { return s == "directional" ? DeviceMode::directional : DeviceMode::asbuilt; }

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("cannot write " + path);
  f << text;
  if (!f) throw InputError("cannot write " + path);
}

void emit(const Config& cfg, std::ostream& out, const std::string& text) {
  if (cfg.out_path.empty())
    out << text;
  else
    write_file(cfg.out_path, text);
}

Network load(const Config& cfg) {
  auto net = load_network(cfg.network_path);
  const auto violations = validate(net);
  if (!violations.empty()) {
    std::string msg = cfg.network_path + " is not a valid network:";
    for (const auto& v : violations) msg += "\n  " + v.entity + ": " + v.message;
    throw InputError(msg);
  }
  return net;
}

void require_area(const Study& study, const std::string& area) {
  if (!study.sites.count(area)) throw InputError("unknown area '" + area + "'");
}

int cmd_validate(const Config& cfg, std::ostream& out) {
  const auto net = load_network(cfg.network_path);
  const auto violations = validate(net);
  for (const auto& v : violations) out << v.entity << ": " << v.message << "\n";
  if (!violations.empty()) return input_error;
  const auto areas = partition_areas(net);
  out << cfg.network_path << ": ok (" << net.buses.size() << " buses, " << net.devices.size() << " devices, "
      << areas.size() << " areas, " << net.total_customers() << " customers)\n";
  return ok;
}

int cmd_run(const Config& cfg, std::ostream& out) {
  const auto amps_text = [](double a) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f A", a);
    return std::string(buf);
  };
  const auto net = load(cfg);
  const auto study = Study::of(net);
  require_area(study, cfg.fault_area);
  std::optional<std::string> dg;
  if (!cfg.dg_area.empty()) {
    require_area(study, cfg.dg_area);
    if (!net.dg) throw InputError("the network defines no DG unit");
    if (!legitimate_dg_areas(net).count(cfg.dg_area)) {
      std::string why;
      for (const auto& [id, amps] : backfeed_currents(net, study.dg_bus(cfg.dg_area))) {
        const auto& dev = net.devices[*net.device_index(id)];
        if (amps > dev.pickup_a)
          why += "; fuse " + id + " back-feed " + amps_text(amps) + " exceeds its " + amps_text(dev.pickup_a) + " pickup";
      }
      throw DomainRefusal("area " + cfg.dg_area + " is not a legitimate DG location" + why);
    }
    dg = cfg.dg_area;
  }
  const auto mode = parse_mode(cfg.mode);
  Network placed = with_dg_at(apply_device_mode(net, mode), dg ? std::optional(study.dg_bus(*dg)) : std::nullopt);
  const auto run = run_scenario(placed, study.fault_in(cfg.fault_area));
  RunSummaryInput in{cfg.fault_area, dg, mode, &placed, &run, reliability_report(placed, run.final_state.switches())};
  if (!cfg.timeline_out.empty()) write_file(cfg.timeline_out, render_timeline_csv(run.timeline));
  if (!cfg.intervals_out.empty()) write_file(cfg.intervals_out, render_interval_csv(placed, run.timeline));
  emit(cfg, out, cfg.format == "csv" ? render_run_csv(in) : render_run_markdown(in));
  return ok;
}

int cmd_sweep(const Config& cfg, std::ostream& out) {
  const auto net = load(cfg);
  SweepOptions opts;
  opts.threads = cfg.threads;
  const auto result = sweep_all(net, parse_mode(cfg.mode), opts);
  emit(cfg, out, cfg.format == "csv" ? render_sweep_csv(result.matrix) : render_report(result.matrix, result.summary));
  return ok;
}

int cmd_export_curve(const Config& cfg, std::ostream& out) {
  const auto net = apply_device_mode(load(cfg), parse_mode(cfg.mode));
  const auto idx = net.device_index(cfg.device);
  if (!idx) throw InputError("unknown device '" + cfg.device + "'");
  emit(cfg, out, render_curve_csv(net.devices[*idx]));
  return ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Config cfg;
  CLI::App app{"Protection and reliability simulator for distribution loops with distributed generation", "dgrel"};
  app.require_subcommand(1);
  const std::vector<std::string> modes = {"asbuilt", "directional"};
  const std::vector<std::string> formats = {"markdown", "csv"};

  auto* validate_cmd = app.add_subcommand("validate", "Check a network description");
  validate_cmd->add_option("network,--network", cfg.network_path, "Network file");

  auto* run_cmd = app.add_subcommand("run", "Simulate one temporary fault");
  run_cmd->add_option("--network", cfg.network_path, "Network file");
  run_cmd->add_option("--fault", cfg.fault_area, "Fault area")->required();
  run_cmd->add_option("--dg", cfg.dg_area, "DG area (omit for no DG)");
  run_cmd->add_option("--mode", cfg.mode, "Device settings")->check(CLI::IsMember(modes));
  run_cmd->add_option("--format", cfg.format, "Summary format")->check(CLI::IsMember(formats));
  run_cmd->add_option("--out", cfg.out_path, "Summary output file");
  run_cmd->add_option("--timeline-out", cfg.timeline_out, "Event timeline CSV");
  run_cmd->add_option("--intervals-out", cfg.intervals_out, "Per-interval device current CSV");

  auto* sweep_cmd = app.add_subcommand("sweep", "Every fault area against every legitimate DG area");
  sweep_cmd->add_option("--network", cfg.network_path, "Network file");
  sweep_cmd->add_option("--mode", cfg.mode, "Device settings")->check(CLI::IsMember(modes));
  sweep_cmd->add_option("--format", cfg.format, "Report format")->check(CLI::IsMember(formats));
  sweep_cmd->add_option("--out", cfg.out_path, "Report output file");
  sweep_cmd->add_option("--threads", cfg.threads, "Worker threads (0: all cores)");

  auto* curve_cmd = app.add_subcommand("export-curve", "Effective time-current curve of a device as CSV");
  curve_cmd->add_option("--network", cfg.network_path, "Network file");
  curve_cmd->add_option("--device", cfg.device, "Device id")->required();
  curve_cmd->add_option("--mode", cfg.mode, "Device settings")->check(CLI::IsMember(modes));
  curve_cmd->add_option("--out", cfg.out_path, "Output file");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return input_error;
  }

  try {
    if (validate_cmd->parsed()) return cmd_validate(cfg, out);
    if (run_cmd->parsed()) return cmd_run(cfg, out);
    if (sweep_cmd->parsed()) return cmd_sweep(cfg, out);
    if (curve_cmd->parsed()) return cmd_export_curve(cfg, out);
  } catch (const DomainRefusal& e) {
    err << "refused: " << e.what() << "\n";
    return domain_refusal;
  } catch (const std::system_error& e) {
    err << "error: " << e.what() << "\n";
    return input_error;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return input_error;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return input_error;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return internal_error;
  }
  return internal_error;
}

}  // namespace dgrel::cli
