// Fits the reference loop network to the published operating values and
// writes it, together with the parameters and the per-target report.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "dgrel/calibration.hpp"
#include "dgrel/network_io.hpp"

namespace {

void write(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibrate the reference network", "dgrel-calibrate"};
  std::string out = "networks/loop4kv.json";
  std::string params_out = "networks/loop4kv.params.json";
  std::string report_out = "networks/loop4kv.calibration.txt";
  std::string start_path;
  int evaluations = 9000;
  int restarts = 3;
  app.add_option("--out", out, "Network file to write");
  app.add_option("--params-out", params_out, "Fitted parameters (JSON)");
  app.add_option("--report-out", report_out, "Per-target report");
  app.add_option("--start", start_path, "Start from a parameter file instead of the built-in defaults");
  app.add_option("--evaluations", evaluations, "Search budget; 0 scores the start point only");
  app.add_option("--restarts", restarts, "Simplex restarts");
  CLI11_PARSE(app, argc, argv);

  try {
    dgrel::ReferenceParameters start;
    if (!start_path.empty()) {
      std::ifstream f(start_path);
      if (!f) throw std::runtime_error("cannot read " + start_path);
      start = dgrel::from_flat(nlohmann::json::parse(f).get<std::map<std::string, double>>());
    }
    dgrel::CalibrationOptions opts;
    opts.max_evaluations = evaluations;
    opts.restarts = restarts;
    opts.progress = [](int evals, double best) {
      if (evals % 500 == 0) std::cerr << "  " << evals << " evaluations, objective " << best << "\n";
    };
    const auto targets = dgrel::reference_targets();
    const auto rep = evaluations > 0 ? dgrel::calibrate_reference(targets, start, opts)
                                     : dgrel::evaluate_reference(start, targets);
    std::cout << rep.text();
    write(out, dgrel::serialize_network(rep.network));
    write(params_out, nlohmann::json(dgrel::to_flat(rep.parameters)).dump(2) + "\n");
    write(report_out, rep.text());
    if (!rep.all_met()) {
      std::cerr << "calibration did not meet every target\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
