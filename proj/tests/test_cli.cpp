#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "support.hpp"

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = dgrel::cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string net() { return testsupport::reference_path(); }

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "dgrel_cli_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("validate accepts the reference network") {
    const auto r = run({"validate", net()});
    CHECK(r.code == 0);
    CHECK(r.err.empty());
  }

  TEST_CASE("missing file is an input error") {
    const auto r = run({"validate", "/nonexistent/x.json"});
    CHECK(r.code == 2);
    CHECK(r.err.find("file not found") != std::string::npos);
  }

  TEST_CASE("corrupt JSON is an input error naming the line") {
    const auto p = scratch("broken.json");
    std::ofstream(p) << "{\n \"buses\": [\n";
    const auto r = run({"validate", p.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("line") != std::string::npos);
  }

  TEST_CASE("unknown flags and bad enum values are input errors") {
    CHECK(run({"run", "--network", net(), "--fault", "B", "--mode", "sideways"}).code == 2);
    CHECK(run({"run", "--network", net(), "--bogus"}).code == 2);
    CHECK(run({"run", "--network", net()}).code == 2);
  }

  TEST_CASE("illegitimate DG area is a domain refusal") {
    const auto r = run({"run", "--network", net(), "--fault", "B", "--dg", "D"});
    CHECK(r.code == 1);
    CHECK(r.err.find("05") != std::string::npos);
  }

  TEST_CASE("unknown area names are input errors") {
    CHECK(run({"run", "--network", net(), "--fault", "Q"}).code == 2);
    CHECK(run({"run", "--network", net(), "--fault", "A", "--dg", "Q"}).code == 2);
  }

  TEST_CASE("run prints the event table") {
    const auto r = run({"run", "--network", net(), "--fault", "B", "--dg", "C"});
    CHECK(r.code == 0);
    CHECK(r.out.find("| device_lockout | 04 |") != std::string::npos);
    CHECK(r.out.find("SAIFI: 11/41") != std::string::npos);
  }

  TEST_CASE("outputs are byte-identical across runs") {
    for (const auto& fmt : {"markdown", "csv"}) {
      const auto a = run({"sweep", "--network", net(), "--format", fmt, "--threads", "1"});
      const auto b = run({"sweep", "--network", net(), "--format", fmt, "--threads", "4"});
      CHECK(a.code == 0);
      CHECK(a.out == b.out);
    }
    const auto t1 = scratch("t1.csv"), t2 = scratch("t2.csv");
    const auto s1 = scratch("s1.md"), s2 = scratch("s2.md");
    CHECK(run({"run", "--network", net(), "--fault", "D", "--dg", "C", "--out", s1.string(), "--timeline-out",
               t1.string()}).code == 0);
    CHECK(run({"run", "--network", net(), "--fault", "D", "--dg", "C", "--out", s2.string(), "--timeline-out",
               t2.string()}).code == 0);
    CHECK(slurp(t1) == slurp(t2));
    CHECK(slurp(s1) == slurp(s2));
    CHECK(slurp(t1).rfind("time_s,kind,subject\n", 0) == 0);
  }

  TEST_CASE("export-curve writes a monotone curve") {
    const auto r = run({"export-curve", "--network", net(), "--device", "04"});
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    double prev_i = 0.0, prev_t = 1e9;
    int rows = 0;
    while (std::getline(in, line)) {
      const auto comma = line.find(',');
      const double i = std::stod(line.substr(0, comma));
      const double t = std::stod(line.substr(comma + 1));
      CHECK(i > prev_i);
      CHECK(t <= prev_t);
      prev_i = i;
      prev_t = t;
      ++rows;
    }
    CHECK(rows > 10);
    CHECK(run({"export-curve", "--network", net(), "--device", "99"}).code != 0);
  }
}
