// SPDX-License-Identifier: Apache-2.0
// evector: run scenarios and render reports from their output directory.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "evsim/runner.hpp"

namespace fs = std::filesystem;
using namespace evsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInterrupted = 1;
constexpr int kExitScenario = 2;
constexpr int kExitInternal = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SyntaxError("", "cannot open scenario file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TelemetryIoError("cannot write '" + path.string() + "'");
  out << text;
}

int cmd_run(const std::string& scenario_path, std::optional<std::uint64_t> seed,
            const std::string& out_dir, const std::string& driver, bool realtime) {
  std::string text = read_file(scenario_path);
  if (seed) {
    // Patch the document so per-attack seeds that default to the scenario
    // seed follow the override too.
    Json doc = Json::parse(text, nullptr, false);
    if (doc.is_object()) {
      doc["seed"] = *seed;
      text = doc.dump();
    }
  }
  const Scenario sc = parse_scenario(text);
  RunOptions opts;
  opts.driver = driver == "mock" ? DriverKind::Mock : DriverKind::Linked;
  opts.realtime = realtime;
  const RunResult res = run(sc, opts);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  export_jsonl(res.store, dir / "telemetry.jsonl");
  for (const auto& [link, log] : res.packet_logs) {
    write_file(dir / ("packets_" + link + ".csv"), report_packets(res, link));
  }
  if (!power_rows(res).empty()) write_file(dir / "power.csv", report_power(res));
  if (res.fuzz_records) write_file(dir / "fuzz.csv", report_fuzz(res));

  const bool completed = res.exit == RunExit::Completed;
  std::cout << (completed ? "Completed" : "Interrupted") << ": " << res.store.size()
            << " telemetry records -> " << dir.string() << "\n";
  return completed ? kExitOk : kExitInterrupted;
}

int cmd_report(const std::string& dir, const std::string& kind, const std::string& link) {
  const RunResult res = result_from_store(load_jsonl(fs::path(dir) / "telemetry.jsonl"));
  if (kind == "packets") {
    std::string id = link;
    if (id.empty()) {
      if (res.packet_logs.size() != 1) {
        std::cerr << "error: --link is required (" << res.packet_logs.size() << " links in run)\n";
        return kExitScenario;
      }
      id = res.packet_logs.begin()->first;
    }
    std::cout << report_packets(res, id);
  } else if (kind == "power") {
    std::cout << report_power(res);
  } else {
    std::cout << report_fuzz(res);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EV charging ecosystem simulator with attack orchestration"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::string driver = "linked";
  bool realtime = false;
  CLI::App* run_cmd = app.add_subcommand("run", "Run a scenario");
  run_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run_cmd->add_option("--seed", seed, "Override the scenario seed");
  run_cmd->add_option("--out", out_dir, "Output directory");
  run_cmd->add_option("--driver", driver, "mock or linked")->check(CLI::IsMember({"mock", "linked"}));
  run_cmd->add_flag("--realtime", realtime, "Pace virtual time against the wall clock");

  std::string report_dir;
  std::string kind;
  std::string link;
  CLI::App* report_cmd = app.add_subcommand("report", "Render a report from a run directory");
  report_cmd->add_option("dir", report_dir, "Run output directory")->required();
  report_cmd->add_option("--kind", kind, "packets, power or fuzz")
      ->required()
      ->check(CLI::IsMember({"packets", "power", "fuzz"}));
  report_cmd->add_option("--link", link, "Link id for packet reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run_cmd) return cmd_run(scenario_path, seed, out_dir, driver, realtime);
    return cmd_report(report_dir, kind, link);
  } catch (const ScenarioInvalid& e) {
    for (const Violation& v : e.violations()) std::cerr << "invalid: " << v.path << ": " << v.reason << "\n";
    return kExitScenario;
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitScenario;
  } catch (const InternalInvariantViolation& e) {
    std::cerr << "internal invariant violated: " << e.what() << "\n";
    return kExitInternal;
  } catch (const UnknownLink& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitScenario;
  } catch (const NoFuzzData& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitScenario;
  } catch (const TelemetryIoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitScenario;
  } catch (const TelemetryFormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitScenario;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
